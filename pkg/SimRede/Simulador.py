"""
Motor de eventos discretos determinístico.

Eventos saem da fila em ordem (tempo, sequência); a sequência é atribuída na
inserção, então mesma semente e mesmo cenário produzem o mesmo trace.
"""
import csv
import heapq
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, List, Optional

from Nucleo.Erros import ErroGeoShield
from Nucleo.Tempo import checar

logger = logging.getLogger(__name__)


class ErroAgendamento(ErroGeoShield):
    """Evento agendado no passado"""
    pass


@dataclass(order=True)
class Evento:
    tempo: int
    seq: int
    acao: Callable[[], None] = field(compare=False)
    tipo: str = field(default="", compare=False)
    no: int = field(default=-1, compare=False)
    detalhes: str = field(default="", compare=False)


@dataclass(frozen=True)
class RegistroTrace:
    tempo: int
    no: int
    tipo: str
    detalhes: str


class FilaEventos:
    """Heap mínimo de (tempo, sequência, evento)."""

    def __init__(self):
        self._heap: List[Evento] = []
        self._seq = 0

    def inserir(self, tempo: int, acao: Callable[[], None], tipo: str, no: int, detalhes: str) -> Evento:
        evento = Evento(tempo, self._seq, acao, tipo, no, detalhes)
        self._seq += 1
        heapq.heappush(self._heap, evento)
        return evento

    def proximo_tempo(self) -> Optional[int]:
        return self._heap[0].tempo if self._heap else None

    def retirar(self) -> Evento:
        return heapq.heappop(self._heap)

    def __len__(self) -> int:
        return len(self._heap)


class Simulador:
    """
    Laço de eventos de um ensaio (single-thread).

    Args:
        registrar_trace: Se False, eventos não entram no trace (ensaios grandes)
    """

    def __init__(self, registrar_trace: bool = True):
        self.agora = 0
        self.fila = FilaEventos()
        self.trace: List[RegistroTrace] = []
        self.registrar_trace = registrar_trace
        self.eventos_processados = 0

    def schedule(self, at: int, acao: Callable[[], None], tipo: str = "", no: int = -1,
                 detalhes: str = "") -> Evento:
        """
        Agenda `acao` para o instante `at`.

        Raises:
            ErroAgendamento: Se at < agora
        """
        checar(at)
        if at < self.agora:
            raise ErroAgendamento(f"Evento '{tipo}' em {at} ns < agora {self.agora} ns")
        return self.fila.inserir(at, acao, tipo, no, detalhes)

    def schedule_em(self, atraso: int, acao: Callable[[], None], **kwargs) -> Evento:
        return self.schedule(self.agora + atraso, acao, **kwargs)

    def run_until(self, t_fim: int) -> List[RegistroTrace]:
        """
        Processa eventos com tempo <= t_fim e avança o relógio até t_fim.

        Returns:
            Registros de trace produzidos nesta chamada
        """
        checar(t_fim)
        inicio = len(self.trace)
        while self.fila and self.fila.proximo_tempo() <= t_fim:
            evento = self.fila.retirar()
            self.agora = evento.tempo
            if self.registrar_trace and evento.tipo:
                self.trace.append(RegistroTrace(evento.tempo, evento.no, evento.tipo, evento.detalhes))
            evento.acao()
            self.eventos_processados += 1
        self.agora = max(self.agora, t_fim)
        return self.trace[inicio:]

    def anotar(self, no: int, tipo: str, detalhes: str = "") -> None:
        """Registra no trace um fato que não é um evento agendado."""
        if self.registrar_trace:
            self.trace.append(RegistroTrace(self.agora, no, tipo, detalhes))

    def exportar_trace_csv(self, caminho: Path) -> Path:
        """Escreve o trace como CSV (time_ns, node, event_kind, details)."""
        caminho = Path(caminho)
        caminho.parent.mkdir(parents=True, exist_ok=True)
        with open(caminho, "w", newline="", encoding="utf-8") as arquivo:
            escritor = csv.writer(arquivo, lineterminator="\n")
            escritor.writerow(["time_ns", "node", "event_kind", "details"])
            for registro in self.trace:
                escritor.writerow([registro.tempo, registro.no, registro.tipo, registro.detalhes])
        logger.debug("Trace exportado: %s (%d eventos)", caminho, len(self.trace))
        return caminho
