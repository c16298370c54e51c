"""
Estudo de caso de rede elétrica: consulta periódica do centro de controle
(região 0) a uma subestação (região 1) e a resposta de volta.

Uma réplica comprometida da tarefa de resposta atrasa a resposta de forma
adaptativa, só quando o próprio score aguenta a penalidade.
"""
import csv
import logging
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Tuple

from Nucleo.Tempo import em_ms, em_segundos
from Sistema.MontadorSistema import ResultadoSimulacao, SistemaGeoShield
from TGS.GovernancaTGS import rodada_latencia

logger = logging.getLogger(__name__)

_JOB = re.compile(r"k=(\d+)")


@dataclass
class ResultadoRedeEletrica:
    """
    Args:
        latencias: job -> pior atraso da resposta em relação a t_m + D_n (ms;
            negativo quando chegou no prazo)
        scores: Série (t em s, score) do nó atacante vista por um guardião correto
        jobs_atacados: Jobs em que o atacante atrasou a resposta
        sinalizacoes: Quantidade de pares (nó, tarefa) sinalizados
        inicio_ataque: Primeiro job sob ataque possível
        simulacao: Resultado completo do ensaio
    """
    latencias: Dict[int, float] = field(default_factory=dict)
    scores: List[Tuple[float, float]] = field(default_factory=list)
    jobs_atacados: List[int] = field(default_factory=list)
    sinalizacoes: int = 0
    inicio_ataque: int = 0
    simulacao: Optional[ResultadoSimulacao] = None

    @property
    def jobs_atrasados(self) -> List[int]:
        """Jobs cuja resposta chegou a algum receptor depois do prazo."""
        return sorted(k for k, latencia in self.latencias.items() if latencia > 0)

    @property
    def fracao_atrasada(self) -> float:
        """Fração de jobs atrasados desde o início do ataque."""
        total = [k for k in self.latencias if k >= self.inicio_ataque]
        if not total:
            return 0.0
        return sum(1 for k in total if self.latencias[k] > 0) / len(total)

    def intervalos_ataque(self) -> List[int]:
        return [b - a for a, b in zip(self.jobs_atacados, self.jobs_atacados[1:])]

    def exportar(self, diretorio: Path) -> Dict[str, Path]:
        diretorio = Path(diretorio)
        diretorio.mkdir(parents=True, exist_ok=True)
        atacados = set(self.jobs_atacados)
        caminhos = {"latencias": diretorio / "latencias.csv", "scores": diretorio / "scores_atacante.csv"}
        with open(caminhos["latencias"], "w", newline="", encoding="utf-8") as arquivo:
            escritor = csv.writer(arquivo, lineterminator="\n")
            escritor.writerow(["job", "latency_ms", "late", "attacked"])
            for k in sorted(self.latencias):
                escritor.writerow([k, f"{self.latencias[k]:.3f}", int(self.latencias[k] > 0), int(k in atacados)])
        with open(caminhos["scores"], "w", newline="", encoding="utf-8") as arquivo:
            escritor = csv.writer(arquivo, lineterminator="\n")
            escritor.writerow(["t", "score"])
            for t, score in self.scores:
                escritor.writerow([f"{t:.3f}", f"{score:.6f}"])
        return caminhos


def smart_grid_run(cenario, semente: Optional[int] = None) -> ResultadoRedeEletrica:
    """
    Roda o cenário de rede elétrica e resume latências e scores.

    O fluxo de resposta é o que sai da região 1; o atacante é o primeiro nó
    comprometido do cenário.
    """
    atacante = min(cenario.ataque.comprometidos, default=None)
    resposta = next((f for f in cenario.topologia.fluxos if f.regiao_origem == 1), cenario.topologia.fluxos[-1])
    nome = resposta.nome or f"τ{resposta.tarefa_origem}"

    sistema = SistemaGeoShield(cenario, semente=semente, registrar_trace=False, registrar_chegadas=True)
    simulacao = sistema.executar()
    coletor = simulacao.coletor

    # D_n adotado pelos nós corretos da região de destino, por rodada
    decisoes = {
        r.n: r.valor for r in coletor.rodadas
        if r.regiao == resposta.regiao_destino and r.origem == resposta.regiao_origem and coletor.correto(r.no)
    }
    p_origem, p_destino = sistema.params(resposta.regiao_origem), sistema.params(resposta.regiao_destino)

    latencias: Dict[int, float] = {}
    for chegada in coletor.chegadas:
        if chegada.fluxo != nome or not coletor.correto(chegada.receptor):
            continue
        d_n = decisoes.get(rodada_latencia(chegada.t_m, p_origem, p_destino))
        if d_n is None:
            continue
        atraso = em_ms(chegada.t_chegada - (chegada.t_m + d_n))
        latencias[chegada.job] = max(latencias.get(chegada.job, atraso), atraso)

    scores: List[Tuple[float, float]] = []
    if atacante is not None:
        observador = None
        for registro in coletor.scores:
            if registro.no != atacante or registro.tarefa != resposta.tarefa_origem:
                continue
            if not coletor.correto(registro.observador):
                continue
            observador = registro.observador if observador is None else observador
            if registro.observador == observador:
                scores.append((em_segundos(registro.t), registro.score))

    jobs = sorted({
        int(m.group(1)) for evento in simulacao.eventos_ataque
        if evento.tipo == "ataque_adaptativo" and (m := _JOB.search(evento.detalhes))
    })
    inicio = cenario.ataque.inicio
    inicio_ataque = next((k for k in sorted(latencias) if resposta.t_rls(k) >= inicio), 0)

    resultado = ResultadoRedeEletrica(
        latencias, scores, jobs, len({(r.no, r.tarefa) for r in coletor.scores if r.sinalizado}), inicio_ataque, simulacao,
    )
    logger.info("Rede elétrica: %d jobs, %d atacados, fração atrasada %.4f, %d sinalizações",
                len(latencias), len(jobs), resultado.fracao_atrasada, resultado.sinalizacoes)
    return resultado
