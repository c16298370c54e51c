"""
Coletor dos registros de um ensaio (resumos de rodada, disputas, veredictos,
falhas, adoções, modo seguro, scores). Não participa do protocolo.
"""
import csv
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Set, Tuple

from Nucleo.Falhas import RegistroFalha


@dataclass(frozen=True)
class RegistroRodada:
    regiao: int
    origem: int
    n: int
    no: int
    valor: Optional[int]
    t_decisao: int
    disputa: bool
    d_real: Optional[int]


@dataclass(frozen=True)
class RegistroDisputa:
    regiao: int
    origem: int
    n: int
    no: int
    t_dclr: int
    participantes: Tuple[int, ...]
    culpados: Tuple[int, ...]
    valor_antigo: Optional[int]
    valor_novo: Optional[int]
    t_decisao_local: int
    prazo_local: int

    @property
    def dentro_do_prazo(self) -> bool:
        return self.t_decisao_local <= self.prazo_local


@dataclass(frozen=True)
class RegistroVeredito:
    fluxo: str
    job: int
    no: int
    remetente: Optional[int]
    veredito: str
    t_decisao: int
    modo_seguro: bool


@dataclass(frozen=True)
class RegistroAdocao:
    """Instante (real) em que um nó passou a agir sobre uma falha."""
    chave: tuple
    culpado: int
    regiao_culpado: int
    no: int
    t: int
    forma: str


@dataclass(frozen=True)
class RegistroModoSeguro:
    no: int
    regiao: int
    instante: int
    t_real: int
    motivo: str


@dataclass(frozen=True)
class RegistroHeartbeat:
    receptor: int
    remetente: int
    regiao: int
    n: int
    t_envio_real: int


@dataclass(frozen=True)
class RegistroChegada:
    """Mensagem de aplicação recebida direto do remetente."""
    fluxo: str
    job: int
    remetente: int
    receptor: int
    t_m: int
    t_chegada: int

    @property
    def latencia(self) -> int:
        return self.t_chegada - self.t_m


@dataclass(frozen=True)
class RegistroScore:
    t: int
    observador: int
    no: int
    tarefa: int
    score: float
    sinalizado: bool


@dataclass
class ColetorResultados:
    comprometidos: Set[int] = field(default_factory=set)
    rodadas: List[RegistroRodada] = field(default_factory=list)
    disputas: List[RegistroDisputa] = field(default_factory=list)
    veredictos: List[RegistroVeredito] = field(default_factory=list)
    falhas: List[RegistroFalha] = field(default_factory=list)
    adocoes: List[RegistroAdocao] = field(default_factory=list)
    modo_seguro: List[RegistroModoSeguro] = field(default_factory=list)
    heartbeats: List[RegistroHeartbeat] = field(default_factory=list)
    scores: List[RegistroScore] = field(default_factory=list)
    chegadas: List[RegistroChegada] = field(default_factory=list)
    registrar_scores: bool = True
    registrar_chegadas: bool = False
    fora_do_modelo: bool = False

    def correto(self, no: int) -> bool:
        return no not in self.comprometidos

    def decisoes_por_rodada(self) -> Dict[tuple, Dict[int, Optional[int]]]:
        """(regiao, origem, n) -> {no: valor} com a última decisão de cada nó."""
        saida: Dict[tuple, Dict[int, Optional[int]]] = {}
        for r in self.rodadas:
            saida.setdefault((r.regiao, r.origem, r.n), {})[r.no] = r.valor
        return saida

    # ===== EXPORTAÇÃO =====

    @staticmethod
    def _csv(caminho: Path, cabecalho: List[str], linhas) -> Path:
        caminho.parent.mkdir(parents=True, exist_ok=True)
        with open(caminho, "w", newline="", encoding="utf-8") as arquivo:
            escritor = csv.writer(arquivo, lineterminator="\n")
            escritor.writerow(cabecalho)
            for linha in linhas:
                escritor.writerow(["" if v is None else v for v in linha])
        return caminho

    def exportar_rodadas(self, caminho: Path) -> Path:
        rodadas = sorted(self.rodadas, key=lambda r: (r.n, r.origem, r.regiao, r.no, r.t_decisao))
        linhas = [
            (r.n, r.origem, r.regiao, r.no, "TIMEOUT" if r.valor is None else r.valor,
             int(r.disputa), r.d_real, r.t_decisao)
            for r in rodadas
        ]
        return self._csv(Path(caminho), ["round", "from_region", "region", "node", "d_n_ns",
                                         "dispute", "d_real_ns", "t_decision_ns"], linhas)

    def exportar_veredictos(self, caminho: Path) -> Path:
        linhas = sorted(
            ((v.fluxo, v.job, v.no, v.remetente, v.veredito, v.t_decisao, int(v.modo_seguro))
             for v in self.veredictos),
            key=lambda linha: tuple(str(x) for x in linha),
        )
        return self._csv(Path(caminho), ["flow", "job", "node", "sender", "verdict",
                                         "decision_time_ns", "safe_mode"], linhas)

    def exportar_disputas(self, caminho: Path) -> Path:
        """Auditoria de disputas em JSON lines, uma linha por nó e incidente."""
        caminho = Path(caminho)
        caminho.parent.mkdir(parents=True, exist_ok=True)
        with open(caminho, "w", encoding="utf-8") as arquivo:
            for d in sorted(self.disputas, key=lambda d: (d.origem, d.regiao, d.n, d.no)):
                linha = asdict(d)
                linha["dentro_do_prazo"] = d.dentro_do_prazo
                arquivo.write(json.dumps(linha, sort_keys=True) + "\n")
        return caminho

    def exportar_scores(self, caminho: Path) -> Path:
        linhas = [(s.t, s.observador, s.no, s.tarefa, f"{s.score:.9f}", int(s.sinalizado)) for s in self.scores]
        return self._csv(Path(caminho), ["time_ns", "observer", "node", "task", "score", "flagged"], linhas)

    def exportar_chegadas(self, caminho: Path) -> Path:
        linhas = [(c.fluxo, c.job, c.remetente, c.receptor, c.t_m, c.t_chegada, c.latencia) for c in self.chegadas]
        return self._csv(Path(caminho), ["flow", "job", "sender", "receiver", "t_m_ns", "arrival_ns",
                                         "latency_ns"], linhas)

    def exportar_modo_seguro(self, caminho: Path) -> Path:
        linhas = sorted((m.no, m.regiao, m.instante, m.t_real, m.motivo) for m in self.modo_seguro)
        return self._csv(Path(caminho), ["node", "region", "instant_ns", "t_real_ns", "reason"], linhas)
