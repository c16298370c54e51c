"""
Topologia do sistema: regiões, papéis e fluxos de aplicação entre regiões.
"""
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Tuple

from .Erros import ErroGeoShield
from .Identificadores import JobId, NodeId, RegionId, TaskId


class ErroTopologia(ErroGeoShield):
    """Nó desconhecido, enlace inexistente ou região mal dimensionada"""
    pass


@dataclass
class Regiao:
    """
    Região R_i com n_i >= 2f_i + 1 nós.

    Args:
        id: RegionId
        nos: Nós da região (ordem crescente)
        f: Orçamento de falhas f_i
        medidores: f_i+1 medidores iniciais
        guardioes: f_i guardiões de log iniciais
        fase: Deslocamento de t_0 da região (ns)
        capacidade: Slots de tarefa por nó
    """
    id: RegionId
    nos: Tuple[NodeId, ...]
    f: int
    medidores: Tuple[NodeId, ...] = ()
    guardioes: Tuple[NodeId, ...] = ()
    fase: int = 0
    capacidade: int = 4

    def __post_init__(self):
        self.nos = tuple(sorted(self.nos))
        if self.f < 0:
            raise ErroTopologia(f"Região {self.id}: f negativo")
        if len(self.nos) < 2 * self.f + 1:
            raise ErroTopologia(
                f"Região {self.id}: {len(self.nos)} nós < 2f+1 = {2 * self.f + 1}"
            )
        if not self.medidores:
            self.medidores = self.nos[: self.f + 1]
        if not self.guardioes:
            self.guardioes = tuple(n for n in self.nos if n not in self.medidores)[: self.f]
        self.medidores = tuple(self.medidores)
        self.guardioes = tuple(self.guardioes)
        if len(self.medidores) != self.f + 1:
            raise ErroTopologia(f"Região {self.id}: são necessários f+1 medidores")
        if not set(self.medidores) | set(self.guardioes) <= set(self.nos):
            raise ErroTopologia(f"Região {self.id}: papéis fora da região")


@dataclass
class FluxoAplicacao:
    """
    Tarefa periódica τ (região origem) que envia m para τ' (região destino).

    A saída é uma função determinística do job, o que permite que nós
    corretos reproduzam a saída de uma réplica (replay).

    Args:
        tarefa_origem: τ
        tarefa_destino: τ'
        regiao_origem: R_j
        regiao_destino: R_i
        replicas_origem: f_j+1 réplicas de τ
        replicas_destino: f_i+1 réplicas de τ'
        periodo: Período das invocações (ns)
        fase: Instante de liberação do job 0 (ns)
        prazo: Deadline relativo t_m - t_rls (ns)
        timeout_entrada: HB_timeout^τ' para entrada substituta (ns)
        saida: job -> conteúdo da mensagem
        nome: Rótulo usado em logs e CSVs
    """
    tarefa_origem: TaskId
    tarefa_destino: TaskId
    regiao_origem: RegionId
    regiao_destino: RegionId
    replicas_origem: Tuple[NodeId, ...]
    replicas_destino: Tuple[NodeId, ...]
    periodo: int
    fase: int = 0
    prazo: int = 50_000_000
    timeout_entrada: Optional[int] = None
    saida: Callable[[JobId], Any] = field(default=lambda job: {"job": job.invocacao})
    nome: str = ""

    def t_rls(self, invocacao: int) -> int:
        return self.fase + invocacao * self.periodo

    def t_m(self, invocacao: int) -> int:
        return self.t_rls(invocacao) + self.prazo

    def job(self, invocacao: int) -> JobId:
        return JobId(self.tarefa_origem, invocacao)


class Topologia:
    """Regiões e fluxos de um ensaio, com o índice nó → região."""

    def __init__(self, regioes: List[Regiao], fluxos: Optional[List[FluxoAplicacao]] = None):
        self.regioes: Dict[RegionId, Regiao] = {r.id: r for r in regioes}
        self.fluxos: List[FluxoAplicacao] = list(fluxos or [])
        self._regiao_de: Dict[NodeId, RegionId] = {}

        for regiao in regioes:
            for no in regiao.nos:
                if no in self._regiao_de:
                    raise ErroTopologia(f"Nó {no} em mais de uma região")
                self._regiao_de[no] = regiao.id

        for fluxo in self.fluxos:
            self._validar_fluxo(fluxo)

    def _validar_fluxo(self, fluxo: FluxoAplicacao) -> None:
        origem = self.regioes.get(fluxo.regiao_origem)
        destino = self.regioes.get(fluxo.regiao_destino)
        if origem is None or destino is None:
            raise ErroTopologia(f"Fluxo {fluxo.nome}: região inexistente")
        if fluxo.regiao_origem == fluxo.regiao_destino:
            raise ErroTopologia(f"Fluxo {fluxo.nome}: origem e destino na mesma região")
        if len(fluxo.replicas_origem) != origem.f + 1:
            raise ErroTopologia(f"Fluxo {fluxo.nome}: τ precisa de f_j+1 réplicas")
        if len(fluxo.replicas_destino) != destino.f + 1:
            raise ErroTopologia(f"Fluxo {fluxo.nome}: τ' precisa de f_i+1 réplicas")
        if not set(fluxo.replicas_origem) <= set(origem.nos):
            raise ErroTopologia(f"Fluxo {fluxo.nome}: réplica de τ fora de R_j")
        if not set(fluxo.replicas_destino) <= set(destino.nos):
            raise ErroTopologia(f"Fluxo {fluxo.nome}: réplica de τ' fora de R_i")

    def regiao_de(self, no: NodeId) -> RegionId:
        try:
            return self._regiao_de[no]
        except KeyError:
            raise ErroTopologia(f"Nó desconhecido: {no}") from None

    def regiao(self, regiao_id: RegionId) -> Regiao:
        try:
            return self.regioes[regiao_id]
        except KeyError:
            raise ErroTopologia(f"Região desconhecida: {regiao_id}") from None

    @property
    def nos(self) -> List[NodeId]:
        return sorted(self._regiao_de)

    def mesma_regiao(self, a: NodeId, b: NodeId) -> bool:
        return self.regiao_de(a) == self.regiao_de(b)

    def fluxo_por_tarefa(self, tarefa: TaskId) -> FluxoAplicacao:
        for fluxo in self.fluxos:
            if tarefa in (fluxo.tarefa_origem, fluxo.tarefa_destino):
                return fluxo
        raise ErroTopologia(f"Tarefa desconhecida: {tarefa}")

    @classmethod
    def uniforme(cls, quantidade: int, f: int, nos_por_regiao: Optional[int] = None,
                 capacidade: int = 4) -> "Topologia":
        """
        Topologia com `quantidade` regiões iguais e ids contíguos.

        Região r contém os nós r*n .. r*n + n - 1, com n = 2f+1 por padrão.
        """
        n = nos_por_regiao or 2 * f + 1
        regioes = [
            Regiao(RegionId(r), tuple(NodeId(r * n + k) for k in range(n)), f, capacidade=capacidade)
            for r in range(quantidade)
        ]
        return cls(regioes)
