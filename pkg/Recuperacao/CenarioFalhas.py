"""
Estado replicado de recuperação de cada nó: cenário de falhas (FN, FL, modo
seguro) e atribuição de papéis/tarefas de cada região.

Substitui o escalonamento multimodo offline por um modelo simples: o nó
excluído perde todas as tarefas, que vão para substitutos escolhidos por
select_replacement, com efeito a partir de um instante determinístico.
"""
import bisect
import copy
import logging
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, List, Optional, Set, Tuple

from Nucleo.Erros import ErroGeoShield
from Nucleo.Falhas import RegistroFalha, TipoFalha
from Nucleo.Identificadores import NodeId, RegionId, TaskId
from Nucleo.Topologia import FluxoAplicacao, Regiao
from TGS.Substituicao import ErroSemSubstituto, select_replacement

logger = logging.getLogger(__name__)

# Papéis tratados como tarefas na reatribuição
TAREFA_MEDICAO = TaskId(-1)
TAREFA_LOG = TaskId(-2)


class ErroOrcamentoFalhas(ErroGeoShield):
    """Mais de f_i nós excluídos numa região: ensaio fora do modelo"""
    pass


@dataclass(frozen=True)
class NovaAtribuicao:
    """Troca de um membro de tarefa, válida a partir de `a_partir` (ns)."""
    regiao: RegionId
    tarefa: TaskId
    saiu: NodeId
    entrou: NodeId
    a_partir: int


@dataclass
class CenarioFalhas:
    """FN, FL e modo seguro conhecidos por um nó (cresce monotonicamente)."""
    fn: Set[NodeId] = field(default_factory=set)
    fl: Set[FrozenSet[NodeId]] = field(default_factory=set)
    modo_seguro: Dict[RegionId, int] = field(default_factory=dict)
    fora_do_modelo: bool = False

    def enlace_falho(self, a: NodeId, b: NodeId) -> bool:
        return frozenset((a, b)) in self.fl


class AtribuicaoRegiao:
    """
    Papéis e réplicas de uma região, com histórico para consulta por instante.

    Cada lista de membros guarda [(a_partir, membros)], em ordem de a_partir.
    """

    def __init__(self, regiao: Regiao, fluxos: List[FluxoAplicacao]):
        self.regiao = regiao.id
        self.nos = regiao.nos
        self.f = regiao.f
        self.capacidade = regiao.capacidade
        self.contadores: Dict[NodeId, int] = {}
        self.excluidos: Set[NodeId] = set()
        self._historico: Dict[TaskId, List[Tuple[int, Tuple[NodeId, ...]]]] = {
            TAREFA_MEDICAO: [(0, tuple(regiao.medidores))],
            TAREFA_LOG: [(0, tuple(regiao.guardioes))],
        }
        for fluxo in fluxos:
            if fluxo.regiao_origem == regiao.id:
                self._historico[fluxo.tarefa_origem] = [(0, tuple(fluxo.replicas_origem))]
            if fluxo.regiao_destino == regiao.id:
                self._historico[fluxo.tarefa_destino] = [(0, tuple(fluxo.replicas_destino))]

    def copia(self) -> "AtribuicaoRegiao":
        return copy.deepcopy(self)

    @property
    def tarefas(self) -> List[TaskId]:
        return sorted(self._historico)

    def membros(self, tarefa: TaskId, t: Optional[int] = None) -> Tuple[NodeId, ...]:
        """Membros da tarefa no instante t (os mais recentes se t for None)."""
        historico = self._historico.get(tarefa, [])
        if not historico:
            return ()
        if t is None:
            return historico[-1][1]
        indice = bisect.bisect_right([inicio for inicio, _ in historico], t) - 1
        return historico[max(indice, 0)][1]

    def carga(self, no: NodeId) -> int:
        return sum(1 for tarefa in self._historico if no in self.membros(tarefa))

    def tarefas_de(self, no: NodeId) -> List[TaskId]:
        return [tarefa for tarefa in self.tarefas if no in self.membros(tarefa)]

    def elegiveis(self, tarefa: TaskId) -> List[NodeId]:
        membros = self.membros(tarefa)
        return [
            no for no in self.nos
            if no not in self.excluidos and no not in membros and self.carga(no) < self.capacidade
        ]

    def aplicar(self, nova: NovaAtribuicao) -> None:
        """Aplica uma troca (idempotente)."""
        atuais = self.membros(nova.tarefa)
        if nova.saiu not in atuais or nova.entrou in atuais:
            return
        novos = tuple(sorted(nova.entrou if no == nova.saiu else no for no in atuais))
        historico = self._historico.setdefault(nova.tarefa, [])
        historico.append((nova.a_partir, novos))
        historico.sort(key=lambda item: item[0])

    def reatribuir(self, no: NodeId, tarefa: TaskId, a_partir: int) -> NovaAtribuicao:
        """
        Tira `no` de `tarefa` e escolhe o substituto.

        Raises:
            ErroSemSubstituto: Se não houver nó elegível
        """
        substituto = select_replacement(self, no, tarefa)
        nova = NovaAtribuicao(self.regiao, tarefa, no, substituto, a_partir)
        self.aplicar(nova)
        return nova


def apply_local_recovery(cenario: CenarioFalhas, atribuicao: AtribuicaoRegiao,
                         registro: RegistroFalha, a_partir: int) -> List[NovaAtribuicao]:
    """
    Atualiza FN/FL e reatribui as tarefas do nó culpado.

    Falha de enlace não exclui ninguém: o culpado declarado só perde o papel
    de medidor, que depende da comunicação entre os dois extremos.

    Args:
        cenario: Cenário de falhas do nó que aplica a recuperação
        atribuicao: Atribuição da região do culpado
        registro: Falha adotada
        a_partir: Instante de efeito das novas atribuições

    Returns:
        Trocas realizadas (vazio se a falha já era conhecida)

    Raises:
        ErroOrcamentoFalhas: Se a região passar de f_i nós excluídos
        ErroSemSubstituto: Se alguma tarefa ficar sem substituto
    """
    culpado = registro.culpado
    if registro.tipo is TipoFalha.ENLACE:
        par = frozenset(registro.enlace or (registro.detector, culpado))
        if par in cenario.fl:
            return []
        cenario.fl.add(par)
        if set(par) <= set(atribuicao.membros(TAREFA_MEDICAO)) and culpado not in atribuicao.excluidos:
            return [atribuicao.reatribuir(culpado, TAREFA_MEDICAO, a_partir)]
        return []

    if culpado in cenario.fn:
        return []
    cenario.fn.add(culpado)
    atribuicao.excluidos.add(culpado)
    atribuicao.contadores[culpado] = atribuicao.contadores.get(culpado, 0) + 1

    excluidos_regiao = len(atribuicao.excluidos)
    if excluidos_regiao > atribuicao.f:
        cenario.fora_do_modelo = True
        raise ErroOrcamentoFalhas(
            f"Região {atribuicao.regiao}: {excluidos_regiao} nós excluídos > f={atribuicao.f}"
        )

    trocas = [atribuicao.reatribuir(culpado, tarefa, a_partir) for tarefa in atribuicao.tarefas_de(culpado)]
    logger.info("Recuperação local: N%s excluído da região %s (%d tarefas reatribuídas)",
                culpado, atribuicao.regiao, len(trocas))
    return trocas
