"""
Tabela de scores de pontualidade por (nó, tarefa) e contadores de sinalização.
"""
import logging
from fractions import Fraction
from typing import Dict, Iterable, List, Set, Tuple

from Nucleo.Identificadores import NodeId, TaskId

from .ParametrosTGS import ParametrosTGS

logger = logging.getLogger(__name__)

Entrada = Tuple[NodeId, TaskId]
# (emissor N_s:τ, receptor N_r:τ')
Par = Tuple[Entrada, Entrada]


class TabelaScores:
    """
    Scores em (-s_pen, s_max] e contador de sinalizações por nó.

    Uma entrada com score <= 0 é sinalizada uma única vez; volta a valer quando
    é recriada (registrar) após a reatribuição.
    """

    def __init__(self, parametros: ParametrosTGS):
        self.parametros = parametros
        self.scores: Dict[Entrada, Fraction] = {}
        self.contadores: Dict[NodeId, int] = {}
        self.sinalizados: Set[Entrada] = set()
        self.penalidades = 0
        self.premios = 0

    def score(self, no: NodeId, tarefa: TaskId) -> Fraction:
        return self.scores.setdefault((no, tarefa), self.parametros.s_init)

    def registrar(self, no: NodeId, tarefa: TaskId) -> None:
        """(Re)inicia a entrada em s_init."""
        self.scores[(no, tarefa)] = self.parametros.s_init
        self.sinalizados.discard((no, tarefa))

    def remover(self, no: NodeId, tarefa: TaskId) -> None:
        self.scores.pop((no, tarefa), None)
        self.sinalizados.discard((no, tarefa))

    def penalizar(self, no: NodeId, tarefa: TaskId) -> bool:
        """
        Subtrai s_pen.

        Returns:
            True se a entrada acabou de ser sinalizada (score <= 0)
        """
        entrada = (no, tarefa)
        self.scores[entrada] = self.score(no, tarefa) - self.parametros.s_pen
        self.penalidades += 1
        if self.scores[entrada] <= 0 and entrada not in self.sinalizados:
            self.sinalizados.add(entrada)
            return True
        return False

    def premiar(self, no: NodeId, tarefa: TaskId, vezes: int = 1) -> None:
        """Soma vezes·s_awd, limitado a s_max (avanço preguiçoso de prêmios)."""
        if vezes <= 0:
            return
        entrada = (no, tarefa)
        self.scores[entrada] = min(self.parametros.s_max,
                                   self.score(no, tarefa) + vezes * self.parametros.s_awd)
        self.premios += vezes

    def incrementar_contador(self, no: NodeId) -> int:
        self.contadores[no] = self.contadores.get(no, 0) + 1
        return self.contadores[no]

    def contador(self, no: NodeId) -> int:
        return self.contadores.get(no, 0)


def apply_round(tabela: TabelaScores, pares: Iterable[Par], reclamados: Iterable[Par]) -> List[Entrada]:
    """
    Aplica as reclamações de uma rodada.

    Par reclamado: as duas pontas perdem s_pen. Par ativo não reclamado: as
    duas pontas ganham s_awd (com teto). Pares são processados em ordem.

    Args:
        tabela: Tabela a atualizar
        pares: Pares ativos na rodada
        reclamados: Pares listados em alguma reclamação

    Returns:
        Entradas sinalizadas nesta rodada, em ordem
    """
    reclamados = set(reclamados)
    sinalizadas: List[Entrada] = []
    for emissor, receptor in sorted(set(pares) | reclamados):
        if (emissor, receptor) in reclamados:
            for entrada in (emissor, receptor):
                if tabela.penalizar(*entrada):
                    sinalizadas.append(entrada)
        else:
            tabela.premiar(*emissor)
            tabela.premiar(*receptor)
    for entrada in sinalizadas:
        logger.info("TGS: N%s:τ%s sinalizado (score %.4f)", entrada[0], entrada[1],
                    float(tabela.scores[entrada]))
    return sinalizadas
