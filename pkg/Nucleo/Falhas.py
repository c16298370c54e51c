"""
Registros de falha produzidos pelos protocolos.

Comportamento bizantino nunca vira exceção: vira um RegistroFalha encaminhado
à recuperação.
"""
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Optional, Tuple

from .Identificadores import JobId, NodeId, RegionId, TaskId


class TipoFalha(Enum):
    OMISSAO = "omissao"
    COMISSAO = "comissao"
    ENLACE = "enlace"


class EscopoFalha(Enum):
    INTRA = "intra"
    INTER = "inter"


@dataclass(frozen=True)
class RegistroFalha:
    """
    Falha declarada por um detector.

    `chave` identifica a falha independentemente de quem a detectou, para que
    declarações de detectores diferentes sejam agregadas.
    """
    tipo: TipoFalha
    escopo: EscopoFalha
    culpado: NodeId
    detector: NodeId
    t_det: int
    motivo: str
    enlace: Optional[Tuple[NodeId, NodeId]] = None
    tarefa: Optional[TaskId] = None
    job: Optional[JobId] = None
    t_rls: Optional[int] = None
    rodada: Optional[int] = None
    regiao_ref: Optional[RegionId] = None
    evidencia: Any = field(default=None, compare=False)

    @property
    def chave(self) -> tuple:
        return (self.tipo.value, self.culpado, self.motivo, self.tarefa, self.job, self.rodada, self.regiao_ref)

    def conteudo(self) -> tuple:
        """Parte determinística (sem detector nem t_det), usada no m_rp."""
        return (self.tipo.value, self.escopo.value, self.culpado, self.motivo,
                self.enlace, self.tarefa, self.job, self.t_rls, self.rodada, self.regiao_ref)

    @classmethod
    def de_conteudo(cls, conteudo: tuple, detector: NodeId, t_det: int) -> "RegistroFalha":
        """Reconstrói um registro a partir do conteúdo carregado num m_rp."""
        tipo, escopo, culpado, motivo, enlace, tarefa, job, t_rls, rodada, regiao_ref = conteudo
        return cls(
            TipoFalha(tipo), EscopoFalha(escopo), culpado, detector, t_det, motivo,
            tuple(enlace) if enlace is not None else None, tarefa,
            JobId(*job) if job is not None else None, t_rls, rodada, regiao_ref,
        )
