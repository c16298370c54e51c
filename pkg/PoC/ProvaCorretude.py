"""
Prova de corretude (PoC) de mensagens inter-região.

Uma PoC para m é (τ', job, H(m), Σ): f_j+1 assinaturas de nós da região de
origem sobre (τ', job, H(m)). O job entra no conteúdo assinado, o que impede
reaproveitar uma PoC antiga com outro JobId.
"""
from dataclasses import dataclass
from typing import Any, Iterable, Tuple

from Nucleo.Assinatura import Assinador, Assinatura, RegistroChaves, resumo
from Nucleo.Identificadores import JobId, NodeId, TaskId
from Nucleo.ModeloTamanho import ModeloTamanho
from Nucleo.Tempo import ParametrosTempo, primeira_rodada


def conteudo_parcela(tarefa_destino: TaskId, job: JobId, hash_m: bytes) -> tuple:
    return ("poc", tarefa_destino, tuple(job), hash_m)


def assinaturas_validas(assinaturas: Iterable[Assinatura], conteudo: Any, permitidos: Iterable[NodeId],
                        registro: RegistroChaves) -> set:
    """Signatários distintos e permitidos cujas assinaturas verificam."""
    permitidos = set(permitidos)
    return {
        a.signatario for a in assinaturas
        if a.signatario in permitidos and registro.verify(a.signatario, conteudo, a)
    }


@dataclass(frozen=True)
class MensagemAplicacao:
    """Saída m de um job de τ para τ'."""
    remetente: NodeId
    tarefa_origem: TaskId
    tarefa_destino: TaskId
    job: JobId
    carga: Any
    assinatura: Assinatura = None

    def identidade(self) -> tuple:
        return (self.tarefa_origem, self.tarefa_destino, tuple(self.job), self.carga)

    @property
    def hash(self) -> bytes:
        return resumo(self.identidade())

    def conteudo(self) -> tuple:
        return ("app", self.remetente, self.hash)

    @classmethod
    def criar(cls, assinador: Assinador, tarefa_origem: TaskId, tarefa_destino: TaskId,
              job: JobId, carga: Any) -> "MensagemAplicacao":
        msg = cls(assinador.no, tarefa_origem, tarefa_destino, job, carga)
        return cls(assinador.no, tarefa_origem, tarefa_destino, job, carga, assinador.assinar(msg.conteudo()))

    def valida(self, registro: RegistroChaves) -> bool:
        return registro.conhece(self.remetente) and registro.verify(self.remetente, self.conteudo(), self.assinatura)

    def tamanho(self, m: ModeloTamanho) -> int:
        # carga modelada como um hash (valor de aplicação de tamanho fixo)
        return m.envelope(ids=4, duracoes=1) + m.hash


@dataclass(frozen=True)
class ParcelaPoC:
    """Assinatura de uma réplica de τ sobre (τ', job, H(m)), enviada aos medidores."""
    remetente: NodeId
    tarefa_destino: TaskId
    job: JobId
    hash_m: bytes
    assinatura: Assinatura = None

    def conteudo(self) -> tuple:
        return conteudo_parcela(self.tarefa_destino, self.job, self.hash_m)

    @classmethod
    def criar(cls, assinador: Assinador, tarefa_destino: TaskId, job: JobId, hash_m: bytes) -> "ParcelaPoC":
        return cls(assinador.no, tarefa_destino, job, hash_m,
                   assinador.assinar(conteudo_parcela(tarefa_destino, job, hash_m)))

    def valida(self, registro: RegistroChaves) -> bool:
        return registro.conhece(self.remetente) and registro.verify(self.remetente, self.conteudo(), self.assinatura)

    def tamanho(self, m: ModeloTamanho) -> int:
        return m.envelope(ids=3, duracoes=1) + m.hash


@dataclass(frozen=True)
class PoC:
    tarefa_destino: TaskId
    job: JobId
    hash_m: bytes
    assinaturas: Tuple[Assinatura, ...]

    def conteudo(self) -> tuple:
        return (self.tarefa_destino, tuple(self.job), self.hash_m,
                tuple((a.signatario, a.valor) for a in self.assinaturas))

    def chave_ordem(self) -> tuple:
        """Ordem de concatenação nos heartbeats: (τ', job)."""
        return (self.tarefa_destino, tuple(self.job))

    def final(self, f: int, permitidos: Iterable[NodeId], registro: RegistroChaves) -> bool:
        """PoC final: f+1 assinaturas válidas de nós distintos de `permitidos`."""
        conteudo = conteudo_parcela(self.tarefa_destino, self.job, self.hash_m)
        return len(assinaturas_validas(self.assinaturas, conteudo, permitidos, registro)) >= f + 1

    def tamanho(self, m: ModeloTamanho) -> int:
        return 3 * m.id + m.hash + m.assinaturas(len(self.assinaturas))


@dataclass(frozen=True)
class EntradaEndossada:
    """
    Entrada substituta: m reproduzida pelo conjunto atual de réplicas de τ,
    com f_j+1 endossos sobre (τ', job, H(m)).
    """
    remetente: NodeId
    mensagem: MensagemAplicacao
    endossos: Tuple[Assinatura, ...]

    def valida(self, f: int, permitidos: Iterable[NodeId], registro: RegistroChaves) -> bool:
        msg = self.mensagem
        conteudo = conteudo_parcela(msg.tarefa_destino, msg.job, msg.hash)
        return len(assinaturas_validas(self.endossos, conteudo, permitidos, registro)) >= f + 1

    def tamanho(self, m: ModeloTamanho) -> int:
        return self.mensagem.tamanho(m) + m.assinaturas(len(self.endossos))


def poc_round_for(t_m: int, p: ParametrosTempo) -> int:
    """
    Rodada n* cujo heartbeat carrega a PoC de uma mensagem com deadline t_m:
    menor n com t_n >= t_m + D_gap^poc.
    """
    return primeira_rodada(p, t_m + p.d_gap_poc, "t_send")
