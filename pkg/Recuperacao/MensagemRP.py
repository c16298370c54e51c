"""
Mensagens de recuperação: declaração intra-região de falha e m_rp, a
mensagem de propagação carregada nos heartbeats.
"""
from dataclasses import dataclass
from typing import Optional, Tuple

from Nucleo.Assinatura import Assinador, Assinatura, RegistroChaves
from Nucleo.Falhas import RegistroFalha
from Nucleo.Identificadores import JobId, NodeId, RegionId, TaskId
from Nucleo.ModeloTamanho import ModeloTamanho

from .CenarioFalhas import NovaAtribuicao


@dataclass(frozen=True)
class PedidoEntrada:
    """Pedido de nova entrada para τ' quando todo S_m foi marcado incorreto."""
    tarefa_origem: TaskId
    tarefa_destino: TaskId
    job: JobId

    def conteudo(self) -> tuple:
        return (self.tarefa_origem, self.tarefa_destino, tuple(self.job))


@dataclass(frozen=True)
class MensagemRP:
    """
    m_rp: falha, trocas de atribuição e pedido de entrada opcional.

    O conteúdo é determinístico (sem detector nem t_det), para que todos os
    medidores corretos de uma região embutam exatamente a mesma mensagem.
    """
    regiao: RegionId
    falha: tuple
    novas_atribuicoes: Tuple[NovaAtribuicao, ...] = ()
    pedido_entrada: Optional[PedidoEntrada] = None

    @classmethod
    def de_registro(cls, regiao: RegionId, registro: RegistroFalha,
                    novas_atribuicoes: Tuple[NovaAtribuicao, ...] = (),
                    pedido_entrada: Optional[PedidoEntrada] = None) -> "MensagemRP":
        return cls(regiao, registro.conteudo(), tuple(novas_atribuicoes), pedido_entrada)

    @property
    def culpado(self) -> NodeId:
        return self.falha[2]

    @property
    def tipo(self) -> str:
        return self.falha[0]

    def conteudo(self) -> tuple:
        return (
            self.regiao,
            self.falha,
            tuple((a.regiao, a.tarefa, a.saiu, a.entrou, a.a_partir) for a in self.novas_atribuicoes),
            self.pedido_entrada.conteudo() if self.pedido_entrada else None,
        )

    def chave_ordem(self) -> tuple:
        return (self.regiao, repr(self.falha))

    def tamanho(self, m: ModeloTamanho) -> int:
        total = m.cabecalho + 6 * m.id + 2 * m.duracao
        total += len(self.novas_atribuicoes) * (4 * m.id + m.duracao)
        if self.pedido_entrada is not None:
            total += 3 * m.id
        return total


@dataclass(frozen=True)
class DeclaracaoFalha:
    """Declaração assinada de uma falha, difundida na região do detector."""
    declarante: NodeId
    registro: RegistroFalha
    assinatura: Assinatura = None

    def conteudo(self) -> tuple:
        return ("falha", self.declarante, self.registro.conteudo())

    @classmethod
    def criar(cls, assinador: Assinador, registro: RegistroFalha) -> "DeclaracaoFalha":
        decl = cls(assinador.no, registro)
        return cls(assinador.no, registro, assinador.assinar(decl.conteudo()))

    def valida(self, registro: RegistroChaves) -> bool:
        return registro.conhece(self.declarante) and registro.verify(self.declarante, self.conteudo(), self.assinatura)

    def tamanho(self, m: ModeloTamanho) -> int:
        return m.envelope(ids=6, duracoes=3) + (m.hash if self.registro.evidencia is not None else 0)
