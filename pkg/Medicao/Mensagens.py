"""
Mensagens do protocolo de medição e da disputa.

Toda mensagem assinada expõe conteudo() (o que é assinado) e tamanho()
(bytes no modelo de banda). TIMEOUT é representado por None.
"""
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Optional, Tuple

from Nucleo.Assinatura import Assinador, Assinatura, RegistroChaves, resumo
from Nucleo.Identificadores import NodeId, RegionId
from Nucleo.ModeloTamanho import ModeloTamanho
from Nucleo.Topologia import Topologia
from PoC.ProvaCorretude import PoC
from Recuperacao.MensagemRP import MensagemRP

# Indicador especial de timeout para D_acc / D_n
TIMEOUT = None


def _valor_repr(valor: Optional[int]) -> str:
    return "TIMEOUT" if valor is TIMEOUT else f"{valor / 1e6:.3f}ms"


@dataclass(frozen=True)
class Anexos:
    """PoCs e mensagens de RP de uma rodada, em ordem canônica."""
    pocs: Tuple[PoC, ...] = ()
    rps: Tuple[MensagemRP, ...] = ()

    @classmethod
    def montar(cls, pocs, rps) -> "Anexos":
        return cls(tuple(sorted(pocs, key=PoC.chave_ordem)),
                   tuple(sorted(rps, key=MensagemRP.chave_ordem)))

    def conteudo(self) -> tuple:
        return (tuple(p.conteudo() for p in self.pocs), tuple(r.conteudo() for r in self.rps))

    @cached_property
    def hash(self) -> bytes:
        return resumo(self.conteudo())

    def vazio(self) -> bool:
        return not self.pocs and not self.rps

    def tamanho(self, m: ModeloTamanho) -> int:
        return sum(p.tamanho(m) for p in self.pocs) + sum(r.tamanho(m) for r in self.rps)


def conteudo_rodada(regiao: RegionId, n: int, anexos: Anexos) -> tuple:
    """Conteúdo assinado na fase 1a: (região, n, H(anexos))."""
    return ("rodada", regiao, n, anexos.hash)


@dataclass(frozen=True)
class AssinaturaRodada:
    remetente: NodeId
    regiao: RegionId
    n: int
    hash_anexos: bytes
    assinatura: Assinatura

    @classmethod
    def criar(cls, assinador: Assinador, regiao: RegionId, n: int, anexos: Anexos) -> "AssinaturaRodada":
        return cls(assinador.no, regiao, n, anexos.hash, assinador.assinar(conteudo_rodada(regiao, n, anexos)))

    def tamanho(self, m: ModeloTamanho) -> int:
        return m.envelope(ids=2, duracoes=1) + m.hash


@dataclass(frozen=True)
class Heartbeat:
    remetente: NodeId
    regiao: RegionId
    n: int
    assinaturas_rodada: Tuple[Assinatura, ...]
    anexos: Anexos = field(default_factory=Anexos)
    assinatura: Assinatura = None

    def conteudo(self) -> tuple:
        return ("hb", self.remetente, self.regiao, self.n, self.anexos.hash,
                tuple((a.signatario, a.valor) for a in self.assinaturas_rodada))

    @cached_property
    def digest(self) -> bytes:
        return resumo(self.conteudo())

    @classmethod
    def criar(cls, assinador: Assinador, regiao: RegionId, n: int,
              assinaturas: Tuple[Assinatura, ...], anexos: Anexos) -> "Heartbeat":
        assinaturas = tuple(sorted(assinaturas, key=lambda a: a.signatario))
        base = cls(assinador.no, regiao, n, assinaturas, anexos)
        return cls(assinador.no, regiao, n, assinaturas, anexos, assinador.assinar(base.conteudo()))

    def valido(self, registro: RegistroChaves, topologia: Topologia) -> bool:
        """
        Válido se a assinatura externa verifica e S_n tem f_j+1 assinaturas
        válidas de nós distintos da região emissora sobre (região, n, anexos).
        """
        regiao = topologia.regioes.get(self.regiao)
        if regiao is None or self.remetente not in regiao.nos:
            return False
        if not registro.verify(self.remetente, self.conteudo(), self.assinatura):
            return False
        conteudo = conteudo_rodada(self.regiao, self.n, self.anexos)
        signatarios = {
            a.signatario for a in self.assinaturas_rodada
            if a.signatario in regiao.nos and registro.verify(a.signatario, conteudo, a)
        }
        return len(signatarios) >= regiao.f + 1

    def tamanho(self, m: ModeloTamanho) -> int:
        return (m.cabecalho + 2 * m.id + m.duracao + m.hash
                + m.assinaturas(len(self.assinaturas_rodada)) + m.assinatura + m.id
                + self.anexos.tamanho(m))


@dataclass(frozen=True)
class Proposta:
    """Latência proposta d = t_recv - t_n (relógio local do proponente)."""
    proponente: NodeId
    regiao_origem: RegionId
    n: int
    d: int
    heartbeat: Heartbeat
    assinatura: Assinatura = None

    def conteudo(self) -> tuple:
        return ("prop", self.proponente, self.regiao_origem, self.n, self.d,
                self.heartbeat.digest)

    @property
    def emissor(self) -> NodeId:
        """N_u: remetente do heartbeat embutido."""
        return self.heartbeat.remetente

    @property
    def par(self) -> tuple:
        """(N_u, N_d)"""
        return (self.heartbeat.remetente, self.proponente)

    @classmethod
    def criar(cls, assinador: Assinador, regiao_origem: RegionId, n: int, d: int,
              heartbeat: Heartbeat) -> "Proposta":
        base = cls(assinador.no, regiao_origem, n, d, heartbeat)
        return cls(assinador.no, regiao_origem, n, d, heartbeat, assinador.assinar(base.conteudo()))

    def assinatura_valida(self, registro: RegistroChaves) -> bool:
        return registro.conhece(self.proponente) and registro.verify(self.proponente, self.conteudo(), self.assinatura)

    def tamanho(self, m: ModeloTamanho) -> int:
        return m.envelope(ids=3, duracoes=2) + self.heartbeat.tamanho(m)

    def __repr__(self) -> str:
        return f"Proposta(N{self.proponente}<-N{self.emissor}, n={self.n}, d={_valor_repr(self.d)})"


@dataclass(frozen=True)
class Aceite:
    remetente: NodeId
    regiao_origem: RegionId
    n: int
    valor: Optional[int]
    assinatura: Assinatura = None

    def conteudo(self) -> tuple:
        return ("acc", self.remetente, self.regiao_origem, self.n, self.valor)

    @classmethod
    def criar(cls, assinador: Assinador, regiao_origem: RegionId, n: int, valor: Optional[int]) -> "Aceite":
        base = cls(assinador.no, regiao_origem, n, valor)
        return cls(assinador.no, regiao_origem, n, valor, assinador.assinar(base.conteudo()))

    def valido(self, registro: RegistroChaves) -> bool:
        return registro.conhece(self.remetente) and registro.verify(self.remetente, self.conteudo(), self.assinatura)

    def tamanho(self, m: ModeloTamanho) -> int:
        return m.envelope(ids=2, duracoes=2)

    def __repr__(self) -> str:
        return f"Aceite(N{self.remetente}, n={self.n}, {_valor_repr(self.valor)})"


@dataclass(frozen=True)
class DecisaoLatencia:
    """D_n decidido após uma disputa, difundido para a região inteira."""
    remetente: NodeId
    regiao_origem: RegionId
    n: int
    valor: Optional[int]
    assinatura: Assinatura = None

    def conteudo(self) -> tuple:
        return ("dec", self.remetente, self.regiao_origem, self.n, self.valor)

    @classmethod
    def criar(cls, assinador: Assinador, regiao_origem: RegionId, n: int, valor: Optional[int]) -> "DecisaoLatencia":
        base = cls(assinador.no, regiao_origem, n, valor)
        return cls(assinador.no, regiao_origem, n, valor, assinador.assinar(base.conteudo()))

    def valida(self, registro: RegistroChaves) -> bool:
        return registro.conhece(self.remetente) and registro.verify(self.remetente, self.conteudo(), self.assinatura)

    def tamanho(self, m: ModeloTamanho) -> int:
        return m.envelope(ids=2, duracoes=2)


# ===== DISPUTA =====

@dataclass(frozen=True)
class DeclaracaoDisputa:
    """
    Declaração de estágio 1: dois aceites válidos com valores diferentes.

    Um medidor inclui a própria proposta e o próprio aceite; os demais nós
    incluem o aceite conflitante que receberam.
    """
    declarante: NodeId
    regiao_origem: RegionId
    n: int
    aceite_referencia: Aceite
    aceite_ofensor: Aceite
    proposta_propria: Optional[Proposta]
    t_dclr: int
    assinatura: Assinatura = None

    def conteudo(self) -> tuple:
        return ("dclr", self.declarante, self.regiao_origem, self.n,
                self.aceite_referencia.conteudo(), self.aceite_ofensor.conteudo(),
                self.proposta_propria.conteudo() if self.proposta_propria else None, self.t_dclr)

    @classmethod
    def criar(cls, assinador: Assinador, regiao_origem: RegionId, n: int, referencia: Aceite,
              ofensor: Aceite, proposta: Optional[Proposta], t_dclr: int) -> "DeclaracaoDisputa":
        base = cls(assinador.no, regiao_origem, n, referencia, ofensor, proposta, t_dclr)
        return cls(assinador.no, regiao_origem, n, referencia, ofensor, proposta, t_dclr,
                   assinador.assinar(base.conteudo()))

    def assinatura_valida(self, registro: RegistroChaves) -> bool:
        return registro.conhece(self.declarante) and registro.verify(self.declarante, self.conteudo(), self.assinatura)

    def conteudo_valido(self, registro: RegistroChaves) -> bool:
        """Aceites verificam, são da mesma rodada e divergem no valor."""
        ref, ofensor = self.aceite_referencia, self.aceite_ofensor
        if not (ref.valido(registro) and ofensor.valido(registro)):
            return False
        if (ref.regiao_origem, ref.n) != (self.regiao_origem, self.n):
            return False
        if (ofensor.regiao_origem, ofensor.n) != (self.regiao_origem, self.n):
            return False
        if self.proposta_propria is not None and not self.proposta_propria.assinatura_valida(registro):
            return False
        return ref.valor != ofensor.valor

    def tamanho(self, m: ModeloTamanho) -> int:
        total = m.envelope(ids=2, duracoes=2) + self.aceite_referencia.tamanho(m) + self.aceite_ofensor.tamanho(m)
        if self.proposta_propria is not None:
            total += self.proposta_propria.tamanho(m)
        return total


@dataclass(frozen=True)
class EntradaLog:
    """
    Proposta registrada e o endosso do dono do log sobre ela.

    no_aceite marca as propostas que entraram no cálculo do aceite do dono.
    """
    proposta: Proposta
    endosso: Assinatura
    no_aceite: bool = False


def chave_proposta(proposta: Proposta) -> bytes:
    return resumo(proposta.conteudo())


def conteudo_endosso(proposta: Proposta) -> tuple:
    return ("endosso", resumo(proposta.conteudo()))


@dataclass(frozen=True)
class LogPropostas:
    dono: NodeId
    regiao_origem: RegionId
    n: int
    entradas: Tuple[EntradaLog, ...]
    aceite: Optional[Aceite]
    assinatura: Assinatura = None

    def conteudo(self) -> tuple:
        return ("log", self.dono, self.regiao_origem, self.n,
                tuple((e.proposta.conteudo(), e.endosso.valor, e.no_aceite) for e in self.entradas),
                self.aceite.conteudo() if self.aceite else None)

    @classmethod
    def criar(cls, assinador: Assinador, regiao_origem: RegionId, n: int, propostas,
              aceite: Optional[Aceite], usadas: Iterable[bytes] = ()) -> "LogPropostas":
        usadas = set(usadas)
        entradas = tuple(
            EntradaLog(p, assinador.assinar(conteudo_endosso(p)), chave_proposta(p) in usadas)
            for p in sorted(propostas, key=lambda p: (p.proponente, p.emissor, p.d))
        )
        base = cls(assinador.no, regiao_origem, n, entradas, aceite)
        return cls(assinador.no, regiao_origem, n, entradas, aceite, assinador.assinar(base.conteudo()))

    def valido(self, registro: RegistroChaves) -> bool:
        return registro.conhece(self.dono) and registro.verify(self.dono, self.conteudo(), self.assinatura)

    def tamanho(self, m: ModeloTamanho) -> int:
        total = m.envelope(ids=2, duracoes=1)
        total += sum(e.proposta.tamanho(m) + m.assinatura for e in self.entradas)
        if self.aceite is not None:
            total += self.aceite.tamanho(m)
        return total


@dataclass(frozen=True)
class NovoAceite:
    """
    Estágio 3: par (N_u, N_d) escolhido, com a proposta e f+1 endossos de
    donos de log distintos. proposta None significa TIMEOUT.
    """
    remetente: NodeId
    regiao_origem: RegionId
    n: int
    proposta: Optional[Proposta]
    endossos: Tuple[Assinatura, ...]
    valor: Optional[int]
    assinatura: Assinatura = None

    def conteudo(self) -> tuple:
        return ("novo_acc", self.remetente, self.regiao_origem, self.n,
                self.proposta.conteudo() if self.proposta else None,
                tuple((a.signatario, a.valor) for a in self.endossos), self.valor)

    @classmethod
    def criar(cls, assinador: Assinador, regiao_origem: RegionId, n: int, proposta: Optional[Proposta],
              endossos: Tuple[Assinatura, ...], valor: Optional[int]) -> "NovoAceite":
        base = cls(assinador.no, regiao_origem, n, proposta, tuple(endossos), valor)
        return cls(assinador.no, regiao_origem, n, proposta, tuple(endossos), valor,
                   assinador.assinar(base.conteudo()))

    def assinatura_valida(self, registro: RegistroChaves) -> bool:
        return registro.conhece(self.remetente) and registro.verify(self.remetente, self.conteudo(), self.assinatura)

    def tamanho(self, m: ModeloTamanho) -> int:
        total = m.envelope(ids=4, duracoes=2) + m.assinaturas(len(self.endossos))
        if self.proposta is not None:
            total += self.proposta.tamanho(m)
        return total
