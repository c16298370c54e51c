"""
Protocolo de medição de latência inter-região (fases 1a a 4).

Cada nó mantém dois papéis independentes por rodada:
- emissor: se for medidor da própria região, troca assinaturas da rodada
  (fase 1a/1b) e envia o heartbeat aos medidores das outras regiões;
- receptor: para cada região de origem j, propõe latências (fase 2), avalia
  as propostas dos pares (fase 3a), difunde o aceite (fase 3b) e decide D_n
  (fase 4). A agenda da rodada é sempre a da região de origem.
"""
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Set, Tuple

from Nucleo.Falhas import EscopoFalha, RegistroFalha, TipoFalha
from Nucleo.Identificadores import NodeId, RegionId
from Nucleo.Tempo import primeira_rodada
from Sistema.ColetorResultados import RegistroHeartbeat, RegistroRodada
from Sistema.NoGeoShield import SILENCIO

from .Mensagens import (
    TIMEOUT, Aceite, Anexos, AssinaturaRodada, Heartbeat, Proposta, chave_proposta, conteudo_rodada,
)

logger = logging.getLogger(__name__)

# Rodadas mantidas em memória por região de origem
JANELA_ESTADOS = 16
JANELA_DECISOES = 256


@dataclass
class EstadoEnvio:
    """Fase 1a de uma rodada da própria região."""
    anexos: Anexos
    assinaturas: Dict[NodeId, AssinaturaRodada] = field(default_factory=dict)
    heartbeat: Optional[Heartbeat] = None


@dataclass
class EstadoRodada:
    """Estado de recepção de uma rodada (região de origem, n)."""
    heartbeats: Dict[NodeId, Heartbeat] = field(default_factory=dict)
    tardios: List[Tuple[Heartbeat, int]] = field(default_factory=list)
    versoes_anexos: Dict[bytes, Anexos] = field(default_factory=dict)
    p_min: Optional[int] = None
    a_min: Optional[int] = None
    propostas: Dict[tuple, Proposta] = field(default_factory=dict)
    usadas: Set[bytes] = field(default_factory=set)
    aceites: Dict[NodeId, List[Aceite]] = field(default_factory=dict)
    aceite_proprio: Optional[Aceite] = None
    proposta_propria: Optional[Proposta] = None
    disputa: bool = False


def minimo(*valores: Optional[int]) -> Optional[int]:
    presentes = [v for v in valores if v is not None]
    return min(presentes) if presentes else None


class ProtocoloMedicao:
    """Fases do protocolo de medição executadas por um nó."""

    def __init__(self, no):
        self.no = no
        self.envios: Dict[int, EstadoEnvio] = {}
        self.estados: Dict[Tuple[RegionId, int], EstadoRodada] = {}
        self.decisoes: Dict[Tuple[RegionId, int], Optional[int]] = {}
        no.registrar_tratador(AssinaturaRodada, self.ao_receber_assinatura)
        no.registrar_tratador(Heartbeat, self.ao_receber_heartbeat)
        no.registrar_tratador(Proposta, self.ao_receber_proposta)
        no.registrar_tratador(Aceite, self.ao_receber_aceite)

    @property
    def regioes_origem(self) -> List[RegionId]:
        return [r for r in sorted(self.no.topologia.regioes) if r != self.no.regiao_id]

    def iniciar(self) -> None:
        p = self.no.params()
        self._agendar_envio(primeira_rodada(p, 0, "t_sig"))
        for j in self.regioes_origem:
            self._agendar_recepcao(j, primeira_rodada(self.no.params(j), 0, "t_sig"))

    def estado(self, regiao_origem: RegionId, n: int) -> EstadoRodada:
        return self.estados.setdefault((regiao_origem, n), EstadoRodada())

    def decisao(self, regiao_origem: RegionId, n: int) -> Tuple[bool, Optional[int]]:
        """(decidido, D_n) desta rodada na visão do nó."""
        chave = (regiao_origem, n)
        return (chave in self.decisoes, self.decisoes.get(chave))

    def _declarar(self, tipo: TipoFalha, escopo: EscopoFalha, culpado: NodeId, motivo: str,
                  rodada: int, regiao_ref: RegionId, t_rls: int, enlace=None, evidencia=None) -> None:
        no = self.no
        no.declarar_falha(RegistroFalha(
            tipo, escopo, culpado, no.id, no.agora(), motivo, enlace=enlace,
            t_rls=t_rls, rodada=rodada, regiao_ref=regiao_ref, evidencia=evidencia,
        ))

    # ===== FASE 1a/1b: TROCA DE ASSINATURAS E HEARTBEAT =====

    def _agendar_envio(self, n: int) -> None:
        agenda = self.no.agenda(self.no.regiao_id, n)
        self.no.agendar(agenda.t_sig, lambda: self._fase1a(n), "fase1a", f"n={n}")

    def _fase1a(self, n: int) -> None:
        no = self.no
        self._agendar_envio(n + 1)
        self.envios.pop(n - JANELA_ESTADOS, None)
        agenda = no.agenda(no.regiao_id, n)
        medidores = no.medidores(no.regiao_id, agenda.t_sig)
        if no.id not in medidores:
            return

        anexos = Anexos.montar(no.poc.pocs_da_rodada(n), no.recuperacao.rps_da_rodada(n))
        envio = self.envios.setdefault(n, EstadoEnvio(anexos))
        envio.anexos = anexos
        propria = AssinaturaRodada.criar(no.assinador, no.regiao_id, n, anexos)
        envio.assinaturas[no.id] = propria

        saida = no.passo("assinatura_rodada", propria, n=n, anexos=anexos)
        if saida is not SILENCIO:
            no.difundir(saida, [m for m in medidores if m != no.id])

        p = no.params()
        verificacao = min(agenda.t_sig + p.d_intra + p.delta_syn, agenda.t_send)
        no.agendar(verificacao, lambda: self._verificar_assinaturas(n), "fase1a_verificacao", f"n={n}")

    def ao_receber_assinatura(self, msg: AssinaturaRodada, origem: NodeId, t_envio: int) -> None:
        no = self.no
        if msg.remetente != origem or msg.regiao != no.regiao_id:
            return
        envio = self.envios.get(msg.n)
        if envio is None:
            # Assinatura antes da própria fase 1a (relógios defasados)
            envio = self.envios.setdefault(msg.n, EstadoEnvio(Anexos()))
        envio.assinaturas.setdefault(origem, msg)
        no.passo("assinatura_recebida", None, n=msg.n, envio=envio)

    def _verificar_assinaturas(self, n: int) -> None:
        no = self.no
        envio = self.envios.get(n)
        if envio is None:
            return
        agenda = no.agenda(no.regiao_id, n)
        conteudo = conteudo_rodada(no.regiao_id, n, envio.anexos)
        validas = []
        for medidor in no.medidores(no.regiao_id, agenda.t_sig):
            assinatura = envio.assinaturas.get(medidor)
            if medidor in no.cenario.fn:
                continue
            if assinatura is None:
                no.log.info("Rodada %d: assinatura de N%s ausente", n, medidor)
                self._declarar(TipoFalha.OMISSAO, EscopoFalha.INTRA, medidor, "assinatura_ausente",
                               n, no.regiao_id, agenda.t_sig, enlace=(no.id, medidor))
            elif assinatura.hash_anexos != envio.anexos.hash:
                # Assinatura válida sobre outros anexos: sem heartbeat nesta rodada
                no.log.debug("Rodada %d: N%s assinou anexos divergentes", n, medidor)
            elif not no.registro.verify(medidor, conteudo, assinatura.assinatura):
                self._declarar(TipoFalha.ENLACE, EscopoFalha.INTRA, medidor, "assinatura_invalida",
                               n, no.regiao_id, agenda.t_sig, enlace=(no.id, medidor))
            else:
                validas.append(assinatura.assinatura)

        if len(validas) < no.regiao.f + 1:
            no.log.debug("Rodada %d: %d assinaturas válidas, sem heartbeat", n, len(validas))
            return
        envio.heartbeat = Heartbeat.criar(no.assinador, no.regiao_id, n, tuple(validas), envio.anexos)
        t_envio = no.passo("instante_heartbeat", agenda.t_send, n=n)
        no.agendar(t_envio, lambda: self._enviar_heartbeat(n), "heartbeat", f"n={n}")

    def destinos_heartbeat(self, n: int) -> List[NodeId]:
        agenda = self.no.agenda(self.no.regiao_id, n)
        return [m for r in self.regioes_origem for m in self.no.medidores(r, agenda.t_send)]

    def _enviar_heartbeat(self, n: int) -> None:
        envio = self.envios.get(n)
        if envio is None or envio.heartbeat is None:
            return
        self.no.difundir(envio.heartbeat, self.destinos_heartbeat(n))

    # ===== FASE 2: RECEPÇÃO DE HEARTBEATS =====

    def ao_receber_heartbeat(self, hb: Heartbeat, origem: NodeId, t_envio: int) -> None:
        no = self.no
        j = hb.regiao
        regiao_j = no.topologia.regioes.get(j)
        if j == no.regiao_id or regiao_j is None or hb.remetente not in regiao_j.nos or hb.n < 0:
            return
        direto = origem == hb.remetente
        if not direto and origem not in no.regiao.nos:
            return
        if hb.remetente in no.cenario.fn:
            return
        if not no.registro.verify(hb.remetente, hb.conteudo(), hb.assinatura):
            no.log.debug("Heartbeat com assinatura externa inválida (N%s) ignorado", hb.remetente)
            return
        agenda = no.agenda(j, hb.n)
        if not hb.valido(no.registro, no.topologia):
            self._declarar(TipoFalha.COMISSAO, EscopoFalha.INTER, hb.remetente, "heartbeat_invalido",
                           hb.n, j, agenda.t_sig, evidencia=hb)
            return

        t_recv = no.agora()
        estado = self.estado(j, hb.n)
        if direto:
            no.coletor.heartbeats.append(RegistroHeartbeat(no.id, hb.remetente, j, hb.n, t_envio))
        self._registrar_anexos(hb, estado)

        if not direto or hb.remetente in estado.heartbeats:
            return
        if t_recv > agenda.t_hb_stop:
            estado.tardios.append((hb, t_recv))
            no.log.debug("Heartbeat de N%s (região %s, n=%d) após t_hb_stop", hb.remetente, j, hb.n)
            return
        estado.heartbeats[hb.remetente] = hb
        if no.id in no.medidores(no.regiao_id, agenda.t_send):
            self._propor(j, hb, t_recv - agenda.t_send, estado)

    def _registrar_anexos(self, hb: Heartbeat, estado: EstadoRodada) -> None:
        """Versão nova de anexos: repassa o heartbeat na região e processa PoCs e m_rp."""
        no = self.no
        if hb.anexos.hash in estado.versoes_anexos:
            return
        estado.versoes_anexos[hb.anexos.hash] = hb.anexos
        no.difundir_regiao(hb)
        no.recuperacao.processar_anexos(hb.regiao, hb.n, hb.anexos)
        no.poc.ao_receber_anexos(hb.regiao, hb.n, hb)

    def anexos_recebidos(self, regiao_origem: RegionId, n: int) -> List[Anexos]:
        estado = self.estados.get((regiao_origem, n))
        return list(estado.versoes_anexos.values()) if estado else []

    def _propor(self, j: RegionId, hb: Heartbeat, d: int, estado: EstadoRodada) -> None:
        no = self.no
        p = no.params()
        d = no.passo("proposta", d, regiao_origem=j, n=hb.n)
        proposta = Proposta.criar(no.assinador, j, hb.n, d, hb)
        estado.p_min = minimo(estado.p_min, d)
        estado.propostas[proposta.par] = proposta
        estado.usadas.add(chave_proposta(proposta))
        if estado.proposta_propria is None or d < estado.proposta_propria.d:
            estado.proposta_propria = proposta

        atraso = int(no.rng.integers(p.t_prop - p.delta_prop, p.t_prop, endpoint=True))
        agenda = no.agenda(j, hb.n)
        destinos = [x for x in no.participantes(no.regiao_id, agenda.t_send) if x != no.id]
        no.agendar(no.agora() + atraso, lambda: no.difundir(proposta, destinos), "proposta",
                   f"j={j} n={hb.n} d={d}")

    # ===== FASE 3a: PROPOSTAS DOS PARES =====

    def ao_receber_proposta(self, prop: Proposta, origem: NodeId, t_envio: int) -> None:
        no = self.no
        if origem != prop.proponente or origem not in no.regiao.nos:
            return
        j, n = prop.regiao_origem, prop.n
        if j not in no.topologia.regioes or j == no.regiao_id or n < 0:
            return
        agenda = no.agenda(j, n)

        if not prop.assinatura_valida(no.registro):
            self._declarar(TipoFalha.COMISSAO, EscopoFalha.INTRA, origem, "proposta_invalida", n, j, agenda.t_sig)
            return
        hb = prop.heartbeat
        if hb.regiao != j or hb.n != n or not hb.valido(no.registro, no.topologia):
            self._declarar(TipoFalha.COMISSAO, EscopoFalha.INTRA, origem, "proposta_invalida", n, j,
                           agenda.t_sig, evidencia=prop)
            return

        estado = self.estado(j, n)
        anterior = estado.propostas.get(prop.par)
        if anterior is not None:
            if anterior.d != prop.d:
                self._declarar(TipoFalha.COMISSAO, EscopoFalha.INTRA, origem, "proposta_equivocada", n, j,
                               agenda.t_sig, evidencia=(anterior, prop))
            return
        estado.propostas[prop.par] = prop
        self._registrar_anexos(hb, estado)

        t = no.agora()
        p = no.params()
        if no.id not in no.medidores(no.regiao_id, agenda.t_send) or t > agenda.t_accept:
            return
        d_min = t - agenda.t_send - p.t_prop - p.d_intra - p.delta_syn
        if prop.d >= d_min:
            estado.a_min = minimo(estado.a_min, prop.d)
            estado.usadas.add(chave_proposta(prop))
        else:
            no.log.debug("Proposta irrazoável de N%s: d=%d < d_min=%d", origem, prop.d, d_min)

    # ===== FASE 3b: ACEITE =====

    def _agendar_recepcao(self, j: RegionId, n: int) -> None:
        agenda = self.no.agenda(j, n)
        self.no.agendar(agenda.t_accept, lambda: self._fase3b(j, n), "fase3b", f"j={j} n={n}")
        self.no.agendar(agenda.t_decide, lambda: self._fase4(j, n), "fase4", f"j={j} n={n}")

    def _fase3b(self, j: RegionId, n: int) -> None:
        no = self.no
        agenda = no.agenda(j, n)
        if no.id not in no.medidores(no.regiao_id, agenda.t_send):
            return
        estado = self.estado(j, n)
        base = minimo(estado.a_min, estado.p_min)
        valor = TIMEOUT if base is None else base + no.params().delta_inter

        saida = no.passo("aceite", valor, regiao_origem=j, n=n, estado=estado)
        if saida is SILENCIO:
            return
        destinos = [x for x in no.regiao.nos if x != no.id]
        por_destino = saida if isinstance(saida, dict) else {x: saida for x in destinos}

        criados: Dict[Optional[int], Aceite] = {}
        for destino in destinos:
            if destino not in por_destino:
                continue
            v = por_destino[destino]
            if v not in criados:
                criados[v] = Aceite.criar(no.assinador, j, n, v)
            no.enviar(criados[v], destino)

        proprio = criados.get(valor) or Aceite.criar(no.assinador, j, n, valor)
        estado.aceite_proprio = proprio
        estado.aceites.setdefault(no.id, []).append(proprio)

    # ===== FASE 4: DECISÃO =====

    def ao_receber_aceite(self, aceite: Aceite, origem: NodeId, t_envio: int) -> None:
        no = self.no
        if origem != aceite.remetente or origem not in no.regiao.nos:
            return
        if aceite.regiao_origem not in no.topologia.regioes or aceite.n < 0:
            return
        if not aceite.valido(no.registro):
            return
        recebidos = self.estado(aceite.regiao_origem, aceite.n).aceites.setdefault(origem, [])
        if all(a.valor != aceite.valor for a in recebidos):
            recebidos.append(aceite)
        if len(recebidos) == 2:
            agenda = no.agenda(aceite.regiao_origem, aceite.n)
            self._declarar(TipoFalha.COMISSAO, EscopoFalha.INTRA, origem, "aceite_equivocado",
                           aceite.n, aceite.regiao_origem, agenda.t_decide,
                           evidencia=(recebidos[0], recebidos[1]))

    def _fase4(self, j: RegionId, n: int) -> None:
        no = self.no
        self._agendar_recepcao(j, n + 1)
        self.estados.pop((j, n - JANELA_ESTADOS), None)
        self.decisoes.pop((j, n - JANELA_DECISOES), None)

        agenda = no.agenda(j, n)
        estado = self.estado(j, n)
        medidores = [m for m in no.medidores(no.regiao_id, agenda.t_send) if m not in no.cenario.fn]
        validos: Dict[NodeId, Aceite] = {}
        for medidor in medidores:
            recebidos = estado.aceites.get(medidor)
            if not recebidos:
                self._declarar(TipoFalha.OMISSAO, EscopoFalha.INTRA, medidor, "aceite_ausente", n, j,
                               agenda.t_sig, enlace=(no.id, medidor))
                continue
            validos[medidor] = recebidos[0]

        valores = {a.valor for a in validos.values()}
        if len(valores) > 1:
            referencia = estado.aceite_proprio or validos[min(validos)]
            ofensor = next(validos[m] for m in sorted(validos) if validos[m].valor != referencia.valor)
            estado.disputa = True
            no.log.info("Aceites conflitantes (região %s, n=%d): %s x %s", j, n, referencia, ofensor)
            no.disputas.declarar(j, n, referencia, ofensor, estado.proposta_propria)
            return

        f = no.regiao.f
        if valores and len(validos) >= f + 1:
            self.decidir(j, n, valores.pop(), disputa=False)
        else:
            no.log.debug("Rodada %d da região %s sem decisão (%d aceites)", n, j, len(validos))

    def decidir(self, j: RegionId, n: int, valor: Optional[int], disputa: bool) -> None:
        no = self.no
        chave = (j, n)
        if chave in self.decisoes and self.decisoes[chave] == valor:
            return
        self.decisoes[chave] = valor
        agenda = no.agenda(j, n)
        no.coletor.rodadas.append(RegistroRodada(
            no.regiao_id, j, n, no.id, valor, no.sim.agora, disputa, no.sistema.d_real(j, no.regiao_id, n),
        ))
        if valor is TIMEOUT:
            no.entrar_modo_seguro(no.regiao_id, agenda.t_accept, f"D_n = TIMEOUT (região {j}, rodada {n})")
