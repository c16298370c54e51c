"""
Disputa de medição: declaração, validação cruzada de logs e novo aceite.

Uma instância por (região de origem, rodada): declarações da mesma rodada são
agregadas. Os prazos são contados a partir de t_dclr = t_decide da rodada,
igual em todos os nós, com uma folga Δ_syn por prazo entre nós.

Estágios:
    1. declarar: aceites conflitantes → DeclaracaoDisputa aos participantes
    2. validar e repassar a primeira cópia; cópia direta até t_dclr + 2d
    3. trocar logs e validar cruzado; NovoAceite do par mínimo com f+1 logs
    4. decidir o menor valor entre os novos aceites válidos
"""
import logging
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Set, Tuple

from Nucleo.Assinatura import RegistroChaves, resumo
from Nucleo.Falhas import EscopoFalha, RegistroFalha, TipoFalha
from Nucleo.Identificadores import NodeId, RegionId
from Sistema.ColetorResultados import RegistroDisputa
from Sistema.NoGeoShield import SILENCIO

from .Mensagens import (
    TIMEOUT, Aceite, DecisaoLatencia, DeclaracaoDisputa, LogPropostas, NovoAceite, Proposta,
    chave_proposta, conteudo_endosso,
)

logger = logging.getLogger(__name__)


# ===== REGRAS DE VALIDAÇÃO (usadas também como verificadores de evidência) =====

def valor_esperado_do_log(log: LogPropostas, delta: int) -> Optional[int]:
    """Aceite que o dono do log deveria ter enviado: mínimo das propostas usadas + Δ_inter."""
    usadas = [e.proposta.d for e in log.entradas if e.no_aceite]
    return min(usadas) + delta if usadas else TIMEOUT


def entradas_validas(log: LogPropostas, registro: RegistroChaves) -> bool:
    """Toda proposta do log verifica e traz o endosso do dono."""
    for entrada in log.entradas:
        proposta = entrada.proposta
        if proposta.regiao_origem != log.regiao_origem or proposta.n != log.n:
            return False
        if not proposta.assinatura_valida(registro):
            return False
        if not registro.verify(log.dono, conteudo_endosso(proposta), entrada.endosso):
            return False
    return True


def novo_aceite_valido(novo: NovoAceite, participantes: Iterable[NodeId], f: int, delta: int,
                       registro: RegistroChaves) -> bool:
    """
    Novo aceite válido: proposta assinada, f+1 endossos de donos de log
    distintos entre os participantes e valor = d + Δ_inter. TIMEOUT é válido
    só sem proposta.
    """
    if not novo.assinatura_valida(registro):
        return False
    if novo.proposta is None:
        return novo.valor is TIMEOUT
    proposta = novo.proposta
    if (proposta.regiao_origem, proposta.n) != (novo.regiao_origem, novo.n):
        return False
    if not proposta.assinatura_valida(registro) or novo.valor != proposta.d + delta:
        return False
    participantes = set(participantes)
    conteudo = conteudo_endosso(proposta)
    endossantes = {
        a.signatario for a in novo.endossos
        if a.signatario in participantes and registro.verify(a.signatario, conteudo, a)
    }
    return len(endossantes) >= f + 1


def escolher_novo_aceite(logs: Iterable[LogPropostas], f: int, excluidos: Set[NodeId] = frozenset()):
    """
    Par (N_u, N_d) de menor latência presente em f+1 logs.

    Returns:
        (proposta, endossos) ou (None, ()) se nenhum par tiver apoio suficiente
    """
    apoio: Dict[bytes, Dict[NodeId, object]] = defaultdict(dict)
    propostas: Dict[bytes, Proposta] = {}
    for log in logs:
        for entrada in log.entradas:
            if entrada.proposta.proponente in excluidos:
                continue
            chave = chave_proposta(entrada.proposta)
            propostas[chave] = entrada.proposta
            apoio[chave][log.dono] = entrada.endosso
    candidatas = [chave for chave, donos in apoio.items() if len(donos) >= f + 1]
    if not candidatas:
        return None, ()
    melhor = min(candidatas, key=lambda c: (propostas[c].d, propostas[c].emissor, propostas[c].proponente))
    endossos = tuple(apoio[melhor][dono] for dono in sorted(apoio[melhor])[: f + 1])
    return propostas[melhor], endossos


# ===== INSTÂNCIA =====

@dataclass
class InstanciaDisputa:
    regiao_origem: RegionId
    n: int
    t_dclr: int
    participantes: Tuple[NodeId, ...]
    declaracoes: Dict[NodeId, DeclaracaoDisputa] = field(default_factory=dict)
    diretas: Set[NodeId] = field(default_factory=set)
    logs: Dict[NodeId, LogPropostas] = field(default_factory=dict)
    log_enviado: bool = False
    novos: Dict[NodeId, Dict[bytes, NovoAceite]] = field(default_factory=dict)
    culpados: Set[NodeId] = field(default_factory=set)
    valor_antigo: Optional[int] = None
    encerrada: bool = False


class GerenciadorDisputas:
    """Estágios 1 a 4 da disputa executados por um nó."""

    def __init__(self, no):
        self.no = no
        self.instancias: Dict[Tuple[RegionId, int], InstanciaDisputa] = {}
        self.decisoes_recebidas: Dict[Tuple[RegionId, int], Dict[NodeId, Optional[int]]] = defaultdict(dict)
        no.registrar_tratador(DeclaracaoDisputa, self.ao_receber_declaracao)
        no.registrar_tratador(LogPropostas, self.ao_receber_log)
        no.registrar_tratador(NovoAceite, self.ao_receber_novo_aceite)
        no.registrar_tratador(DecisaoLatencia, self.ao_receber_decisao)

    # ===== PRAZOS =====

    def _prazos(self, t_dclr: int) -> Dict[str, int]:
        p = self.no.params()
        d, syn = p.d_intra, p.delta_syn
        logs = t_dclr + 3 * d + p.e_dclr_v + p.e_log_ex + syn
        final = t_dclr + 5 * d + p.e_dclr_v + p.e_log_ex + p.e_log_v + 2 * syn
        return {
            "copia_direta": t_dclr + 2 * d + syn,
            "logs": logs,
            "final": final,
            "decisao": final + p.e_decide,
        }

    def _instancia(self, j: RegionId, n: int) -> InstanciaDisputa:
        chave = (j, n)
        if chave not in self.instancias:
            no = self.no
            agenda = no.agenda(j, n)
            participantes = no.participantes(no.regiao_id, agenda.t_send)
            inst = InstanciaDisputa(j, n, agenda.t_decide, participantes)
            inst.valor_antigo = no.medicao.decisao(j, n)[1]
            self.instancias[chave] = inst
            if no.id in participantes:
                prazos = self._prazos(inst.t_dclr)
                no.agendar(prazos["copia_direta"], lambda: self._checar_copias(inst), "disputa_copias", f"j={j} n={n}")
                no.agendar(prazos["logs"], lambda: self._estagio3(inst), "disputa_estagio3", f"j={j} n={n}")
                no.agendar(prazos["final"], lambda: self._estagio4(inst), "disputa_estagio4", f"j={j} n={n}")
        return self.instancias[chave]

    def _declarar_falha(self, inst: InstanciaDisputa, tipo: TipoFalha, culpado: NodeId, motivo: str,
                        evidencia=None, enlace=None) -> None:
        no = self.no
        inst.culpados.add(culpado)
        no.declarar_falha(RegistroFalha(
            tipo, EscopoFalha.INTRA, culpado, no.id, no.agora(), motivo, enlace=enlace,
            t_rls=inst.t_dclr, rodada=inst.n, regiao_ref=inst.regiao_origem, evidencia=evidencia,
        ))

    def _para_participantes(self, msg, inst: InstanciaDisputa) -> None:
        self.no.difundir(msg, [x for x in inst.participantes if x != self.no.id])

    # ===== ESTÁGIOS 1 E 2 =====

    def declarar(self, j: RegionId, n: int, referencia: Aceite, ofensor: Aceite,
                 proposta: Optional[Proposta]) -> None:
        no = self.no
        inst = self._instancia(j, n)
        if no.id in inst.declaracoes:
            return
        declaracao = DeclaracaoDisputa.criar(no.assinador, j, n, referencia, ofensor, proposta, inst.t_dclr)
        no.log.info("Disputa declarada (região %s, n=%d)", j, n)
        saida = no.passo("declaracao_disputa", declaracao, instancia=inst)
        if saida is not SILENCIO:
            self._para_participantes(saida, inst)
        self._registrar_declaracao(inst, declaracao, direta=True)

    def ao_receber_declaracao(self, decl: DeclaracaoDisputa, origem: NodeId, t_envio: int) -> None:
        no = self.no
        if origem not in no.regiao.nos or decl.declarante not in no.regiao.nos:
            return
        if decl.regiao_origem not in no.topologia.regioes or decl.n < 0:
            return
        if not decl.assinatura_valida(no.registro):
            return
        inst = self._instancia(decl.regiao_origem, decl.n)
        if not decl.conteudo_valido(no.registro):
            self._declarar_falha(inst, TipoFalha.COMISSAO, decl.declarante, "declaracao_invalida", evidencia=decl)
            return
        self._registrar_declaracao(inst, decl, direta=origem == decl.declarante)

    def _registrar_declaracao(self, inst: InstanciaDisputa, decl: DeclaracaoDisputa, direta: bool) -> None:
        no = self.no
        if direta:
            inst.diretas.add(decl.declarante)
        if decl.declarante in inst.declaracoes:
            return
        inst.declaracoes[decl.declarante] = decl
        # Primeira cópia: repassa uma vez a toda a região
        if decl.declarante != no.id:
            no.difundir(decl, [x for x in inst.participantes if x not in (no.id, decl.declarante)])
        self._checar_aceites(inst)
        if no.id in inst.participantes and not inst.log_enviado:
            inst.log_enviado = True
            no.agendar(no.agora() + no.params().e_dclr_v, lambda: self._enviar_log(inst),
                       "disputa_log", f"j={inst.regiao_origem} n={inst.n}")

    def _checar_copias(self, inst: InstanciaDisputa) -> None:
        for declarante in sorted(inst.declaracoes):
            if declarante not in inst.diretas and declarante != self.no.id:
                self._declarar_falha(inst, TipoFalha.OMISSAO, declarante, "declaracao_sem_copia_direta",
                                     enlace=(self.no.id, declarante))

    # ===== ESTÁGIO 3 =====

    def _enviar_log(self, inst: InstanciaDisputa) -> None:
        no = self.no
        estado = no.medicao.estado(inst.regiao_origem, inst.n)
        log = LogPropostas.criar(no.assinador, inst.regiao_origem, inst.n, estado.propostas.values(),
                                 estado.aceite_proprio, estado.usadas)
        inst.logs[no.id] = log
        saida = no.passo("log_propostas", log, instancia=inst)
        if saida is not SILENCIO:
            self._para_participantes(saida, inst)

    def ao_receber_log(self, log: LogPropostas, origem: NodeId, t_envio: int) -> None:
        no = self.no
        if origem != log.dono or not log.valido(no.registro):
            return
        inst = self.instancias.get((log.regiao_origem, log.n))
        if inst is None or inst.encerrada or origem not in inst.participantes:
            return
        inst.logs.setdefault(origem, log)

    def _aceites_conhecidos(self, inst: InstanciaDisputa) -> Dict[NodeId, List[Aceite]]:
        """Aceites válidos por remetente: recebidos, declarados e presentes nos logs."""
        no = self.no
        conhecidos: Dict[NodeId, List[Aceite]] = defaultdict(list)
        estado = no.medicao.estado(inst.regiao_origem, inst.n)
        fontes: List[Aceite] = [a for lista in estado.aceites.values() for a in lista]
        for decl in inst.declaracoes.values():
            fontes += [decl.aceite_referencia, decl.aceite_ofensor]
        fontes += [log.aceite for log in inst.logs.values() if log.aceite is not None]
        for aceite in fontes:
            if (aceite.regiao_origem, aceite.n) != (inst.regiao_origem, inst.n):
                continue
            if not aceite.valido(no.registro):
                continue
            if all(a.valor != aceite.valor for a in conhecidos[aceite.remetente]):
                conhecidos[aceite.remetente].append(aceite)
        return conhecidos

    def _checar_aceites(self, inst: InstanciaDisputa) -> None:
        for remetente, lista in self._aceites_conhecidos(inst).items():
            if len(lista) > 1:
                self._declarar_falha(inst, TipoFalha.COMISSAO, remetente, "aceite_equivocado",
                                     evidencia=(lista[0], lista[1]))

    def _estagio3(self, inst: InstanciaDisputa) -> None:
        no = self.no
        f = no.regiao.f
        delta = no.params().delta_inter
        j, n = inst.regiao_origem, inst.n

        for participante in inst.participantes:
            if participante not in inst.logs and participante not in no.cenario.fn:
                self._declarar_falha(inst, TipoFalha.OMISSAO, participante, "log_ausente",
                                     enlace=(no.id, participante))

        validos: Dict[NodeId, LogPropostas] = {}
        for dono, log in sorted(inst.logs.items()):
            if not entradas_validas(log, no.registro):
                self._declarar_falha(inst, TipoFalha.COMISSAO, dono, "log_invalido", evidencia=log)
                continue
            validos[dono] = log
            if log.aceite is not None and log.aceite.remetente == dono and log.aceite.valido(no.registro):
                if log.aceite.valor != valor_esperado_do_log(log, delta):
                    self._declarar_falha(inst, TipoFalha.COMISSAO, dono, "aceite_inconsistente", evidencia=log)

        self._checar_aceites(inst)

        # Mesmo par com latências diferentes
        por_par: Dict[tuple, Proposta] = {}
        equivocados: Set[NodeId] = set()
        for log in validos.values():
            for entrada in log.entradas:
                proposta = entrada.proposta
                anterior = por_par.setdefault(proposta.par, proposta)
                if anterior.d != proposta.d and proposta.proponente not in equivocados:
                    equivocados.add(proposta.proponente)
                    self._declarar_falha(inst, TipoFalha.COMISSAO, proposta.proponente,
                                         "proposta_equivocada", evidencia=(anterior, proposta))

        # Proposta presente em outro log mas ausente do meu: omissão do proponente
        meu = validos.get(no.id)
        if meu is not None:
            minhas = {chave_proposta(e.proposta) for e in meu.entradas}
            for log in validos.values():
                for entrada in log.entradas:
                    proposta = entrada.proposta
                    if (chave_proposta(proposta) not in minhas and proposta.proponente != no.id
                            and proposta.proponente not in equivocados
                            and proposta.proponente in inst.participantes):
                        minhas.add(chave_proposta(proposta))
                        self._declarar_falha(inst, TipoFalha.OMISSAO, proposta.proponente, "proposta_omitida",
                                             enlace=(no.id, proposta.proponente))

        proposta, endossos = escolher_novo_aceite(validos.values(), f, equivocados)
        valor = TIMEOUT if proposta is None else proposta.d + delta
        novo = NovoAceite.criar(no.assinador, j, n, proposta, endossos, valor)
        no.agendar(no.agora() + no.params().e_log_v, lambda: self._enviar_novo_aceite(inst, novo),
                   "disputa_novo_aceite", f"j={j} n={n}")

    def _enviar_novo_aceite(self, inst: InstanciaDisputa, novo: NovoAceite) -> None:
        no = self.no
        self._guardar_novo(inst, novo)
        saida = no.passo("novo_aceite", novo, instancia=inst)
        if saida is not SILENCIO:
            self._para_participantes(saida, inst)

    def _guardar_novo(self, inst: InstanciaDisputa, novo: NovoAceite) -> bool:
        versoes = inst.novos.setdefault(novo.remetente, {})
        chave = resumo(novo.conteudo())
        if chave in versoes:
            return False
        versoes[chave] = novo
        return True

    # ===== ESTÁGIO 4 =====

    def ao_receber_novo_aceite(self, novo: NovoAceite, origem: NodeId, t_envio: int) -> None:
        no = self.no
        inst = self.instancias.get((novo.regiao_origem, novo.n))
        if inst is None or inst.encerrada or no.id not in inst.participantes:
            return
        if novo.remetente not in inst.participantes or not novo.assinatura_valida(no.registro):
            return
        if self._guardar_novo(inst, novo) and origem == novo.remetente:
            # Cada versão é repassada uma vez (detecção de equivocação)
            self._para_participantes(novo, inst)

    def _estagio4(self, inst: InstanciaDisputa) -> None:
        no = self.no
        f = no.regiao.f
        delta = no.params().delta_inter
        valores: List[int] = []
        for participante in inst.participantes:
            versoes = list(inst.novos.get(participante, {}).values())
            if not versoes:
                if participante not in no.cenario.fn:
                    self._declarar_falha(inst, TipoFalha.OMISSAO, participante, "novo_aceite_ausente",
                                         enlace=(no.id, participante))
                continue
            for novo in versoes:
                if novo_aceite_valido(novo, inst.participantes, f, delta, no.registro):
                    if novo.valor is not TIMEOUT:
                        valores.append(novo.valor)
                else:
                    self._declarar_falha(inst, TipoFalha.COMISSAO, participante, "novo_aceite_invalido",
                                         evidencia=(novo, inst.participantes, f))
        valor = min(valores) if valores else TIMEOUT
        no.agendar(no.agora() + no.params().e_decide, lambda: self._decidir(inst, valor),
                   "disputa_decisao", f"j={inst.regiao_origem} n={inst.n}")

    def _decidir(self, inst: InstanciaDisputa, valor: Optional[int]) -> None:
        no = self.no
        inst.encerrada = True
        prazos = self._prazos(inst.t_dclr)
        no.log.info("Disputa (região %s, n=%d) decidida: %s; culpados %s", inst.regiao_origem, inst.n,
                    "TIMEOUT" if valor is TIMEOUT else f"{valor / 1e6:.3f}ms", sorted(inst.culpados))
        no.coletor.disputas.append(RegistroDisputa(
            no.regiao_id, inst.regiao_origem, inst.n, no.id, inst.t_dclr, tuple(inst.participantes),
            tuple(sorted(inst.culpados)), inst.valor_antigo, valor, no.agora(), prazos["decisao"],
        ))
        no.medicao.decidir(inst.regiao_origem, inst.n, valor, disputa=True)
        decisao = DecisaoLatencia.criar(no.assinador, inst.regiao_origem, inst.n, valor)
        no.difundir(decisao, [x for x in no.regiao.nos if x not in inst.participantes])

    def ao_receber_decisao(self, dec: DecisaoLatencia, origem: NodeId, t_envio: int) -> None:
        """Nós fora da disputa adotam o valor com f+1 decisões iguais de participantes."""
        no = self.no
        if origem != dec.remetente or origem not in no.regiao.nos or not dec.valida(no.registro):
            return
        if dec.regiao_origem not in no.topologia.regioes or dec.n < 0:
            return
        agenda = no.agenda(dec.regiao_origem, dec.n)
        if origem not in no.participantes(no.regiao_id, agenda.t_send):
            return
        chave = (dec.regiao_origem, dec.n)
        recebidas = self.decisoes_recebidas[chave]
        recebidas.setdefault(origem, dec.valor)
        iguais = sum(1 for v in recebidas.values() if v == dec.valor)
        if iguais == no.regiao.f + 1:
            no.medicao.decidir(dec.regiao_origem, dec.n, dec.valor, disputa=True)
