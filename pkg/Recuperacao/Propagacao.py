"""
Propagação de recuperação (RP) entre regiões e adoção local de falhas.

Uma falha declarada dentro da região é adotada por cada nó correto segundo
a evidência disponível; a adoção gera uma m_rp que os medidores embutem na
rodada rp_round_for(t_rls, D_det). Regiões remotas processam a m_rp ao
receber os anexos do heartbeat e, quando o culpado é delas, executam a
recuperação e anunciam as novas atribuições (segundo salto).
"""
import logging
from collections import defaultdict
from dataclasses import replace
from typing import Dict, Iterable, List, Optional, Set, Tuple

from Nucleo.Assinatura import resumo
from Nucleo.Falhas import EscopoFalha, RegistroFalha, TipoFalha
from Nucleo.Identificadores import NodeId, RegionId
from Nucleo.Tempo import ParametrosTempo, primeira_rodada, round_schedule
from PoC.ProvaCorretude import poc_round_for
from Sistema.ColetorResultados import RegistroAdocao
from TGS.Substituicao import ErroSemSubstituto

from .CenarioFalhas import ErroOrcamentoFalhas, NovaAtribuicao, apply_local_recovery
from .Evidencias import verificar_evidencia
from .MensagemRP import DeclaracaoFalha, MensagemRP, PedidoEntrada

logger = logging.getLogger(__name__)

# Motivos agrupados pela aritmética de D_det
MOTIVOS_POC_DESTINO = frozenset({"mensagem_incorreta", "mensagem_sem_poc"})
MOTIVOS_POC_ORIGEM = frozenset({"parcela_ausente", "parcela_divergente"})
MOTIVOS_DISPUTA = frozenset({
    "aceite_equivocado", "aceite_inconsistente", "proposta_equivocada", "proposta_omitida",
    "declaracao_invalida", "declaracao_sem_copia_direta", "log_ausente", "log_invalido",
    "novo_aceite_invalido", "novo_aceite_ausente",
})
MOTIVOS_TGS = frozenset({"tgs_flag", "flag_divergente"})
MOTIVO_FLAG = "tgs_flag"
# m_rp que só transporta um pedido de nova entrada
MOTIVO_PEDIDO = "pedido_entrada"


def rp_round_for(t_rls: int, d_det: int, p: ParametrosTempo) -> int:
    """
    Rodada que carrega a m_rp: menor n com t_n^s >= t_rls + D_det.

    Args:
        t_rls: Liberação do job afetado (ou instante de referência da falha)
        d_det: Limite de detecção do tipo de falha
        p: Parâmetros de tempo da região que propaga

    Returns:
        Índice da rodada
    """
    return primeira_rodada(p, t_rls + d_det, "t_sig")


def btr_deadline(p: ParametrosTempo) -> int:
    """D_RP = 2·(Δ_det + T_int + 2·d_intra + E_hb + HB_timeout)."""
    return 2 * (p.delta_det + p.t_int + 2 * p.d_intra + p.e_hb + p.hb_timeout)


def duracao_disputa(p: ParametrosTempo) -> int:
    """Do t_dclr até a decisão do estágio 4, com folga de relógio por prazo entre nós."""
    return (5 * p.d_intra + p.e_dclr_v + p.e_log_ex + p.e_log_v + p.e_decide + 2 * p.delta_syn)


def deteccao_maxima(registro: RegistroFalha, p: ParametrosTempo, topologia, params_de) -> int:
    """
    D_det do registro, medido a partir de registro.t_rls.

    Falhas de comissão detectadas pela PoC usam o prazo da rodada n*; falhas
    de disputa usam a duração dos quatro estágios; o resto usa p.d_det.
    """
    motivo = registro.motivo
    if motivo in MOTIVOS_POC_DESTINO and registro.job is not None:
        fluxo = topologia.fluxo_por_tarefa(registro.tarefa)
        p_origem = params_de(fluxo.regiao_origem)
        t_m = fluxo.t_m(registro.job.invocacao)
        agenda = round_schedule(poc_round_for(t_m, p_origem), p_origem)
        prazo = agenda.t_decide + p.d_intra + p.delta_syn + p.e_decide
        return max(prazo - registro.t_rls, 0)
    if motivo in MOTIVOS_POC_ORIGEM and registro.tarefa is not None:
        fluxo = topologia.fluxo_por_tarefa(registro.tarefa)
        return fluxo.prazo + p.d_intra + p.delta_syn + p.e_poc
    if motivo in MOTIVOS_DISPUTA:
        return duracao_disputa(p)
    if motivo in MOTIVOS_TGS and registro.tarefa is not None:
        fluxo = topologia.fluxo_por_tarefa(registro.tarefa)
        return (fluxo.prazo + p.hb_timeout + p.delta_inter + 3 * p.d_intra
                + 2 * p.delta_syn + p.e_decide)
    return p.d_det


class PropagadorRecuperacao:
    """Declaração, adoção e propagação de falhas no nó."""

    def __init__(self, no):
        self.no = no
        self.declaracoes: Dict[tuple, Dict[NodeId, DeclaracaoFalha]] = defaultdict(dict)
        self.declaradas: Set[tuple] = set()
        self.adotadas: Set[tuple] = set()
        self.enlaces_adotados: Set[frozenset] = set()
        self.saida_rp: Dict[int, Dict[tuple, MensagemRP]] = defaultdict(dict)
        self.rps_processadas: Set[bytes] = set()
        no.registrar_tratador(DeclaracaoFalha, self.ao_receber_declaracao)

    # ===== DECLARAÇÃO =====

    def declarar(self, registro: RegistroFalha) -> None:
        """Registra, assina e difunde na região uma falha detectada pelo nó."""
        no = self.no
        if registro.chave in self.declaradas:
            return
        if not no.passo("declarar_falha", True, registro=registro):
            return
        self.declaradas.add(registro.chave)
        no.coletor.falhas.append(registro)
        no.log.info("Falha declarada: %s %s contra N%s (%s)", registro.tipo.value,
                    registro.escopo.value, registro.culpado, registro.motivo)
        declaracao = DeclaracaoFalha.criar(no.assinador, registro)
        no.difundir_regiao(declaracao)
        self._processar(declaracao)

    def ao_receber_declaracao(self, msg: DeclaracaoFalha, origem: NodeId, t_envio: int) -> None:
        no = self.no
        if msg.declarante != origem or origem not in no.regiao.nos:
            return
        if not msg.valida(no.registro):
            no.log.debug("Declaração com assinatura inválida de N%s descartada", origem)
            return
        self._processar(msg)

    def _processar(self, declaracao: DeclaracaoFalha) -> None:
        no = self.no
        registro = declaracao.registro
        chave = registro.chave
        if chave in self.adotadas or registro.culpado in no.cenario.fn:
            return
        self.declaracoes[chave][declaracao.declarante] = declaracao
        f = no.regiao.f

        if verificar_evidencia(registro, no.sistema):
            self._adotar(registro, "evidencia")
        elif len(self.declaracoes[chave]) >= f + 1 and registro.tipo is not TipoFalha.ENLACE:
            self._adotar(replace(registro, enlace=None, evidencia=None), "maioria")
        elif registro.tipo in (TipoFalha.OMISSAO, TipoFalha.ENLACE) and registro.enlace is not None:
            if no.topologia.regiao_de(registro.culpado) == no.regiao_id:
                self._adotar_enlace(registro)

    # ===== ADOÇÃO =====

    def _a_partir(self, registro: RegistroFalha) -> int:
        p = self.no.params()
        referencia = registro.t_rls if registro.t_rls is not None else registro.t_det
        return referencia + self._d_det(registro) + p.d_rec_intra

    def _d_det(self, registro: RegistroFalha) -> int:
        no = self.no
        return deteccao_maxima(registro, no.params(), no.topologia, no.sistema.params)

    def _adotar_enlace(self, registro: RegistroFalha) -> None:
        no = self.no
        par = frozenset(registro.enlace)
        if par in self.enlaces_adotados:
            return
        self.enlaces_adotados.add(par)
        enlace = replace(registro, tipo=TipoFalha.ENLACE, evidencia=None)
        try:
            novas = apply_local_recovery(no.cenario, no.atribuicoes[no.regiao_id], enlace,
                                         self._a_partir(registro))
        except ErroSemSubstituto:
            no.entrar_modo_seguro(no.regiao_id, no.agora(), "sem substituto para o papel de medidor")
            return
        no.log.info("Enlace N%s-N%s marcado como falho", *sorted(par))
        self._registrar_adocao(registro, "FL")
        if novas:
            self._anunciar(registro, novas)

    def _adotar(self, registro: RegistroFalha, forma: str) -> None:
        no = self.no
        self.adotadas.add(registro.chave)
        regiao_culpado = no.topologia.regiao_de(registro.culpado)

        if regiao_culpado != no.regiao_id:
            # Culpado remoto: a região dele executa a recuperação (segundo salto)
            no.cenario.fn.add(registro.culpado)
            no.log.info("Falha de N%s (região %s) adotada por %s; propagando", registro.culpado,
                        regiao_culpado, forma)
            self._registrar_adocao(registro, "rp")
            self._enfileirar(MensagemRP.de_registro(no.regiao_id, registro),
                             self._rodada_rp(registro))
            return

        novas = self._excluir(registro, self._a_partir(registro))
        if novas is not None:
            self._registrar_adocao(registro, "FN")
            self._enfileirar(MensagemRP.de_registro(no.regiao_id, registro, tuple(novas)),
                             self._rodada_rp(registro))

    def _excluir(self, registro: RegistroFalha, a_partir: int) -> Optional[List[NovaAtribuicao]]:
        """Recuperação local: exclui o culpado e reatribui as tarefas dele."""
        no = self.no
        try:
            novas = apply_local_recovery(no.cenario, no.atribuicoes[no.regiao_id], registro, a_partir)
        except ErroOrcamentoFalhas as e:
            no.coletor.fora_do_modelo = True
            no.log.error("Ensaio fora do modelo: %s", e)
            return None
        except ErroSemSubstituto as e:
            no.log.error("%s", e)
            no.entrar_modo_seguro(no.regiao_id, no.agora(), "sem substituto após exclusão")
            return []
        no.log.info("N%s excluído (%s); %d tarefas reatribuídas", registro.culpado,
                    registro.motivo, len(novas))
        no.tgs.ao_reatribuir(novas)
        return novas

    def _registrar_adocao(self, registro: RegistroFalha, forma: str) -> None:
        no = self.no
        no.coletor.adocoes.append(RegistroAdocao(
            registro.chave, registro.culpado, no.topologia.regiao_de(registro.culpado),
            no.id, no.sim.agora, forma,
        ))

    # ===== SAÍDA DE m_rp =====

    def _rodada_rp(self, registro: RegistroFalha) -> int:
        referencia = registro.t_rls if registro.t_rls is not None else registro.t_det
        return rp_round_for(referencia, self._d_det(registro), self.no.params())

    def _enfileirar(self, rp: MensagemRP, rodada: int) -> None:
        """Coloca a m_rp na rodada indicada ou, se ela já passou, na próxima."""
        no = self.no
        p = no.params()
        if round_schedule(rodada, p).t_sig <= no.agora():
            rodada = primeira_rodada(p, no.agora() + 1, "t_sig")
        self.saida_rp[rodada][rp.chave_ordem()] = rp

    def rps_da_rodada(self, n: int) -> List[MensagemRP]:
        return list(self.saida_rp.pop(n, {}).values())

    def _anunciar(self, registro: RegistroFalha, novas: Iterable[NovaAtribuicao],
                  referencia: Optional[int] = None) -> None:
        rp = MensagemRP.de_registro(self.no.regiao_id, registro, tuple(novas))
        if referencia is None:
            self._enfileirar(rp, self._rodada_rp(registro))
        else:
            self._enfileirar(rp, primeira_rodada(self.no.params(), referencia, "t_sig"))

    def propagar_flag(self, registro: RegistroFalha, referencia: int,
                      novas: Tuple[NovaAtribuicao, ...] = ()) -> None:
        """
        Propaga uma sinalização do TGS adotada na região.

        Flag de réplica remota: a m_rp pede a reatribuição à região dela.
        Flag local: a m_rp anuncia a nova atribuição já aplicada.
        """
        no = self.no
        if registro.chave in self.adotadas:
            return
        self.adotadas.add(registro.chave)
        no.coletor.falhas.append(registro)
        self._registrar_adocao(registro, "flag")
        self._enfileirar(MensagemRP.de_registro(no.regiao_id, registro, tuple(novas)),
                         primeira_rodada(no.params(), referencia, "t_sig"))

    def pedir_entrada(self, registro: RegistroFalha, pedido: PedidoEntrada, referencia: int) -> None:
        rp = MensagemRP.de_registro(self.no.regiao_id, registro, (), pedido)
        self._enfileirar(rp, primeira_rodada(self.no.params(), referencia, "t_sig"))

    # ===== PROCESSAMENTO DE m_rp RECEBIDAS =====

    def processar_anexos(self, regiao_origem: RegionId, n: int, anexos) -> None:
        for rp in anexos.rps:
            chave = resumo(rp.conteudo())
            if chave in self.rps_processadas:
                continue
            self.rps_processadas.add(chave)
            self._processar_rp(regiao_origem, n, rp)

    def _processar_rp(self, regiao_origem: RegionId, n: int, rp: MensagemRP) -> None:
        no = self.no
        registro = RegistroFalha.de_conteudo(rp.falha, detector=-1, t_det=no.agora())
        agenda = no.agenda(regiao_origem, n)
        p = no.params()
        # Instante comum a todos os nós da região, depois do repasse dos anexos
        referencia = agenda.t_accept + p.d_intra + p.delta_syn

        for nova in rp.novas_atribuicoes:
            no.atribuicoes[nova.regiao].aplicar(nova)
        if rp.novas_atribuicoes:
            no.tgs.ao_reatribuir(rp.novas_atribuicoes)

        if registro.motivo == MOTIVO_PEDIDO:
            if rp.pedido_entrada is not None:
                no.poc.atender_pedido(rp.pedido_entrada, referencia)
            return

        regiao_culpado = no.topologia.regiao_de(registro.culpado)
        if regiao_culpado == no.regiao_id and rp.regiao != no.regiao_id:
            self._segundo_salto(registro, referencia)
        elif registro.tipo is not TipoFalha.ENLACE and registro.motivo != MOTIVO_FLAG:
            no.cenario.fn.add(registro.culpado)
            self._registrar_adocao(registro, "rp")
        else:
            self._registrar_adocao(registro, "rp")

        if rp.pedido_entrada is not None:
            no.poc.atender_pedido(rp.pedido_entrada, referencia)

    def _segundo_salto(self, registro: RegistroFalha, referencia: int) -> None:
        """Falha de um nó desta região relatada por outra região."""
        no = self.no
        if registro.chave in self.adotadas:
            return
        self.adotadas.add(registro.chave)
        a_partir = referencia + no.params().d_rec_intra
        atribuicao = no.atribuicoes[no.regiao_id]

        if registro.motivo == MOTIVO_FLAG:
            if registro.culpado not in atribuicao.membros(registro.tarefa):
                return
            try:
                nova = atribuicao.reatribuir(registro.culpado, registro.tarefa, a_partir)
            except ErroSemSubstituto:
                no.entrar_modo_seguro(no.regiao_id, no.agora(), "sem substituto para tarefa sinalizada")
                return
            atribuicao.contadores[registro.culpado] = atribuicao.contadores.get(registro.culpado, 0) + 1
            no.log.info("Tarefa τ%s migrada de N%s para N%s (sinalização remota)",
                        registro.tarefa, nova.saiu, nova.entrou)
            self._registrar_adocao(registro, "flag")
            self._anunciar(registro, (nova,), referencia)
            return

        novas = self._excluir(registro, a_partir)
        if novas is not None:
            self._registrar_adocao(registro, "FN")
            self._anunciar(registro, novas, referencia)
