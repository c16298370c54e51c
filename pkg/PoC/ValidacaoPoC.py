"""
Pipeline de PoC de um nó: emissão nas réplicas de τ, montagem da PoC pelos
medidores da região de origem e veredito nas réplicas de τ'.

Medidores reproduzem a saída do job (replay) e só embutem PoC para o hash
esperado; a PoC chega ao destino dentro de um heartbeat, cuja validade (f_j+1
assinaturas da região sobre os anexos) é o que a torna confiável.
"""
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Set, Tuple

from Nucleo.Falhas import EscopoFalha, RegistroFalha, TipoFalha
from Nucleo.Identificadores import JobId, NodeId, RegionId, TaskId
from Nucleo.ModeloTamanho import ModeloTamanho
from Nucleo.Tempo import instante_envio
from Nucleo.Topologia import ErroTopologia, FluxoAplicacao
from Recuperacao.MensagemRP import PedidoEntrada
from Recuperacao.Propagacao import MOTIVO_PEDIDO
from Sistema.ColetorResultados import RegistroChegada, RegistroVeredito
from Sistema.NoGeoShield import SILENCIO

from .ProvaCorretude import EntradaEndossada, MensagemAplicacao, ParcelaPoC, PoC, poc_round_for

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class EndossoEntrada:
    """Endosso de uma réplica de τ sobre a entrada reproduzida, trocado entre as réplicas."""
    parcela: ParcelaPoC

    def tamanho(self, m: ModeloTamanho) -> int:
        return self.parcela.tamanho(m)


@dataclass(frozen=True)
class SolicitacaoEntrada:
    """Réplica de τ' pede aos nós da região que propaguem um pedido de nova entrada."""
    remetente: NodeId
    pedido: PedidoEntrada

    def tamanho(self, m: ModeloTamanho) -> int:
        return m.envelope(ids=4)


def hash_esperado(fluxo: FluxoAplicacao, job: JobId) -> bytes:
    """H(m) da saída correta do job (replay da tarefa determinística)."""
    return MensagemAplicacao(-1, fluxo.tarefa_origem, fluxo.tarefa_destino, job, fluxo.saida(job)).hash


def registro_pedido(pedido: PedidoEntrada, t_rls: int) -> RegistroFalha:
    """Registro canônico que transporta um pedido de nova entrada no m_rp."""
    return RegistroFalha(TipoFalha.OMISSAO, EscopoFalha.INTER, NodeId(-1), NodeId(-1), t_rls, MOTIVO_PEDIDO,
                         tarefa=pedido.tarefa_destino, job=pedido.job, t_rls=t_rls)


@dataclass
class EstadoParcelas:
    """Parcelas recebidas por um medidor para (τ', job)."""
    fluxo: FluxoAplicacao
    job: JobId
    parcelas: Dict[NodeId, ParcelaPoC] = field(default_factory=dict)
    verificado: bool = False


@dataclass
class EstadoEntrada:
    """S_m de uma réplica de τ' para um job."""
    fluxo: FluxoAplicacao
    job: JobId
    mensagens: Dict[Tuple[NodeId, bytes], MensagemAplicacao] = field(default_factory=dict)
    usada: Optional[MensagemAplicacao] = None
    hash_poc: Optional[bytes] = None
    heartbeat_poc: object = None
    julgadas: Set[Tuple[NodeId, bytes]] = field(default_factory=set)
    resolvido: bool = False
    pedido_feito: bool = False


class GerenciadorPoC:
    """Papéis de PoC de um nó nos fluxos de aplicação."""

    def __init__(self, no):
        self.no = no
        self.parcelas: Dict[Tuple[TaskId, JobId], EstadoParcelas] = {}
        self.pocs_por_rodada: Dict[int, List[PoC]] = {}
        # Última rodada cujo heartbeat já levou as PoCs deste medidor
        self.rodada_emitida = -1
        self.entradas: Dict[Tuple[TaskId, JobId], EstadoEntrada] = {}
        self.chegadas: Dict[Tuple[TaskId, int], Dict[NodeId, int]] = {}
        self.endossos: Dict[Tuple[TaskId, JobId], Dict[NodeId, ParcelaPoC]] = {}
        self.pedidos_atendidos: Set[tuple] = set()
        self.pedidos_enfileirados: Set[tuple] = set()
        no.registrar_tratador(MensagemAplicacao, self.ao_receber_mensagem)
        no.registrar_tratador(ParcelaPoC, self.ao_receber_parcela)
        no.registrar_tratador(EndossoEntrada, self.ao_receber_endosso)
        no.registrar_tratador(EntradaEndossada, self.ao_receber_entrada_endossada)
        no.registrar_tratador(SolicitacaoEntrada, self.ao_receber_solicitacao)

    def iniciar(self) -> None:
        no = self.no
        for fluxo in no.topologia.fluxos:
            if fluxo.regiao_origem == no.regiao_id:
                self._agendar_job_origem(fluxo, 0)
            if fluxo.regiao_destino == no.regiao_id:
                self._agendar_prazo_destino(fluxo, 0)

    def rodada_poc(self, fluxo: FluxoAplicacao, invocacao: int) -> int:
        return poc_round_for(fluxo.t_m(invocacao), self.no.params(fluxo.regiao_origem))

    def prazo_veredito(self, fluxo: FluxoAplicacao, invocacao: int) -> int:
        """t_decide(n*) + d_intra + Δ_syn."""
        p = self.no.params()
        agenda = self.no.agenda(fluxo.regiao_origem, self.rodada_poc(fluxo, invocacao))
        return agenda.t_decide + p.d_intra + p.delta_syn

    # ===== ORIGEM: EMISSÃO =====

    def _agendar_job_origem(self, fluxo: FluxoAplicacao, k: int) -> None:
        no = self.no
        t_m = fluxo.t_m(k)
        t_saida = t_m
        if no.id in no.atribuicoes[no.regiao_id].membros(fluxo.tarefa_origem, fluxo.t_rls(k)):
            t_saida = no.passo("instante_saida", t_m, fluxo=fluxo, invocacao=k)
        no.agendar(min(t_saida, t_m), lambda: self._emitir(fluxo, k), "emissao", f"τ{fluxo.tarefa_origem} k={k}")
        p = no.params()
        no.agendar(t_m + 2 * p.d_intra + 2 * p.delta_syn, lambda: self._verificar_job(fluxo, k),
                   "poc_verificacao", f"τ'{fluxo.tarefa_destino} k={k}")

    def _emitir(self, fluxo: FluxoAplicacao, k: int) -> None:
        no = self.no
        self._agendar_job_origem(fluxo, k + 1)
        t_rls = fluxo.t_rls(k)
        if no.id not in no.atribuicoes[no.regiao_id].membros(fluxo.tarefa_origem, t_rls):
            return
        job = fluxo.job(k)
        carga = no.passo("saida_aplicacao", fluxo.saida(job), fluxo=fluxo, job=job)
        mensagem = MensagemAplicacao.criar(no.assinador, fluxo.tarefa_origem, fluxo.tarefa_destino, job, carga)
        parcela = ParcelaPoC.criar(no.assinador, fluxo.tarefa_destino, job, mensagem.hash)

        no.difundir(mensagem, no.atribuicoes[fluxo.regiao_destino].membros(fluxo.tarefa_destino, t_rls))
        parcela = no.passo("parcela_poc", parcela, fluxo=fluxo, job=job)
        if parcela is not SILENCIO:
            no.difundir(parcela, no.medidores(no.regiao_id, fluxo.t_m(k)))

    # ===== ORIGEM: MEDIDORES MONTAM A PoC =====

    def ao_receber_parcela(self, parcela: ParcelaPoC, origem: NodeId, t_envio: int) -> None:
        no = self.no
        if origem not in no.regiao.nos or not parcela.valida(no.registro):
            return
        try:
            fluxo = no.topologia.fluxo_por_tarefa(parcela.tarefa_destino)
        except ErroTopologia:
            return
        if fluxo.regiao_origem != no.regiao_id or parcela.job.tarefa != fluxo.tarefa_origem:
            return
        k = parcela.job.invocacao
        if k < 0 or no.id not in no.medidores(no.regiao_id, fluxo.t_m(k)):
            return
        p = no.params()
        direta = origem == parcela.remetente
        limite = fluxo.t_m(k) + (p.d_intra + p.delta_syn if direta else 2 * p.d_intra + 2 * p.delta_syn)
        if no.agora() > limite or self.rodada_poc(fluxo, k) <= self.rodada_emitida:
            return
        estado = self.parcelas.setdefault((fluxo.tarefa_destino, parcela.job), EstadoParcelas(fluxo, parcela.job))
        if estado.verificado or parcela.remetente in estado.parcelas:
            return
        estado.parcelas[parcela.remetente] = parcela
        if direta:
            no.difundir(parcela, [m for m in no.medidores(no.regiao_id, fluxo.t_m(k)) if m != no.id])

    def _verificar_job(self, fluxo: FluxoAplicacao, k: int) -> None:
        no = self.no
        if no.id not in no.medidores(no.regiao_id, fluxo.t_m(k)):
            return
        if self.rodada_poc(fluxo, k) <= self.rodada_emitida:
            return
        job = fluxo.job(k)
        estado = self.parcelas.setdefault((fluxo.tarefa_destino, job), EstadoParcelas(fluxo, job))
        if estado.verificado:
            return
        estado.verificado = True
        esperado = hash_esperado(fluxo, job)
        t_rls = fluxo.t_rls(k)
        assinaturas = []
        for replica in no.atribuicoes[no.regiao_id].membros(fluxo.tarefa_origem, t_rls):
            if replica in no.cenario.fn:
                continue
            parcela = estado.parcelas.get(replica)
            if parcela is None:
                no.declarar_falha(RegistroFalha(
                    TipoFalha.OMISSAO, EscopoFalha.INTRA, replica, no.id, no.agora(), "parcela_ausente",
                    enlace=(no.id, replica), tarefa=fluxo.tarefa_destino, job=job, t_rls=t_rls,
                ))
            elif parcela.hash_m != esperado:
                no.declarar_falha(RegistroFalha(
                    TipoFalha.COMISSAO, EscopoFalha.INTRA, replica, no.id, no.agora(), "parcela_divergente",
                    tarefa=fluxo.tarefa_destino, job=job, t_rls=t_rls, evidencia=parcela,
                ))
            else:
                assinaturas.append(parcela.assinatura)
        if assinaturas:
            poc = PoC(fluxo.tarefa_destino, job, esperado, tuple(sorted(assinaturas, key=lambda a: a.signatario)))
            self.pocs_por_rodada.setdefault(self.rodada_poc(fluxo, k), []).append(poc)

    def pocs_da_rodada(self, n: int) -> List[PoC]:
        """PoCs do heartbeat da rodada n; força as verificações pendentes dessa rodada."""
        no = self.no
        for fluxo in no.topologia.fluxos:
            if fluxo.regiao_origem != no.regiao_id:
                continue
            for k in self.jobs_da_rodada(fluxo, n):
                self._verificar_job(fluxo, k)
                # PoC já emitida: parcelas tardias deste job são descartadas pelo prazo
                self.parcelas.pop((fluxo.tarefa_destino, fluxo.job(k)), None)
        self.rodada_emitida = max(self.rodada_emitida, n)
        return self.pocs_por_rodada.pop(n, [])

    def jobs_da_rodada(self, fluxo: FluxoAplicacao, n: int) -> List[int]:
        """Invocações k com n*(k) = n: t_m(k) + D_gap em (t_{n-1}, t_n]."""
        p = self.no.params(fluxo.regiao_origem)
        base = p.d_gap_poc + fluxo.prazo + fluxo.fase
        k_max = (instante_envio(n, p) - base) // fluxo.periodo
        k_min = 0
        if n > 0:
            k_min = max((instante_envio(n - 1, p) - base) // fluxo.periodo + 1, 0)
        return list(range(k_min, k_max + 1))

    # ===== DESTINO: S_m E VEREDITO =====

    def _estado_entrada(self, fluxo: FluxoAplicacao, job: JobId) -> EstadoEntrada:
        return self.entradas.setdefault((fluxo.tarefa_destino, job), EstadoEntrada(fluxo, job))

    def _sou_replica_destino(self, fluxo: FluxoAplicacao, k: int) -> bool:
        no = self.no
        return no.id in no.atribuicoes[no.regiao_id].membros(fluxo.tarefa_destino, fluxo.t_rls(k))

    def chegada(self, tarefa_destino: TaskId, k: int, remetente: NodeId) -> Optional[int]:
        """Instante local em que a mensagem do job k de `remetente` chegou direto (TGS)."""
        return self.chegadas.get((tarefa_destino, k), {}).get(remetente)

    def ao_receber_mensagem(self, msg: MensagemAplicacao, origem: NodeId, t_envio: int) -> None:
        no = self.no
        try:
            fluxo = no.topologia.fluxo_por_tarefa(msg.tarefa_destino)
        except ErroTopologia:
            return
        if (fluxo.regiao_destino != no.regiao_id or msg.tarefa_origem != fluxo.tarefa_origem
                or msg.job.tarefa != fluxo.tarefa_origem or msg.job.invocacao < 0):
            return
        k = msg.job.invocacao
        if not self._sou_replica_destino(fluxo, k) or not msg.valida(no.registro):
            return
        if msg.remetente not in no.topologia.regiao(fluxo.regiao_origem).nos:
            return
        direta = origem == msg.remetente
        if not direta and origem not in no.regiao.nos:
            return
        if direta and msg.remetente not in self.chegadas.get((fluxo.tarefa_destino, k), {}):
            self.chegadas.setdefault((fluxo.tarefa_destino, k), {})[msg.remetente] = no.agora()
            if no.coletor.registrar_chegadas:
                no.coletor.chegadas.append(RegistroChegada(
                    fluxo.nome or f"τ{fluxo.tarefa_origem}", k, msg.remetente, no.id, fluxo.t_m(k), no.sim.agora,
                ))
        if no.agora() > self.prazo_veredito(fluxo, k):
            return

        estado = self._estado_entrada(fluxo, msg.job)
        chave = (msg.remetente, msg.hash)
        if chave in estado.mensagens:
            return
        estado.mensagens[chave] = msg
        # Cada elemento de S_m é repassado uma vez às réplicas pares
        pares = [x for x in no.atribuicoes[no.regiao_id].membros(fluxo.tarefa_destino, fluxo.t_rls(k)) if x != no.id]
        no.difundir(msg, pares)

        if estado.usada is None and not estado.resolvido:
            estado.usada = msg
            no.sistema.consumir(no, fluxo, msg.job, msg, "provisoria")
        if estado.hash_poc is not None:
            self._julgar(estado)

    def ao_receber_anexos(self, regiao_origem: RegionId, n: int, heartbeat) -> None:
        """Veredito antecipado: PoC de um job cujo n* é esta rodada."""
        no = self.no
        for poc in heartbeat.anexos.pocs:
            try:
                fluxo = no.topologia.fluxo_por_tarefa(poc.tarefa_destino)
            except ErroTopologia:
                continue
            if fluxo.regiao_destino != no.regiao_id or fluxo.regiao_origem != regiao_origem:
                continue
            k = poc.job.invocacao
            if k < 0 or self.rodada_poc(fluxo, k) != n or not self._sou_replica_destino(fluxo, k):
                continue
            estado = self._estado_entrada(fluxo, JobId(*poc.job))
            if estado.hash_poc is None:
                estado.hash_poc = poc.hash_m
                estado.heartbeat_poc = heartbeat
                self._julgar(estado)

    def _julgar(self, estado: EstadoEntrada) -> None:
        no = self.no
        fluxo, job = estado.fluxo, estado.job
        for chave, msg in sorted(estado.mensagens.items()):
            if chave in estado.julgadas:
                continue
            estado.julgadas.add(chave)
            correta = msg.hash == estado.hash_poc
            self._registrar_veredito(fluxo, job, msg.remetente, "correta" if correta else "incorreta")
            if correta:
                if not estado.resolvido:
                    estado.resolvido = True
                    if estado.usada is not None and estado.usada.hash == msg.hash:
                        no.sistema.consumir(no, fluxo, job, msg, "confirmada")
                    else:
                        estado.usada = msg
                        no.sistema.consumir(no, fluxo, job, msg, "corrigida")
            else:
                no.log.warning("Mensagem incorreta de N%s para τ'%s job %s", msg.remetente,
                               fluxo.tarefa_destino, job)
                no.declarar_falha(RegistroFalha(
                    TipoFalha.COMISSAO, EscopoFalha.INTER, msg.remetente, no.id, no.agora(), "mensagem_incorreta",
                    tarefa=fluxo.tarefa_destino, job=job, t_rls=fluxo.t_rls(job.invocacao),
                    regiao_ref=fluxo.regiao_origem, evidencia=(msg, estado.heartbeat_poc),
                ))

    def _registrar_veredito(self, fluxo: FluxoAplicacao, job: JobId, remetente: Optional[NodeId],
                            veredito: str) -> None:
        no = self.no
        no.coletor.veredictos.append(RegistroVeredito(
            fluxo.nome or f"τ{fluxo.tarefa_origem}->τ'{fluxo.tarefa_destino}", job.invocacao, no.id, remetente,
            veredito, no.sim.agora, no.regiao_id in no.cenario.modo_seguro,
        ))

    def _agendar_prazo_destino(self, fluxo: FluxoAplicacao, k: int) -> None:
        self.no.agendar(self.prazo_veredito(fluxo, k), lambda: self._prazo_destino(fluxo, k),
                        "poc_prazo", f"τ'{fluxo.tarefa_destino} k={k}")

    def _prazo_destino(self, fluxo: FluxoAplicacao, k: int) -> None:
        no = self.no
        self._agendar_prazo_destino(fluxo, k + 1)
        self.entradas.pop((fluxo.tarefa_destino, fluxo.job(k - 8)), None)
        self.chegadas.pop((fluxo.tarefa_destino, k - 64), None)
        if not self._sou_replica_destino(fluxo, k):
            return
        job = fluxo.job(k)
        estado = self._estado_entrada(fluxo, job)
        if estado.resolvido:
            return
        n_estrela = self.rodada_poc(fluxo, k)
        prazo = self.prazo_veredito(fluxo, k)

        if estado.hash_poc is None and not no.medicao.anexos_recebidos(fluxo.regiao_origem, n_estrela):
            self._registrar_veredito(fluxo, job, None, "sem_heartbeat")
            no.entrar_modo_seguro(no.regiao_id, prazo, f"heartbeat da rodada {n_estrela} ausente (τ'{fluxo.tarefa_destino})")
            return

        if estado.hash_poc is None:
            for (remetente, _), msg in sorted(estado.mensagens.items()):
                self._registrar_veredito(fluxo, job, remetente, "sem_poc")
                no.declarar_falha(RegistroFalha(
                    TipoFalha.COMISSAO, EscopoFalha.INTER, remetente, no.id, no.agora(), "mensagem_sem_poc",
                    tarefa=fluxo.tarefa_destino, job=job, t_rls=fluxo.t_rls(k), regiao_ref=fluxo.regiao_origem,
                ))
        self._pedir_entrada(estado, prazo)

    # ===== NOVA ENTRADA =====

    def _pedir_entrada(self, estado: EstadoEntrada, t_det: int) -> None:
        no = self.no
        if estado.pedido_feito:
            return
        estado.pedido_feito = True
        fluxo, job = estado.fluxo, estado.job
        pedido = PedidoEntrada(fluxo.tarefa_origem, fluxo.tarefa_destino, job)
        no.log.warning("Sem entrada correta para τ'%s job %s: pedindo nova entrada", fluxo.tarefa_destino, job)
        solicitacao = SolicitacaoEntrada(no.id, pedido)
        no.difundir_regiao(solicitacao)
        self.ao_receber_solicitacao(solicitacao, no.id, no.sim.agora)

        timeout = fluxo.timeout_entrada or no.params().hb_timeout

        def expirar():
            if not estado.resolvido:
                self._registrar_veredito(fluxo, job, None, "modo_seguro")
                no.entrar_modo_seguro(no.regiao_id, t_det + timeout, f"sem entrada endossada para τ'{fluxo.tarefa_destino}")

        no.agendar(t_det + timeout, expirar, "entrada_timeout", f"τ'{fluxo.tarefa_destino} job={job}")

    def ao_receber_solicitacao(self, msg: SolicitacaoEntrada, origem: NodeId, t_envio: int) -> None:
        no = self.no
        pedido = msg.pedido
        if origem != msg.remetente or origem not in no.regiao.nos:
            return
        chave = pedido.conteudo()
        if chave in self.pedidos_enfileirados:
            return
        try:
            fluxo = no.topologia.fluxo_por_tarefa(pedido.tarefa_destino)
        except ErroTopologia:
            return
        k = pedido.job.invocacao
        if fluxo.regiao_destino != no.regiao_id or k < 0:
            return
        if origem not in no.atribuicoes[no.regiao_id].membros(fluxo.tarefa_destino, fluxo.t_rls(k)):
            return
        self.pedidos_enfileirados.add(chave)
        p = no.params()
        referencia = self.prazo_veredito(fluxo, k) + p.d_intra + p.delta_syn
        no.recuperacao.pedir_entrada(registro_pedido(pedido, fluxo.t_rls(k)), pedido, referencia)

    def atender_pedido(self, pedido: PedidoEntrada, referencia: int) -> None:
        """Réplicas atuais de τ reproduzem a entrada e trocam endossos."""
        no = self.no
        chave = pedido.conteudo()
        if chave in self.pedidos_atendidos:
            return
        self.pedidos_atendidos.add(chave)
        try:
            fluxo = no.topologia.fluxo_por_tarefa(pedido.tarefa_destino)
        except ErroTopologia:
            return
        if fluxo.regiao_origem != no.regiao_id:
            return
        replicas = no.atribuicoes[no.regiao_id].membros(fluxo.tarefa_origem)
        if no.id not in replicas:
            return
        esperado = hash_esperado(fluxo, pedido.job)
        endosso = ParcelaPoC.criar(no.assinador, fluxo.tarefa_destino, pedido.job, esperado)
        self._guardar_endosso(fluxo, endosso)
        no.difundir(EndossoEntrada(endosso), [x for x in replicas if x != no.id])

    def ao_receber_endosso(self, msg: EndossoEntrada, origem: NodeId, t_envio: int) -> None:
        no = self.no
        endosso = msg.parcela
        if origem != endosso.remetente or not endosso.valida(no.registro):
            return
        try:
            fluxo = no.topologia.fluxo_por_tarefa(endosso.tarefa_destino)
        except ErroTopologia:
            return
        if fluxo.regiao_origem == no.regiao_id:
            self._guardar_endosso(fluxo, endosso)

    def _guardar_endosso(self, fluxo: FluxoAplicacao, endosso: ParcelaPoC) -> None:
        no = self.no
        chave = (fluxo.tarefa_destino, endosso.job)
        recebidos = self.endossos.setdefault(chave, {})
        if endosso.remetente in recebidos or endosso.hash_m != hash_esperado(fluxo, endosso.job):
            return
        recebidos[endosso.remetente] = endosso
        if len(recebidos) != no.regiao.f + 1 or no.id not in recebidos:
            return
        mensagem = MensagemAplicacao.criar(no.assinador, fluxo.tarefa_origem, fluxo.tarefa_destino, endosso.job,
                                           fluxo.saida(endosso.job))
        entrada = EntradaEndossada(no.id, mensagem, tuple(e.assinatura for e in recebidos.values()))
        no.log.info("Entrada endossada para τ'%s job %s enviada", fluxo.tarefa_destino, endosso.job)
        no.difundir(entrada, no.atribuicoes[fluxo.regiao_destino].membros(fluxo.tarefa_destino))

    def ao_receber_entrada_endossada(self, entrada: EntradaEndossada, origem: NodeId, t_envio: int) -> None:
        no = self.no
        msg = entrada.mensagem
        try:
            fluxo = no.topologia.fluxo_por_tarefa(msg.tarefa_destino)
        except ErroTopologia:
            return
        if fluxo.regiao_destino != no.regiao_id or msg.job.invocacao < 0:
            return
        regiao_origem = no.topologia.regiao(fluxo.regiao_origem)
        if not entrada.valida(regiao_origem.f, regiao_origem.nos, no.registro):
            return
        estado = self._estado_entrada(fluxo, msg.job)
        if estado.resolvido:
            return
        estado.resolvido = True
        estado.usada = msg
        self._registrar_veredito(fluxo, msg.job, entrada.remetente, "endossada")
        no.sistema.consumir(no, fluxo, msg.job, msg, "endossada")
