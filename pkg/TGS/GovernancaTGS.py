"""
TGS no nó: reclamações dos receptores, rodadas de score nos guardiões do
score e consenso sobre sinalizações.

Guardiões do score de um fluxo são as réplicas de τ' e os guardiões de log
da região destino; todos mantêm a mesma tabela porque aplicam as mesmas
reclamações nos mesmos instantes.
"""
import logging
from dataclasses import dataclass
from typing import Dict, Iterable, List, Mapping, Optional, Set, Tuple

from Nucleo.Assinatura import Assinador, Assinatura, RegistroChaves
from Nucleo.Falhas import EscopoFalha, RegistroFalha, TipoFalha
from Nucleo.Identificadores import JobId, NodeId, TaskId
from Nucleo.ModeloTamanho import ModeloTamanho
from Nucleo.Tempo import ParametrosTempo, primeira_rodada
from Nucleo.Topologia import ErroTopologia, FluxoAplicacao
from Recuperacao.CenarioFalhas import NovaAtribuicao
from Recuperacao.Propagacao import MOTIVO_FLAG, duracao_disputa
from Sistema.ColetorResultados import RegistroScore

from .Substituicao import ErroSemSubstituto, select_replacement
from .TabelaScores import Par, TabelaScores, apply_round

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Reclamacao:
    """Pares (N_s:τ, N_r:τ') cuja mensagem não chegou até t_m + D_n, assinados pelo receptor."""
    reclamante: NodeId
    tarefa_destino: TaskId
    job: JobId
    pares: Tuple[Tuple[NodeId, NodeId], ...]
    assinatura: Assinatura = None

    def conteudo(self) -> tuple:
        return ("reclamacao", self.reclamante, self.tarefa_destino, tuple(self.job), self.pares)

    @classmethod
    def criar(cls, assinador: Assinador, tarefa_destino: TaskId, job: JobId,
              pares: Iterable[Tuple[NodeId, NodeId]]) -> "Reclamacao":
        rec = cls(assinador.no, tarefa_destino, job, tuple(sorted(pares)))
        return cls(rec.reclamante, tarefa_destino, job, rec.pares, assinador.assinar(rec.conteudo()))

    def valida(self, registro: RegistroChaves) -> bool:
        return registro.conhece(self.reclamante) and registro.verify(self.reclamante, self.conteudo(), self.assinatura)

    def tamanho(self, m: ModeloTamanho) -> int:
        return m.envelope(ids=3 + 2 * len(self.pares))


@dataclass(frozen=True)
class PropostaFlag:
    """
    Proposta assinada de sinalizar (sinalizado, tarefa) no job indicado.

    `substituto` é None quando a tarefa é da região de origem: a escolha cabe
    à região que hospeda a réplica.
    """
    remetente: NodeId
    tarefa: TaskId
    sinalizado: NodeId
    substituto: Optional[NodeId]
    job: JobId
    a_partir: int
    assinatura: Assinatura = None

    @property
    def chave(self) -> tuple:
        return (self.tarefa, self.sinalizado, tuple(self.job), self.a_partir)

    def conteudo(self) -> tuple:
        return ("flag", self.remetente, self.chave, self.substituto)

    @classmethod
    def criar(cls, assinador: Assinador, tarefa: TaskId, sinalizado: NodeId, substituto: Optional[NodeId],
              job: JobId, a_partir: int) -> "PropostaFlag":
        proposta = cls(assinador.no, tarefa, sinalizado, substituto, job, a_partir)
        return cls(assinador.no, tarefa, sinalizado, substituto, job, a_partir,
                   assinador.assinar(proposta.conteudo()))

    def valida(self, registro: RegistroChaves) -> bool:
        return registro.conhece(self.remetente) and registro.verify(self.remetente, self.conteudo(), self.assinatura)

    def tamanho(self, m: ModeloTamanho) -> int:
        return m.envelope(ids=5, duracoes=1)


def classify_and_claim(receptor: NodeId, chegadas: Mapping[NodeId, Optional[int]],
                       t_m: int, d_n: int) -> Tuple[Tuple[NodeId, NodeId], ...]:
    """
    Pares suspeitos de um receptor para um job.

    Args:
        receptor: Réplica de τ' que reclama
        chegadas: Emissor -> instante local de chegada (None se não chegou)
        t_m: Deadline de envio do job
        d_n: Latência decidida para o par de regiões

    Returns:
        (emissor, receptor) de cada mensagem que não chegou até t_m + d_n
    """
    limite = t_m + d_n
    return tuple(sorted(
        (emissor, receptor) for emissor, chegada in chegadas.items()
        if chegada is None or chegada > limite
    ))


def rodada_latencia(t_m: int, p_origem: ParametrosTempo, p_destino: ParametrosTempo) -> int:
    """Última rodada cuja decisão (com disputa) está pronta em t_m; -1 se nenhuma."""
    return primeira_rodada(p_origem, t_m - duracao_disputa(p_destino) + 1, "t_decide") - 1


class GovernancaTGS:
    """Papéis de TGS de um nó nos fluxos que chegam à sua região."""

    def __init__(self, no):
        self.no = no
        self.parametros = no.sistema.parametros_tgs
        self.tabela: Optional[TabelaScores] = TabelaScores(self.parametros) if self.parametros else None
        self.reclamacoes: Dict[Tuple[TaskId, int], Dict[NodeId, Reclamacao]] = {}
        self.aplicadas: Set[Tuple[TaskId, int]] = set()
        self.propostas: Dict[tuple, Dict[NodeId, PropostaFlag]] = {}
        self.adotadas: Dict[tuple, Optional[NodeId]] = {}
        self.divergentes: Set[Tuple[tuple, NodeId]] = set()
        no.registrar_tratador(Reclamacao, self.ao_receber_reclamacao)
        no.registrar_tratador(PropostaFlag, self.ao_receber_proposta)

    @property
    def ativo(self) -> bool:
        return self.tabela is not None

    def iniciar(self) -> None:
        if not self.ativo:
            return
        for fluxo in self.no.topologia.fluxos:
            if fluxo.regiao_destino == self.no.regiao_id:
                self._agendar_job(fluxo, 0)

    def guardioes_score(self, fluxo: FluxoAplicacao, k: int) -> Tuple[NodeId, ...]:
        no = self.no
        t_rls = fluxo.t_rls(k)
        replicas = no.atribuicoes[fluxo.regiao_destino].membros(fluxo.tarefa_destino, t_rls)
        return tuple(sorted(set(replicas) | set(no.guardioes(fluxo.regiao_destino, t_rls))))

    # ===== RECLAMAÇÕES =====

    def _agendar_job(self, fluxo: FluxoAplicacao, k: int) -> None:
        self.no.agendar(fluxo.t_m(k), lambda: self._preparar_job(fluxo, k), "tgs_job",
                        f"τ'{fluxo.tarefa_destino} k={k}")

    def _preparar_job(self, fluxo: FluxoAplicacao, k: int) -> None:
        no = self.no
        self._agendar_job(fluxo, k + 1)
        t_m = fluxo.t_m(k)
        n = rodada_latencia(t_m, no.params(fluxo.regiao_origem), no.params())
        if n < 0:
            return
        decidido, d_n = no.medicao.decisao(fluxo.regiao_origem, n)
        if not decidido or d_n is None:
            no.log.debug("TGS: job %s de τ'%s sem D_n utilizável (rodada %s)", k, fluxo.tarefa_destino, n)
            return
        p = no.params()
        t_limite = t_m + d_n
        t_aplicar = t_limite + 2 * p.d_intra + p.delta_syn
        t_rls = fluxo.t_rls(k)
        if no.id in no.atribuicoes[no.regiao_id].membros(fluxo.tarefa_destino, t_rls):
            no.agendar(t_limite, lambda: self._reclamar(fluxo, k, d_n), "tgs_reclamacao",
                       f"τ'{fluxo.tarefa_destino} k={k}")
        if no.id in self.guardioes_score(fluxo, k):
            no.agendar(t_aplicar, lambda: self._aplicar(fluxo, k, t_aplicar), "tgs_rodada",
                       f"τ'{fluxo.tarefa_destino} k={k}")

    def _reclamar(self, fluxo: FluxoAplicacao, k: int, d_n: int) -> None:
        no = self.no
        job = fluxo.job(k)
        emissores = [s for s in no.atribuicoes[fluxo.regiao_origem].membros(fluxo.tarefa_origem, fluxo.t_rls(k))
                     if s not in no.cenario.fn]
        chegadas = {s: no.poc.chegada(fluxo.tarefa_destino, k, s) for s in emissores}
        pares = classify_and_claim(no.id, chegadas, fluxo.t_m(k), d_n)
        pares = no.passo("reclamacao", pares, fluxo=fluxo, job=job, emissores=emissores)
        if not pares:
            return
        reclamacao = Reclamacao.criar(no.assinador, fluxo.tarefa_destino, job, pares)
        no.log.debug("TGS: reclamação de %d par(es) para τ'%s job %s", len(reclamacao.pares),
                     fluxo.tarefa_destino, job)
        no.difundir(reclamacao, self.guardioes_score(fluxo, k))
        self._guardar_reclamacao(reclamacao)

    def ao_receber_reclamacao(self, rec: Reclamacao, origem: NodeId, t_envio: int) -> None:
        if origem != rec.reclamante or not rec.valida(self.no.registro):
            return
        self._guardar_reclamacao(rec)

    def _guardar_reclamacao(self, rec: Reclamacao) -> None:
        no = self.no
        try:
            fluxo = no.topologia.fluxo_por_tarefa(rec.tarefa_destino)
        except ErroTopologia:
            return
        k = rec.job.invocacao
        if fluxo.regiao_destino != no.regiao_id or k < 0 or (fluxo.tarefa_destino, k) in self.aplicadas:
            return
        if rec.reclamante not in no.atribuicoes[no.regiao_id].membros(fluxo.tarefa_destino, fluxo.t_rls(k)):
            return
        self.reclamacoes.setdefault((fluxo.tarefa_destino, k), {}).setdefault(rec.reclamante, rec)

    # ===== RODADA DE SCORE =====

    def _aplicar(self, fluxo: FluxoAplicacao, k: int, t_aplicar: int) -> None:
        no = self.no
        chave = (fluxo.tarefa_destino, k)
        self.aplicadas.add(chave)
        reclamacoes = self.reclamacoes.pop(chave, {})
        t_rls = fluxo.t_rls(k)
        emissores = [s for s in no.atribuicoes[fluxo.regiao_origem].membros(fluxo.tarefa_origem, t_rls)
                     if s not in no.cenario.fn]
        receptores = [r for r in no.atribuicoes[no.regiao_id].membros(fluxo.tarefa_destino, t_rls)
                      if r not in no.cenario.fn]
        pares: List[Par] = [((s, fluxo.tarefa_origem), (r, fluxo.tarefa_destino))
                            for s in emissores for r in receptores]
        # Um receptor só reclama dos próprios pares
        reclamados: List[Par] = [
            ((s, fluxo.tarefa_origem), (r, fluxo.tarefa_destino))
            for rec in reclamacoes.values() for s, r in rec.pares
            if r == rec.reclamante and s in emissores
        ]
        sinalizadas = apply_round(self.tabela, pares, reclamados)
        self.aplicadas.discard((fluxo.tarefa_destino, k - 64))

        if no.coletor.registrar_scores:
            for (s, tarefa_s), (r, tarefa_r) in pares:
                for entrada in ((s, tarefa_s), (r, tarefa_r)):
                    no.coletor.scores.append(RegistroScore(
                        no.sim.agora, no.id, entrada[0], entrada[1], float(self.tabela.score(*entrada)),
                        entrada in self.tabela.sinalizados,
                    ))

        p = no.params()
        a_partir = t_aplicar + p.d_intra + p.delta_syn + p.d_rec_intra
        for sinalizado, tarefa in sinalizadas:
            self._propor(fluxo, k, sinalizado, tarefa, a_partir)

    # ===== CONSENSO SOBRE SINALIZAÇÕES =====

    def _propor(self, fluxo: FluxoAplicacao, k: int, sinalizado: NodeId, tarefa: TaskId, a_partir: int) -> None:
        no = self.no
        if not no.sistema.deteccao:
            return
        substituto = None
        if tarefa == fluxo.tarefa_destino:
            try:
                substituto = select_replacement(no.atribuicoes[no.regiao_id], sinalizado, tarefa)
            except ErroSemSubstituto:
                substituto = None
        proposta = PropostaFlag.criar(no.assinador, tarefa, sinalizado, substituto, fluxo.job(k), a_partir)
        proposta = no.passo("proposta_flag", proposta, fluxo=fluxo)
        no.log.info("TGS: proposta de sinalizar N%s:τ%s (substituto %s)", sinalizado, tarefa, substituto)
        no.difundir_regiao(proposta)
        self._guardar_proposta(proposta)

    def ao_receber_proposta(self, proposta: PropostaFlag, origem: NodeId, t_envio: int) -> None:
        no = self.no
        if origem != proposta.remetente or origem not in no.regiao.nos or not proposta.valida(no.registro):
            return
        self._guardar_proposta(proposta)

    def _guardar_proposta(self, proposta: PropostaFlag) -> None:
        no = self.no
        try:
            fluxo = no.topologia.fluxo_por_tarefa(proposta.tarefa)
        except ErroTopologia:
            return
        k = proposta.job.invocacao
        if fluxo.regiao_destino != no.regiao_id or k < 0 or proposta.job.tarefa != fluxo.tarefa_origem:
            return
        if proposta.remetente not in self.guardioes_score(fluxo, k):
            return
        recebidas = self.propostas.setdefault(proposta.chave, {})
        if proposta.remetente in recebidas:
            return
        recebidas[proposta.remetente] = proposta

        if proposta.chave not in self.adotadas:
            iguais = [p for p in recebidas.values() if p.substituto == proposta.substituto]
            if len(iguais) >= no.regiao.f + 1:
                self._adotar(fluxo, proposta)
        self._checar_divergentes(proposta.chave)

    def _checar_divergentes(self, chave: tuple) -> None:
        no = self.no
        if chave not in self.adotadas:
            return
        substituto = self.adotadas[chave]
        recebidas = self.propostas.get(chave, {})
        maioria = tuple(p for _, p in sorted(recebidas.items()) if p.substituto == substituto)
        for remetente, proposta in sorted(recebidas.items()):
            if proposta.substituto == substituto or (chave, remetente) in self.divergentes:
                continue
            self.divergentes.add((chave, remetente))
            fluxo = no.topologia.fluxo_por_tarefa(proposta.tarefa)
            no.declarar_falha(RegistroFalha(
                TipoFalha.COMISSAO, EscopoFalha.INTRA, remetente, no.id, no.agora(), "flag_divergente",
                tarefa=proposta.tarefa, job=proposta.job, t_rls=fluxo.t_rls(proposta.job.invocacao),
                evidencia=(proposta, maioria),
            ))

    def _adotar(self, fluxo: FluxoAplicacao, proposta: PropostaFlag) -> None:
        no = self.no
        self.adotadas[proposta.chave] = proposta.substituto
        k = proposta.job.invocacao
        t_rls = fluxo.t_rls(k)

        if proposta.tarefa != fluxo.tarefa_destino:
            # Réplica de τ: a região de origem escolhe o substituto (segundo salto)
            registro = RegistroFalha(
                TipoFalha.OMISSAO, EscopoFalha.INTER, proposta.sinalizado, no.id, no.agora(), MOTIVO_FLAG,
                tarefa=proposta.tarefa, job=proposta.job, t_rls=t_rls,
            )
            no.log.info("TGS: N%s sinalizado em τ%s; pedindo reatribuição à região %s",
                        proposta.sinalizado, proposta.tarefa, fluxo.regiao_origem)
            no.recuperacao.propagar_flag(registro, proposta.a_partir)
            return

        if proposta.substituto is None:
            no.entrar_modo_seguro(no.regiao_id, no.agora(), f"sem substituto para τ{proposta.tarefa}")
            return
        atribuicao = no.atribuicoes[no.regiao_id]
        nova = NovaAtribuicao(no.regiao_id, proposta.tarefa, proposta.sinalizado, proposta.substituto,
                              proposta.a_partir)
        atribuicao.aplicar(nova)
        atribuicao.contadores[proposta.sinalizado] = atribuicao.contadores.get(proposta.sinalizado, 0) + 1
        if self.ativo:
            self.tabela.incrementar_contador(proposta.sinalizado)
        self.ao_reatribuir((nova,))
        no.log.info("TGS: τ%s migrada de N%s para N%s", nova.tarefa, nova.saiu, nova.entrou)
        registro = RegistroFalha(
            TipoFalha.OMISSAO, EscopoFalha.INTRA, proposta.sinalizado, no.id, no.agora(), MOTIVO_FLAG,
            tarefa=proposta.tarefa, job=proposta.job, t_rls=t_rls,
        )
        no.recuperacao.propagar_flag(registro, proposta.a_partir, (nova,))

    def ao_reatribuir(self, novas: Iterable[NovaAtribuicao]) -> None:
        """Entrada do nó que saiu é descartada; a do substituto começa em s_init."""
        if not self.ativo:
            return
        for nova in novas:
            try:
                fluxo = self.no.topologia.fluxo_por_tarefa(nova.tarefa)
            except ErroTopologia:
                continue
            if fluxo.regiao_destino != self.no.regiao_id:
                continue
            self.tabela.remover(nova.saiu, nova.tarefa)
            self.tabela.registrar(nova.entrou, nova.tarefa)
