"""
Estratégias bizantinas dos nós comprometidos.

Cada estratégia atua por dois ganchos: `interceptar` decide sobre cada envio
do nó (passar, descartar, atrasar, substituir) e `no_passo` troca o resultado
de um ponto de decisão do protocolo. Nós comprometidos compartilham um
QuadroConluio com as chaves de todos os comprometidos.
"""
import logging
from dataclasses import dataclass, field, replace
from typing import Any, Dict, List, Optional, Set, Tuple

from Medicao.Mensagens import TIMEOUT, Anexos, AssinaturaRodada, Heartbeat, LogPropostas, conteudo_rodada
from Nucleo.Assinatura import Assinador
from Nucleo.Identificadores import NodeId
from Nucleo.Tempo import ms
from Nucleo.Topologia import ErroTopologia
from PoC.ProvaCorretude import MensagemAplicacao, ParcelaPoC, PoC, conteudo_parcela
from PoC.ValidacaoPoC import hash_esperado
from SimRede.Rede import AcaoEnvio
from Sistema.NoGeoShield import SILENCIO

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class EventoAtaque:
    t: int
    no: NodeId
    tipo: str
    detalhes: str = ""


@dataclass
class QuadroConluio:
    """Estado compartilhado pelos nós comprometidos de um ensaio."""
    assinadores: Dict[NodeId, Assinador] = field(default_factory=dict)
    dados: Dict[str, Any] = field(default_factory=dict)
    eventos: List[EventoAtaque] = field(default_factory=list)

    def conluiados(self, topologia, regiao) -> List[NodeId]:
        return sorted(n for n in self.assinadores if topologia.regiao_de(n) == regiao)


class Estrategia:
    """
    Comportamento correto por padrão; subclasses sobrescrevem `interceptar`
    ou métodos `_passo_<nome>` para o ponto de decisão correspondente.

    Args:
        parametros: Parâmetros da estratégia (do cenário)
        quadro: Quadro de conluio do ensaio
        inicio: Instante real a partir do qual o nó age de forma bizantina
    """
    nome = "correta"
    usa_rede = False

    def __init__(self, parametros: Optional[Dict[str, Any]] = None, quadro: Optional[QuadroConluio] = None,
                 inicio: int = 0):
        self.parametros = dict(parametros or {})
        self.quadro = quadro if quadro is not None else QuadroConluio()
        self.inicio = inicio
        self.no = None

    def instalar(self, no) -> None:
        self.no = no
        self.quadro.assinadores[no.id] = no.assinador
        if self.usa_rede:
            no.rede.instalar_interceptador(no.id, self._interceptar)

    def ativa(self) -> bool:
        return self.no is not None and self.no.sim.agora >= self.inicio

    def registrar_evento(self, tipo: str, detalhes: str = "") -> None:
        self.quadro.eventos.append(EventoAtaque(self.no.sim.agora, self.no.id, tipo, detalhes))

    def no_passo(self, no, nome: str, padrao: Any, contexto: Dict[str, Any]) -> Any:
        if not self.ativa():
            return padrao
        metodo = getattr(self, f"_passo_{nome}", None)
        return padrao if metodo is None else metodo(no, padrao, contexto)

    def _interceptar(self, destino: NodeId, msg: Any, agora: int) -> AcaoEnvio:
        if not self.ativa():
            return AcaoEnvio.passar()
        return self.interceptar(destino, msg, agora)

    def interceptar(self, destino: NodeId, msg: Any, agora: int) -> AcaoEnvio:
        return AcaoEnvio.passar()

    def _inter_regiao(self, destino: NodeId) -> bool:
        return self.no.topologia.regiao_de(destino) != self.no.regiao_id


# ===== OMISSÃO =====

class Silenciosa(Estrategia):
    """Descarta todo envio."""
    nome = "silenciosa"
    usa_rede = True

    def interceptar(self, destino, msg, agora):
        return AcaoEnvio.descartar()


class Agressiva(Estrategia):
    """Descarta todo envio inter-região enquanto tiver alguma tarefa inter-região."""
    nome = "agressiva"
    usa_rede = True

    def tem_tarefa_inter(self) -> bool:
        no = self.no
        if no.id in no.medidores(no.regiao_id):
            return True
        return any(
            no.id in no.atribuicoes[no.regiao_id].membros(fluxo.tarefa_origem)
            for fluxo in no.topologia.fluxos if fluxo.regiao_origem == no.regiao_id
        )

    def interceptar(self, destino, msg, agora):
        if self._inter_regiao(destino) and self.tem_tarefa_inter():
            self.registrar_evento("descarte", type(msg).__name__)
            return AcaoEnvio.descartar()
        return AcaoEnvio.passar()


class Adaptativa(Estrategia):
    """
    Atrasa (ou descarta) a mensagem de aplicação só se o próprio score,
    espelhado de um guardião correto e descontadas as penalidades ainda não
    aplicadas, continuar positivo depois da penalidade.

    Parâmetros: acao ("descartar" | "atrasar"), atraso_ms, alvos (quantos
    receptores atingir; todos se ausente).
    """
    nome = "adaptativa"
    usa_rede = True

    def __init__(self, *args, **kwargs):
        super().__init__(*args, **kwargs)
        self.decisoes: Dict[Tuple[int, int], Set[NodeId]] = {}
        self.pendentes: List[Tuple[int, int, Any]] = []

    def _espelho(self, fluxo, k: int):
        """GovernancaTGS de um guardião correto do fluxo."""
        sistema = self.no.sistema
        for guardiao in self.no.tgs.guardioes_score(fluxo, k):
            if guardiao not in self.quadro.assinadores:
                return sistema.nos[guardiao].tgs
        return None

    def score_estimado(self, fluxo, k: int):
        espelho = self._espelho(fluxo, k)
        if espelho is None or not espelho.ativo:
            return None
        score = espelho.tabela.score(self.no.id, fluxo.tarefa_origem)
        self.pendentes = [
            (tarefa, kp, custo) for tarefa, kp, custo in self.pendentes
            if (tarefa, kp) not in espelho.aplicadas and kp > k - 32
        ]
        return score - sum(custo for tarefa, kp, custo in self.pendentes if tarefa == fluxo.tarefa_destino)

    def _decidir(self, fluxo, k: int) -> Set[NodeId]:
        no = self.no
        receptores = sorted(no.atribuicoes[fluxo.regiao_destino].membros(fluxo.tarefa_destino, fluxo.t_rls(k)))
        alvos = self.parametros.get("alvos")
        escolhidos = receptores[:int(alvos)] if alvos else receptores
        score = self.score_estimado(fluxo, k)
        if score is None:
            return set(escolhidos)
        custo = len(escolhidos) * no.tgs.parametros.s_pen
        if score - custo > 0:
            self.pendentes.append((fluxo.tarefa_destino, k, custo))
            return set(escolhidos)
        return set()

    def interceptar(self, destino, msg, agora):
        if not isinstance(msg, MensagemAplicacao) or msg.remetente != self.no.id:
            return AcaoEnvio.passar()
        try:
            fluxo = self.no.topologia.fluxo_por_tarefa(msg.tarefa_destino)
        except ErroTopologia:
            return AcaoEnvio.passar()
        chave = (msg.tarefa_destino, msg.job.invocacao)
        if chave not in self.decisoes:
            self.decisoes[chave] = self._decidir(fluxo, msg.job.invocacao)
            self.decisoes.pop((msg.tarefa_destino, msg.job.invocacao - 64), None)
            if self.decisoes[chave]:
                self.registrar_evento("ataque_adaptativo", f"τ{msg.tarefa_origem} k={msg.job.invocacao}")
        if destino not in self.decisoes[chave]:
            return AcaoEnvio.passar()
        if self.parametros.get("acao", "descartar") == "atrasar":
            return AcaoEnvio.atrasar(ms(self.parametros.get("atraso_ms", 1000.0)))
        return AcaoEnvio.descartar()


class EncaminhamentoSeletivo(Estrategia):
    """Medidor que entrega o heartbeat (e as PoCs dele) a um único destino por região."""
    nome = "encaminhamento_seletivo"
    usa_rede = True

    def interceptar(self, destino, msg, agora):
        if not isinstance(msg, Heartbeat) or not self._inter_regiao(destino):
            return AcaoEnvio.passar()
        manter = self.parametros.get("manter")
        if manter is not None:
            permitido = destino in set(manter)
        else:
            regiao = self.no.topologia.regiao_de(destino)
            permitido = destino == min(self.no.medidores(regiao))
        return AcaoEnvio.passar() if permitido else AcaoEnvio.descartar()


# ===== MEDIÇÃO =====

class HeartbeatAntecipado(Estrategia):
    """
    Tenta validar um heartbeat o mais cedo possível: varre uma grade de
    instantes a partir da própria fase 1a e, a cada assinatura recebida, monta
    S_n com as assinaturas dos conluiados e envia assim que tiver f+1.
    """
    nome = "heartbeat_antecipado"

    def __init__(self, *args, **kwargs):
        super().__init__(*args, **kwargs)
        self.enviados: Set[int] = set()

    def _tentar(self, n: int, envio) -> None:
        no = self.no
        if n in self.enviados or envio is None:
            return
        anexos = envio.anexos
        conteudo = conteudo_rodada(no.regiao_id, n, anexos)
        validas = {
            a.remetente: a.assinatura for a in envio.assinaturas.values()
            if a.hash_anexos == anexos.hash and no.registro.verify(a.remetente, conteudo, a.assinatura)
        }
        for conluiado in self.quadro.conluiados(no.topologia, no.regiao_id):
            assinador = self.quadro.assinadores[conluiado]
            validas.setdefault(conluiado, AssinaturaRodada.criar(assinador, no.regiao_id, n, anexos).assinatura)
        if len(validas) < no.regiao.f + 1:
            return
        self.enviados.add(n)
        heartbeat = Heartbeat.criar(no.assinador, no.regiao_id, n, tuple(validas.values()), anexos)
        self.registrar_evento("heartbeat_antecipado", f"n={n}")
        no.difundir(heartbeat, no.medicao.destinos_heartbeat(n))

    def _passo_assinatura_rodada(self, no, padrao, ctx):
        n = ctx["n"]
        agenda = no.agenda(no.regiao_id, n)
        passo = max(ms(self.parametros.get("passo_grade_ms", 0.1)), 1)
        for t in range(agenda.t_sig, agenda.t_send + 1, passo):
            no.agendar(t, lambda n=n: self._tentar(n, no.medicao.envios.get(n)), "ataque_grade", f"n={n}")
        return padrao

    def _passo_assinatura_recebida(self, no, padrao, ctx):
        self._tentar(ctx["n"], ctx["envio"])
        return padrao

    def _passo_instante_heartbeat(self, no, padrao, ctx):
        return no.agora()


class HeartbeatTardio(Estrategia):
    """Envia o heartbeat atrasado (padrão: HB_timeout depois de t_n)."""
    nome = "heartbeat_tardio"

    def _passo_instante_heartbeat(self, no, padrao, ctx):
        atraso = self.parametros.get("atraso_ms")
        return padrao + (ms(atraso) if atraso is not None else no.params().hb_timeout)


class AceiteEquivocado(Estrategia):
    """
    Envia aceites com valores diferentes para partes diferentes da região.

    Parâmetros: desvio_ms; desviados (destinos que recebem o valor desviado;
    padrão: a segunda metade da região).
    """
    nome = "aceite_equivocado"

    def _passo_aceite(self, no, padrao, ctx):
        destinos = sorted(x for x in no.regiao.nos if x != no.id)
        desvio = ms(self.parametros.get("desvio_ms", 5.0))
        base = no.params().delta_inter if padrao is TIMEOUT else padrao
        desviados = self.parametros.get("desviados")
        if desviados is None:
            desviados = destinos[len(destinos) // 2:]
        desviados = set(desviados)
        self.registrar_evento("aceite_equivocado", f"n={ctx['n']}")
        return {d: (base + desvio if d in desviados else padrao) for d in destinos}


class AdulteracaoLog(Estrategia):
    """Guardião/medidor que omite o log da disputa ou altera uma proposta dele."""
    nome = "adulteracao_log"

    def _passo_log_propostas(self, no, padrao: LogPropostas, ctx):
        if self.parametros.get("modo", "adulterar") == "omitir" or not padrao.entradas:
            return SILENCIO
        primeira = padrao.entradas[0]
        alterada = replace(primeira, proposta=replace(primeira.proposta, d=primeira.proposta.d + ms(1)))
        base = replace(padrao, entradas=(alterada,) + padrao.entradas[1:], assinatura=None)
        self.registrar_evento("log_adulterado", f"n={padrao.n}")
        return replace(base, assinatura=no.assinador.assinar(base.conteudo()))


# ===== APLICAÇÃO E PoC =====

class SaidaIncorreta(Estrategia):
    """
    Réplica de τ que envia uma saída incorreta, opcionalmente antes de t_m.

    Parâmetros: carga (dict mesclado na saída correta), antecedencia_ms,
    parcela ("forjada" | "correta" | "omitir").
    """
    nome = "saida_incorreta"
    PASSOS_DO_JOB = ("saida_aplicacao", "instante_saida", "parcela_poc")

    def no_passo(self, no, nome, padrao, contexto):
        # Vale para os jobs liberados a partir de `inicio`, mesmo os enviados antes dele
        if nome not in self.PASSOS_DO_JOB or "fluxo" not in contexto:
            return super().no_passo(no, nome, padrao, contexto)
        job = contexto.get("job")
        invocacao = job.invocacao if job is not None else contexto["invocacao"]
        if contexto["fluxo"].t_rls(invocacao) < self.inicio:
            return padrao
        return getattr(self, f"_passo_{nome}")(no, padrao, contexto)

    def _passo_saida_aplicacao(self, no, padrao, ctx):
        carga = self.parametros.get("carga", {"adulterada": True})
        self.registrar_evento("saida_incorreta", f"job={ctx['job']}")
        if isinstance(padrao, dict) and isinstance(carga, dict):
            return {**padrao, **carga}
        return carga

    def _passo_instante_saida(self, no, padrao, ctx):
        return padrao - ms(self.parametros.get("antecedencia_ms", 0.0))

    def _passo_parcela_poc(self, no, padrao, ctx):
        modo = self.parametros.get("parcela", "forjada")
        if modo == "omitir":
            return SILENCIO
        if modo == "correta":
            fluxo, job = ctx["fluxo"], ctx["job"]
            return ParcelaPoC.criar(no.assinador, fluxo.tarefa_destino, job, hash_esperado(fluxo, job))
        return padrao


class Replay(Estrategia):
    """Reenvia a saída do job anterior sob o JobId atual."""
    nome = "replay"

    def _passo_saida_aplicacao(self, no, padrao, ctx):
        fluxo, job = ctx["fluxo"], ctx["job"]
        if job.invocacao == 0:
            return padrao
        self.registrar_evento("replay", f"job={job}")
        return fluxo.saida(fluxo.job(job.invocacao - 1))


class PoCFabricada(Estrategia):
    """
    Medidor que troca os anexos do heartbeat por uma PoC forjada, assinada
    só pelos conluiados.
    """
    nome = "poc_fabricada"
    usa_rede = True

    def __init__(self, *args, **kwargs):
        super().__init__(*args, **kwargs)
        self.forjados: Dict[int, Optional[Heartbeat]] = {}

    def _forjar(self, hb: Heartbeat) -> Optional[Heartbeat]:
        no = self.no
        conluiados = self.quadro.conluiados(no.topologia, no.regiao_id)
        for fluxo in no.topologia.fluxos:
            if fluxo.regiao_origem != no.regiao_id:
                continue
            jobs = no.poc.jobs_da_rodada(fluxo, hb.n)
            if not jobs:
                continue
            job = fluxo.job(jobs[-1])
            falsa = MensagemAplicacao(no.id, fluxo.tarefa_origem, fluxo.tarefa_destino, job,
                                      self.parametros.get("carga", {"forjada": True}))
            assinaturas = tuple(
                self.quadro.assinadores[c].assinar(conteudo_parcela(fluxo.tarefa_destino, job, falsa.hash))
                for c in conluiados
            )
            pocs = [p for p in hb.anexos.pocs if p.chave_ordem() != (fluxo.tarefa_destino, tuple(job))]
            pocs.append(PoC(fluxo.tarefa_destino, job, falsa.hash, assinaturas))
            anexos = Anexos.montar(pocs, hb.anexos.rps)
            rodada = tuple(AssinaturaRodada.criar(self.quadro.assinadores[c], no.regiao_id, hb.n, anexos).assinatura
                           for c in conluiados)
            self.registrar_evento("poc_fabricada", f"n={hb.n} job={job}")
            return Heartbeat.criar(no.assinador, no.regiao_id, hb.n, rodada, anexos)
        return None

    def interceptar(self, destino, msg, agora):
        if not isinstance(msg, Heartbeat) or msg.remetente != self.no.id or not self._inter_regiao(destino):
            return AcaoEnvio.passar()
        if msg.n not in self.forjados:
            self.forjados[msg.n] = self._forjar(msg)
        forjado = self.forjados[msg.n]
        return AcaoEnvio.passar() if forjado is None else AcaoEnvio.substituir(forjado)


# ===== TGS =====

class ReceptorMentiroso(Estrategia):
    """Réplica de τ' que reclama de emissores pontuais (com probabilidade `taxa`)."""
    nome = "receptor_mentiroso"

    def _passo_reclamacao(self, no, padrao, ctx):
        if no.rng.random() >= float(self.parametros.get("taxa", 1.0)):
            return padrao
        return tuple(sorted(set(padrao) | {(s, no.id) for s in ctx["emissores"]}))


ESTRATEGIAS = {
    classe.nome: classe for classe in (
        Silenciosa, Agressiva, Adaptativa, EncaminhamentoSeletivo, HeartbeatAntecipado, HeartbeatTardio,
        AceiteEquivocado, AdulteracaoLog, SaidaIncorreta, Replay, PoCFabricada, ReceptorMentiroso,
    )
}

# Nomes aceitos nos arquivos de cenário além dos nomes em português
SINONIMOS = {
    "silent": "silenciosa",
    "aggressive": "agressiva",
    "adaptive": "adaptativa",
    "selective_poc_forward": "encaminhamento_seletivo",
    "early_heartbeat": "heartbeat_antecipado",
    "late_heartbeat": "heartbeat_tardio",
    "equivocate_accept": "aceite_equivocado",
    "log_tampering": "adulteracao_log",
    "incorrect_output": "saida_incorreta",
    "replay": "replay",
    "fabricated_poc": "poc_fabricada",
    "lying_receiver": "receptor_mentiroso",
}


def nome_canonico(nome: str) -> str:
    return SINONIMOS.get(nome, nome)
