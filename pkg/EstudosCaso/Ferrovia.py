"""
Estudos de caso ferroviários sobre a pilha completa do protocolo.

ma_ataque: o RBC (região 0) envia a MA ao trem (região 1) a cada segundo;
uma réplica comprometida do RBC troca a MA por um valor maior e a envia
antes das corretas. Com GeoShield a PoC corrige a MA; sem ele o trem só
percebe o obstáculo ao avistá-lo. As réplicas corretas do RBC são as que
medem, então o heartbeat com a PoC sai mesmo com a réplica atacante excluída.

wenzhou: o trem da frente (região 0) informa a posição ao trem de trás
(região 1); um raio corta a comunicação do trem da frente, que freia em
emergência. Com GeoShield a região do trem de trás entra em modo seguro.

A física roda no mesmo laço de eventos do protocolo, um evento por passo.
"""
import csv
import logging
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Dict, List, Optional, Tuple

from Adversario.EspecificacaoAtaque import EspecificacaoAtaque
from Nucleo.Identificadores import JobId, NodeId
from Nucleo.Tempo import em_segundos, ms
from Nucleo.Topologia import Topologia
from Sistema.ColetorResultados import RegistroModoSeguro
from Sistema.MontadorSistema import SistemaGeoShield

from .Frenagem import ParametrosFrenagem, TrajetoFrenagem, Trem

logger = logging.getLogger(__name__)


def parametros_frenagem(estudo: Dict) -> ParametrosFrenagem:
    """Seção `estudo_caso` -> ParametrosFrenagem."""
    padrao = ParametrosFrenagem()
    return ParametrosFrenagem(
        a_servico=float(estudo.get("a_servico", padrao.a_servico)),
        a_emergencia=float(estudo.get("a_emergencia", padrao.a_emergencia)),
        distancia_visada=float(estudo.get("distancia_visada_m", padrao.distancia_visada)),
        margem=float(estudo.get("margem_m", padrao.margem)),
        velocidade_a_vista=float(estudo.get("velocidade_a_vista_kmh", 20.0)) / 3.6,
        passo=float(estudo.get("passo_ms", padrao.passo * 1000)) / 1000,
    )


def _agendar_fisica(sistema: SistemaGeoShield, passo_ns: int, ao_passo) -> None:
    """Um evento por passo de integração, até `ao_passo` devolver False."""
    def executar(k: int = 1):
        if ao_passo():
            sistema.sim.schedule(k * passo_ns, lambda: executar(k + 1))

    sistema.sim.schedule(passo_ns, executar)


# ===== MA INCORRETA =====

class ControleMA:
    """
    Atualiza a MA do trem a partir das entradas adotadas pelas réplicas de τ'.

    Sem proteção o trem usa a primeira MA que chega de cada job. Com proteção
    uma correção marca o remetente da MA provisória como suspeito: MAs
    provisórias dele passam a ser ignoradas e a MA volta ao valor corrigido.
    """

    def __init__(self, trem: Trem, protegido: bool):
        self.trem = trem
        self.protegido = protegido
        self.provisorias: Dict[int, Tuple[NodeId, float]] = {}
        self.tratados: set = set()
        self.suspeitos: set = set()
        self.fonte: Optional[Tuple[int, NodeId]] = None
        self.t_correcao: Optional[float] = None
        self.x_correcao: Optional[float] = None

    def _aplicar(self, k: int, remetente: NodeId, ma: float) -> None:
        self.fonte = (k, remetente)
        if ma != self.trem.estado.ma:
            logger.debug("MA atualizada para %.0f m (job %d, N%s)", ma, k, remetente)
        self.trem.definir_ma(ma)

    def __call__(self, no, fluxo, job: JobId, mensagem, estado: str) -> None:
        carga = mensagem.carga if isinstance(mensagem.carga, dict) else {}
        if "ma_m" not in carga:
            return
        k, ma, remetente = job.invocacao, float(carga["ma_m"]), mensagem.remetente

        if estado == "provisoria":
            self.provisorias.setdefault(k, (remetente, ma))
            if remetente in self.suspeitos:
                return
            # uma MA provisória por job; jobs antigos não voltam
            if self.fonte is None or k > self.fonte[0]:
                self._aplicar(k, remetente, ma)
            return
        if not self.protegido or (k, estado) in self.tratados:
            return
        self.tratados.add((k, estado))

        if estado == "corrigida":
            anterior = self.provisorias.get(k)
            if anterior is not None and anterior[1] != ma:
                self.suspeitos.add(anterior[0])
            if self.t_correcao is None:
                self.t_correcao = em_segundos(no.sim.agora)
                self.x_correcao = self.trem.estado.posicao
                logger.info("MA corrigida em t=%.3fs (x=%.1f m)", self.t_correcao, self.x_correcao)
        if self.fonte is None or k >= self.fonte[0] or self.fonte[1] in self.suspeitos:
            self._aplicar(k, remetente, ma)


def simulate_incorrect_ma(cenario, protegido: bool = True, atacado: bool = True,
                          semente: Optional[int] = None) -> TrajetoFrenagem:
    """
    Trem sob ataque de MA incorreta.

    Args:
        cenario: Cenário com `estudo_caso.tipo == "ma_ataque"`
        protegido: Se False, roda sem GeoShield: nenhuma falha é declarada e o
            trem não usa as correções da PoC
        atacado: Se False, remove o ataque do cenário
        semente: Substitui a semente do cenário

    Returns:
        TrajetoFrenagem com a curva (t, x, v, modo) e o instante da correção
    """
    estudo = cenario.estudo_caso
    params = parametros_frenagem(estudo)
    if not atacado:
        cenario = cenario.com(ataque=EspecificacaoAtaque())
    ma = float(estudo.get("ma_m", 10_000.0))
    obstaculo = float(estudo.get("obstaculo_m", ma))
    trem = Trem(params, 0.0, float(estudo.get("velocidade_inicial", 90.0)), ma, obstaculo)
    controle = ControleMA(trem, protegido)

    sistema = SistemaGeoShield(cenario, semente=semente, registrar_trace=False, registrar_scores=False,
                               consumidores=[controle], deteccao=protegido)

    def passo() -> bool:
        trem.passo()
        return not trem.parado

    _agendar_fisica(sistema, ms(params.passo * 1000), passo)
    sistema.executar()
    if not trem.parado:
        logger.warning("Trem ainda em movimento ao fim do ensaio (x=%.1f m)", trem.estado.posicao)

    logger.info("MA incorreta (%s): parada em x=%.1f m, colisão=%s",
                "protegido" if protegido else "sem proteção", trem.estado.posicao, trem.colisao is not None)
    return TrajetoFrenagem(trem.historico, trem.colisao is not None, trem.onset_servico,
                           controle.t_correcao, controle.x_correcao)


# ===== WENZHOU =====

@dataclass(frozen=True)
class AmostraDoisTrens:
    t: float
    x1: float
    x2: float


@dataclass
class TrajetoDoisTrens:
    """x1: trem da frente; x2: trem de trás."""
    amostras: List[AmostraDoisTrens] = field(default_factory=list)
    colisao: bool = False
    t_modo_seguro: Optional[int] = None
    variante: str = "geoshield"

    @property
    def separacao_minima(self) -> float:
        return min(a.x1 - a.x2 for a in self.amostras)

    def exportar_csv(self, caminho: Path) -> Path:
        """CSV (t, x1, x2)."""
        caminho = Path(caminho)
        caminho.parent.mkdir(parents=True, exist_ok=True)
        with open(caminho, "w", newline="", encoding="utf-8") as arquivo:
            escritor = csv.writer(arquivo, lineterminator="\n")
            escritor.writerow(["t", "x1", "x2"])
            for a in self.amostras:
                escritor.writerow([f"{a.t:.2f}", f"{a.x1:.3f}", f"{a.x2:.3f}"])
        return caminho


class TremDaFrente:
    """Trem da frente em forma fechada: cruzeiro até o raio, depois emergência."""

    def __init__(self, posicao: float, velocidade: float, t_raio: float, a_emergencia: float):
        self.x0 = posicao
        self.v = velocidade
        self.t_raio = t_raio
        self.a = a_emergencia

    def posicao(self, t: float) -> float:
        if t <= self.t_raio:
            return self.x0 + self.v * t
        dt = min(t - self.t_raio, self.v / self.a)
        return self.x0 + self.v * self.t_raio + self.v * dt - self.a * dt * dt / 2

    @property
    def posicao_parada(self) -> float:
        return self.posicao(self.t_raio + self.v / self.a)


def simulate_wenzhou(cenario, variante: Optional[str] = None, semente: Optional[int] = None) -> TrajetoDoisTrens:
    """
    Dois trens a 90 m/s separados por 10 km; o trem da frente perde a
    comunicação no raio e freia.

    Variantes:
        geoshield: no modo seguro a MA volta à última posição informada
        incidente: sem GeoShield; MA extrapolada e aviso manual em t_aviso
        marcha_a_vista: no modo seguro o trem de trás segue em marcha à vista

    Returns:
        TrajetoDoisTrens com (t, x1, x2) e o instante do modo seguro
    """
    estudo = cenario.estudo_caso
    variante = variante or estudo.get("variante", "geoshield")
    params = parametros_frenagem(estudo)
    v0 = float(estudo.get("velocidade_inicial", 90.0))
    t_raio = float(estudo.get("t_raio_ms", 10_000.0)) / 1000
    t_aviso = float(estudo.get("t_aviso_ms", 120_000.0)) / 1000
    frente = TremDaFrente(float(estudo.get("posicao_frente_m", 10_000.0)), v0, t_raio, params.a_emergencia)

    base = cenario.topologia.fluxos[0]

    def relato(job: JobId) -> Dict:
        return {"job": job.invocacao, "posicao_m": round(frente.posicao(em_segundos(base.t_rls(job.invocacao))), 3)}

    fluxo = replace(base, saida=relato)
    topologia = Topologia(list(cenario.topologia.regioes.values()), [fluxo, *cenario.topologia.fluxos[1:]])
    cenario = cenario.com(topologia=topologia)
    regiao_seguidor = fluxo.regiao_destino

    seguidor = Trem(params, 0.0, v0, frente.x0, obstaculo=frente.x0)
    ultimo: Dict[str, float] = {"posicao": frente.x0, "t": 0.0, "job": -1}
    travado = {"modo_seguro": False, "aviso": False}

    def consumir(no, fluxo_, job, mensagem, estado):
        if estado != "provisoria" or travado["modo_seguro"] or job.invocacao <= ultimo["job"]:
            return
        ultimo.update(posicao=float(mensagem.carga["posicao_m"]), job=job.invocacao,
                      t=em_segundos(fluxo.t_rls(job.invocacao)))
        if variante != "incidente":
            seguidor.definir_ma(ultimo["posicao"])

    def ao_modo_seguro(registro: RegistroModoSeguro):
        if variante == "incidente" or registro.regiao != regiao_seguidor or travado["modo_seguro"]:
            return
        travado["modo_seguro"] = True
        if variante == "marcha_a_vista":
            seguidor.definir_ma(math.inf)
            seguidor.marcha_a_vista()
            logger.info("Modo seguro: trem de trás em marcha à vista")
        else:
            seguidor.definir_ma(ultimo["posicao"])
            logger.info("Modo seguro: MA do trem de trás recuada para %.0f m", ultimo["posicao"])

    sistema = SistemaGeoShield(cenario, semente=semente, registrar_trace=False, registrar_scores=False,
                               consumidores=[consumir])
    sistema.ouvintes_modo_seguro.append(ao_modo_seguro)
    amostras = [AmostraDoisTrens(0.0, frente.x0, 0.0)]

    def passo() -> bool:
        t = seguidor.t + params.passo
        seguidor.definir_obstaculo(frente.posicao(t))
        if variante == "incidente":
            if t >= t_aviso and not travado["aviso"]:
                travado["aviso"] = True
                seguidor.frear_servico()
                logger.info("Aviso manual em t=%.1fs: frenagem de serviço", t)
            seguidor.definir_ma(ultimo["posicao"] + v0 * (t - ultimo["t"]))
        amostra = seguidor.passo()
        amostras.append(AmostraDoisTrens(amostra.t, frente.posicao(amostra.t), amostra.x))
        return not seguidor.parado

    _agendar_fisica(sistema, ms(params.passo * 1000), passo)
    resultado = sistema.executar()

    instantes = [m.instante for m in resultado.coletor.modo_seguro
                 if m.regiao == regiao_seguidor and resultado.coletor.correto(m.no)]
    trajeto = TrajetoDoisTrens(amostras, seguidor.colisao is not None, min(instantes) if instantes else None,
                               variante)
    logger.info("Wenzhou (%s): separação mínima %.1f m, colisão=%s", variante, trajeto.separacao_minima,
                trajeto.colisao)
    return trajeto
