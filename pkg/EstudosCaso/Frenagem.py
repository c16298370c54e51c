"""
Cinemática de frenagem de um trem sob autorização de movimento (MA).

O controle de bordo freia em serviço quando a curva de parada de serviço
alcança MA - margem; se a MA encolher de repente e o serviço não bastar,
usa emergência até o serviço voltar a bastar. O maquinista avista o obstáculo
a distancia_visada e só aplica emergência se a curva de serviço passar dele;
senão o obstáculo vira o novo ponto de parada. A integração é de passo fixo,
exata dentro de cada passo para desaceleração constante.
"""
import csv
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional

from Nucleo.Erros import ErroGeoShield

logger = logging.getLogger(__name__)

MODO_NORMAL = "normal"
MODO_SERVICO = "service_brake"
MODO_EMERGENCIA = "emergency_brake"
MODO_A_VISTA = "on_sight"
MODO_PARADO = "stopped"

KMH = 1 / 3.6


class ErroFrenagem(ErroGeoShield):
    """Parâmetros de frenagem fora do domínio físico"""
    pass


@dataclass(frozen=True)
class ParametrosFrenagem:
    """
    Args:
        a_servico: Desaceleração do freio de serviço (m/s²)
        a_emergencia: Desaceleração do freio de emergência (m/s²)
        distancia_visada: Distância em que o maquinista avista um obstáculo (m)
        margem: Folga entre o ponto de parada alvo e a MA (m)
        velocidade_a_vista: Limite de velocidade em marcha à vista (m/s)
        passo: Passo de integração (s)
    """
    a_servico: float = 0.6
    a_emergencia: float = 1.2
    distancia_visada: float = 3000.0
    margem: float = 91.0
    velocidade_a_vista: float = 20 * KMH
    passo: float = 0.01

    def __post_init__(self):
        if not self.a_emergencia > self.a_servico > 0:
            raise ErroFrenagem("É preciso a_emergencia > a_servico > 0")
        if self.passo <= 0:
            raise ErroFrenagem("Passo de integração precisa ser positivo")


def distancia_parada(v: float, a: float) -> float:
    """v²/(2a)"""
    return v * v / (2 * a)


def brake_onset(v: float, ma: float, a: float, margem: float) -> float:
    """
    Posição em que a frenagem com desaceleração `a` precisa começar para parar
    em ma - margem.

    Uma posição atual já além do valor devolvido significa MA violada: o
    controle aplica emergência imediatamente.
    """
    if v <= 0:
        return ma - margem
    return ma - distancia_parada(v, a) - margem


@dataclass
class EstadoTrem:
    posicao: float
    velocidade: float
    modo: str = MODO_NORMAL
    ma: float = math.inf


@dataclass(frozen=True)
class AmostraFrenagem:
    t: float
    x: float
    v: float
    modo: str


class Trem:
    """
    Args:
        parametros: ParametrosFrenagem
        posicao: Posição inicial (m)
        velocidade: Velocidade de cruzeiro inicial (m/s)
        ma: MA inicial (m)
        obstaculo: Posição de um obstáculo avistável, se houver (m)
    """

    def __init__(self, parametros: ParametrosFrenagem, posicao: float, velocidade: float,
                 ma: float = math.inf, obstaculo: Optional[float] = None):
        self.p = parametros
        self.estado = EstadoTrem(posicao, velocidade, MODO_NORMAL if velocidade > 0 else MODO_PARADO, ma)
        self.obstaculo = obstaculo
        self.t = 0.0
        self.a_vista = False
        self.servico_forcado = False
        self.emergencia_maquinista = False
        self.colisao: Optional[AmostraFrenagem] = None
        self.onset_servico: Optional[float] = None
        self.historico: List[AmostraFrenagem] = [self._amostra()]
        # Folga de quantização: distância percorrida num passo na velocidade inicial
        self._folga = max(velocidade * self.p.passo, 1e-6)

    def _amostra(self) -> AmostraFrenagem:
        e = self.estado
        return AmostraFrenagem(self.t, e.posicao, e.velocidade, e.modo)

    # ===== COMANDOS EXTERNOS =====

    def definir_ma(self, ma: float) -> None:
        self.estado.ma = ma

    def marcha_a_vista(self) -> None:
        self.a_vista = True

    def frear_servico(self) -> None:
        """Ordem externa de frenagem de serviço até a parada."""
        self.servico_forcado = True

    def definir_obstaculo(self, obstaculo: Optional[float]) -> None:
        self.obstaculo = obstaculo

    # ===== CONTROLE =====

    def _desaceleracao(self) -> float:
        e = self.estado
        if e.velocidade <= 0:
            return 0.0
        if self.emergencia_maquinista:
            return self.p.a_emergencia
        d_servico = distancia_parada(e.velocidade, self.p.a_servico)
        avistado = self.obstaculo is not None and e.posicao >= self.obstaculo - self.p.distancia_visada
        if avistado and e.posicao + d_servico > self.obstaculo:
            # Só o freio de emergência ainda pode parar antes do obstáculo
            self.emergencia_maquinista = True
            logger.debug("Obstáculo avistado em x=%.1f m, emergência do maquinista", e.posicao)
            return self.p.a_emergencia

        if self.servico_forcado:
            e.modo = MODO_SERVICO
            return self.p.a_servico

        if self.a_vista:
            if e.velocidade > self.p.velocidade_a_vista or (
                    avistado and e.posicao + d_servico >= self.obstaculo - self.p.margem):
                e.modo = MODO_SERVICO
                return self.p.a_servico
            e.modo = MODO_A_VISTA
            return 0.0

        alvo = e.ma - self.p.margem
        if avistado:
            alvo = min(alvo, self.obstaculo - self.p.margem)
        if e.posicao + d_servico < alvo:
            e.modo = MODO_NORMAL
            return 0.0
        if e.posicao + d_servico > alvo + self._folga:
            e.modo = MODO_EMERGENCIA
            return self.p.a_emergencia
        if self.onset_servico is None:
            self.onset_servico = e.posicao
        e.modo = MODO_SERVICO
        return self.p.a_servico

    def passo(self) -> AmostraFrenagem:
        """Avança um passo de integração."""
        e = self.estado
        dt = self.p.passo
        a = self._desaceleracao()
        if self.emergencia_maquinista and e.velocidade > 0:
            e.modo = MODO_EMERGENCIA
        v0 = e.velocidade
        if v0 > 0:
            if a > 0 and v0 - a * dt <= 0:
                e.posicao += distancia_parada(v0, a)
                e.velocidade = 0.0
            else:
                e.posicao += v0 * dt - a * dt * dt / 2
                e.velocidade = v0 - a * dt
        if e.velocidade <= 0:
            e.velocidade = 0.0
            e.modo = MODO_PARADO
        self.t += dt
        if (self.colisao is None and self.obstaculo is not None
                and e.posicao >= self.obstaculo and v0 > 0):
            self.colisao = self._amostra()
            logger.warning("Colisão em t=%.2fs, x=%.1f m", self.t, e.posicao)
        amostra = self._amostra()
        self.historico.append(amostra)
        return amostra

    @property
    def parado(self) -> bool:
        return self.estado.velocidade <= 0


@dataclass
class TrajetoFrenagem:
    """Resultado de uma simulação de frenagem."""
    amostras: List[AmostraFrenagem] = field(default_factory=list)
    colisao: bool = False
    onset_servico: Optional[float] = None
    t_correcao: Optional[float] = None
    x_correcao: Optional[float] = None

    @property
    def posicao_final(self) -> float:
        return self.amostras[-1].x

    def exportar_csv(self, caminho: Path) -> Path:
        """CSV (t, x, v, mode)."""
        caminho = Path(caminho)
        caminho.parent.mkdir(parents=True, exist_ok=True)
        with open(caminho, "w", newline="", encoding="utf-8") as arquivo:
            escritor = csv.writer(arquivo, lineterminator="\n")
            escritor.writerow(["t", "x", "v", "mode"])
            for a in self.amostras:
                escritor.writerow([f"{a.t:.2f}", f"{a.x:.3f}", f"{a.v:.4f}", a.modo])
        return caminho


def simular_curva_normal(parametros: ParametrosFrenagem, velocidade: float, ma: float,
                         limite: float = 600.0) -> TrajetoFrenagem:
    """Frenagem sem ataque nem obstáculo visível antes da MA."""
    trem = Trem(parametros, 0.0, velocidade, ma)
    while not trem.parado and trem.t < limite:
        trem.passo()
    return TrajetoFrenagem(trem.historico, trem.colisao is not None, trem.onset_servico)
