"""
Modelos de enlace.

Intra-região: latência uniforme em [d_intra - delta_intra, d_intra], sem perda.

Inter-região: latência = B(t) + J, com B(t) uma caminhada aleatória limitada
(interpolada entre nós a cada `intervalo`) e J uma mistura:
    - componente normal U[0, Δ/2)
    - pico U[1.5Δ, 41.5Δ] com probabilidade q
q é resolvido para que dois envios próximos difiram em menos de Δ com
probabilidade exatamente p_norm.
"""
import math
from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from Nucleo.Identificadores import NodeId, RegionId
from Nucleo.Tempo import NS_POR_S

# Largura do pico em múltiplos de Δ
LARGURA_PICO = 40.0
INICIO_PICO = 1.5


def probabilidade_pico(p_norm: float) -> float:
    """
    q tal que P(|J1 - J2| < Δ) = p_norm.

    (1-q)² + c·q² = p_norm, com c = 2u - u² e u = 1/LARGURA_PICO.
    """
    u = 1.0 / LARGURA_PICO
    c = 2 * u - u * u
    return (1.0 - math.sqrt(1.0 - (1.0 + c) * (1.0 - p_norm))) / (1.0 + c)


class EnlaceIntraRegiao:
    def __init__(self, d_intra: int, delta_intra: int, rng: np.random.Generator):
        self.d_intra = d_intra
        self.delta_intra = delta_intra
        self.rng = rng

    def latencia(self) -> int:
        if self.delta_intra == 0:
            return self.d_intra
        return int(self.rng.integers(self.d_intra - self.delta_intra, self.d_intra, endpoint=True))


class ProcessoLatenciaBase:
    """
    B(t): caminhada aleatória refletida em [minimo, maximo].

    Os nós da caminhada são gerados sob demanda, sempre em ordem, então o
    valor em t não depende da ordem das consultas.
    """

    def __init__(self, inicial: int, passo: int, minimo: int, maximo: int,
                 rng: np.random.Generator, intervalo: int = NS_POR_S):
        self.passo = passo
        self.minimo = minimo
        self.maximo = maximo
        self.intervalo = intervalo
        self.rng = rng
        self._nos: List[float] = [float(inicial)]

    def _refletir(self, x: float) -> float:
        largura = self.maximo - self.minimo
        if largura <= 0:
            return float(self.minimo)
        y = (x - self.minimo) % (2 * largura)
        return self.minimo + (y if y <= largura else 2 * largura - y)

    def _garantir(self, indice: int) -> None:
        while len(self._nos) <= indice:
            passo = self.rng.normal(0.0, self.passo) if self.passo > 0 else 0.0
            self._nos.append(self._refletir(self._nos[-1] + passo))

    def valor(self, t: int) -> int:
        indice, resto = divmod(max(t, 0), self.intervalo)
        self._garantir(indice + 1)
        a, b = self._nos[indice], self._nos[indice + 1]
        return int(round(a + (b - a) * resto / self.intervalo))


class ModeloJitter:
    """Amostrador de J para um par de regiões."""

    def __init__(self, delta_inter: int, p_norm: float, rng: np.random.Generator):
        self.delta_inter = delta_inter
        self.p_norm = p_norm
        self.rng = rng
        self.q = probabilidade_pico(p_norm)

    def amostrar(self, p_norm: Optional[float] = None, delta: Optional[int] = None) -> int:
        delta = self.delta_inter if delta is None else delta
        q = self.q if p_norm is None else probabilidade_pico(p_norm)
        if self.rng.random() < q:
            return int(self.rng.uniform(INICIO_PICO * delta, (INICIO_PICO + LARGURA_PICO) * delta))
        return int(self.rng.uniform(0.0, delta / 2))

    def amostrar_vetor(self, quantidade: int, p_norm: Optional[float] = None) -> np.ndarray:
        """Amostras vetorizadas (ns, int64) para testes estatísticos e CDFs."""
        q = self.q if p_norm is None else probabilidade_pico(p_norm)
        delta = self.delta_inter
        pico = self.rng.random(quantidade) < q
        normal = self.rng.uniform(0.0, delta / 2, quantidade)
        alto = self.rng.uniform(INICIO_PICO * delta, (INICIO_PICO + LARGURA_PICO) * delta, quantidade)
        return np.where(pico, alto, normal).astype(np.int64)


@dataclass(frozen=True)
class SobreposicaoDoS:
    """Janela de DoS: o jitter passa a seguir (p_norm_efetivo, delta_efetivo)."""
    inicio: int
    fim: int
    p_norm_efetivo: float
    delta_efetivo: Optional[int] = None

    def ativa(self, t: int) -> bool:
        return self.inicio <= t < self.fim


@dataclass(frozen=True)
class FalhaEnlace:
    """
    Perda total dos envios de uma região ou de um nó numa janela de tempo.

    direcao: "saida" (envios do alvo), "entrada" ou "ambos"
    inter_apenas: Poupa as mensagens intra-região
    """
    inicio: int
    fim: int
    regiao: Optional[RegionId] = None
    no: Optional[NodeId] = None
    direcao: str = "saida"
    inter_apenas: bool = False

    def afeta(self, t: int, origem: NodeId, destino: NodeId,
              regiao_origem: RegionId, regiao_destino: RegionId) -> bool:
        if not self.inicio <= t < self.fim:
            return False
        if self.inter_apenas and regiao_origem == regiao_destino:
            return False
        saida = (self.no == origem) if self.no is not None else (self.regiao == regiao_origem)
        entrada = (self.no == destino) if self.no is not None else (self.regiao == regiao_destino)
        if self.direcao == "saida":
            return saida
        if self.direcao == "entrada":
            return entrada
        return saida or entrada


class EnlaceInterRegiao:
    """
    Enlace dirigido R_j -> R_i.

    Args:
        base: Processo B(t)
        jitter: Amostrador de J
        prob_descarte: Perda benigna por mensagem
        rng: Gerador do enlace
        dos: Janelas de DoS
    """

    def __init__(self, base: ProcessoLatenciaBase, jitter: ModeloJitter, prob_descarte: float,
                 rng: np.random.Generator, dos: Optional[List[SobreposicaoDoS]] = None):
        self.base = base
        self.jitter = jitter
        self.prob_descarte = prob_descarte
        self.rng = rng
        self.dos = list(dos or [])

    def latencia(self, t: int) -> Optional[int]:
        """Latência de um envio em t, ou None se a mensagem se perde."""
        if self.prob_descarte > 0 and self.rng.random() < self.prob_descarte:
            return None
        janela = next((d for d in self.dos if d.ativa(t)), None)
        if janela is None:
            j = self.jitter.amostrar()
        else:
            j = self.jitter.amostrar(janela.p_norm_efetivo, janela.delta_efetivo)
        return max(1, self.base.valor(t) + j)

    def d_real(self, t: int) -> int:
        """Latência máxima p_norm-provável em t: B(t) + Δ/2."""
        return self.base.valor(t) + self.jitter.delta_inter // 2
