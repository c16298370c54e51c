"""
Parâmetros do sistema de governança de pontualidade (TGS).

Aritmética exata com Fraction: s_pen/s_awd = α·p/(1-p) sem erro de
arredondamento, e β penalidades seguidas levam um score de 1 a exatamente 0.
"""
import math
from dataclasses import dataclass
from fractions import Fraction

from Nucleo.Erros import ErroParametros


@dataclass(frozen=True)
class ParametrosTGS:
    alfa: Fraction
    beta: int
    p_norm: Fraction
    s_max: Fraction = Fraction(1)

    def __post_init__(self):
        if not 0 < self.alfa <= 1:
            raise ErroParametros(f"α fora de (0, 1]: {self.alfa}")
        if not isinstance(self.beta, int) or self.beta < 1:
            raise ErroParametros(f"β deve ser inteiro positivo: {self.beta}")
        if not 0 < self.p_norm < 1:
            raise ErroParametros(f"p_norm fora de (0, 1): {self.p_norm}")

    @classmethod
    def de_valores(cls, alfa: float, beta: int, p_norm: float) -> "ParametrosTGS":
        """Converte valores decimais (ex.: 0.999) em frações exatas."""
        if isinstance(beta, float) and not beta.is_integer():
            raise ErroParametros(f"β deve ser inteiro positivo: {beta}")
        return cls(Fraction(str(alfa)), int(beta), Fraction(str(p_norm)))

    @property
    def s_init(self) -> Fraction:
        return self.s_max

    @property
    def s_pen(self) -> Fraction:
        return self.s_max / self.beta

    @property
    def s_awd(self) -> Fraction:
        return self.s_pen * (1 - self.p_norm) / (self.alfa * self.p_norm)

    @property
    def p_longo_prazo(self) -> Fraction:
        """p': fração normal mínima de longo prazo de um nó nunca sinalizado."""
        return self.alfa * self.p_norm / (1 + (self.alfa - 1) * self.p_norm)

    def janela(self, k: int) -> Fraction:
        """w = β + k + k·α·p/(1-p): janela do limite de curto prazo."""
        return self.beta + k + k * self.alfa * self.p_norm / (1 - self.p_norm)

    def janela_inteira(self, k: int) -> int:
        return math.ceil(self.janela(k))

    @property
    def expected_increment(self) -> Fraction:
        """Incremento esperado por rodada de um par correto: s_awd·p - s_pen·(1-p)."""
        return self.s_awd * self.p_norm - self.s_pen * (1 - self.p_norm)

    def adaptativo_aplicavel(self, f: int) -> bool:
        """O atacante adaptativo nunca descarta quando β <= f+1."""
        return self.beta > f + 1
