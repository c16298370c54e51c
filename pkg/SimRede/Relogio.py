"""
Modelo de relógios locais com defasagem limitada por delta_syn.
"""
from typing import Dict, Iterable

import numpy as np

from Nucleo.Identificadores import NodeId


class ModeloRelogio:
    """
    Offset fixo por nó; |offset(x) - offset(y)| <= delta_syn para todo par.

    local = real + offset
    """

    def __init__(self, offsets: Dict[NodeId, int]):
        self.offsets = dict(offsets)

    @classmethod
    def gerar(cls, nos: Iterable[NodeId], delta_syn: int, rng: np.random.Generator) -> "ModeloRelogio":
        """Offsets uniformes em [-delta_syn/2, delta_syn/2]."""
        metade = delta_syn // 2
        nos = sorted(nos)
        if metade == 0:
            return cls({no: 0 for no in nos})
        sorteados = rng.integers(-metade, metade, size=len(nos), endpoint=True)
        return cls({no: int(off) for no, off in zip(nos, sorteados)})

    @classmethod
    def sincronizado(cls, nos: Iterable[NodeId]) -> "ModeloRelogio":
        return cls({no: 0 for no in nos})

    def local_clock(self, no: NodeId, t_real: int) -> int:
        return t_real + self.offsets[no]

    def tempo_real(self, no: NodeId, t_local: int) -> int:
        return t_local - self.offsets[no]
