"""
Modelo abstrato de ensaio para os experimentos longos do TGS (2,59 milhões de
invocações por ensaio).

Duas regiões com n = 2f+1 nós e um par de tarefas inter-região em cada
sentido (τ em uma região, τ' na outra), f+1 réplicas cada, atribuídas ao
acaso. Cada job é uma rodada de score: o par (emissor, receptor) é reclamado
quando o emissor perde o job (descarte do atacante ou perda benigna) ou,
com probabilidade 1 - p_real, por atraso benigno. O sistema vai para o modo
seguro quando todos os emissores de um job se perdem.

Os scores são inteiros em unidades de s_pen/a, com s_pen/s_awd = a/b
reduzida, e a simulação pula direto para o próximo job com algum evento.
"""
import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Set, Tuple

import numpy as np

from Nucleo.Erros import ErroParametros
from TGS.ParametrosTGS import ParametrosTGS

logger = logging.getLogger(__name__)

INVOCACOES_30_DIAS = 2_592_000
P_DROP_PADRAO = 8.5e-5
ATAQUES = ("agressivo", "adaptativo", "nenhum")
COMPROMISSOS = {"r1": (0,), "r2": (1,), "ambas": (0, 1)}


@dataclass(frozen=True)
class ConfigModeloTGS:
    """
    Args:
        f: Falhas toleradas por região
        tgs: Parâmetros do TGS (None: sem TGS)
        p_real: Probabilidade real de um par chegar no prazo
        p_drop: Perda benigna de um job de um emissor (todas as mensagens do job)
        invocacoes: Jobs por ensaio
        ataque: "agressivo", "adaptativo" ou "nenhum"
        compromisso: Regiões com nós comprometidos ("r1", "r2", "ambas")
    """
    f: int = 1
    tgs: Optional[ParametrosTGS] = None
    p_real: float = 0.999
    p_drop: float = P_DROP_PADRAO
    invocacoes: int = INVOCACOES_30_DIAS
    ataque: str = "agressivo"
    compromisso: str = "ambas"

    def __post_init__(self):
        if self.f < 1:
            raise ErroParametros(f"f precisa ser >= 1: {self.f}")
        if not 0 < self.p_real <= 1:
            raise ErroParametros(f"p_real fora de (0, 1]: {self.p_real}")
        if not 0 <= self.p_drop < 1:
            raise ErroParametros(f"p_drop fora de [0, 1): {self.p_drop}")
        if self.ataque not in ATAQUES:
            raise ErroParametros(f"Ataque desconhecido: {self.ataque}")
        if self.compromisso not in COMPROMISSOS:
            raise ErroParametros(f"Compromisso desconhecido: {self.compromisso}")

    @property
    def n(self) -> int:
        return 2 * self.f + 1

    @property
    def replicas(self) -> int:
        return self.f + 1

    def atacantes(self, regiao: int) -> Set[int]:
        if self.ataque == "nenhum" or regiao not in COMPROMISSOS[self.compromisso]:
            return set()
        return set(range(self.f))

    @property
    def aplicavel(self) -> bool:
        """Falso para o atacante adaptativo com β <= f+1, que nunca descarta."""
        if self.ataque != "adaptativo" or self.tgs is None:
            return True
        return self.tgs.adaptativo_aplicavel(self.f)


@dataclass(frozen=True)
class ResultadoEnsaioModelo:
    indice: int
    permaneceu_normal: bool
    job_modo_seguro: Optional[int] = None
    sinalizacoes_atacantes: int = 0
    sinalizacoes_corretos: int = 0
    descartes: int = 0
    fora_do_modelo: bool = False


def unidades_score(tgs: ParametrosTGS) -> Tuple[int, int, int]:
    """(s_pen, s_awd, s_max) como inteiros na mesma unidade."""
    razao = Fraction(tgs.s_pen) / Fraction(tgs.s_awd)
    pen, awd = razao.numerator, razao.denominator
    return pen, awd, pen * tgs.beta


# ===== ESTADO DE UM FLUXO =====

@dataclass
class _Fluxo:
    origem: int
    destino: int
    emissores: List[int]
    receptores: List[int]
    score_emissor: Dict[int, int] = field(default_factory=dict)
    score_receptor: Dict[int, int] = field(default_factory=dict)
    ultimo: int = -1
    proximo_benigno: int = 0


class _Ensaio:
    def __init__(self, config: ConfigModeloTGS, rng: np.random.Generator, indice: int):
        self.c = config
        self.rng = rng
        self.indice = indice
        self.pen, self.awd, self.smax = unidades_score(config.tgs)
        k = config.replicas
        self.premio_job = k * self.awd
        self.custo_descarte = k * self.pen
        self.contadores = {0: [0] * config.n, 1: [0] * config.n}
        self.atacantes = {0: config.atacantes(0), 1: config.atacantes(1)}
        self.sinalizacoes_atacantes = 0
        self.sinalizacoes_corretos = 0
        self.descartes = 0

        # eventos benignos: perda de cada emissor, depois atraso de cada par
        probs = np.array([config.p_drop] * k + [1 - config.p_real] * (k * k))
        self._probs = probs
        self._acumulada = 1 - np.cumprod(1 - probs)
        self._p_evento = float(self._acumulada[-1])

        self.fluxos = []
        for origem, destino in ((0, 1), (1, 0)):
            fluxo = _Fluxo(origem, destino, self._sortear(), self._sortear())
            fluxo.score_emissor = {n: self.smax for n in fluxo.emissores}
            fluxo.score_receptor = {n: self.smax for n in fluxo.receptores}
            fluxo.proximo_benigno = self._proximo_benigno(-1)
            self.fluxos.append(fluxo)

    def _sortear(self) -> List[int]:
        return sorted(int(n) for n in self.rng.choice(self.c.n, self.c.replicas, replace=False))

    def _proximo_benigno(self, j: int) -> int:
        if self._p_evento <= 0:
            return math.inf
        return j + int(self.rng.geometric(self._p_evento))

    def _eventos_benignos(self) -> Tuple[Set[int], Set[Tuple[int, int]]]:
        """Sorteia os eventos de um job condicionados a haver pelo menos um."""
        k = self.c.replicas
        u = self.rng.random() * self._p_evento
        primeiro = int(np.searchsorted(self._acumulada, u, side="right"))
        ocorreu = np.zeros(len(self._probs), dtype=bool)
        ocorreu[primeiro] = True
        resto = primeiro + 1
        ocorreu[resto:] = self.rng.random(len(self._probs) - resto) < self._probs[resto:]
        perdidos = {i for i in range(k) if ocorreu[i]}
        atrasados = {((i - k) // k, (i - k) % k) for i in np.flatnonzero(ocorreu[k:]) + k}
        return perdidos, atrasados

    # ===== ATAQUE =====

    def _descarta(self, fluxo: _Fluxo, no: int) -> bool:
        if no not in self.atacantes[fluxo.origem]:
            return False
        if self.c.ataque == "agressivo":
            return True
        return fluxo.score_emissor[no] - self.custo_descarte > 0

    def _proximo_ataque(self, fluxo: _Fluxo, j: int) -> float:
        """Próximo job em que algum atacante emissor descarta, dado o estado após o job j."""
        proximo = math.inf
        for no in fluxo.emissores:
            if no not in self.atacantes[fluxo.origem]:
                continue
            if self.c.ataque == "agressivo":
                return j + 1
            if self.smax <= self.custo_descarte:
                continue
            score = fluxo.score_emissor[no]
            espera = 0 if score > self.custo_descarte else (self.custo_descarte - score) // self.premio_job + 1
            proximo = min(proximo, j + 1 + espera)
        return proximo

    # ===== RODADA =====

    def _premiar_ate(self, fluxo: _Fluxo, j: int) -> None:
        limpos = j - 1 - fluxo.ultimo
        if limpos <= 0:
            return
        ganho = limpos * self.premio_job
        for scores in (fluxo.score_emissor, fluxo.score_receptor):
            for no in scores:
                scores[no] = min(self.smax, scores[no] + ganho)

    def _substituir(self, fluxo: _Fluxo, regiao: int, replicas: List[int], scores: Dict[int, int],
                    no: int) -> None:
        contadores = self.contadores[regiao]
        candidatos = [n for n in range(self.c.n) if n not in replicas]
        novo = min(candidatos, key=lambda n: (contadores[n], n))
        contadores[no] += 1
        if no in self.atacantes[regiao]:
            self.sinalizacoes_atacantes += 1
        else:
            self.sinalizacoes_corretos += 1
        replicas[replicas.index(no)] = novo
        replicas.sort()
        del scores[no]
        scores[novo] = self.smax

    def processar(self, fluxo: _Fluxo, j: int) -> bool:
        """Processa o job j do fluxo. Devolve False se o sistema entrou no modo seguro."""
        self._premiar_ate(fluxo, j)
        perdidos: Set[int] = set()
        atrasados: Set[Tuple[int, int]] = set()
        if j == fluxo.proximo_benigno:
            indices, pares = self._eventos_benignos()
            perdidos = {fluxo.emissores[i] for i in indices}
            atrasados = {(fluxo.emissores[a], fluxo.receptores[b]) for a, b in pares}
            fluxo.proximo_benigno = self._proximo_benigno(j)
        for no in fluxo.emissores:
            if self._descarta(fluxo, no):
                perdidos.add(no)
                self.descartes += 1
        fluxo.ultimo = j
        if perdidos and perdidos >= set(fluxo.emissores):
            return False

        for s in fluxo.emissores:
            for r in fluxo.receptores:
                if s in perdidos or (s, r) in atrasados:
                    fluxo.score_emissor[s] -= self.pen
                    fluxo.score_receptor[r] -= self.pen
                else:
                    fluxo.score_emissor[s] = min(self.smax, fluxo.score_emissor[s] + self.awd)
                    fluxo.score_receptor[r] = min(self.smax, fluxo.score_receptor[r] + self.awd)

        for no in [n for n in fluxo.emissores if fluxo.score_emissor[n] <= 0]:
            self._substituir(fluxo, fluxo.origem, fluxo.emissores, fluxo.score_emissor, no)
        for no in [n for n in fluxo.receptores if fluxo.score_receptor[n] <= 0]:
            self._substituir(fluxo, fluxo.destino, fluxo.receptores, fluxo.score_receptor, no)
        return True

    def executar(self) -> ResultadoEnsaioModelo:
        ataques = [self._proximo_ataque(f, -1) for f in self.fluxos]
        while True:
            proximos = [min(f.proximo_benigno, a) for f, a in zip(self.fluxos, ataques)]
            i = int(np.argmin(proximos))
            j = proximos[i]
            if j >= self.c.invocacoes:
                return self._resultado(True, None)
            fluxo = self.fluxos[i]
            if not self.processar(fluxo, int(j)):
                return self._resultado(False, int(j))
            ataques[i] = self._proximo_ataque(fluxo, int(j))

    def _resultado(self, normal: bool, job: Optional[int]) -> ResultadoEnsaioModelo:
        return ResultadoEnsaioModelo(self.indice, normal, job, self.sinalizacoes_atacantes,
                                     self.sinalizacoes_corretos, self.descartes)


# ===== SEM TGS =====

def _ensaio_sem_tgs(config: ConfigModeloTGS, rng: np.random.Generator, indice: int) -> ResultadoEnsaioModelo:
    """
    Sem TGS os atacantes nunca são substituídos: cada fluxo depende só dos
    emissores corretos e o primeiro job com todos eles perdidos é geométrico.
    """
    primeiro = math.inf
    for origem in (0, 1):
        emissores = rng.choice(config.n, config.replicas, replace=False)
        corretos = sum(1 for n in emissores if int(n) not in config.atacantes(origem))
        rng.choice(config.n, config.replicas, replace=False)  # receptores, só pela sequência de sorteios
        p_falha = config.p_drop ** corretos
        if p_falha > 0:
            primeiro = min(primeiro, int(rng.geometric(p_falha)) - 1)
    if primeiro < config.invocacoes:
        return ResultadoEnsaioModelo(indice, False, int(primeiro))
    return ResultadoEnsaioModelo(indice, True)


def ensaio_modelo_tgs(config: ConfigModeloTGS, semente, indice: int = 0) -> ResultadoEnsaioModelo:
    """
    Um ensaio do modelo abstrato.

    Args:
        config: ConfigModeloTGS
        semente: Inteiro ou numpy SeedSequence do ensaio
        indice: Índice do ensaio (ordenação dos resultados)

    Returns:
        ResultadoEnsaioModelo
    """
    rng = np.random.default_rng(semente)
    if config.tgs is None:
        return _ensaio_sem_tgs(config, rng, indice)
    return _Ensaio(config, rng, indice).executar()


def prob_sem_tgs(config: ConfigModeloTGS) -> float:
    """Probabilidade exata de permanecer normal sem TGS (média sobre as atribuições)."""
    n, k = config.n, config.replicas
    total = math.comb(n, k)
    prob = 1.0
    for origem in (0, 1):
        a = len(config.atacantes(origem))
        fluxo = 0.0
        for comprometidos in range(0, min(a, k) + 1):
            peso = math.comb(a, comprometidos) * math.comb(n - a, k - comprometidos) / total
            corretos = k - comprometidos
            fluxo += peso * (1 - config.p_drop ** corretos) ** config.invocacoes
        prob *= fluxo
    return prob
