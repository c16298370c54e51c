"""
Configuração da rede de um ensaio e montagem dos enlaces e relógios.

Cada enlace recebe um gerador próprio, derivado da SeedSequence do ensaio em
ordem fixa (regiões e pares ordenados), então a mesma semente reproduz a mesma
rede independentemente de quantos enlaces existam.
"""
import logging
from dataclasses import dataclass, field, replace
from typing import Any, Callable, Dict, Mapping, Optional, Tuple

import numpy as np

from Nucleo.Identificadores import NodeId, RegionId
from Nucleo.ModeloTamanho import ModeloTamanho
from Nucleo.Tempo import ParametrosTempo, ms
from Nucleo.Topologia import Topologia

from .Enlaces import (
    EnlaceInterRegiao, EnlaceIntraRegiao, FalhaEnlace, ModeloJitter,
    ProcessoLatenciaBase, SobreposicaoDoS,
)
from .Rede import Rede
from .Relogio import ModeloRelogio
from .Simulador import Simulador

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ConfigEnlaceInter:
    """
    Parâmetros de um enlace dirigido R_j -> R_i (durações em ns).

    Args:
        base: Valor inicial de B(t)
        passo: Desvio-padrão do passo da caminhada por intervalo
        minimo: Limite inferior de B(t) (padrão base - 5 ms)
        maximo: Limite superior de B(t) (padrão base + 5 ms)
        intervalo: Espaçamento dos nós da caminhada
        prob_descarte: Perda benigna por mensagem
        p_norm_real: p_norm efetivo do jitter, quando difere do configurado
            nos parâmetros de tempo (rede degradada)
    """
    base: int = ms(40)
    passo: int = ms(0.2)
    minimo: Optional[int] = None
    maximo: Optional[int] = None
    intervalo: int = ms(1000)
    prob_descarte: float = 0.0
    p_norm_real: Optional[float] = None

    @property
    def limites(self) -> Tuple[int, int]:
        minimo = self.minimo if self.minimo is not None else max(self.base - ms(5), 1)
        maximo = self.maximo if self.maximo is not None else self.base + ms(5)
        return minimo, maximo

    @classmethod
    def de_dict(cls, dados: Mapping[str, Any], base: Optional["ConfigEnlaceInter"] = None) -> "ConfigEnlaceInter":
        """Lê chaves em ms sobre uma configuração base."""
        cfg = base or cls()
        conversoes = {
            "base_ms": "base", "passo_ms": "passo", "minimo_ms": "minimo",
            "maximo_ms": "maximo", "intervalo_ms": "intervalo",
        }
        valores: Dict[str, Any] = {}
        for chave, valor in dados.items():
            if chave in conversoes:
                valores[conversoes[chave]] = None if valor is None else ms(valor)
            elif chave in ("prob_descarte", "p_norm_real"):
                valores[chave] = valor
        return replace(cfg, **valores)


@dataclass
class ConfigRede:
    """
    Args:
        inter_padrao: Configuração usada por todo par sem entrada própria
        inter: Configurações por par (origem, destino)
        dos: Janelas de DoS aplicadas a todos os enlaces inter-região
        falhas: Janelas de perda total (raio, queda de enlace)
        relogios_sincronizados: Desliga a defasagem de relógio
    """
    inter_padrao: ConfigEnlaceInter = field(default_factory=ConfigEnlaceInter)
    inter: Dict[Tuple[RegionId, RegionId], ConfigEnlaceInter] = field(default_factory=dict)
    dos: Tuple[SobreposicaoDoS, ...] = ()
    falhas: Tuple[FalhaEnlace, ...] = ()
    relogios_sincronizados: bool = False

    @classmethod
    def de_dict(cls, dados: Optional[Mapping[str, Any]]) -> "ConfigRede":
        """Lê a seção `rede` de um cenário já validado."""
        if not dados:
            return cls()
        padrao = ConfigEnlaceInter.de_dict(dados.get("inter", {}))
        pares = {
            (RegionId(par["origem"]), RegionId(par["destino"])): ConfigEnlaceInter.de_dict(par, padrao)
            for par in dados.get("pares", [])
        }
        dos = tuple(
            SobreposicaoDoS(ms(j["inicio_ms"]), ms(j["fim_ms"]), float(j["p_norm_efetivo"]),
                            ms(j["delta_efetivo_ms"]) if j.get("delta_efetivo_ms") is not None else None)
            for j in dados.get("dos", [])
        )
        falhas = tuple(
            FalhaEnlace(ms(f["inicio_ms"]), ms(f["fim_ms"]),
                        RegionId(f["regiao"]) if f.get("regiao") is not None else None,
                        NodeId(f["no"]) if f.get("no") is not None else None,
                        f.get("direcao", "saida"), bool(f.get("inter_apenas", False)))
            for f in dados.get("falhas_enlace", [])
        )
        return cls(padrao, pares, dos, falhas, bool(dados.get("relogios_sincronizados", False)))

    def config_par(self, origem: RegionId, destino: RegionId) -> ConfigEnlaceInter:
        return self.inter.get((origem, destino), self.inter_padrao)

    # ===== MONTAGEM =====

    def montar_rede(self, sim: Simulador, topologia: Topologia,
                    params: Callable[[RegionId], ParametrosTempo],
                    semente: np.random.SeedSequence,
                    modelo_tamanho: Optional[ModeloTamanho] = None) -> Rede:
        """
        Cria os enlaces intra-região (um por região) e inter-região (um por
        par ordenado de regiões distintas).

        Args:
            sim: Simulador do ensaio
            topologia: Regiões do ensaio
            params: RegionId -> ParametrosTempo
            semente: Sub-sequência da rede
            modelo_tamanho: Modelo de bytes para a contabilidade de banda
        """
        regioes = sorted(topologia.regioes)
        pares = [(j, i) for j in regioes for i in regioes if j != i]
        filhos = semente.spawn(len(regioes) + 2 * len(pares))
        geradores = iter(np.random.default_rng(filho) for filho in filhos)

        intra = {}
        for r in regioes:
            p = params(r)
            intra[r] = EnlaceIntraRegiao(p.d_intra, p.delta_intra, next(geradores))

        inter = {}
        for j, i in pares:
            cfg = self.config_par(j, i)
            p = params(i)
            minimo, maximo = cfg.limites
            base = ProcessoLatenciaBase(cfg.base, cfg.passo, minimo, maximo, next(geradores), cfg.intervalo)
            p_norm = cfg.p_norm_real if cfg.p_norm_real is not None else p.p_norm
            jitter = ModeloJitter(p.delta_inter, p_norm, next(geradores))
            inter[(j, i)] = EnlaceInterRegiao(base, jitter, cfg.prob_descarte, jitter.rng, list(self.dos))

        logger.debug("Rede montada: %d regiões, %d enlaces inter-região", len(regioes), len(pares))
        return Rede(sim, topologia, intra, inter, modelo_tamanho, list(self.falhas))

    def montar_relogios(self, topologia: Topologia, delta_syn: int,
                        semente: np.random.SeedSequence) -> ModeloRelogio:
        if self.relogios_sincronizados:
            return ModeloRelogio.sincronizado(topologia.nos)
        return ModeloRelogio.gerar(topologia.nos, delta_syn, np.random.default_rng(semente))
