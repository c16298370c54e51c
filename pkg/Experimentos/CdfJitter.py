"""
CDF empírica de latências inter-região e estimativa de Δ_inter.

As amostras vêm de um CSV (coluna `latency_ms` ou `latency_ns`, como o
chegadas.csv de um ensaio) ou do modelo de enlace configurado no cenário.
Δ_inter no percentil pedido é o percentil de |L[i+1] - L[i]| entre envios
consecutivos.
"""
import csv
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional

import numpy as np

from Nucleo.Tempo import NS_POR_MS, ms
from SimRede.Enlaces import ModeloJitter, ProcessoLatenciaBase
from validadores import ErroCenario

logger = logging.getLogger(__name__)

PONTOS_CDF = 200


def ler_amostras_csv(caminho: Path, coluna: Optional[str] = None) -> np.ndarray:
    """
    Latências em ms, na ordem do arquivo.

    Raises:
        ErroCenario: Arquivo ausente, sem coluna de latência ou sem amostras
    """
    caminho = Path(caminho)
    try:
        with open(caminho, "r", encoding="utf-8", newline="") as arquivo:
            leitor = csv.DictReader(arquivo)
            campos = leitor.fieldnames or []
            if coluna is None:
                coluna = next((c for c in ("latency_ms", "latency_ns") if c in campos), None)
            if coluna is None or coluna not in campos:
                raise ErroCenario(f"{caminho}: coluna de latência ausente (colunas: {', '.join(campos)})")
            valores = [float(linha[coluna]) for linha in leitor if linha.get(coluna) not in (None, "")]
    except FileNotFoundError:
        raise ErroCenario(f"Arquivo de latências não encontrado: {caminho}") from None
    except ValueError as e:
        raise ErroCenario(f"{caminho}: valor de latência inválido ({e})") from e
    if not valores:
        raise ErroCenario(f"{caminho}: nenhuma amostra de latência")
    amostras = np.asarray(valores, dtype=float)
    if coluna.endswith("_ns"):
        amostras = amostras / NS_POR_MS
    return amostras


def amostrar_modelo(cenario, quantidade: int = 100_000, origem: int = 0, destino: int = 1,
                    espacamento_ms: float = 1.0, semente: Optional[int] = None) -> np.ndarray:
    """Latências (ms) do enlace origem -> destino do cenário, um envio por espaçamento."""
    cfg = cenario.rede.config_par(origem, destino)
    p = cenario.parametros_regiao(destino)
    sementes = np.random.SeedSequence(cenario.semente if semente is None else semente).spawn(2)
    minimo, maximo = cfg.limites
    base = ProcessoLatenciaBase(cfg.base, cfg.passo, minimo, maximo, np.random.default_rng(sementes[0]),
                                cfg.intervalo)
    jitter = ModeloJitter(p.delta_inter, cfg.p_norm_real if cfg.p_norm_real is not None else p.p_norm,
                          np.random.default_rng(sementes[1]))
    passo = ms(espacamento_ms)
    bases = np.array([base.valor(i * passo) for i in range(quantidade)], dtype=np.int64)
    return (bases + jitter.amostrar_vetor(quantidade)) / NS_POR_MS


def fracao_pares_dentro(delta_inter: int, p_norm: float, pares: int, semente: int = 0) -> float:
    """Fração de pares de jitter independentes com |J1 - J2| < Δ_inter."""
    modelo = ModeloJitter(delta_inter, p_norm, np.random.default_rng(semente))
    a = modelo.amostrar_vetor(pares)
    b = modelo.amostrar_vetor(pares)
    return float(np.mean(np.abs(a - b) < delta_inter))


@dataclass
class TabelaCdf:
    """
    Args:
        latencias: Pontos da CDF (ms), crescentes
        probabilidades: F(latência) em cada ponto
        percentil: Percentil usado para Δ_inter (0-100)
        delta_inter_ms: Δ_inter estimado
        amostras: Número de amostras
    """
    latencias: np.ndarray
    probabilidades: np.ndarray
    percentil: float
    delta_inter_ms: float
    amostras: int

    def exportar_csv(self, caminho: Path) -> Path:
        caminho = Path(caminho)
        caminho.parent.mkdir(parents=True, exist_ok=True)
        with open(caminho, "w", newline="", encoding="utf-8") as arquivo:
            escritor = csv.writer(arquivo, lineterminator="\n")
            escritor.writerow(["latency_ms", "cdf"])
            for latencia, prob in zip(self.latencias, self.probabilidades):
                escritor.writerow([f"{latencia:.6f}", f"{prob:.6f}"])
        return caminho

    def linhas_resumo(self) -> List[str]:
        return [
            f"amostras: {self.amostras}",
            f"mediana_ms: {float(np.interp(0.5, self.probabilidades, self.latencias)):.6f}",
            f"percentil: {self.percentil}",
            f"delta_inter_ms: {self.delta_inter_ms:.6f}",
        ]


def cdf_empirica(amostras: np.ndarray, percentil: float = 99.9, pontos: int = PONTOS_CDF) -> TabelaCdf:
    """
    Raises:
        ValueError: Menos de duas amostras ou percentil fora de (0, 100]
    """
    amostras = np.asarray(amostras, dtype=float)
    if amostras.size < 2:
        raise ValueError("São precisas ao menos duas amostras")
    if not 0 < percentil <= 100:
        raise ValueError(f"Percentil fora de (0, 100]: {percentil}")
    ordenadas = np.sort(amostras)
    indices = np.unique(np.linspace(0, ordenadas.size - 1, min(pontos, ordenadas.size)).round().astype(int))
    probabilidades = (indices + 1) / ordenadas.size
    delta = float(np.percentile(np.abs(np.diff(amostras)), percentil))
    logger.info("CDF com %d amostras: Δ_inter (p%.1f) = %.3f ms", amostras.size, percentil, delta)
    return TabelaCdf(ordenadas[indices], probabilidades, percentil, delta, int(amostras.size))
