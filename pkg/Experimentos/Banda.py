"""
Varredura de banda por número de regiões: um ensaio sem ataque por
contagem, média de kB/s por nó (intra e inter) e regressão linear.
"""
import csv
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple

from scipy.stats import linregress

from Sistema.MontadorSistema import SistemaGeoShield, account_bandwidth

from .Cenario import Cenario

logger = logging.getLogger(__name__)

REGIOES_PADRAO = (5, 10, 20, 50)
# kB/s por nó (intra, inter) medidos na simulação ferroviária de referência
REFERENCIA_KB_S = {5: (6.25, 7.28), 10: (12.49, 14.54), 20: (24.90, 29.01), 50: (61.95, 72.00)}
FATOR_TOLERANCIA = 3.0


def cenario_banda(regioes: int, base: Optional[Mapping[str, Any]] = None, f: int = 1,
                  duracao_ms: float = 5_000) -> Dict[str, Any]:
    """
    Cenário em anel: a região r alimenta a r+1 com um fluxo de 1 s.

    `tempos`, `tamanhos`, `rede` e `assinatura` vêm de `base` quando houver.
    """
    base = dict(base or {})
    fluxos = [
        {"nome": f"anel{r}", "tarefa_origem": 2 * r, "tarefa_destino": 2 * r + 1, "regiao_origem": r,
         "regiao_destino": (r + 1) % regioes, "periodo_ms": 1000, "prazo_ms": 50}
        for r in range(regioes)
    ]
    dados: Dict[str, Any] = {
        "nome": f"banda-{regioes}",
        "semente": int(base.get("semente", 0)),
        "duracao_ms": duracao_ms,
        "topologia": {"uniforme": {"regioes": regioes, "f": f}, "fluxos": fluxos},
    }
    for chave in ("tempos", "tamanhos", "rede", "assinatura"):
        if chave in base:
            dados[chave] = base[chave]
    return dados


@dataclass(frozen=True)
class LinhaBanda:
    regioes: int
    intra_kb_s: float
    inter_kb_s: float

    @property
    def referencia(self) -> Optional[Tuple[float, float]]:
        return REFERENCIA_KB_S.get(self.regioes)

    @property
    def dentro_da_tolerancia(self) -> Optional[bool]:
        """Taxa inter dentro de 3x da referência, quando há referência."""
        if self.referencia is None:
            return None
        razao = self.inter_kb_s / self.referencia[1] if self.referencia[1] else float("inf")
        return 1 / FATOR_TOLERANCIA <= razao <= FATOR_TOLERANCIA


@dataclass
class RelatorioBanda:
    linhas: List[LinhaBanda] = field(default_factory=list)

    def regressao(self, escopo: str = "inter") -> Tuple[float, float, float]:
        """(inclinação kB/s por região, intercepto, R²)."""
        if len(self.linhas) < 2:
            return (0.0, 0.0, 0.0)
        x = [linha.regioes for linha in self.linhas]
        y = [getattr(linha, f"{escopo}_kb_s") for linha in self.linhas]
        ajuste = linregress(x, y)
        return (float(ajuste.slope), float(ajuste.intercept), float(ajuste.rvalue) ** 2)

    @property
    def linear(self) -> bool:
        return self.regressao("inter")[2] >= 0.99

    def exportar_csv(self, caminho: Path) -> Path:
        caminho = Path(caminho)
        caminho.parent.mkdir(parents=True, exist_ok=True)
        with open(caminho, "w", newline="", encoding="utf-8") as arquivo:
            escritor = csv.writer(arquivo, lineterminator="\n")
            escritor.writerow(["regions", "intra_kb_s", "inter_kb_s", "ref_intra_kb_s", "ref_inter_kb_s",
                               "within_3x"])
            for linha in self.linhas:
                ref = linha.referencia or ("", "")
                dentro = linha.dentro_da_tolerancia
                escritor.writerow([linha.regioes, f"{linha.intra_kb_s:.3f}", f"{linha.inter_kb_s:.3f}",
                                   ref[0], ref[1], "" if dentro is None else int(dentro)])
            for escopo in ("intra", "inter"):
                inclinacao, intercepto, r2 = self.regressao(escopo)
                escritor.writerow([f"fit_{escopo}", f"{inclinacao:.4f}", f"{intercepto:.4f}", f"{r2:.6f}", "", ""])
        return caminho


def medir_banda(dados: Mapping[str, Any], semente: Optional[int] = None) -> LinhaBanda:
    """Um ensaio sem ataque e a média por nó."""
    cenario = Cenario.de_dict(dados)
    sistema = SistemaGeoShield(cenario, semente=semente, registrar_trace=False, registrar_scores=False)
    banda = account_bandwidth(sistema.executar())
    linha = LinhaBanda(len(cenario.topologia.regioes), banda.intra_kb_s, banda.inter_kb_s)
    logger.info("%d regiões: intra %.2f kB/s, inter %.2f kB/s por nó",
                linha.regioes, linha.intra_kb_s, linha.inter_kb_s)
    return linha


def scaling_report(regioes: Sequence[int] = REGIOES_PADRAO, base: Optional[Mapping[str, Any]] = None,
                   f: int = 1, duracao_ms: float = 5_000, semente: Optional[int] = None) -> RelatorioBanda:
    """Mede cada contagem de regiões e ajusta a reta kB/s x regiões."""
    relatorio = RelatorioBanda()
    for quantidade in sorted(regioes):
        relatorio.linhas.append(medir_banda(cenario_banda(quantidade, base, f, duracao_ms), semente))
    inclinacao, _, r2 = relatorio.regressao("inter")
    logger.info("Banda inter-região: %.3f kB/s por região adicional, R²=%.4f", inclinacao, r2)
    return relatorio


def scaling_report_cenario(cenario: Cenario, semente: Optional[int] = None) -> RelatorioBanda:
    """Varredura descrita na seção `experimento` de um cenário do tipo banda."""
    exp = cenario.experimento
    return scaling_report(
        exp.get("regioes", REGIOES_PADRAO), cenario.bruto, int(exp.get("f", 1)),
        float(exp.get("duracao_ms", 5_000)), cenario.semente if semente is None else semente,
    )
