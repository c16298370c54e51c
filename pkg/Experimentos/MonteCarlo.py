"""
Execução Monte Carlo: ensaios independentes em paralelo, intervalo de Wilson
e as varreduras do TGS.

Cada ensaio recebe um filho de SeedSequence(semente) pelo índice, então o
resultado de um ensaio não depende da ordem de execução nem do número de
processos. Os workers são funções de módulo que recebem dicionários
(os cenários carregam closures e não são serializáveis).
"""
import csv
import logging
import multiprocessing
import time
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Callable, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np
from scipy.stats import binomtest

from config_logging import configurar_processo_ensaio
from Recuperacao.CenarioFalhas import ErroOrcamentoFalhas
from TGS.ParametrosTGS import ParametrosTGS

from .ModeloTGS import (
    COMPROMISSOS,
    INVOCACOES_30_DIAS,
    P_DROP_PADRAO,
    ConfigModeloTGS,
    ResultadoEnsaioModelo,
    ensaio_modelo_tgs,
)
from .Propriedades import ChecagemEnsaio

logger = logging.getLogger(__name__)

# Abaixo disso os ensaios rodam no processo atual
LIMITE_SEQUENCIAL = 50
CONFIANCA = 0.95


def wilson_ci(sucessos: int, total: int, confianca: float = CONFIANCA) -> Tuple[float, float]:
    """Intervalo de Wilson para uma proporção; (0, 1) sem ensaios."""
    if total <= 0:
        return (0.0, 1.0)
    ic = binomtest(sucessos, total).proportion_ci(confidence_level=confianca, method="wilson")
    return (float(ic.low), float(ic.high))


def sementes_ensaios(semente: int, ensaios: int) -> List[int]:
    """Uma semente inteira por ensaio, derivada de SeedSequence(semente).spawn."""
    filhos = np.random.SeedSequence(semente).spawn(ensaios)
    return [int(filho.generate_state(1, dtype=np.uint64)[0]) for filho in filhos]


@dataclass
class ResultadoMonteCarlo:
    """
    Args:
        ensaios: Resultados por ensaio, em ordem de índice
        rotulo: Descrição da configuração
        duracao_s: Tempo de parede
    """
    ensaios: list = field(default_factory=list)
    rotulo: str = ""
    duracao_s: float = 0.0

    @property
    def validos(self) -> list:
        return [e for e in self.ensaios if not e.fora_do_modelo]

    @property
    def fora_do_modelo(self) -> int:
        return len(self.ensaios) - len(self.validos)

    @property
    def sucessos(self) -> int:
        return sum(1 for e in self.validos if e.permaneceu_normal)

    @property
    def probabilidade(self) -> float:
        validos = len(self.validos)
        return self.sucessos / validos if validos else float("nan")

    @property
    def ic(self) -> Tuple[float, float]:
        return wilson_ci(self.sucessos, len(self.validos))

    def contem(self, valor: float) -> bool:
        baixo, alto = self.ic
        return baixo <= valor <= alto

    def resumo(self) -> str:
        baixo, alto = self.ic
        return (f"{self.rotulo}: {self.probabilidade:.4f} [{baixo:.4f}, {alto:.4f}] "
                f"({self.sucessos}/{len(self.validos)}, {self.fora_do_modelo} fora do modelo)")

    def exportar_csv(self, caminho: Path) -> Path:
        """Uma linha por ensaio; safe_mode é o job (modelo) ou o instante em ns (protocolo)."""
        caminho = Path(caminho)
        caminho.parent.mkdir(parents=True, exist_ok=True)
        with open(caminho, "w", newline="", encoding="utf-8") as arquivo:
            escritor = csv.writer(arquivo, lineterminator="\n")
            escritor.writerow(["trial", "stayed_normal", "out_of_model", "safe_mode"])
            for e in self.ensaios:
                modo_seguro = getattr(e, "job_modo_seguro", None)
                if modo_seguro is None:
                    modo_seguro = getattr(e, "t_modo_seguro", None)
                escritor.writerow([e.indice, int(e.permaneceu_normal), int(e.fora_do_modelo),
                                   "" if modo_seguro is None else modo_seguro])
        return caminho


def _executar(worker: Callable[[dict], Any], tarefas: List[dict], processos: Optional[int]) -> list:
    """Roda os workers e devolve os resultados ordenados pelo índice."""
    resultados = []
    if len(tarefas) <= LIMITE_SEQUENCIAL or processos == 1:
        for i, tarefa in enumerate(tarefas):
            resultados.append(worker(tarefa))
            if (i + 1) % 10 == 0:
                logger.debug("[%d/%d] ensaios concluídos", i + 1, len(tarefas))
    else:
        processos = processos or max(1, multiprocessing.cpu_count() - 1)
        logger.info("Monte Carlo: %d ensaios em %d processos", len(tarefas), processos)
        with multiprocessing.Pool(processos, initializer=configurar_processo_ensaio) as pool:
            for i, resultado in enumerate(pool.imap_unordered(worker, tarefas)):
                resultados.append(resultado)
                if (i + 1) % 100 == 0:
                    logger.info("[%d/%d] ensaios concluídos", i + 1, len(tarefas))
    resultados.sort(key=lambda r: r.indice)
    return resultados


# ===== MODELO ABSTRATO =====

def _worker_modelo(args: dict) -> ResultadoEnsaioModelo:
    return ensaio_modelo_tgs(args["config"], args["semente"], args["indice"])


def run_model_trials(config: ConfigModeloTGS, ensaios: int, semente: int = 0,
                     processos: Optional[int] = None, rotulo: str = "") -> ResultadoMonteCarlo:
    """
    Ensaios do modelo abstrato de 30 dias.

    Raises:
        ValueError: ensaios < 1
    """
    if ensaios < 1:
        raise ValueError("É preciso ao menos um ensaio")
    inicio = time.perf_counter()
    tarefas = [{"config": config, "semente": s, "indice": i}
               for i, s in enumerate(sementes_ensaios(semente, ensaios))]
    resultado = ResultadoMonteCarlo(_executar(_worker_modelo, tarefas, processos),
                                    rotulo or _rotulo_modelo(config), time.perf_counter() - inicio)
    logger.info("%s em %.1fs", resultado.resumo(), resultado.duracao_s)
    return resultado


def _rotulo_modelo(config: ConfigModeloTGS) -> str:
    if config.tgs is None:
        return f"f={config.f} p={config.p_real} sem TGS"
    return (f"f={config.f} p={config.p_real} α={config.tgs.alfa} β={config.tgs.beta} "
            f"{config.ataque}/{config.compromisso}")


def config_modelo(cenario, **alteracoes) -> ConfigModeloTGS:
    """
    ConfigModeloTGS a partir da seção `experimento` de um cenário.

    `experimento.tgs: false` desliga o TGS mesmo com a seção `tgs` presente;
    `p_norm_real` é a probabilidade efetiva da rede (difere de p_norm sob DoS).
    """
    exp = cenario.experimento
    f = int(exp.get("f", cenario.topologia.regiao(0).f if 0 in cenario.topologia.regioes else 1))
    p_norm = float(exp.get("p_norm", cenario.tempos.p_norm))
    tgs = cenario.tgs if exp.get("tgs", True) else None
    if tgs is not None and "p_norm" in exp:
        tgs = ParametrosTGS.de_valores(tgs.alfa, tgs.beta, p_norm)
    config = ConfigModeloTGS(
        f=f,
        tgs=tgs,
        p_real=float(exp.get("p_norm_real", p_norm)),
        p_drop=float(exp.get("p_drop", P_DROP_PADRAO)),
        invocacoes=int(exp.get("invocacoes", INVOCACOES_30_DIAS)),
        ataque=(exp.get("ataques") or ["agressivo"])[0],
        compromisso=(exp.get("compromisso") or ["ambas"])[0],
    )
    return replace(config, **alteracoes)


# ===== PROTOCOLO COMPLETO =====

@dataclass
class ResultadoEnsaioProtocolo:
    """Resumo serializável de um ensaio do protocolo completo."""
    indice: int
    semente: int
    permaneceu_normal: bool
    t_modo_seguro: Optional[int] = None
    fora_do_modelo: bool = False
    checagem: ChecagemEnsaio = field(default_factory=ChecagemEnsaio)
    bytes_enviados: Dict[int, Dict[str, int]] = field(default_factory=dict)


def ensaio_protocolo(dados: Mapping[str, Any], semente: int, indice: int = 0) -> ResultadoEnsaioProtocolo:
    """Monta o cenário a partir do documento, roda um ensaio e aplica as checagens."""
    from Sistema.MontadorSistema import SistemaGeoShield

    from .Cenario import Cenario
    from .Propriedades import verificar_ensaio

    cenario = Cenario.de_dict(dados)
    sistema = SistemaGeoShield(cenario, semente=semente, registrar_trace=False, registrar_scores=False)
    try:
        resultado = sistema.executar()
    except ErroOrcamentoFalhas as e:
        logger.warning("Ensaio %d fora do modelo: %s", indice, e)
        return ResultadoEnsaioProtocolo(indice, semente, False, fora_do_modelo=True)
    if resultado.coletor.fora_do_modelo:
        return ResultadoEnsaioProtocolo(indice, semente, False, fora_do_modelo=True)
    return ResultadoEnsaioProtocolo(
        indice, semente, resultado.permaneceu_normal, resultado.t_modo_seguro, False,
        verificar_ensaio(resultado), resultado.bytes_enviados,
    )


def _worker_protocolo(args: dict) -> ResultadoEnsaioProtocolo:
    return ensaio_protocolo(args["dados"], args["semente"], args["indice"])


def run_protocol_trials(dados: Mapping[str, Any], ensaios: int, semente: int = 0,
                        processos: Optional[int] = None) -> List[ResultadoEnsaioProtocolo]:
    if ensaios < 1:
        raise ValueError("É preciso ao menos um ensaio")
    tarefas = [{"dados": dict(dados), "semente": s, "indice": i}
               for i, s in enumerate(sementes_ensaios(semente, ensaios))]
    return _executar(_worker_protocolo, tarefas, processos)


def run_monte_carlo(cenario, ensaios: Optional[int] = None, semente: Optional[int] = None,
                    processos: Optional[int] = None) -> ResultadoMonteCarlo:
    """
    Probabilidade de permanecer no modo normal, com IC de Wilson a 95%.

    `experimento.tipo == "protocolo"` roda o protocolo completo sobre o
    cenário; os demais tipos usam o modelo abstrato de invocações.

    Raises:
        ValueError: ensaios < 1
    """
    exp = cenario.experimento
    ensaios = int(ensaios or exp.get("ensaios") or cenario.ensaios)
    semente = cenario.semente if semente is None else semente
    processos = processos or exp.get("processos")
    if exp.get("tipo") == "protocolo":
        inicio = time.perf_counter()
        resultado = ResultadoMonteCarlo(run_protocol_trials(cenario.bruto, ensaios, semente, processos),
                                        cenario.nome, 0.0)
        resultado.duracao_s = time.perf_counter() - inicio
        logger.info("%s em %.1fs", resultado.resumo(), resultado.duracao_s)
        return resultado
    return run_model_trials(config_modelo(cenario), ensaios, semente, processos, cenario.nome)


# ===== VARREDURA DO TGS =====

@dataclass
class GradeTGS:
    alfas: List[float]
    betas: List[int]
    ataque: str
    celulas: Dict[Tuple[float, int], Optional[ResultadoMonteCarlo]] = field(default_factory=dict)

    def probabilidade(self, alfa: float, beta: int) -> Optional[float]:
        celula = self.celulas.get((alfa, beta))
        return None if celula is None else celula.probabilidade

    def exportar_csv(self, caminho: Path) -> Path:
        """Grade α x β; N/A onde o ataque adaptativo não se aplica."""
        caminho = Path(caminho)
        caminho.parent.mkdir(parents=True, exist_ok=True)
        with open(caminho, "w", newline="", encoding="utf-8") as arquivo:
            escritor = csv.writer(arquivo, lineterminator="\n")
            escritor.writerow(["alpha\\beta", *self.betas])
            for alfa in self.alfas:
                linha = [alfa]
                for beta in self.betas:
                    p = self.probabilidade(alfa, beta)
                    linha.append("N/A" if p is None else f"{p:.4f}")
                escritor.writerow(linha)
        return caminho

    def exportar_detalhado(self, caminho: Path) -> Path:
        """Uma linha por célula com contagens e IC."""
        caminho = Path(caminho)
        caminho.parent.mkdir(parents=True, exist_ok=True)
        with open(caminho, "w", newline="", encoding="utf-8") as arquivo:
            escritor = csv.writer(arquivo, lineterminator="\n")
            escritor.writerow(["alpha", "beta", "attack", "trials", "stayed_normal", "out_of_model",
                               "probability", "ci_low", "ci_high"])
            for (alfa, beta), celula in sorted(self.celulas.items()):
                if celula is None:
                    escritor.writerow([alfa, beta, self.ataque, 0, "", "", "N/A", "", ""])
                    continue
                baixo, alto = celula.ic
                escritor.writerow([alfa, beta, self.ataque, len(celula.validos), celula.sucessos,
                                   celula.fora_do_modelo, f"{celula.probabilidade:.4f}",
                                   f"{baixo:.4f}", f"{alto:.4f}"])
        return caminho


def sweep_tgs(cenario, alfas: Sequence[float], betas: Sequence[int], ataque: str = "agressivo",
              ensaios: Optional[int] = None, semente: Optional[int] = None,
              processos: Optional[int] = None) -> GradeTGS:
    """
    Uma célula Monte Carlo por (α, β).

    Raises:
        ValueError: Grade vazia
    """
    if not alfas or not betas:
        raise ValueError("A grade de α e β não pode ser vazia")
    exp = cenario.experimento
    ensaios = int(ensaios or exp.get("ensaios") or cenario.ensaios)
    semente = cenario.semente if semente is None else semente
    p_norm = float(exp.get("p_norm", cenario.tempos.p_norm))
    base = config_modelo(cenario, ataque=ataque)
    grade = GradeTGS(list(alfas), [int(b) for b in betas], ataque)
    for alfa in alfas:
        for beta in betas:
            tgs = ParametrosTGS.de_valores(alfa, int(beta), p_norm)
            config = replace(base, tgs=tgs)
            if not config.aplicavel:
                logger.info("α=%s β=%s: ataque adaptativo não se aplica (β <= f+1)", alfa, beta)
                grade.celulas[(alfa, int(beta))] = None
                continue
            grade.celulas[(alfa, int(beta))] = run_model_trials(config, ensaios, semente, processos)
    return grade


# ===== SUÍTE DE DoS =====

@dataclass
class ResultadoSuiteDoS:
    por_cenario: Dict[Tuple[str, str], ResultadoMonteCarlo] = field(default_factory=dict)

    @property
    def agregado(self) -> ResultadoMonteCarlo:
        ensaios = [e for r in self.por_cenario.values() for e in r.ensaios]
        return ResultadoMonteCarlo(ensaios, "DoS (6 cenários)",
                                   sum(r.duracao_s for r in self.por_cenario.values()))

    def exportar_csv(self, caminho: Path) -> Path:
        caminho = Path(caminho)
        caminho.parent.mkdir(parents=True, exist_ok=True)
        with open(caminho, "w", newline="", encoding="utf-8") as arquivo:
            escritor = csv.writer(arquivo, lineterminator="\n")
            escritor.writerow(["attack", "compromised", "trials", "stayed_normal", "probability",
                               "ci_low", "ci_high"])
            linhas = list(self.por_cenario.items()) + [(("todos", "todos"), self.agregado)]
            for (ataque, compromisso), r in linhas:
                baixo, alto = r.ic
                escritor.writerow([ataque, compromisso, len(r.validos), r.sucessos,
                                   f"{r.probabilidade:.4f}", f"{baixo:.4f}", f"{alto:.4f}"])
        return caminho


def suite_dos(cenario, ensaios: Optional[int] = None, semente: Optional[int] = None,
              processos: Optional[int] = None, alfa: float = 0.01, beta: int = 5) -> ResultadoSuiteDoS:
    """
    {agressivo, adaptativo} x {r1, r2, ambas} com p_norm configurado acima do
    real (a rede sob DoS entrega no prazo com p_norm_real).
    """
    exp = cenario.experimento
    ensaios = int(ensaios or exp.get("ensaios") or cenario.ensaios)
    semente = cenario.semente if semente is None else semente
    p_norm = float(exp.get("p_norm", 0.999))
    if cenario.tgs is not None:
        alfa, beta = float(cenario.tgs.alfa), cenario.tgs.beta
    tgs = ParametrosTGS.de_valores(alfa, beta, p_norm)
    base = config_modelo(cenario, tgs=tgs, p_real=float(exp.get("p_norm_real", 0.99)))
    suite = ResultadoSuiteDoS()
    for i, (ataque, compromisso) in enumerate(
            (a, c) for a in ("agressivo", "adaptativo") for c in COMPROMISSOS):
        config = replace(base, ataque=ataque, compromisso=compromisso)
        suite.por_cenario[(ataque, compromisso)] = run_model_trials(config, ensaios, semente + i, processos)
    logger.info(suite.agregado.resumo())
    return suite
