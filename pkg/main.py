"""
Linha de comando do simulador GeoShield.

Subcomandos: run, monte-carlo, sweep, dos, railway, grid, jitter-cdf,
validate, properties, bandwidth. Toda saída depende só do arquivo de cenário,
das opções e da semente.

Códigos de saída: 0 sucesso, 1 erro de cenário/simulação ou checagem
reprovada, 2 uso inválido (argparse).
"""
import argparse
import sys
from pathlib import Path
from typing import List, Optional

# Adiciona o diretório raiz ao path para imports
ROOT_DIR = Path(__file__).resolve().parent
sys.path.insert(0, str(ROOT_DIR))

from config_logging import ConfiguradorLog, obter_logger
from Nucleo.Erros import ErroGeoShield
from utils import get_cenario_path, get_resultados_dir

logger = obter_logger("SimuladorGeoShield")

ATAQUES_CLI = {"aggressive": "agressivo", "adaptive": "adaptativo", "none": "nenhum",
               "agressivo": "agressivo", "adaptativo": "adaptativo", "nenhum": "nenhum"}


def _lista_float(texto: str) -> List[float]:
    try:
        return [float(x) for x in texto.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"lista de números inválida: {texto}") from None


def _lista_int(texto: str) -> List[int]:
    try:
        return [int(x) for x in texto.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"lista de inteiros inválida: {texto}") from None


def _carregar(nome: str):
    from Experimentos.Cenario import carregar_cenario

    return carregar_cenario(get_cenario_path(nome))


def _saida(args: argparse.Namespace, padrao: str) -> Path:
    return Path(args.out) if args.out else get_resultados_dir() / padrao


def _semente(args: argparse.Namespace, cenario) -> int:
    return cenario.semente if args.seed is None else args.seed


# ===== SUBCOMANDOS =====

def cmd_run(args: argparse.Namespace) -> int:
    """Um ensaio do protocolo completo, ou o experimento/estudo descrito no cenário."""
    cenario = _carregar(args.scenario)
    tipo = cenario.experimento.get("tipo")
    if cenario.estudo_caso:
        estudo = cenario.estudo_caso["tipo"]
        if estudo == "rede_eletrica":
            return cmd_grid(args)
        args.study = "wenzhou" if estudo == "wenzhou" else "ma-attack"
        args.protected = cenario.estudo_caso.get("protegido")
        args.no_attack = False
        args.variant = None
        return cmd_railway(args)
    if tipo in ("monte_carlo", "protocolo"):
        return cmd_monte_carlo(args)
    if tipo == "varredura_tgs":
        return cmd_sweep(args)
    if tipo == "dos":
        return cmd_dos(args)
    if tipo == "banda":
        return cmd_bandwidth(args)

    from Experimentos.Exportacao import escrever_manifesto
    from Sistema.MontadorSistema import SistemaGeoShield

    semente = _semente(args, cenario)
    saida = _saida(args, cenario.nome)
    resultado = SistemaGeoShield(cenario, semente=semente).executar()
    arquivos = resultado.exportar(saida)
    auditoria = resultado.auditoria()
    banda = resultado.largura_banda()
    resumo = [
        f"permaneceu_normal: {resultado.permaneceu_normal}",
        f"t_modo_seguro_ns: {resultado.t_modo_seguro}",
        f"falhas: {len(resultado.coletor.falhas)}",
        f"disputas: {len(resultado.coletor.disputas)}",
        f"btr_ok: {auditoria.ok} ({len(auditoria.violacoes)} violações)",
        f"banda_intra_kb_s: {banda.intra_kb_s:.3f}",
        f"banda_inter_kb_s: {banda.inter_kb_s:.3f}",
    ]
    escrever_manifesto(saida, "run", semente, cenario.bruto, resumo, arquivos=arquivos)
    for linha in resumo:
        logger.info(linha)
    return 0


def cmd_monte_carlo(args: argparse.Namespace) -> int:
    from Experimentos.Exportacao import escrever_manifesto
    from Experimentos.MonteCarlo import run_monte_carlo

    cenario = _carregar(args.scenario)
    semente = _semente(args, cenario)
    saida = _saida(args, cenario.nome)
    resultado = run_monte_carlo(cenario, getattr(args, "trials", None), semente, getattr(args, "processes", None))
    arquivo = resultado.exportar_csv(saida / "ensaios.csv")
    baixo, alto = resultado.ic
    resumo = [f"probabilidade: {resultado.probabilidade:.4f}", f"ic95: [{baixo:.4f}, {alto:.4f}]",
              f"ensaios_validos: {len(resultado.validos)}", f"fora_do_modelo: {resultado.fora_do_modelo}"]
    desvios = []
    if cenario.experimento.get("tgs") is False and int(cenario.experimento.get("f", 1)) == 2:
        desvios.append("baseline_f2")
    escrever_manifesto(saida, "monte-carlo", semente, cenario.bruto, resumo, desvios, [arquivo])
    logger.info(resultado.resumo())
    return 0


def cmd_sweep(args: argparse.Namespace) -> int:
    from Experimentos.Exportacao import escrever_manifesto
    from Experimentos.MonteCarlo import sweep_tgs

    cenario = _carregar(args.scenario)
    exp = cenario.experimento
    alfas = getattr(args, "alphas", None) or exp.get("alfas") or [0.01, 0.05, 0.1, 0.2, 1]
    betas = getattr(args, "betas", None) or exp.get("betas") or [1, 3, 5, 10, 50]
    ataques = [ATAQUES_CLI[args.attack]] if getattr(args, "attack", None) else (exp.get("ataques") or ["agressivo"])
    semente = _semente(args, cenario)
    saida = _saida(args, cenario.nome)
    arquivos, resumo = [], []
    for ataque in ataques:
        grade = sweep_tgs(cenario, alfas, betas, ataque, getattr(args, "trials", None), semente,
                          getattr(args, "processes", None))
        arquivos.append(grade.exportar_csv(saida / f"grade_{ataque}.csv"))
        arquivos.append(grade.exportar_detalhado(saida / f"celulas_{ataque}.csv"))
        for (alfa, beta), celula in sorted(grade.celulas.items()):
            resumo.append(f"{ataque} α={alfa} β={beta}: " + ("N/A" if celula is None else f"{celula.probabilidade:.4f}"))
    escrever_manifesto(saida, "sweep", semente, {"cenario": cenario.bruto, "alfas": alfas, "betas": betas,
                                                 "ataques": ataques}, resumo, arquivos=arquivos)
    return 0


def cmd_dos(args: argparse.Namespace) -> int:
    from Experimentos.Exportacao import escrever_manifesto
    from Experimentos.MonteCarlo import suite_dos

    cenario = _carregar(args.scenario)
    semente = _semente(args, cenario)
    saida = _saida(args, cenario.nome)
    suite = suite_dos(cenario, getattr(args, "trials", None), semente, getattr(args, "processes", None))
    arquivo = suite.exportar_csv(saida / "dos.csv")
    resumo = [r.resumo() for r in suite.por_cenario.values()] + [suite.agregado.resumo()]
    escrever_manifesto(saida, "dos", semente, cenario.bruto, resumo, arquivos=[arquivo])
    return 0


def cmd_railway(args: argparse.Namespace) -> int:
    from EstudosCaso.Ferrovia import simulate_incorrect_ma, simulate_wenzhou
    from Experimentos.Exportacao import escrever_manifesto

    padrao = "wenzhou" if args.study == "wenzhou" else "ferrovia_ma"
    cenario = _carregar(args.scenario or padrao)
    semente = _semente(args, cenario)
    saida = _saida(args, cenario.nome)
    if args.study == "wenzhou":
        trajeto = simulate_wenzhou(cenario, args.variant, semente)
        arquivo = trajeto.exportar_csv(saida / f"wenzhou_{trajeto.variante}.csv")
        resumo = [f"variante: {trajeto.variante}", f"colisao: {trajeto.colisao}",
                  f"t_modo_seguro_ns: {trajeto.t_modo_seguro}",
                  f"separacao_minima_m: {trajeto.separacao_minima:.3f}"]
    else:
        protegido = cenario.estudo_caso.get("protegido", True) if args.protected is None else args.protected
        trajeto = simulate_incorrect_ma(cenario, protegido, not args.no_attack, semente)
        rotulo = "normal" if args.no_attack else ("protegido" if protegido else "desprotegido")
        arquivo = trajeto.exportar_csv(saida / f"frenagem_{rotulo}.csv")
        resumo = [f"caso: {rotulo}", f"colisao: {trajeto.colisao}",
                  f"posicao_final_m: {trajeto.posicao_final:.3f}",
                  f"inicio_frenagem_servico_m: {trajeto.onset_servico}",
                  f"t_correcao_s: {trajeto.t_correcao}"]
    escrever_manifesto(saida, f"railway {args.study}", semente, cenario.bruto, resumo, arquivos=[arquivo])
    for linha in resumo:
        logger.info(linha)
    return 0


def cmd_grid(args: argparse.Namespace) -> int:
    from EstudosCaso.RedeEletrica import smart_grid_run
    from Experimentos.Exportacao import escrever_manifesto

    cenario = _carregar(args.scenario or "rede_eletrica")
    semente = _semente(args, cenario)
    saida = _saida(args, cenario.nome)
    resultado = smart_grid_run(cenario, semente)
    arquivos = list(resultado.exportar(saida).values())
    intervalos = resultado.intervalos_ataque()
    resumo = [
        f"jobs: {len(resultado.latencias)}",
        f"jobs_atacados: {len(resultado.jobs_atacados)}",
        f"primeiros_atacados: {resultado.jobs_atacados[:5]}",
        f"intervalo_regime: {intervalos[-1] if intervalos else None}",
        f"fracao_atrasada: {resultado.fracao_atrasada:.6f} (referência 1/66 = {1 / 66:.6f})",
        f"sinalizacoes: {resultado.sinalizacoes}",
    ]
    escrever_manifesto(saida, "grid", semente, cenario.bruto, resumo, ["fracao_rede_eletrica"], arquivos)
    for linha in resumo:
        logger.info(linha)
    return 0


def cmd_jitter_cdf(args: argparse.Namespace) -> int:
    from Experimentos.CdfJitter import amostrar_modelo, cdf_empirica, ler_amostras_csv
    from Experimentos.Exportacao import escrever_manifesto

    if args.csv:
        amostras = ler_amostras_csv(Path(args.csv), args.column)
        semente, parametros = None, {"csv": str(args.csv), "coluna": args.column}
        saida = _saida(args, "jitter_cdf")
    else:
        cenario = _carregar(args.scenario or "base")
        semente = _semente(args, cenario)
        amostras = amostrar_modelo(cenario, args.samples, semente=semente)
        parametros = {"cenario": cenario.bruto, "amostras": args.samples}
        saida = _saida(args, f"{cenario.nome}_jitter_cdf")
    tabela = cdf_empirica(amostras, args.percentile)
    arquivo = tabela.exportar_csv(saida / "cdf.csv")
    escrever_manifesto(saida, "jitter-cdf", semente, parametros, tabela.linhas_resumo(), arquivos=[arquivo])
    for linha in tabela.linhas_resumo():
        logger.info(linha)
    return 0


def cmd_validate(args: argparse.Namespace) -> int:
    """Valida cada arquivo; o primeiro inválido encerra com código 1."""
    for nome in args.scenarios:
        cenario = _carregar(nome)
        logger.info("%s: válido (%d regiões, %d fluxos, %d nós comprometidos)", nome,
                    len(cenario.topologia.regioes), len(cenario.topologia.fluxos), len(cenario.ataque.comprometidos))
    return 0


def cmd_properties(args: argparse.Namespace) -> int:
    from Experimentos.Exportacao import escrever_manifesto
    from Experimentos.Propriedades import (
        SUITES,
        busca_limite_curto_prazo,
        busca_limite_longo_prazo,
        executar_suite,
        identidades_tgs,
    )
    from TGS.ParametrosTGS import ParametrosTGS

    semente = 0 if args.seed is None else args.seed
    saida = _saida(args, "propriedades")
    suites = list(SUITES) + ["tgs"] if args.suite == "all" else [args.suite]
    linhas: List[str] = []
    ok = True
    for nome in suites:
        if nome == "tgs":
            for alfa in (0.1, 0.2, 1):
                for beta in (1, 3, 5):
                    tgs = ParametrosTGS.de_valores(alfa, beta, 0.999)
                    identidades = identidades_tgs(tgs)
                    longo = busca_limite_longo_prazo(tgs)
                    ok &= all(identidades.values()) and longo.ok
                    linhas.append(f"tgs α={alfa} β={beta}: identidades={all(identidades.values())} "
                                  f"longo_prazo={longo.abaixo_de_p} padrões, {len(longo.contraexemplos)} sem sinalização")
            for linha in busca_limite_curto_prazo(0.1, 0.99):
                ok &= linha.ok
                linhas.append(f"tgs curto prazo β={linha.beta} k={linha.k}: janela {linha.comprimento}, "
                              f"máximo {linha.max_suspeitos} suspeitos")
            continue
        relatorio = executar_suite(nome, args.trials, semente, duracao_ms=args.duration_ms,
                                   processos=args.processes)
        ok &= relatorio.ok
        linhas += relatorio.linhas()
    saida.mkdir(parents=True, exist_ok=True)
    with open(saida / "propriedades.txt", "w", encoding="utf-8", newline="\n") as arquivo:
        arquivo.write("\n".join(linhas) + "\n")
    escrever_manifesto(saida, f"properties {args.suite}", semente,
                       {"ensaios": args.trials, "duracao_ms": args.duration_ms}, linhas,
                       ["janela_curto_prazo"], [saida / "propriedades.txt"])
    for linha in linhas:
        logger.info(linha)
    return 0 if ok else 1


def cmd_bandwidth(args: argparse.Namespace) -> int:
    from Experimentos.Banda import REGIOES_PADRAO, scaling_report
    from Experimentos.Exportacao import escrever_manifesto

    cenario = _carregar(args.scenario or "banda")
    semente = _semente(args, cenario)
    saida = _saida(args, cenario.nome)
    exp = cenario.experimento
    regioes = getattr(args, "regions", None) or exp.get("regioes") or list(REGIOES_PADRAO)
    relatorio = scaling_report(regioes, cenario.bruto, int(exp.get("f", 1)),
                               float(exp.get("duracao_ms", 5_000)), semente)
    arquivo = relatorio.exportar_csv(saida / "banda.csv")
    inclinacao, intercepto, r2 = relatorio.regressao("inter")
    resumo = [f"{linha.regioes} regiões: intra {linha.intra_kb_s:.3f} kB/s, inter {linha.inter_kb_s:.3f} kB/s"
              for linha in relatorio.linhas]
    resumo.append(f"ajuste inter: {inclinacao:.4f} kB/s por região, intercepto {intercepto:.4f}, R² {r2:.6f}")
    escrever_manifesto(saida, "bandwidth", semente, {"cenario": cenario.bruto, "regioes": regioes}, resumo,
                       arquivos=[arquivo])
    for linha in resumo:
        logger.info(linha)
    return 0


# ===== PARSER =====

def criar_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="geoshield", description="Simulador GeoShield")
    parser.add_argument("-v", "--verbose", action="store_true", help="Logs de DEBUG no console")
    sub = parser.add_subparsers(dest="cmd", required=True)

    def comum(p: argparse.ArgumentParser, cenario_obrigatorio: bool = False) -> None:
        p.add_argument("--scenario", required=cenario_obrigatorio, help="Arquivo ou nome em Cenarios/")
        p.add_argument("--seed", type=int, help="Substitui a semente do cenário")
        p.add_argument("--out", help="Pasta de saída (padrão: Resultados/<cenário>)")

    def paralelo(p: argparse.ArgumentParser) -> None:
        p.add_argument("--trials", type=int, help="Número de ensaios")
        p.add_argument("--processes", type=int, help="Processos (padrão: CPUs - 1)")

    p = sub.add_parser("run", help="Roda um cenário")
    comum(p, True)
    paralelo(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("monte-carlo", help="Probabilidade de permanecer no modo normal")
    comum(p, True)
    paralelo(p)
    p.set_defaults(func=cmd_monte_carlo)

    p = sub.add_parser("sweep", help="Grade α x β do TGS")
    comum(p)
    paralelo(p)
    p.add_argument("--alphas", type=_lista_float)
    p.add_argument("--betas", type=_lista_int)
    p.add_argument("--attack", choices=sorted(ATAQUES_CLI))
    p.set_defaults(func=cmd_sweep, scenario="varredura_tgs")

    p = sub.add_parser("dos", help="Suíte de 6 cenários sob DoS")
    comum(p)
    paralelo(p)
    p.set_defaults(func=cmd_dos, scenario="dos")

    p = sub.add_parser("railway", help="Estudos de caso ferroviários")
    p.add_argument("study", choices=["ma-attack", "wenzhou"])
    comum(p)
    protecao = p.add_mutually_exclusive_group()
    protecao.add_argument("--protected", dest="protected", action="store_true", default=None)
    protecao.add_argument("--unprotected", dest="protected", action="store_false")
    p.add_argument("--no-attack", action="store_true", help="Caso normal, sem MA incorreta")
    p.add_argument("--variant", choices=["geoshield", "incidente", "marcha_a_vista"])
    p.set_defaults(func=cmd_railway)

    p = sub.add_parser("grid", help="Estudo de caso da rede elétrica")
    comum(p)
    p.set_defaults(func=cmd_grid)

    p = sub.add_parser("jitter-cdf", help="CDF empírica de latências e Δ_inter")
    comum(p)
    p.add_argument("--csv", help="CSV de latências (coluna latency_ms ou latency_ns)")
    p.add_argument("--column", help="Coluna de latência no CSV")
    p.add_argument("--samples", type=int, default=100_000)
    p.add_argument("--percentile", type=float, default=99.9)
    p.set_defaults(func=cmd_jitter_cdf)

    p = sub.add_parser("validate", help="Valida arquivos de cenário")
    p.add_argument("scenarios", nargs="+")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("properties", help="Suítes de propriedades do protocolo")
    p.add_argument("--suite", choices=["heartbeat", "precisao", "acordo", "poc", "tgs", "all"],
                   default="all")
    p.add_argument("--trials", type=int, default=1000, help="Ensaios por cenário")
    p.add_argument("--duration-ms", type=float, default=20_000)
    p.add_argument("--processes", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    p.set_defaults(func=cmd_properties)

    p = sub.add_parser("bandwidth", help="Banda por nó x número de regiões")
    comum(p)
    p.add_argument("--regions", type=_lista_int)
    p.set_defaults(func=cmd_bandwidth)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """
    Ponto de entrada principal.

    Returns:
        Código de saída
    """
    args = criar_parser().parse_args(argv)
    if args.verbose:
        ConfiguradorLog.configurar_desenvolvimento()
    try:
        return args.func(args)
    except ErroGeoShield as e:
        logger.error("[ERRO] %s", e)
        return 1


if __name__ == "__main__":
    sys.exit(main())
