"""
Testes dos experimentos: Monte Carlo do modelo abstrato, varreduras do TGS,
CDF de jitter, banda, manifesto e suítes de propriedades.
"""
import csv
import math

import numpy as np
import pytest

from Experimentos.Banda import LinhaBanda, RelatorioBanda, cenario_banda, medir_banda
from Experimentos.CdfJitter import cdf_empirica, fracao_pares_dentro, ler_amostras_csv
from Experimentos.Cenario import Cenario
from Experimentos.Exportacao import DESVIOS_MODELO, NOME_MANIFESTO, escrever_manifesto
from Experimentos.ModeloTGS import ConfigModeloTGS, ResultadoEnsaioModelo, ensaio_modelo_tgs, prob_sem_tgs
from Experimentos.MonteCarlo import (
    ResultadoMonteCarlo, config_modelo, run_model_trials, sementes_ensaios, suite_dos, sweep_tgs, wilson_ci,
)
from Experimentos.Propriedades import SUITES, RelatorioSuite, cenarios_suite, margem_binomial
from Nucleo.Erros import ErroParametros
from Nucleo.Tempo import ms
from TGS.ParametrosTGS import ParametrosTGS
from validadores import ErroCenario

TGS_PADRAO = ParametrosTGS.de_valores(0.01, 5, 0.999)


def _linhas(caminho):
    with open(caminho, "r", encoding="utf-8") as arquivo:
        return list(csv.reader(arquivo))


def _cenario_experimento(carregar_json, nome, **experimento):
    dados = carregar_json(nome)
    dados["experimento"].update(experimento)
    return Cenario.de_dict(dados)


# ===== ESTATÍSTICA =====

def test_intervalo_de_wilson():
    assert wilson_ci(0, 0) == (0.0, 1.0)
    baixo, alto = wilson_ci(50, 100)
    assert baixo < 0.5 < alto
    assert 0.5 - baixo == pytest.approx(alto - 0.5)
    assert wilson_ci(100, 100)[1] == pytest.approx(1.0)
    assert wilson_ci(0, 100)[0] == pytest.approx(0.0)


def test_sementes_por_ensaio_independem_da_quantidade():
    cinco = sementes_ensaios(42, 5)
    assert len(set(cinco)) == 5
    assert sementes_ensaios(42, 3) == cinco[:3]
    assert sementes_ensaios(43, 3) != cinco[:3]


def test_margem_binomial():
    assert margem_binomial(0.999, 0) == 0.0
    assert margem_binomial(0.5, 100) == pytest.approx(0.35)


# ===== MODELO ABSTRATO =====

@pytest.mark.parametrize("kwargs", [
    {"f": 0},
    {"p_real": 0.0},
    {"p_drop": 1.0},
    {"ataque": "furtivo"},
    {"compromisso": "r3"},
])
def test_config_do_modelo_invalida(kwargs):
    with pytest.raises(ErroParametros):
        ConfigModeloTGS(**kwargs)


def test_atacantes_por_regiao():
    assert ConfigModeloTGS(f=2).atacantes(0) == {0, 1}
    assert ConfigModeloTGS(compromisso="r1").atacantes(1) == set()
    assert ConfigModeloTGS(ataque="nenhum").atacantes(0) == set()
    assert ConfigModeloTGS(f=2).n == 5
    assert ConfigModeloTGS(f=2).replicas == 3


def test_adaptativo_so_se_aplica_com_beta_acima_de_f_mais_1():
    assert not ConfigModeloTGS(tgs=ParametrosTGS.de_valores(0.1, 2, 0.999), ataque="adaptativo").aplicavel
    assert ConfigModeloTGS(tgs=ParametrosTGS.de_valores(0.1, 3, 0.999), ataque="adaptativo").aplicavel
    assert ConfigModeloTGS(tgs=None, ataque="adaptativo").aplicavel


def test_probabilidade_exata_sem_tgs():
    sem_ataque = ConfigModeloTGS(p_drop=0.1, invocacoes=2, ataque="nenhum")
    assert prob_sem_tgs(sem_ataque) == pytest.approx(0.9801 ** 2)

    agressivo = ConfigModeloTGS(p_drop=0.1, invocacoes=2)
    assert prob_sem_tgs(agressivo) == pytest.approx((0.9801 / 3 + 0.81 * 2 / 3) ** 2)


def test_ensaio_sem_tgs_com_perdas_frequentes_cai_no_modo_seguro():
    resultado = ensaio_modelo_tgs(ConfigModeloTGS(p_drop=0.5, invocacoes=1000), semente=1)
    assert not resultado.permaneceu_normal
    assert 0 <= resultado.job_modo_seguro < 1000


def test_ensaio_sem_eventos_permanece_normal():
    config = ConfigModeloTGS(tgs=TGS_PADRAO, p_real=1.0, p_drop=0.0, invocacoes=10_000, ataque="nenhum")
    resultado = ensaio_modelo_tgs(config, semente=3, indice=7)
    assert resultado == ResultadoEnsaioModelo(7, True)


def test_atacante_agressivo_e_substituido_sem_modo_seguro():
    config = ConfigModeloTGS(tgs=TGS_PADRAO, p_real=1.0, p_drop=0.0, invocacoes=10_000)
    for semente in range(5):
        resultado = ensaio_modelo_tgs(config, semente)
        assert resultado.permaneceu_normal
        assert resultado.sinalizacoes_corretos == 0
        # β=5 e duas réplicas receptoras: três descartes zeram o score
        assert resultado.descartes == 3 * resultado.sinalizacoes_atacantes


def test_ensaios_do_modelo(tmp_path):
    config = ConfigModeloTGS(tgs=TGS_PADRAO, p_real=1.0, p_drop=0.0, invocacoes=1000, ataque="nenhum")
    resultado = run_model_trials(config, 3, semente=5)

    assert [e.indice for e in resultado.ensaios] == [0, 1, 2]
    assert resultado.probabilidade == 1.0
    assert resultado.contem(0.9)
    assert "3/3" in resultado.resumo()
    linhas = _linhas(resultado.exportar_csv(tmp_path / "mc.csv"))
    assert linhas[0] == ["trial", "stayed_normal", "out_of_model", "safe_mode"]
    assert linhas[1] == ["0", "1", "0", ""]

    with pytest.raises(ValueError):
        run_model_trials(config, 0)


def test_ensaios_reprodutiveis_pela_semente():
    config = ConfigModeloTGS(p_drop=0.01, invocacoes=5000)
    assert run_model_trials(config, 4, 9).ensaios == run_model_trials(config, 4, 9).ensaios


def test_ensaios_fora_do_modelo_nao_contam():
    resultado = ResultadoMonteCarlo([
        ResultadoEnsaioModelo(0, True), ResultadoEnsaioModelo(1, False, 12),
        ResultadoEnsaioModelo(2, False, fora_do_modelo=True),
    ])
    assert resultado.fora_do_modelo == 1
    assert resultado.sucessos == 1
    assert resultado.probabilidade == 0.5
    assert math.isnan(ResultadoMonteCarlo().probabilidade)


def test_config_a_partir_do_cenario(carregar_json):
    base = Cenario.de_dict(carregar_json("baseline_f1_p999.json"))
    config = config_modelo(base)
    assert config.tgs is None
    assert config.f == 1
    assert config.p_real == 0.999
    assert config.ataque == "agressivo"

    dos = config_modelo(Cenario.de_dict(carregar_json("dos.json")))
    assert dos.tgs is not None
    assert dos.p_real == 0.99
    assert config_modelo(base, invocacoes=10).invocacoes == 10


# ===== VARREDURAS =====

def test_varredura_marca_celulas_sem_ataque_adaptativo(carregar_json, tmp_path):
    cenario = _cenario_experimento(carregar_json, "varredura_tgs.json", invocacoes=2000)
    grade = sweep_tgs(cenario, [0.5], [1, 5], ataque="adaptativo", ensaios=2)

    assert grade.probabilidade(0.5, 1) is None
    assert grade.probabilidade(0.5, 5) is not None
    linhas = _linhas(grade.exportar_csv(tmp_path / "grade.csv"))
    assert linhas[0] == ["alpha\\beta", "1", "5"]
    assert linhas[1][:2] == ["0.5", "N/A"]
    detalhado = _linhas(grade.exportar_detalhado(tmp_path / "detalhado.csv"))
    assert len(detalhado) == 3

    with pytest.raises(ValueError):
        sweep_tgs(cenario, [], [1])


def test_suite_de_dos(carregar_json, tmp_path):
    cenario = _cenario_experimento(carregar_json, "dos.json", invocacoes=2000)
    suite = suite_dos(cenario, ensaios=2)

    assert len(suite.por_cenario) == 6
    assert len(suite.agregado.ensaios) == 12
    linhas = _linhas(suite.exportar_csv(tmp_path / "dos.csv"))
    assert len(linhas) == 8
    assert linhas[-1][:2] == ["todos", "todos"]


# ===== JITTER =====

def test_cdf_empirica():
    tabela = cdf_empirica(np.arange(10.0), percentil=99.9)
    assert tabela.amostras == 10
    assert tabela.delta_inter_ms == pytest.approx(1.0)
    assert list(tabela.latencias) == sorted(tabela.latencias)
    assert tabela.probabilidades[-1] == 1.0
    assert tabela.linhas_resumo()[0] == "amostras: 10"


@pytest.mark.parametrize("amostras, percentil", [([1.0], 99.9), ([1.0, 2.0], 0), ([1.0, 2.0], 101)])
def test_cdf_empirica_invalida(amostras, percentil):
    with pytest.raises(ValueError):
        cdf_empirica(np.array(amostras), percentil)


def test_leitura_de_latencias_em_ns(tmp_path):
    caminho = tmp_path / "chegadas.csv"
    caminho.write_text("flow,latency_ns\nida,40000000\nida,42500000\n", encoding="utf-8")
    assert list(ler_amostras_csv(caminho)) == [40.0, 42.5]


def test_leitura_de_latencias_invalida(tmp_path):
    sem_coluna = tmp_path / "x.csv"
    sem_coluna.write_text("a,b\n1,2\n", encoding="utf-8")
    with pytest.raises(ErroCenario):
        ler_amostras_csv(sem_coluna)
    with pytest.raises(ErroCenario):
        ler_amostras_csv(tmp_path / "ausente.csv")


def test_pares_de_jitter_dentro_do_limite():
    assert fracao_pares_dentro(ms(2.406), 0.999, 20_000, semente=1) >= 0.99


# ===== BANDA =====

def test_cenario_em_anel():
    dados = cenario_banda(3, {"semente": 4, "tempos": {"delta_inter": 2.406}, "outra": 1})
    fluxos = dados["topologia"]["fluxos"]
    assert [(f["regiao_origem"], f["regiao_destino"]) for f in fluxos] == [(0, 1), (1, 2), (2, 0)]
    assert dados["semente"] == 4
    assert "tempos" in dados and "outra" not in dados


def test_regressao_da_banda(tmp_path):
    relatorio = RelatorioBanda([LinhaBanda(r, 1.0 * r, 1.5 * r) for r in (5, 10, 20)])
    inclinacao, intercepto, r2 = relatorio.regressao("inter")
    assert inclinacao == pytest.approx(1.5)
    assert intercepto == pytest.approx(0.0, abs=1e-9)
    assert r2 == pytest.approx(1.0)
    assert relatorio.linear
    assert RelatorioBanda([LinhaBanda(5, 1, 1)]).regressao() == (0.0, 0.0, 0.0)

    linhas = _linhas(relatorio.exportar_csv(tmp_path / "banda.csv"))
    assert linhas[0][0] == "regions"
    assert [linha[0] for linha in linhas[-2:]] == ["fit_intra", "fit_inter"]


def test_tolerancia_em_relacao_a_referencia():
    assert LinhaBanda(5, 6.0, 7.0).dentro_da_tolerancia
    assert not LinhaBanda(5, 6.0, 30.0).dentro_da_tolerancia
    assert not LinhaBanda(5, 6.0, 2.38).dentro_da_tolerancia
    assert LinhaBanda(7, 6.0, 7.0).dentro_da_tolerancia is None


def test_medicao_de_banda():
    linha = medir_banda(cenario_banda(2, duracao_ms=3000), semente=1)
    assert linha.regioes == 2
    assert linha.intra_kb_s > 0
    assert linha.inter_kb_s > 0


@pytest.mark.lento
def test_banda_de_5_regioes_dentro_de_3x_da_referencia():
    linha = medir_banda(cenario_banda(5, duracao_ms=5000), semente=1)
    assert linha.referencia == (6.25, 7.28)
    assert linha.dentro_da_tolerancia


# ===== MANIFESTO =====

def test_manifesto(tmp_path):
    caminho = escrever_manifesto(tmp_path, "run", 7, {"nome": "teste"}, ["ok"], ["baseline_f2", "livre"],
                                 [tmp_path / "b.csv", tmp_path / "a.csv"])
    assert caminho.name == NOME_MANIFESTO
    texto = caminho.read_text(encoding="utf-8")
    assert texto.startswith("comando: run\nsemente: 7\n")
    assert "  a.csv\n  b.csv" in texto
    assert DESVIOS_MODELO["baseline_f2"] in texto
    assert "  - livre" in texto
    assert '"nome": "teste"' in texto


# ===== SUÍTES =====

def test_cenarios_da_suite_de_acordo():
    cenarios = cenarios_suite("acordo", fs=(1,), duracao_ms=1000)
    estrategias = [next(iter(c["ataque"]["nos"].values()))["estrategia"] for c in cenarios]
    assert estrategias.count("aceite_equivocado") == 5
    assert len(cenarios) == 8
    assert all(c["duracao_ms"] == 1000 for c in cenarios)


def test_cenarios_de_todas_as_suites_sao_validos():
    for nome in SUITES:
        for dados in cenarios_suite(nome, fs=(1, 2), duracao_ms=1000):
            Cenario.de_dict(dados)


def test_suite_desconhecida():
    with pytest.raises(ValueError):
        cenarios_suite("inexistente")


def test_relatorio_de_suite_vazio():
    relatorio = RelatorioSuite("poc")
    assert relatorio.ok
    assert relatorio.fracao_no_limite == 1.0
    assert relatorio.linhas()[0] == "suite poc: OK"
