"""
Testes dos estudos de caso: cinemática de frenagem, controle da MA,
trem da frente em forma fechada e os ensaios ferroviário e de rede elétrica.
"""
import csv
from types import SimpleNamespace

import pytest

from EstudosCaso.Ferrovia import (
    AmostraDoisTrens, ControleMA, TrajetoDoisTrens, TremDaFrente, parametros_frenagem, simulate_incorrect_ma,
    simulate_wenzhou,
)
from EstudosCaso.Frenagem import (
    KMH, MODO_A_VISTA, MODO_EMERGENCIA, MODO_NORMAL, MODO_PARADO, MODO_SERVICO, ErroFrenagem,
    ParametrosFrenagem, Trem, brake_onset, distancia_parada, simular_curva_normal,
)
from EstudosCaso.RedeEletrica import ResultadoRedeEletrica, smart_grid_run
from Experimentos.Cenario import Cenario
from Nucleo.Tempo import ms

PARAMS = ParametrosFrenagem()


def _linhas(caminho):
    with open(caminho, "r", encoding="utf-8") as arquivo:
        return list(csv.reader(arquivo))


def _rodar(trem, limite=100_000):
    for _ in range(limite):
        if trem.parado:
            break
        trem.passo()
    return trem


# ===== FRENAGEM =====

def test_distancia_de_parada():
    assert distancia_parada(30.0, 0.6) == pytest.approx(750.0)
    assert distancia_parada(0.0, 0.6) == 0.0


def test_inicio_da_frenagem():
    assert brake_onset(30.0, 10_000.0, 0.6, 91.0) == pytest.approx(9159.0)
    assert brake_onset(0.0, 10_000.0, 0.6, 91.0) == 9909.0


@pytest.mark.parametrize("kwargs", [
    {"a_servico": 1.2, "a_emergencia": 0.6},
    {"a_servico": 0.0},
    {"passo": 0.0},
])
def test_parametros_de_frenagem_invalidos(kwargs):
    with pytest.raises(ErroFrenagem):
        ParametrosFrenagem(**kwargs)


def test_trem_parado_desde_o_inicio():
    trem = Trem(PARAMS, 100.0, 0.0)
    assert trem.parado
    assert trem.estado.modo == MODO_PARADO
    trem.passo()
    assert trem.estado.posicao == 100.0


def test_curva_normal_para_antes_da_ma():
    trajeto = simular_curva_normal(PARAMS, 30.0, 1000.0)
    alvo = 1000.0 - PARAMS.margem

    assert not trajeto.colisao
    assert trajeto.posicao_final == pytest.approx(alvo, abs=30.0 * PARAMS.passo)
    assert trajeto.onset_servico == pytest.approx(brake_onset(30.0, 1000.0, PARAMS.a_servico, PARAMS.margem),
                                                  abs=30.0 * PARAMS.passo)
    modos = [a.modo for a in trajeto.amostras]
    assert modos[0] == MODO_NORMAL
    assert modos[-1] == MODO_PARADO
    assert MODO_SERVICO in modos
    assert MODO_EMERGENCIA not in modos


def test_ma_recuada_exige_emergencia():
    trem = Trem(PARAMS, 0.0, 30.0, ma=10_000.0)
    trem.passo()
    trem.definir_ma(500.0)
    trem.passo()
    assert trem.estado.modo == MODO_EMERGENCIA


def test_frenagem_de_servico_ordenada():
    trem = Trem(PARAMS, 0.0, 30.0)
    trem.frear_servico()
    _rodar(trem)
    assert trem.estado.posicao == pytest.approx(750.0, abs=1e-6)
    assert {a.modo for a in trem.historico} == {MODO_NORMAL, MODO_SERVICO, MODO_PARADO}


def test_obstaculo_avistado_com_servico_suficiente():
    trem = _rodar(Trem(PARAMS, 0.0, 30.0, obstaculo=2000.0))
    assert not trem.emergencia_maquinista
    assert trem.colisao is None
    assert trem.estado.posicao == pytest.approx(2000.0 - PARAMS.margem, abs=30.0 * PARAMS.passo)
    assert MODO_EMERGENCIA not in {a.modo for a in trem.historico}


def test_obstaculo_avistado_exige_emergencia_do_maquinista():
    # 750 m de serviço passariam do obstáculo; 375 m de emergência não
    trem = _rodar(Trem(PARAMS, 0.0, 30.0, obstaculo=700.0))
    assert trem.emergencia_maquinista
    assert trem.colisao is None
    assert trem.estado.posicao == pytest.approx(distancia_parada(30.0, PARAMS.a_emergencia), abs=1e-6)


def test_curva_normal_com_obstaculo_na_ma():
    trem = _rodar(Trem(PARAMS, 0.0, 90.0, ma=10_000.0, obstaculo=10_000.0))
    assert not trem.emergencia_maquinista
    assert trem.colisao is None
    assert trem.onset_servico == pytest.approx(3160.0, abs=10.0)
    assert trem.estado.posicao == pytest.approx(9910.0, abs=10.0)


def test_ma_falsa_leva_o_maquinista_a_colidir():
    trem = _rodar(Trem(PARAMS, 0.0, 90.0, ma=20_000.0, obstaculo=10_000.0))
    assert trem.emergencia_maquinista
    assert trem.colisao is not None
    inicio = next(a for a in trem.historico if a.modo == MODO_EMERGENCIA)
    assert inicio.x == pytest.approx(7000.0, abs=2.0)


def test_obstaculo_proximo_demais_colide():
    trem = _rodar(Trem(PARAMS, 0.0, 30.0, obstaculo=300.0))
    assert trem.colisao is not None
    assert trem.colisao.x >= 300.0
    assert trem.colisao.modo == MODO_EMERGENCIA


def test_marcha_a_vista_reduz_e_mantem_a_velocidade():
    trem = Trem(PARAMS, 0.0, 30.0)
    trem.marcha_a_vista()
    for _ in range(10_000):
        trem.passo()
        if trem.estado.modo == MODO_A_VISTA:
            break
    assert trem.estado.modo == MODO_A_VISTA
    velocidade = trem.estado.velocidade
    assert 0 < velocidade <= 20 * KMH
    trem.passo()
    assert trem.estado.velocidade == velocidade


def test_exportacao_da_curva(tmp_path):
    trajeto = simular_curva_normal(PARAMS, 10.0, 500.0)
    linhas = _linhas(trajeto.exportar_csv(tmp_path / "curva" / "normal.csv"))
    assert linhas[0] == ["t", "x", "v", "mode"]
    assert len(linhas) == len(trajeto.amostras) + 1
    assert linhas[-1][-1] == MODO_PARADO


def test_parametros_a_partir_do_estudo():
    params = parametros_frenagem({"a_servico": 0.5, "velocidade_a_vista_kmh": 36, "passo_ms": 20})
    assert params.a_servico == 0.5
    assert params.a_emergencia == PARAMS.a_emergencia
    assert params.velocidade_a_vista == pytest.approx(10.0)
    assert params.passo == pytest.approx(0.02)


# ===== CONTROLE DA MA =====

def _entrega(controle, k, remetente, ma, estado, agora=ms(3500)):
    no = SimpleNamespace(sim=SimpleNamespace(agora=agora))
    mensagem = SimpleNamespace(carga={"ma_m": ma}, remetente=remetente)
    controle(no, None, SimpleNamespace(invocacao=k), mensagem, estado)


def test_controle_protegido_corrige_e_ignora_o_suspeito():
    trem = Trem(PARAMS, 0.0, 90.0, ma=10_000.0)
    controle = ControleMA(trem, protegido=True)

    _entrega(controle, 1, 0, 20_000, "provisoria")
    assert trem.estado.ma == 20_000
    _entrega(controle, 1, 1, 10_000, "corrigida")
    assert trem.estado.ma == 10_000
    assert controle.suspeitos == {0}
    assert controle.t_correcao == pytest.approx(3.5)
    assert controle.x_correcao == 0.0

    _entrega(controle, 2, 0, 20_000, "provisoria")
    assert trem.estado.ma == 10_000
    _entrega(controle, 2, 1, 10_000, "provisoria")
    assert controle.fonte == (2, 1)


def test_controle_sem_protecao_ignora_correcoes():
    trem = Trem(PARAMS, 0.0, 90.0, ma=10_000.0)
    controle = ControleMA(trem, protegido=False)
    _entrega(controle, 1, 0, 20_000, "provisoria")
    _entrega(controle, 1, 1, 10_000, "corrigida")
    assert trem.estado.ma == 20_000
    assert controle.t_correcao is None


def test_controle_ignora_carga_sem_ma():
    trem = Trem(PARAMS, 0.0, 90.0, ma=10_000.0)
    controle = ControleMA(trem, protegido=True)
    controle(None, None, SimpleNamespace(invocacao=1), SimpleNamespace(carga={"posicao_m": 1}, remetente=0),
             "provisoria")
    assert controle.fonte is None


# ===== DOIS TRENS =====

def test_trem_da_frente_em_forma_fechada():
    frente = TremDaFrente(10_000.0, 90.0, 10.0, 1.2)
    assert frente.posicao(5.0) == pytest.approx(10_450.0)
    assert frente.posicao_parada == pytest.approx(10_900.0 + 3375.0)
    assert frente.posicao(1000.0) == pytest.approx(frente.posicao_parada)


def test_trajeto_de_dois_trens(tmp_path):
    trajeto = TrajetoDoisTrens([AmostraDoisTrens(0.0, 100.0, 0.0), AmostraDoisTrens(1.0, 110.0, 60.0)])
    assert trajeto.separacao_minima == pytest.approx(50.0)
    linhas = _linhas(trajeto.exportar_csv(tmp_path / "dois.csv"))
    assert linhas == [["t", "x1", "x2"], ["0.00", "100.000", "0.000"], ["1.00", "110.000", "60.000"]]


# ===== REDE ELÉTRICA =====

def test_resumo_da_rede_eletrica(tmp_path):
    resultado = ResultadoRedeEletrica(
        latencias={1: -5.0, 2: 3.0, 3: 0.0, 4: 10.0}, jobs_atacados=[2, 6, 8], inicio_ataque=2,
    )
    assert resultado.jobs_atrasados == [2, 4]
    assert resultado.fracao_atrasada == pytest.approx(2 / 3)
    assert resultado.intervalos_ataque() == [4, 2]
    assert ResultadoRedeEletrica().fracao_atrasada == 0.0

    caminhos = resultado.exportar(tmp_path)
    linhas = _linhas(caminhos["latencias"])
    assert linhas[0] == ["job", "latency_ms", "late", "attacked"]
    assert linhas[2] == ["2", "3.000", "1", "1"]
    assert _linhas(caminhos["scores"]) == [["t", "score"]]


# ===== ENSAIOS =====

@pytest.mark.lento
def test_ma_incorreta_com_e_sem_protecao(carregar_json):
    cenario = Cenario.de_dict(carregar_json("ferrovia_ma.json"))

    sem_ataque = simulate_incorrect_ma(cenario, atacado=False)
    assert not sem_ataque.colisao
    assert sem_ataque.t_correcao is None
    assert sem_ataque.onset_servico == pytest.approx(3160.0, abs=10.0)
    assert sem_ataque.posicao_final == pytest.approx(9910.0, abs=10.0)

    sem_protecao = simulate_incorrect_ma(cenario, protegido=False)
    assert sem_protecao.colisao
    assert sem_protecao.t_correcao is None
    emergencia = next(a for a in sem_protecao.amostras if a.modo == MODO_EMERGENCIA)
    assert emergencia.x == pytest.approx(7000.0, abs=2.0)

    protegido = simulate_incorrect_ma(cenario, protegido=True)
    assert not protegido.colisao
    assert protegido.t_correcao == pytest.approx(36.08, abs=0.05)
    assert protegido.x_correcao == pytest.approx(3247.0, abs=10.0)
    assert protegido.posicao_final < 10_000
    # Emergência curta logo após a correção, depois serviço até parar
    modos = [a.modo for a in protegido.amostras if a.t >= protegido.t_correcao]
    assert MODO_EMERGENCIA in modos
    assert modos[modos.index(MODO_EMERGENCIA):].count(MODO_SERVICO) > 0
    assert modos[-1] == MODO_PARADO


@pytest.mark.lento
@pytest.mark.parametrize("variante, colide", [
    ("geoshield", False),
    ("marcha_a_vista", False),
    ("incidente", True),
])
def test_wenzhou(carregar_json, variante, colide):
    trajeto = simulate_wenzhou(Cenario.de_dict(carregar_json("wenzhou.json")), variante)
    assert trajeto.colisao is colide
    assert trajeto.variante == variante
    if variante != "incidente":
        assert trajeto.t_modo_seguro == ms(10_200)
        assert trajeto.separacao_minima > 0


@pytest.mark.lento
def test_rede_eletrica_atacante_adaptativo(carregar_json, tmp_path):
    resultado = smart_grid_run(Cenario.de_dict(carregar_json("rede_eletrica.json")))
    atacados = resultado.jobs_atacados

    # Três atrasos seguidos logo após o comprometimento, depois o score limita o ritmo
    assert len(atacados) >= 4
    assert atacados[:3] == [resultado.inicio_ataque + i for i in range(3)]
    assert all(intervalo > 1 for intervalo in resultado.intervalos_ataque()[2:])
    assert set(atacados) <= set(resultado.jobs_atrasados)
    assert resultado.scores
    assert 0 < resultado.fracao_atrasada < 0.5
    assert set(resultado.exportar(tmp_path)) == {"latencias", "scores"}
