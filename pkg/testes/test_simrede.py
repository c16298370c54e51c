"""
Testes do motor de eventos, dos modelos de enlace e da rede simulada.
"""
import csv
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from Nucleo.Identificadores import NodeId, RegionId
from Nucleo.Tempo import ms
from Nucleo.Topologia import ErroTopologia
from SimRede.ConfigRede import ConfigEnlaceInter, ConfigRede
from SimRede.Enlaces import (
    LARGURA_PICO, EnlaceInterRegiao, EnlaceIntraRegiao, FalhaEnlace, ModeloJitter,
    ProcessoLatenciaBase, SobreposicaoDoS, probabilidade_pico,
)
from SimRede.Rede import AcaoEnvio, Rede
from SimRede.Relogio import ModeloRelogio
from SimRede.Simulador import ErroAgendamento, Simulador


# ===== SIMULADOR =====

def test_eventos_simultaneos_saem_na_ordem_de_insercao():
    sim = Simulador()
    ordem = []
    sim.schedule(ms(5), lambda: ordem.append("b"), tipo="b")
    sim.schedule(ms(1), lambda: ordem.append("a"), tipo="a")
    sim.schedule(ms(5), lambda: ordem.append("c"), tipo="c")
    sim.run_until(ms(10))
    assert ordem == ["a", "b", "c"]
    assert sim.agora == ms(10)
    assert [r.tipo for r in sim.trace] == ["a", "b", "c"]


def test_evento_no_passado():
    sim = Simulador()
    sim.run_until(ms(10))
    with pytest.raises(ErroAgendamento):
        sim.schedule(ms(5), lambda: None)


def test_run_until_para_no_limite_e_continua_depois():
    sim = Simulador()
    vistos = []
    for t in (1, 2, 3):
        sim.schedule(ms(t), lambda t=t: vistos.append(t))
    sim.run_until(ms(2))
    assert vistos == [1, 2]
    sim.run_until(ms(3))
    assert vistos == [1, 2, 3]
    assert sim.eventos_processados == 3


def test_evento_agenda_outro_evento():
    sim = Simulador()
    vistos = []

    def primeiro():
        vistos.append(sim.agora)
        sim.schedule_em(ms(1), lambda: vistos.append(sim.agora))

    sim.schedule(ms(1), primeiro)
    sim.run_until(ms(5))
    assert vistos == [ms(1), ms(2)]


def test_trace_desligado_e_exportacao(tmp_path):
    sim = Simulador(registrar_trace=False)
    sim.schedule(1, lambda: None, tipo="x")
    sim.run_until(2)
    assert sim.trace == []

    sim = Simulador()
    sim.schedule(1, lambda: None, tipo="hb", no=3, detalhes="n=1")
    sim.run_until(2)
    caminho = sim.exportar_trace_csv(tmp_path / "trace.csv")
    with open(caminho, newline="", encoding="utf-8") as arquivo:
        linhas = list(csv.reader(arquivo))
    assert linhas[0] == ["time_ns", "node", "event_kind", "details"]
    assert linhas[1] == ["1", "3", "hb", "n=1"]


# ===== ENLACES =====

@given(p_norm=st.floats(min_value=0.5, max_value=0.99999))
def test_probabilidade_pico_resolve_p_norm(p_norm):
    q = probabilidade_pico(p_norm)
    u = 1.0 / LARGURA_PICO
    assert 0 <= q <= 1
    assert math.isclose((1 - q) ** 2 + (2 * u - u * u) * q * q, p_norm, rel_tol=1e-9)


def test_pares_de_jitter_dentro_de_delta():
    delta = ms(2.406)
    modelo = ModeloJitter(delta, 0.99, np.random.default_rng(11))
    a = modelo.amostrar_vetor(200_000)
    b = modelo.amostrar_vetor(200_000)
    fracao = float(np.mean(np.abs(a - b) < delta))
    assert abs(fracao - 0.99) < 0.002
    assert a.min() >= 0


def test_jitter_com_p_norm_degradado_gera_mais_picos():
    delta = ms(2)
    modelo = ModeloJitter(delta, 0.999, np.random.default_rng(5))
    normal = np.mean(modelo.amostrar_vetor(50_000) >= delta)
    degradado = np.mean(modelo.amostrar_vetor(50_000, p_norm=0.9) >= delta)
    assert degradado > 10 * normal


def test_latencia_intra_no_intervalo():
    enlace = EnlaceIntraRegiao(ms(2), ms(0.5), np.random.default_rng(0))
    amostras = [enlace.latencia() for _ in range(1000)]
    assert min(amostras) >= ms(1.5)
    assert max(amostras) <= ms(2)
    assert EnlaceIntraRegiao(ms(2), 0, np.random.default_rng(0)).latencia() == ms(2)


def test_latencia_base_limitada_e_independente_da_ordem_das_consultas():
    instantes = [ms(500 * k) for k in range(200)]
    a = ProcessoLatenciaBase(ms(40), ms(2), ms(35), ms(45), np.random.default_rng(3))
    b = ProcessoLatenciaBase(ms(40), ms(2), ms(35), ms(45), np.random.default_rng(3))
    valores_a = [a.valor(t) for t in instantes]
    valores_b = [b.valor(t) for t in reversed(instantes)][::-1]
    assert valores_a == valores_b
    assert all(ms(35) <= v <= ms(45) for v in valores_a)


def test_enlace_inter_descarte_total():
    rng = np.random.default_rng(0)
    enlace = EnlaceInterRegiao(ProcessoLatenciaBase(ms(40), 0, ms(35), ms(45), rng),
                               ModeloJitter(ms(2), 0.999, rng), 1.0, rng)
    assert enlace.latencia(0) is None


def test_enlace_inter_sob_dos_usa_p_norm_efetivo():
    rng = np.random.default_rng(1)
    dos = SobreposicaoDoS(ms(100), ms(200), p_norm_efetivo=0.5)
    enlace = EnlaceInterRegiao(ProcessoLatenciaBase(ms(40), 0, ms(35), ms(45), rng),
                               ModeloJitter(ms(2), 0.99999, rng), 0.0, rng, [dos])
    fora = [enlace.latencia(ms(50)) for _ in range(2000)]
    dentro = [enlace.latencia(ms(150)) for _ in range(2000)]
    limite = ms(40) + ms(2)
    assert sum(v > limite for v in dentro) > sum(v > limite for v in fora) + 200
    assert enlace.d_real(0) == ms(41)


def test_janela_dos_semiaberta():
    dos = SobreposicaoDoS(10, 20, 0.9)
    assert dos.ativa(10) and dos.ativa(19)
    assert not dos.ativa(20) and not dos.ativa(9)


@pytest.mark.parametrize("falha, argumentos, esperado", [
    (FalhaEnlace(0, 100, regiao=RegionId(0)), (50, 0, 3, 0, 1), True),
    (FalhaEnlace(0, 100, regiao=RegionId(0)), (50, 3, 0, 1, 0), False),
    (FalhaEnlace(0, 100, regiao=RegionId(0), direcao="entrada"), (50, 3, 0, 1, 0), True),
    (FalhaEnlace(0, 100, regiao=RegionId(0), inter_apenas=True), (50, 0, 1, 0, 0), False),
    (FalhaEnlace(0, 100, no=NodeId(1), direcao="ambos"), (50, 4, 1, 1, 0), True),
    (FalhaEnlace(0, 100, regiao=RegionId(0)), (100, 0, 3, 0, 1), False),
])
def test_falha_de_enlace(falha, argumentos, esperado):
    assert falha.afeta(*argumentos) is esperado


def test_relogios_dentro_de_delta_syn():
    nos = range(30)
    relogios = ModeloRelogio.gerar(nos, ms(0.1), np.random.default_rng(2))
    offsets = relogios.offsets.values()
    assert max(offsets) - min(offsets) <= ms(0.1)
    assert relogios.tempo_real(3, relogios.local_clock(3, ms(7))) == ms(7)
    assert set(ModeloRelogio.sincronizado(nos).offsets.values()) == {0}


# ===== CONFIGURAÇÃO =====

def test_config_rede_de_dict():
    cfg = ConfigRede.de_dict({
        "inter": {"base_ms": 30, "prob_descarte": 0.01},
        "pares": [{"origem": 0, "destino": 1, "base_ms": 80, "p_norm_real": 0.9}],
        "dos": [{"inicio_ms": 10, "fim_ms": 20, "p_norm_efetivo": 0.9}],
        "falhas_enlace": [{"inicio_ms": 5, "fim_ms": 6, "regiao": 1, "inter_apenas": True}],
    })
    assert cfg.config_par(RegionId(1), RegionId(0)).base == ms(30)
    par = cfg.config_par(RegionId(0), RegionId(1))
    assert par.base == ms(80)
    assert par.prob_descarte == 0.01
    assert par.p_norm_real == 0.9
    assert cfg.dos[0].inicio == ms(10)
    assert cfg.falhas[0].regiao == 1 and cfg.falhas[0].inter_apenas


def test_limites_padrao_do_enlace():
    assert ConfigEnlaceInter(base=ms(40)).limites == (ms(35), ms(45))
    assert ConfigEnlaceInter(base=ms(3)).limites == (1, ms(8))
    assert ConfigRede.de_dict(None).inter_padrao == ConfigEnlaceInter()


# ===== REDE =====

@pytest.fixture
def rede(topologia_pequena):
    rng = np.random.default_rng(0)
    sim = Simulador()
    intra = {r: EnlaceIntraRegiao(ms(2), ms(0.5), rng) for r in topologia_pequena.regioes}
    inter = {
        (j, i): EnlaceInterRegiao(ProcessoLatenciaBase(ms(40), 0, ms(35), ms(45), rng),
                                  ModeloJitter(ms(2), 0.999, rng), 0.0, rng)
        for j in topologia_pequena.regioes for i in topologia_pequena.regioes if i != j
    }
    rede = Rede(sim, topologia_pequena, intra, inter)
    rede.recebidas = []
    for no in topologia_pequena.nos:
        rede.registrar(no, lambda msg, origem, t, no=no: rede.recebidas.append((sim.agora, no, origem, msg, t)))
    return rede


def test_entrega_intra_e_inter(rede):
    rede.send("a", NodeId(0), NodeId(1))
    rede.send("b", NodeId(0), NodeId(3))
    rede.sim.run_until(ms(100))
    chegadas = {msg: (t, origem, t_envio) for t, _, origem, msg, t_envio in rede.recebidas}
    assert ms(1.5) <= chegadas["a"][0] <= ms(2)
    assert chegadas["b"][0] >= ms(40)
    assert chegadas["b"][1] == 0 and chegadas["b"][2] == 0
    assert rede.bytes_enviados[0] == {"intra": 16 + 66, "inter": 16 + 66}
    assert rede.bytes_recebidos[3]["inter"] == 16 + 66


def test_multicast_nao_envia_para_si(rede):
    rede.multicast("m", NodeId(0), [0, 1, 2])
    rede.sim.run_until(ms(10))
    assert sorted(no for _, no, _, _, _ in rede.recebidas) == [1, 2]


def test_interceptador_descarta_atrasa_e_substitui(rede):
    acoes = {1: AcaoEnvio.descartar(), 2: AcaoEnvio.atrasar(ms(10)), 3: AcaoEnvio.substituir("forjada")}
    rede.instalar_interceptador(NodeId(0), lambda destino, msg, agora: acoes.get(destino, AcaoEnvio.passar()))
    for destino in (1, 2, 3):
        rede.send("original", NodeId(0), NodeId(destino))
    rede.sim.run_until(ms(200))
    por_destino = {no: (t, msg, t_envio) for t, no, _, msg, t_envio in rede.recebidas}
    assert 1 not in por_destino
    assert por_destino[2][0] >= ms(11.5) and por_destino[2][2] == ms(10)
    assert por_destino[3][1] == "forjada"


def test_falha_de_enlace_descarta_apos_contabilizar(rede):
    rede.falhas.append(FalhaEnlace(0, ms(50), regiao=RegionId(0), inter_apenas=True))
    rede.send("x", NodeId(0), NodeId(3))
    rede.send("y", NodeId(0), NodeId(1))
    rede.sim.run_until(ms(100))
    assert [msg for _, _, _, msg, _ in rede.recebidas] == ["y"]
    assert rede.bytes_enviados[0]["inter"] == 16 + 66


def test_destino_sem_receptor(rede):
    with pytest.raises(ErroTopologia):
        rede.send("x", NodeId(0), NodeId(99))
