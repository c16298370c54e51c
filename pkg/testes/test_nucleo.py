"""
Testes do núcleo: tempo, agenda das rodadas, assinaturas, topologia e
registros de falha.
"""
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from Experimentos.Cenario import TEMPOS_PADRAO_MS
from Nucleo.Assinatura import ErroChaveDesconhecida, RegistroChaves, canonico, resumo
from Nucleo.Erros import ErroGeoShield, ErroParametros
from Nucleo.Falhas import EscopoFalha, RegistroFalha, TipoFalha
from Nucleo.Identificadores import JobId, NodeId, RegionId, TaskId
from Nucleo.ModeloTamanho import ModeloTamanho
from Nucleo.Tempo import (
    NS_POR_MS, ErroTempo, ParametrosTempo, em_ms, em_segundos, instante_envio, ms, primeira_rodada,
    rodada_em, round_schedule, s, somar, us,
)
from Nucleo.Topologia import ErroTopologia, FluxoAplicacao, Regiao, Topologia

TEMPOS = ParametrosTempo.de_milissegundos(**TEMPOS_PADRAO_MS)


# ===== TEMPO =====

def test_conversoes_de_unidade():
    assert us(1) == 1_000
    assert ms(2.406) == 2_406_000
    assert s(1.5) == 1_500_000_000
    assert em_segundos(s(3)) == 3.0
    assert em_ms(ms(0.5)) == 0.5


def test_somar_recusa_instante_negativo():
    with pytest.raises(ErroTempo):
        somar(ms(1), -ms(2))


def test_t_early_soma_as_tres_folgas(tempos_padrao):
    p = tempos_padrao
    assert p.t_early == p.delta_syn + p.delta_intra + p.delta_hb


@given(n=st.integers(min_value=1, max_value=10_000))
def test_agenda_estritamente_crescente(n):
    agenda = round_schedule(n, TEMPOS)
    assert agenda.t_sig < agenda.t_send < agenda.t_hb_stop < agenda.t_accept < agenda.t_decide
    assert agenda.t_send == TEMPOS.t_0 + n * TEMPOS.t_int


def test_agenda_rodadas_consecutivas_separadas_por_t_int():
    a = round_schedule(3, TEMPOS)
    b = round_schedule(4, TEMPOS)
    assert b.t_send - a.t_send == TEMPOS.t_int
    assert b.t_decide - a.t_decide == TEMPOS.t_int


def test_agenda_rejeita_rodada_negativa():
    with pytest.raises(ErroTempo):
        round_schedule(-1, TEMPOS)


def test_rodada_zero_com_t0_nulo_cai_antes_da_origem():
    # t_sig da rodada 0 seria negativo; a primeira rodada utilizável é a 1
    with pytest.raises(ErroTempo):
        round_schedule(0, TEMPOS)
    assert primeira_rodada(TEMPOS, 0, "t_sig") == 1


def test_instante_de_envio_da_rodada_zero():
    assert TEMPOS.t_0 == 0
    assert instante_envio(0, TEMPOS) == 0
    assert instante_envio(5, TEMPOS) == round_schedule(5, TEMPOS).t_send
    with pytest.raises(ErroTempo):
        instante_envio(-1, TEMPOS)


@settings(max_examples=200)
@given(alvo=st.integers(min_value=0, max_value=10**12),
       campo=st.sampled_from(["t_sig", "t_send", "t_hb_stop", "t_accept", "t_decide"]))
def test_primeira_rodada_e_a_menor(alvo, campo):
    n = primeira_rodada(TEMPOS, alvo, campo)
    if n >= 1:
        assert getattr(round_schedule(n, TEMPOS), campo) >= alvo
    if n >= 2:
        assert getattr(round_schedule(n - 1, TEMPOS), campo) < alvo


def test_rodada_em(tempos_padrao):
    assert rodada_em(tempos_padrao, 0) == 0
    assert rodada_em(tempos_padrao, ms(999)) == 0
    assert rodada_em(tempos_padrao, ms(1000)) == 1
    assert rodada_em(tempos_padrao, ms(2500)) == 2


def test_com_fase_desloca_apenas_t0(tempos_padrao):
    deslocado = tempos_padrao.com_fase(ms(40))
    assert deslocado.t_0 == tempos_padrao.t_0 + ms(40)
    assert deslocado.t_int == tempos_padrao.t_int
    assert tempos_padrao.com_fase(0) is tempos_padrao


@pytest.mark.parametrize("alteracao", [
    {"hb_timeout": 3.0, "t_prop": 1.0, "d_intra": 2.0},
    {"delta_intra": 3.0, "d_intra": 2.0},
    {"delta_hb": 2.0, "t_hb": 1.0},
    {"t_int": 0.0},
    {"p_norm": 1.0},
    {"p_norm": 0.0},
])
def test_parametros_tempo_invalidos(alteracao):
    valores = {
        "t_int": 1000.0, "hb_timeout": 200.0, "t_0": 0.0, "d_intra": 2.0, "delta_intra": 0.5,
        "t_hb": 1.0, "delta_hb": 0.5, "t_prop": 1.0, "delta_prop": 0.5, "delta_syn": 0.1,
        "delta_inter": 2.4, "p_norm": 0.999,
    }
    valores.update(alteracao)
    with pytest.raises(ErroParametros):
        ParametrosTempo.de_milissegundos(**valores)


def test_parametros_tempo_exigem_inteiros(tempos_padrao):
    with pytest.raises(ErroParametros):
        ParametrosTempo(**{**tempos_padrao.__dict__, "t_int": 1.5})


def test_de_milissegundos_converte_para_ns(tempos_padrao):
    assert tempos_padrao.t_int == 1000 * NS_POR_MS
    assert tempos_padrao.delta_inter == 2_406_000
    assert tempos_padrao.p_norm == 0.999


# ===== ASSINATURAS =====

def test_canonico_independe_da_ordem_das_chaves():
    assert canonico({"a": 1, "b": [1, 2]}) == canonico({"b": [1, 2], "a": 1})
    assert resumo({"a": 1}) != resumo({"a": 2})


@pytest.mark.parametrize("modo", ["hmac", "ed25519"])
def test_assinatura_valida_e_adulterada(modo):
    registro = RegistroChaves(3, range(4), modo=modo)
    assinatura = registro.assinador(NodeId(1)).assinar(("hb", 0, 5))
    assert registro.verify(NodeId(1), ("hb", 0, 5), assinatura)
    assert not registro.verify(NodeId(1), ("hb", 0, 6), assinatura)
    assert not registro.verify(NodeId(2), ("hb", 0, 5), assinatura)


def test_assinatura_nao_vale_com_chaves_de_outra_semente():
    a = RegistroChaves(1, range(3))
    b = RegistroChaves(2, range(3))
    assinatura = a.sign(NodeId(0), "m")
    assert not b.verify(NodeId(0), "m", assinatura)


def test_no_sem_chave(registro_chaves):
    assert registro_chaves.conhece(NodeId(5))
    assert not registro_chaves.conhece(NodeId(99))
    with pytest.raises(ErroChaveDesconhecida):
        registro_chaves.sign(NodeId(99), "m")
    with pytest.raises(ErroChaveDesconhecida):
        registro_chaves.assinador(NodeId(99))


def test_modo_de_assinatura_desconhecido():
    with pytest.raises(ErroGeoShield):
        RegistroChaves(0, [0], modo="rsa")


def test_cache_de_verificacoes_limitado(monkeypatch):
    monkeypatch.setattr(RegistroChaves, "LIMITE_VERIFICADAS", 8)
    registro = RegistroChaves(3, range(2))
    for k in range(50):
        assinatura = registro.sign(NodeId(0), ("hb", k))
        assert registro.verify(NodeId(0), ("hb", k), assinatura)
        assert registro.verify(NodeId(0), ("hb", k), assinatura)
    info = registro._verificar.cache_info()
    assert info.currsize == 8
    assert info.hits == 50


# ===== TOPOLOGIA =====

def test_topologia_uniforme_ids_contiguos():
    topo = Topologia.uniforme(3, 2)
    assert topo.regiao(RegionId(1)).nos == tuple(range(5, 10))
    assert topo.regiao_de(NodeId(12)) == 2
    assert topo.nos == list(range(15))


def test_papeis_padrao_da_regiao():
    regiao = Topologia.uniforme(1, 2).regiao(RegionId(0))
    assert regiao.medidores == (0, 1, 2)
    assert regiao.guardioes == (3, 4)


def test_regiao_com_poucos_nos():
    with pytest.raises(ErroTopologia):
        Regiao(RegionId(0), (0, 1), 1)


def test_no_em_duas_regioes():
    with pytest.raises(ErroTopologia):
        Topologia([Regiao(RegionId(0), (0, 1, 2), 1), Regiao(RegionId(1), (2, 3, 4), 1)])


def test_no_desconhecido(topologia_pequena):
    with pytest.raises(ErroTopologia):
        topologia_pequena.regiao_de(NodeId(42))
    assert topologia_pequena.mesma_regiao(NodeId(0), NodeId(2))
    assert not topologia_pequena.mesma_regiao(NodeId(0), NodeId(3))


@pytest.mark.parametrize("alteracao", [
    {"regiao_destino": RegionId(0)},
    {"replicas_origem": (NodeId(0),)},
    {"replicas_destino": (NodeId(0), NodeId(1))},
    {"regiao_origem": RegionId(7)},
])
def test_fluxo_invalido(alteracao):
    campos = dict(
        tarefa_origem=TaskId(0), tarefa_destino=TaskId(1), regiao_origem=RegionId(0),
        regiao_destino=RegionId(1), replicas_origem=(NodeId(0), NodeId(1)),
        replicas_destino=(NodeId(3), NodeId(4)), periodo=ms(1000),
    )
    campos.update(alteracao)
    regioes = list(Topologia.uniforme(2, 1).regioes.values())
    with pytest.raises(ErroTopologia):
        Topologia(regioes, [FluxoAplicacao(**campos)])


def test_instantes_do_fluxo(topologia_pequena):
    fluxo = topologia_pequena.fluxos[0]
    assert fluxo.t_rls(3) == ms(3000)
    assert fluxo.t_m(3) == ms(3050)
    assert fluxo.job(3) == JobId(TaskId(0), 3)
    assert topologia_pequena.fluxo_por_tarefa(TaskId(1)) is fluxo
    with pytest.raises(ErroTopologia):
        topologia_pequena.fluxo_por_tarefa(TaskId(9))


# ===== FALHAS E TAMANHOS =====

def test_registro_falha_reconstruido_mantem_a_chave():
    original = RegistroFalha(
        TipoFalha.COMISSAO, EscopoFalha.INTER, NodeId(0), NodeId(3), ms(1200), "mensagem_incorreta",
        tarefa=TaskId(1), job=JobId(TaskId(0), 1), t_rls=ms(1000), rodada=2, regiao_ref=RegionId(0),
    )
    copia = RegistroFalha.de_conteudo(original.conteudo(), NodeId(4), ms(1300))
    assert copia.chave == original.chave
    assert copia.detector == 4
    assert copia.job == JobId(TaskId(0), 1)


def test_chave_ignora_detector():
    a = RegistroFalha(TipoFalha.OMISSAO, EscopoFalha.INTRA, NodeId(1), NodeId(0), 10, "heartbeat_ausente")
    b = RegistroFalha(TipoFalha.OMISSAO, EscopoFalha.INTRA, NodeId(1), NodeId(2), 20, "heartbeat_ausente")
    assert a.chave == b.chave


def test_modelo_tamanho():
    m = ModeloTamanho()
    assert m.assinaturas(2) == 2 * (64 + 4)
    assert m.envelope(ids=2, duracoes=1) == 16 + 8 + 8 + 64
    assert m.pacote(100) == 100 + 66
