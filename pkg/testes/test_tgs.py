"""
Testes do TGS: parâmetros exatos, tabela de scores, rodada de reclamações,
escolha do substituto e limites de sinalização.
"""
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from Experimentos.Propriedades import (
    busca_limite_curto_prazo, busca_limite_longo_prazo, identidades_tgs, max_suspeitos_forca_bruta,
    max_suspeitos_sem_sinalizar, padrao_sinalizado,
)
from Nucleo.Erros import ErroParametros
from Nucleo.Identificadores import NodeId, RegionId, TaskId
from Nucleo.Tempo import ms
from Nucleo.Topologia import FluxoAplicacao, Regiao
from Recuperacao.CenarioFalhas import AtribuicaoRegiao
from TGS.GovernancaTGS import classify_and_claim
from TGS.ParametrosTGS import ParametrosTGS
from TGS.Substituicao import ErroSemSubstituto, select_replacement
from TGS.TabelaScores import TabelaScores, apply_round

PADRAO = ParametrosTGS.de_valores(0.01, 5, 0.999)
PEQUENO = ParametrosTGS.de_valores(0.5, 2, 0.9)


# ===== PARÂMETROS =====

def test_valores_exatos_dos_parametros_padrao():
    assert PADRAO.alfa == Fraction(1, 100)
    assert PADRAO.s_pen == Fraction(1, 5)
    assert PADRAO.s_awd == Fraction(20, 999)
    assert PADRAO.expected_increment == Fraction(99, 5000)


def test_identidades_exatas():
    assert all(identidades_tgs(PADRAO).values())
    assert all(identidades_tgs(PEQUENO).values())


@given(alfa=st.fractions(min_value=Fraction(1, 1000), max_value=1),
       beta=st.integers(min_value=1, max_value=50),
       p=st.fractions(min_value=Fraction(1, 100), max_value=Fraction(999, 1000)))
def test_identidades_para_quaisquer_parametros(alfa, beta, p):
    tgs = ParametrosTGS(alfa, beta, p)
    assert all(identidades_tgs(tgs).values())
    assert tgs.expected_increment >= 0


def test_p_longo_prazo():
    assert ParametrosTGS(Fraction(1), 3, Fraction(9, 10)).p_longo_prazo == Fraction(9, 10)
    assert PADRAO.p_longo_prazo < PADRAO.p_norm


def test_janela_de_curto_prazo():
    assert PADRAO.janela(1) == Fraction(1599, 100)
    assert PADRAO.janela_inteira(1) == 16


def test_adaptativo_aplicavel():
    assert PADRAO.adaptativo_aplicavel(1)
    assert not PADRAO.adaptativo_aplicavel(4)


@pytest.mark.parametrize("alfa, beta, p", [
    (0, 5, 0.999),
    (1.5, 5, 0.999),
    (0.01, 0, 0.999),
    (0.01, 2.5, 0.999),
    (0.01, 5, 1),
    (0.01, 5, 0),
])
def test_parametros_invalidos(alfa, beta, p):
    with pytest.raises(ErroParametros):
        ParametrosTGS.de_valores(alfa, beta, p)


# ===== TABELA DE SCORES =====

def test_beta_penalidades_zeram_o_score_e_sinalizam_uma_vez():
    tabela = TabelaScores(PADRAO)
    sinais = [tabela.penalizar(NodeId(0), TaskId(0)) for _ in range(PADRAO.beta)]
    assert sinais == [False] * (PADRAO.beta - 1) + [True]
    assert tabela.score(NodeId(0), TaskId(0)) == 0
    assert not tabela.penalizar(NodeId(0), TaskId(0))
    assert tabela.penalidades == PADRAO.beta + 1


def test_premio_limitado_a_s_max():
    tabela = TabelaScores(PADRAO)
    tabela.penalizar(NodeId(0), TaskId(0))
    tabela.premiar(NodeId(0), TaskId(0), vezes=1000)
    assert tabela.score(NodeId(0), TaskId(0)) == PADRAO.s_max
    tabela.premiar(NodeId(0), TaskId(0), vezes=0)
    assert tabela.premios == 1000


def test_registrar_reinicia_a_entrada():
    tabela = TabelaScores(PEQUENO)
    tabela.penalizar(NodeId(1), TaskId(0))
    assert tabela.penalizar(NodeId(1), TaskId(0))
    tabela.registrar(NodeId(1), TaskId(0))
    assert tabela.score(NodeId(1), TaskId(0)) == PEQUENO.s_max
    tabela.penalizar(NodeId(1), TaskId(0))
    assert tabela.penalizar(NodeId(1), TaskId(0))
    tabela.remover(NodeId(1), TaskId(0))
    assert (NodeId(1), TaskId(0)) not in tabela.scores


def test_contadores_de_sinalizacao():
    tabela = TabelaScores(PADRAO)
    assert tabela.contador(NodeId(2)) == 0
    tabela.incrementar_contador(NodeId(2))
    assert tabela.incrementar_contador(NodeId(2)) == 2


def test_rodada_penaliza_as_duas_pontas_do_par_reclamado():
    tgs = ParametrosTGS.de_valores(0.5, 1, 0.9)
    tabela = TabelaScores(tgs)
    reclamado = ((NodeId(0), TaskId(0)), (NodeId(3), TaskId(1)))
    normal = ((NodeId(1), TaskId(0)), (NodeId(4), TaskId(1)))
    tabela.penalizar(NodeId(4), TaskId(1))

    sinalizadas = apply_round(tabela, [reclamado, normal], [reclamado])
    assert sinalizadas == [(NodeId(0), TaskId(0)), (NodeId(3), TaskId(1))]
    assert tabela.score(NodeId(1), TaskId(0)) == tgs.s_max
    assert tabela.score(NodeId(4), TaskId(1)) == tgs.s_awd


def test_reclamacao_de_par_inativo_tambem_conta():
    tabela = TabelaScores(PEQUENO)
    par = ((NodeId(0), TaskId(0)), (NodeId(3), TaskId(1)))
    apply_round(tabela, [], [par])
    assert tabela.score(NodeId(0), TaskId(0)) == PEQUENO.s_max - PEQUENO.s_pen


def test_classifica_chegadas_tardias_e_ausentes():
    chegadas = {NodeId(0): ms(40), NodeId(1): None, NodeId(2): ms(60)}
    assert classify_and_claim(NodeId(3), chegadas, 0, ms(50)) == ((1, 3), (2, 3))
    assert classify_and_claim(NodeId(3), {NodeId(0): ms(50)}, 0, ms(50)) == ()


# ===== SUBSTITUTO =====

def _atribuicao(nos=(0, 1, 2, 3, 4), capacidade=4):
    regiao = Regiao(RegionId(0), tuple(NodeId(n) for n in nos), 1, capacidade=capacidade)
    fluxo = FluxoAplicacao(
        tarefa_origem=TaskId(0), tarefa_destino=TaskId(1), regiao_origem=RegionId(0),
        regiao_destino=RegionId(1), replicas_origem=(NodeId(0), NodeId(1)),
        replicas_destino=(NodeId(7), NodeId(8)), periodo=ms(1000),
    )
    return AtribuicaoRegiao(regiao, [fluxo])


def test_substituto_de_menor_id():
    assert select_replacement(_atribuicao(), NodeId(0), TaskId(0)) == 2


def test_substituto_prefere_menor_contador():
    atribuicao = _atribuicao()
    atribuicao.contadores[NodeId(2)] = 1
    assert select_replacement(atribuicao, NodeId(0), TaskId(0)) == 3


def test_substituto_respeita_capacidade():
    # N2 já é guardião de log e não tem slot livre
    assert select_replacement(_atribuicao(capacidade=1), NodeId(0), TaskId(0)) == 3


def test_sem_substituto():
    with pytest.raises(ErroSemSubstituto):
        select_replacement(_atribuicao(nos=(0, 1, 2), capacidade=1), NodeId(0), TaskId(0))


# ===== LIMITES =====

@pytest.mark.parametrize("comprimento", range(1, 13))
def test_programacao_dinamica_igual_a_forca_bruta(comprimento):
    assert max_suspeitos_sem_sinalizar(PEQUENO, comprimento) == max_suspeitos_forca_bruta(PEQUENO, comprimento)


def test_padroes_sinalizados():
    assert padrao_sinalizado(PEQUENO, (True,))
    assert not padrao_sinalizado(PEQUENO, (False,))
    assert not padrao_sinalizado(PEQUENO, (True,) + (False,) * 20)


def test_limite_de_longo_prazo_sem_contraexemplos():
    relatorio = busca_limite_longo_prazo(PEQUENO, periodo_maximo=10, periodo_exaustivo=8)
    assert relatorio.padroes > 0
    assert relatorio.abaixo_de_p > 0
    assert relatorio.ok


def test_limite_de_curto_prazo():
    linhas = busca_limite_curto_prazo(0.5, 0.9, betas=range(1, 4), ks=(1, 2))
    assert len(linhas) == 6
    assert all(linha.ok for linha in linhas)
    assert all(linha.comprimento == int(linha.janela) for linha in linhas)
