"""
Testes da recuperação: atribuições com histórico, exclusão local, falhas de
enlace, prazos de propagação e auditoria do limite de recuperação.
"""
import pytest

from Experimentos.Cenario import TEMPOS_PADRAO_MS, Cenario
from Experimentos.Propriedades import cenario_propriedade, checar_acordo
from Nucleo.Assinatura import RegistroChaves
from Nucleo.Falhas import EscopoFalha, RegistroFalha, TipoFalha
from Nucleo.Identificadores import NodeId, RegionId, TaskId
from Nucleo.Tempo import ParametrosTempo, ms, round_schedule
from Recuperacao.CenarioFalhas import (
    TAREFA_LOG, TAREFA_MEDICAO, AtribuicaoRegiao, CenarioFalhas, ErroOrcamentoFalhas, NovaAtribuicao,
    apply_local_recovery,
)
from Recuperacao.MensagemRP import DeclaracaoFalha, MensagemRP
from Recuperacao.Propagacao import btr_deadline, deteccao_maxima, duracao_disputa, rp_round_for
from Sistema.MontadorSistema import SistemaGeoShield

TEMPOS = ParametrosTempo.de_milissegundos(**TEMPOS_PADRAO_MS)


@pytest.fixture
def atribuicao(topologia_pequena):
    return AtribuicaoRegiao(topologia_pequena.regiao(RegionId(0)), topologia_pequena.fluxos)


def _falha(culpado, detector=1, tipo=TipoFalha.COMISSAO, motivo="mensagem_incorreta", enlace=None):
    return RegistroFalha(tipo, EscopoFalha.INTRA, NodeId(culpado), NodeId(detector), ms(1200), motivo,
                         enlace=enlace)


# ===== ATRIBUIÇÕES =====

def test_papeis_e_tarefas_iniciais(atribuicao):
    assert atribuicao.membros(TAREFA_MEDICAO) == (0, 1)
    assert atribuicao.membros(TAREFA_LOG) == (2,)
    assert atribuicao.membros(TaskId(0)) == (0, 1)
    assert atribuicao.membros(TaskId(7)) == ()
    assert atribuicao.tarefas == [TAREFA_LOG, TAREFA_MEDICAO, TaskId(0)]
    assert atribuicao.tarefas_de(NodeId(0)) == [TAREFA_MEDICAO, TaskId(0)]
    assert atribuicao.carga(NodeId(2)) == 1


def test_reatribuicao_vale_a_partir_do_instante(atribuicao):
    nova = atribuicao.reatribuir(NodeId(0), TaskId(0), ms(5000))
    assert nova == NovaAtribuicao(RegionId(0), TaskId(0), NodeId(0), NodeId(2), ms(5000))
    assert atribuicao.membros(TaskId(0), ms(4999)) == (0, 1)
    assert atribuicao.membros(TaskId(0), ms(5000)) == (1, 2)
    assert atribuicao.membros(TaskId(0)) == (1, 2)


def test_aplicar_e_idempotente(atribuicao):
    nova = NovaAtribuicao(RegionId(0), TaskId(0), NodeId(0), NodeId(2), ms(5000))
    atribuicao.aplicar(nova)
    atribuicao.aplicar(nova)
    assert atribuicao.membros(TaskId(0)) == (1, 2)
    assert atribuicao.membros(TaskId(0), ms(1000)) == (0, 1)


def test_copia_independente(atribuicao):
    copia = atribuicao.copia()
    copia.reatribuir(NodeId(0), TaskId(0), ms(5000))
    assert atribuicao.membros(TaskId(0)) == (0, 1)


# ===== RECUPERAÇÃO LOCAL =====

def test_falha_de_no_exclui_e_reatribui(atribuicao):
    cenario = CenarioFalhas()
    trocas = apply_local_recovery(cenario, atribuicao, _falha(0), ms(3000))

    assert [t.tarefa for t in trocas] == [TAREFA_MEDICAO, TaskId(0)]
    assert {t.entrou for t in trocas} == {2}
    assert cenario.fn == {0}
    assert atribuicao.excluidos == {0}
    assert atribuicao.contadores[NodeId(0)] == 1
    assert atribuicao.membros(TAREFA_MEDICAO) == (1, 2)
    assert atribuicao.tarefas_de(NodeId(0)) == []


def test_falha_repetida_nao_reatribui(atribuicao):
    cenario = CenarioFalhas()
    apply_local_recovery(cenario, atribuicao, _falha(0), ms(3000))
    assert apply_local_recovery(cenario, atribuicao, _falha(0, detector=2), ms(4000)) == []


def test_orcamento_de_falhas_excedido(atribuicao):
    cenario = CenarioFalhas()
    apply_local_recovery(cenario, atribuicao, _falha(0), ms(3000))
    with pytest.raises(ErroOrcamentoFalhas):
        apply_local_recovery(cenario, atribuicao, _falha(1, detector=2), ms(4000))
    assert cenario.fora_do_modelo


def test_falha_de_enlace_entre_medidores(atribuicao):
    cenario = CenarioFalhas()
    registro = _falha(1, detector=0, tipo=TipoFalha.ENLACE, motivo="enlace", enlace=(NodeId(0), NodeId(1)))
    trocas = apply_local_recovery(cenario, atribuicao, registro, ms(3000))

    assert cenario.enlace_falho(NodeId(1), NodeId(0))
    assert not cenario.fn
    assert [(t.tarefa, t.saiu, t.entrou) for t in trocas] == [(TAREFA_MEDICAO, 1, 2)]
    # o culpado do enlace continua réplica de τ0
    assert 1 in atribuicao.membros(TaskId(0))
    assert apply_local_recovery(cenario, atribuicao, registro, ms(4000)) == []


def test_falha_de_enlace_fora_dos_medidores(atribuicao):
    cenario = CenarioFalhas()
    registro = _falha(2, detector=0, tipo=TipoFalha.ENLACE, motivo="enlace", enlace=(NodeId(0), NodeId(2)))
    assert apply_local_recovery(cenario, atribuicao, registro, ms(3000)) == []
    assert cenario.enlace_falho(NodeId(0), NodeId(2))


# ===== PRAZOS =====

def test_prazo_de_recuperacao():
    assert btr_deadline(TEMPOS) == 2 * ms(5 + 1000 + 4 + 1 + 200)


def test_rodada_da_mensagem_rp():
    n = rp_round_for(ms(3000), ms(150), TEMPOS)
    assert n == 4
    assert round_schedule(n, TEMPOS).t_sig >= ms(3150)
    assert round_schedule(n - 1, TEMPOS).t_sig < ms(3150)


def test_deteccao_maxima_por_motivo(topologia_pequena):
    disputa = _falha(3, detector=4, motivo="aceite_equivocado")
    generica = _falha(3, detector=4, motivo="heartbeat_ausente")
    params = lambda regiao: TEMPOS
    assert deteccao_maxima(disputa, TEMPOS, topologia_pequena, params) == duracao_disputa(TEMPOS)
    assert deteccao_maxima(generica, TEMPOS, topologia_pequena, params) == TEMPOS.d_det


# ===== MENSAGENS =====

def test_mensagem_rp_independe_do_detector():
    a = MensagemRP.de_registro(RegionId(0), _falha(0, detector=1))
    b = MensagemRP.de_registro(RegionId(0), _falha(0, detector=2))
    assert a.conteudo() == b.conteudo()
    assert a.culpado == 0
    assert a.tipo == "comissao"


def test_declaracao_de_falha_assinada():
    registro = RegistroChaves(2, range(3))
    declaracao = DeclaracaoFalha.criar(registro.assinador(NodeId(1)), _falha(0))
    assert declaracao.valida(registro)
    assert not DeclaracaoFalha(NodeId(2), declaracao.registro, declaracao.assinatura).valida(registro)


# ===== ENSAIO =====

def test_no_silencioso_recuperado_no_prazo():
    dados = cenario_propriedade(1, "silenciosa", 0, {}, 8000)
    resultado = SistemaGeoShield(Cenario.de_dict(dados), semente=5, registrar_trace=False).executar()
    coletor = resultado.coletor

    assert any(a.culpado == 0 for a in coletor.adocoes)
    relatorio = resultado.auditoria()
    assert relatorio.ok
    assert checar_acordo(resultado) == 0
