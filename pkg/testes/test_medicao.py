"""
Testes da medição de latência: validade das mensagens, regras da disputa e
ensaios curtos com e sem equívoco de aceite.
"""
from dataclasses import replace

import pytest

from Experimentos.Cenario import Cenario
from Experimentos.Propriedades import (
    cenario_propriedade, checar_acordo, checar_disputas, checar_precisao,
)
from Medicao.Disputa import (
    entradas_validas, escolher_novo_aceite, novo_aceite_valido, valor_esperado_do_log,
)
from Medicao.Mensagens import (
    TIMEOUT, Aceite, Anexos, DeclaracaoDisputa, EntradaLog, Heartbeat, LogPropostas, NovoAceite,
    Proposta, chave_proposta, conteudo_endosso, conteudo_rodada,
)
from Nucleo.Assinatura import RegistroChaves
from Nucleo.Identificadores import NodeId, RegionId
from Nucleo.Tempo import ms
from Nucleo.Topologia import Topologia
from Sistema.MontadorSistema import SistemaGeoShield

N = 5
DELTA = ms(2.406)


@pytest.fixture
def topologia():
    return Topologia.uniforme(2, 1)


@pytest.fixture
def registro():
    return RegistroChaves(1, range(6))


@pytest.fixture
def assinadores(registro):
    return {no: registro.assinador(NodeId(no)) for no in range(6)}


def _heartbeat(assinadores, signatarios=(0, 1), remetente=0, n=N):
    anexos = Anexos()
    conteudo = conteudo_rodada(RegionId(0), n, anexos)
    assinaturas = tuple(assinadores[x].assinar(conteudo) for x in signatarios)
    return Heartbeat.criar(assinadores[remetente], RegionId(0), n, assinaturas, anexos)


@pytest.fixture
def heartbeat(assinadores):
    return _heartbeat(assinadores)


@pytest.fixture
def propostas(assinadores, heartbeat):
    """N4 mede 40 ms e N3 mede 39 ms sobre o mesmo heartbeat."""
    p_a = Proposta.criar(assinadores[4], RegionId(0), N, ms(40), heartbeat)
    p_b = Proposta.criar(assinadores[3], RegionId(0), N, ms(39), heartbeat)
    return p_a, p_b


def _log(assinador, propostas, usadas=True):
    chaves = [chave_proposta(p) for p in propostas] if usadas else []
    aceite = Aceite.criar(assinador, RegionId(0), N, ms(39) + DELTA)
    return LogPropostas.criar(assinador, RegionId(0), N, propostas, aceite, usadas=chaves)


# ===== HEARTBEAT =====

def test_heartbeat_valido(heartbeat, registro, topologia):
    assert heartbeat.valido(registro, topologia)
    assert heartbeat.assinaturas_rodada[0].signatario == 0


def test_heartbeat_com_uma_assinatura_de_rodada(assinadores, registro, topologia):
    assert not _heartbeat(assinadores, signatarios=(0,)).valido(registro, topologia)


def test_heartbeat_com_assinatura_de_outra_regiao(assinadores, registro, topologia):
    assert not _heartbeat(assinadores, signatarios=(0, 3)).valido(registro, topologia)


def test_heartbeat_assinaturas_repetidas_nao_somam(assinadores, registro, topologia):
    assert not _heartbeat(assinadores, signatarios=(1, 1)).valido(registro, topologia)


def test_heartbeat_de_remetente_fora_da_regiao(assinadores, registro, topologia):
    assert not _heartbeat(assinadores, remetente=4).valido(registro, topologia)


def test_heartbeat_adulterado(heartbeat, registro, topologia):
    assert not replace(heartbeat, n=N + 1).valido(registro, topologia)


def test_anexos_vazios_tem_hash_estavel():
    assert Anexos().vazio()
    assert Anexos().hash == Anexos().hash


# ===== PROPOSTAS E ACEITES =====

def test_proposta_identifica_o_par(propostas, registro):
    p_a, _ = propostas
    assert p_a.emissor == 0
    assert p_a.par == (0, 4)
    assert p_a.assinatura_valida(registro)
    assert not replace(p_a, d=ms(1)).assinatura_valida(registro)


def test_aceite_timeout_assinado(assinadores, registro):
    aceite = Aceite.criar(assinadores[3], RegionId(0), N, TIMEOUT)
    assert aceite.valido(registro)
    assert "TIMEOUT" in repr(aceite)


def test_declaracao_com_aceites_divergentes(assinadores, registro):
    a = Aceite.criar(assinadores[3], RegionId(0), N, ms(42))
    b = Aceite.criar(assinadores[4], RegionId(0), N, ms(45))
    decl = DeclaracaoDisputa.criar(assinadores[5], RegionId(0), N, a, b, None, ms(5203))
    assert decl.assinatura_valida(registro)
    assert decl.conteudo_valido(registro)


def test_declaracao_com_aceites_iguais_nao_vale(assinadores, registro):
    a = Aceite.criar(assinadores[3], RegionId(0), N, ms(42))
    b = Aceite.criar(assinadores[4], RegionId(0), N, ms(42))
    decl = DeclaracaoDisputa.criar(assinadores[5], RegionId(0), N, a, b, None, ms(5203))
    assert not decl.conteudo_valido(registro)


def test_declaracao_com_aceite_de_outra_rodada_nao_vale(assinadores, registro):
    a = Aceite.criar(assinadores[3], RegionId(0), N, ms(42))
    b = Aceite.criar(assinadores[4], RegionId(0), N + 1, ms(45))
    decl = DeclaracaoDisputa.criar(assinadores[5], RegionId(0), N, a, b, None, ms(5203))
    assert not decl.conteudo_valido(registro)


def test_declaracao_com_aceite_forjado_nao_vale(assinadores, registro):
    a = Aceite.criar(assinadores[3], RegionId(0), N, ms(42))
    b = replace(Aceite.criar(assinadores[4], RegionId(0), N, ms(45)), valor=ms(46))
    decl = DeclaracaoDisputa.criar(assinadores[5], RegionId(0), N, a, b, None, ms(5203))
    assert not decl.conteudo_valido(registro)


# ===== LOGS E NOVO ACEITE =====

def test_valor_esperado_do_log(assinadores, propostas):
    log = _log(assinadores[3], propostas)
    assert valor_esperado_do_log(log, DELTA) == ms(39) + DELTA
    assert valor_esperado_do_log(_log(assinadores[3], propostas, usadas=False), DELTA) is TIMEOUT


def test_entradas_do_log(assinadores, propostas, registro):
    log = _log(assinadores[3], propostas)
    assert log.valido(registro)
    assert entradas_validas(log, registro)

    p_a, _ = propostas
    endosso_alheio = EntradaLog(p_a, assinadores[4].assinar(conteudo_endosso(p_a)), True)
    assert not entradas_validas(replace(log, entradas=(endosso_alheio,)), registro)


def test_escolhe_o_par_de_menor_latencia_com_apoio(assinadores, propostas):
    p_a, p_b = propostas
    logs = [_log(assinadores[3], propostas), _log(assinadores[4], propostas)]

    escolhida, endossos = escolher_novo_aceite(logs, f=1)
    assert escolhida == p_b
    assert sorted(e.signatario for e in endossos) == [3, 4]

    escolhida, _ = escolher_novo_aceite(logs, f=1, excluidos={NodeId(3)})
    assert escolhida == p_a


def test_sem_apoio_suficiente_nao_escolhe(assinadores, propostas):
    p_a, p_b = propostas
    logs = [_log(assinadores[3], [p_b]), _log(assinadores[4], [p_a])]
    assert escolher_novo_aceite(logs, f=1) == (None, ())


def test_novo_aceite_valido(assinadores, propostas, registro):
    _, p_b = propostas
    logs = [_log(assinadores[3], propostas), _log(assinadores[4], propostas)]
    escolhida, endossos = escolher_novo_aceite(logs, f=1)
    novo = NovoAceite.criar(assinadores[5], RegionId(0), N, escolhida, endossos, p_b.d + DELTA)

    assert novo_aceite_valido(novo, [3, 4, 5], 1, DELTA, registro)
    # endossos de fora dos participantes não contam
    assert not novo_aceite_valido(novo, [3, 5], 1, DELTA, registro)


def test_novo_aceite_com_valor_errado(assinadores, propostas, registro):
    _, p_b = propostas
    logs = [_log(assinadores[3], propostas), _log(assinadores[4], propostas)]
    escolhida, endossos = escolher_novo_aceite(logs, f=1)
    novo = NovoAceite.criar(assinadores[5], RegionId(0), N, escolhida, endossos, p_b.d + DELTA + 1)
    assert not novo_aceite_valido(novo, [3, 4, 5], 1, DELTA, registro)


def test_novo_aceite_timeout(assinadores, registro):
    timeout = NovoAceite.criar(assinadores[5], RegionId(0), N, None, (), TIMEOUT)
    assert novo_aceite_valido(timeout, [3, 4, 5], 1, DELTA, registro)
    sem_proposta = NovoAceite.criar(assinadores[5], RegionId(0), N, None, (), ms(40))
    assert not novo_aceite_valido(sem_proposta, [3, 4, 5], 1, DELTA, registro)


# ===== ENSAIOS =====

def _executar(dados, semente=3):
    return SistemaGeoShield(Cenario.de_dict(dados), semente=semente, registrar_trace=False).executar()


def test_ensaio_sem_ataque_decide_em_acordo():
    resultado = _executar(cenario_propriedade(1, duracao_ms=6000))
    assert resultado.coletor.rodadas
    assert checar_acordo(resultado) == 0
    avaliadas, abaixo, _ = checar_precisao(resultado)
    assert avaliadas > 0
    assert abaixo == 0
    assert resultado.permaneceu_normal


def test_equivoco_de_aceite_vira_disputa_resolvida():
    resultado = _executar(cenario_propriedade(1, "aceite_equivocado", 0, {}, 6000))
    coletor = resultado.coletor
    assert coletor.disputas
    assert any(r.disputa for r in coletor.rodadas)
    assert checar_acordo(resultado) == 0
    assert checar_disputas(resultado) == 0
