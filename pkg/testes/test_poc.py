"""
Testes da prova de corretude: mensagens de aplicação, parcelas, PoC final,
entrada endossada e veredito das réplicas de destino.
"""
from dataclasses import replace

import pytest

from Experimentos.Cenario import TEMPOS_PADRAO_MS, Cenario
from Experimentos.Propriedades import cenario_propriedade, checar_vereditos
from Nucleo.Assinatura import RegistroChaves
from Nucleo.Identificadores import JobId, NodeId, TaskId
from Nucleo.Tempo import ParametrosTempo, ms, round_schedule
from PoC.ProvaCorretude import (
    EntradaEndossada, MensagemAplicacao, ParcelaPoC, PoC, conteudo_parcela, poc_round_for,
)
from PoC.ValidacaoPoC import hash_esperado
from Sistema.MontadorSistema import SistemaGeoShield

TEMPOS = ParametrosTempo.de_milissegundos(**TEMPOS_PADRAO_MS)
JOB = JobId(TaskId(0), 4)


@pytest.fixture
def registro():
    return RegistroChaves(5, range(6))


@pytest.fixture
def mensagem(registro):
    return MensagemAplicacao.criar(registro.assinador(NodeId(0)), TaskId(0), TaskId(1), JOB, {"job": 4, "valor": 1})


def _poc(registro, signatarios, job=JOB, hash_m=b"h"):
    parcelas = [ParcelaPoC.criar(registro.assinador(NodeId(x)), TaskId(1), job, hash_m) for x in signatarios]
    return PoC(TaskId(1), job, hash_m, tuple(p.assinatura for p in parcelas))


# ===== MENSAGENS =====

def test_mensagem_assinada(mensagem, registro):
    assert mensagem.valida(registro)
    assert not replace(mensagem, carga={"job": 4, "valor": 2}).valida(registro)


def test_hash_independe_do_remetente(registro, mensagem):
    outra = MensagemAplicacao.criar(registro.assinador(NodeId(1)), TaskId(0), TaskId(1), JOB, {"job": 4, "valor": 1})
    assert outra.hash == mensagem.hash
    assert outra.assinatura != mensagem.assinatura


def test_hash_muda_com_o_job(registro):
    a = MensagemAplicacao.criar(registro.assinador(NodeId(0)), TaskId(0), TaskId(1), JobId(TaskId(0), 1), {"v": 1})
    b = MensagemAplicacao.criar(registro.assinador(NodeId(0)), TaskId(0), TaskId(1), JobId(TaskId(0), 2), {"v": 1})
    assert a.hash != b.hash


def test_parcela_valida(registro, mensagem):
    parcela = ParcelaPoC.criar(registro.assinador(NodeId(1)), TaskId(1), JOB, mensagem.hash)
    assert parcela.valida(registro)
    assert not replace(parcela, hash_m=b"outro").valida(registro)


def test_hash_esperado_da_saida_deterministica(topologia_pequena, registro):
    fluxo = topologia_pequena.fluxos[0]
    job = fluxo.job(3)
    correta = MensagemAplicacao.criar(registro.assinador(NodeId(0)), fluxo.tarefa_origem, fluxo.tarefa_destino,
                                      job, fluxo.saida(job))
    assert hash_esperado(fluxo, job) == correta.hash


# ===== PoC =====

def test_poc_final_com_f_mais_um(registro):
    assert _poc(registro, (0, 1)).final(1, [0, 1, 2], registro)


@pytest.mark.parametrize("signatarios, permitidos", [
    ((0,), [0, 1, 2]),
    ((0, 0), [0, 1, 2]),
    ((0, 3), [0, 1, 2]),
    ((0, 1), [0, 2]),
])
def test_poc_sem_assinaturas_suficientes(registro, signatarios, permitidos):
    assert not _poc(registro, signatarios).final(1, permitidos, registro)


def test_poc_antiga_nao_vale_para_outro_job(registro):
    antiga = _poc(registro, (0, 1), job=JobId(TaskId(0), 3))
    reaproveitada = replace(antiga, job=JOB)
    assert not reaproveitada.final(1, [0, 1, 2], registro)


def test_ordem_canonica_das_pocs(registro):
    a = _poc(registro, (0, 1), job=JobId(TaskId(0), 2))
    b = _poc(registro, (0, 1), job=JobId(TaskId(0), 1))
    assert sorted([a, b], key=PoC.chave_ordem) == [b, a]


def test_entrada_endossada(registro, mensagem):
    conteudo = conteudo_parcela(TaskId(1), JOB, mensagem.hash)
    endossos = tuple(registro.sign(NodeId(x), conteudo) for x in (1, 2))
    entrada = EntradaEndossada(NodeId(1), mensagem, endossos)
    assert entrada.valida(1, [0, 1, 2], registro)
    assert not entrada.valida(1, [0, 1], registro)
    assert not replace(entrada, mensagem=replace(mensagem, carga={"x": 1})).valida(1, [0, 1, 2], registro)


def test_rodada_da_poc_e_a_primeira_apos_o_intervalo():
    t_m = ms(3050)
    n = poc_round_for(t_m, TEMPOS)
    assert round_schedule(n, TEMPOS).t_send >= t_m + TEMPOS.d_gap_poc
    assert round_schedule(n - 1, TEMPOS).t_send < t_m + TEMPOS.d_gap_poc
    assert n == 4


# ===== ENSAIOS =====

def _executar(dados, semente=11):
    return SistemaGeoShield(Cenario.de_dict(dados), semente=semente, registrar_trace=False).executar()


def test_sem_ataque_todas_as_mensagens_corretas():
    resultado = _executar(cenario_propriedade(1, duracao_ms=6000))
    vereditos = resultado.coletor.veredictos
    assert vereditos
    assert {v.veredito for v in vereditos if v.remetente is not None} == {"correta"}
    assert checar_vereditos(resultado) == 0


def test_saida_incorreta_detectada_pelas_replicas():
    # Parcela com o hash correto: só o destino percebe, pela PoC
    dados = cenario_propriedade(1, "saida_incorreta", 0, {"carga": {"valor": 99}, "parcela": "correta"}, 6000)
    resultado = _executar(dados)
    coletor = resultado.coletor

    incorretas = [v for v in coletor.veredictos if v.veredito == "incorreta" and coletor.correto(v.no)]
    assert incorretas
    assert {v.remetente for v in incorretas} == {0}
    assert checar_vereditos(resultado) == 0
    assert any(r.culpado == 0 and r.motivo == "mensagem_incorreta" for r in coletor.falhas)
    assert {v.veredito for v in coletor.veredictos if v.remetente == 1} <= {"correta"}


def test_parcela_forjada_denunciada_pelos_medidores():
    dados = cenario_propriedade(1, "saida_incorreta", 0, {"carga": {"valor": 99}}, 3000)
    coletor = _executar(dados).coletor

    divergentes = [r for r in coletor.falhas if r.motivo == "parcela_divergente" and coletor.correto(r.detector)]
    assert divergentes
    assert {r.culpado for r in divergentes} == {0}


def test_periodo_curto_sem_autoacusacao():
    # Mais de 8 jobs por rodada: a PoC de cada job sai uma única vez
    dados = cenario_propriedade(1, duracao_ms=1500)
    for fluxo in dados["topologia"]["fluxos"]:
        fluxo["periodo_ms"] = 100
    resultado = _executar(dados)

    assert not [r for r in resultado.coletor.falhas if r.motivo.startswith("parcela_")]
    assert resultado.permaneceu_normal
    assert not [r for r in resultado.coletor.falhas if r.culpado == r.detector]
    chaves = [(v.fluxo, v.job, v.no, v.remetente) for v in resultado.coletor.veredictos]
    assert chaves and len(chaves) == len(set(chaves))
