"""
Testes do sistema montado: ensaio completo curto, exportação, determinismo
por semente, consumidores e largura de banda.
"""
import csv
import json

import pytest

from Experimentos.Cenario import Cenario, carregar_cenario
from Experimentos.Propriedades import cenario_propriedade
from Nucleo.Tempo import ms
from Sistema.MontadorSistema import SistemaGeoShield

from conftest import DIR_CENARIOS


def _cabecalho(caminho):
    with open(caminho, "r", encoding="utf-8") as arquivo:
        return next(csv.reader(arquivo))


def test_ensaio_sem_ataque_permanece_normal(cenario_base):
    resultado = SistemaGeoShield(cenario_base, registrar_trace=False).executar()
    assert resultado.permaneceu_normal
    assert resultado.t_modo_seguro is None
    assert resultado.coletor.rodadas
    assert all(r.valor is not None for r in resultado.coletor.rodadas)
    assert resultado.duracao == ms(5000)


def test_mesma_semente_mesmo_ensaio(cenario_base):
    a = SistemaGeoShield(cenario_base, semente=21, registrar_trace=False).executar()
    b = SistemaGeoShield(cenario_base, semente=21, registrar_trace=False).executar()
    assert a.coletor.rodadas == b.coletor.rodadas
    assert a.coletor.veredictos == b.coletor.veredictos
    assert a.bytes_enviados == b.bytes_enviados


def test_execucao_retomada_igual_a_execucao_direta(cenario_base):
    direta = SistemaGeoShield(cenario_base, semente=4, registrar_trace=False).executar()
    sistema = SistemaGeoShield(cenario_base, semente=4, registrar_trace=False)
    sistema.executar(ms(2000))
    retomada = sistema.executar()
    assert retomada.coletor.rodadas == direta.coletor.rodadas


def test_semente_do_cenario_e_padrao(dados_base):
    cenario = Cenario.de_dict(dados_base)
    assert SistemaGeoShield(cenario).semente == 7
    assert SistemaGeoShield(cenario, semente=0).semente == 0


def test_consumidores_recebem_as_entradas_das_replicas(cenario_base):
    recebidas = []

    def consumidor(no, fluxo, job, mensagem, estado):
        recebidas.append((no.id, fluxo.nome, job.invocacao, estado))

    SistemaGeoShield(cenario_base, registrar_trace=False, consumidores=[consumidor]).executar()
    assert recebidas
    assert {estado for *_, estado in recebidas} <= {"provisoria", "confirmada", "corrigida", "endossada"}
    # réplicas iniciais de τ1 (ida) são os nós 3 e 4
    assert {no for no, fluxo, *_ in recebidas if fluxo == "ida"} <= {3, 4}


def test_largura_de_banda(cenario_base):
    resultado = SistemaGeoShield(cenario_base, registrar_trace=False).executar()
    banda = resultado.largura_banda()
    assert set(banda.por_no) == set(cenario_base.topologia.nos)
    assert banda.intra_kb_s > 0
    assert banda.inter_kb_s > 0
    assert banda.media("inter", nos=[]) == 0.0


def test_exportacao_do_ensaio(cenario_base, tmp_path):
    resultado = SistemaGeoShield(cenario_base, registrar_chegadas=True).executar()
    arquivos = {caminho.name for caminho in resultado.exportar(tmp_path)}

    assert arquivos == {"rodadas.csv", "veredictos.csv", "disputas.jsonl", "modo_seguro.csv",
                        "auditoria_btr.csv", "scores.csv", "chegadas.csv", "trace.csv"}
    assert _cabecalho(tmp_path / "rodadas.csv") == ["round", "from_region", "region", "node", "d_n_ns",
                                                    "dispute", "d_real_ns", "t_decision_ns"]
    assert _cabecalho(tmp_path / "trace.csv") == ["time_ns", "node", "event_kind", "details"]
    assert _cabecalho(tmp_path / "chegadas.csv")[-1] == "latency_ns"
    for linha in (tmp_path / "disputas.jsonl").read_text(encoding="utf-8").splitlines():
        assert "dentro_do_prazo" in json.loads(linha)


def test_exportacao_sem_trace_nem_scores(cenario_base, tmp_path):
    resultado = SistemaGeoShield(cenario_base, registrar_trace=False, registrar_scores=False).executar()
    arquivos = {caminho.name for caminho in resultado.exportar(tmp_path)}
    assert "trace.csv" not in arquivos
    assert "scores.csv" not in arquivos


def test_sem_deteccao_nada_e_declarado():
    dados = cenario_propriedade(1, "saida_incorreta", 0, {"carga": {"valor": 99}}, 4000)
    com = SistemaGeoShield(Cenario.de_dict(dados), semente=3, registrar_trace=False).executar()
    sem = SistemaGeoShield(Cenario.de_dict(dados), semente=3, registrar_trace=False, deteccao=False).executar()

    assert com.coletor.falhas
    assert sem.coletor.falhas == []
    assert sem.coletor.modo_seguro == []
    assert any(v.veredito == "incorreta" for v in sem.coletor.veredictos)


# ===== CENÁRIOS PUBLICADOS =====

@pytest.mark.parametrize("arquivo", sorted(p.name for p in DIR_CENARIOS.glob("*.json")))
def test_cenarios_publicados_rodam_os_primeiros_segundos(arquivo):
    sistema = SistemaGeoShield(carregar_cenario(DIR_CENARIOS / arquivo), registrar_trace=False)
    resultado = sistema.executar(ms(2500))
    assert resultado.coletor.rodadas


def test_cenario_base_de_ponta_a_ponta():
    cenario = carregar_cenario(DIR_CENARIOS / "base.json")
    resultado = SistemaGeoShield(cenario.com(duracao=ms(8000)), registrar_trace=False).executar()
    assert resultado.permaneceu_normal
    assert resultado.t_modo_seguro is None
    assert not resultado.coletor.falhas
    assert {v.veredito for v in resultado.coletor.veredictos if v.remetente is not None} == {"correta"}
