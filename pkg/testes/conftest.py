"""
Fixtures compartilhadas dos testes do simulador.
"""
import copy
import json
from pathlib import Path

import pytest

from Experimentos.Cenario import TEMPOS_PADRAO_MS, Cenario
from Nucleo.Assinatura import RegistroChaves
from Nucleo.Identificadores import NodeId, RegionId, TaskId
from Nucleo.Tempo import ParametrosTempo, ms
from Nucleo.Topologia import FluxoAplicacao, Topologia

RAIZ = Path(__file__).resolve().parent.parent
DIR_CENARIOS = RAIZ / "Cenarios"

DADOS_BASE = {
    "versao": "geoshield-cenario/1",
    "nome": "teste",
    "semente": 7,
    "duracao_ms": 5000,
    "topologia": {
        "uniforme": {"regioes": 2, "f": 1},
        "fluxos": [
            {"nome": "ida", "tarefa_origem": 0, "tarefa_destino": 1, "regiao_origem": 0,
             "regiao_destino": 1, "periodo_ms": 1000, "prazo_ms": 50, "carga": {"valor": 1}},
            {"nome": "volta", "tarefa_origem": 2, "tarefa_destino": 3, "regiao_origem": 1,
             "regiao_destino": 0, "periodo_ms": 1000, "prazo_ms": 50, "carga": {"valor": 2}},
        ],
    },
    "tempos": {"delta_inter": 2.406},
    "rede": {"inter": {"base_ms": 40, "passo_ms": 0.2, "intervalo_ms": 1000}},
    "tgs": {"alfa": 0.01, "beta": 5, "p_norm": 0.999},
}


@pytest.fixture
def dados_base():
    """Documento de cenário curto (5 s, duas regiões com f=1)."""
    return copy.deepcopy(DADOS_BASE)


@pytest.fixture
def cenario_base(dados_base):
    return Cenario.de_dict(dados_base)


@pytest.fixture
def tempos_padrao():
    return ParametrosTempo.de_milissegundos(**TEMPOS_PADRAO_MS)


@pytest.fixture
def topologia_pequena():
    """Duas regiões de 3 nós e um fluxo R0 -> R1."""
    base = Topologia.uniforme(2, 1)
    fluxo = FluxoAplicacao(
        tarefa_origem=TaskId(0), tarefa_destino=TaskId(1),
        regiao_origem=RegionId(0), regiao_destino=RegionId(1),
        replicas_origem=(NodeId(0), NodeId(1)), replicas_destino=(NodeId(3), NodeId(4)),
        periodo=ms(1000), prazo=ms(50), nome="ida",
    )
    return Topologia(list(base.regioes.values()), [fluxo])


@pytest.fixture
def registro_chaves():
    return RegistroChaves(1, range(6))


@pytest.fixture
def carregar_json():
    def carregar(nome: str) -> dict:
        with open(DIR_CENARIOS / nome, "r", encoding="utf-8") as arquivo:
            return json.load(arquivo)
    return carregar
