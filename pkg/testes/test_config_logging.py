"""
Testes da configuração de logging: perfis, handlers dos pacotes e o
prefixo de tempo simulado.
"""
import logging
from types import SimpleNamespace

import pytest

from config_logging import (
    NOME_PADRAO, PACOTES, PERFIS, AdaptadorSimulacao, ConfiguradorLog, configurar_processo_ensaio,
)


@pytest.fixture(autouse=True)
def _restaurar_loggers(tmp_path, monkeypatch):
    monkeypatch.setattr(ConfiguradorLog, "DIR_LOGS", tmp_path / "logs")
    yield
    for nome in (NOME_PADRAO, *PACOTES):
        alvo = logging.getLogger(nome)
        for handler in alvo.handlers:
            handler.close()
        alvo.handlers = []
        alvo.propagate = True
        alvo.setLevel(logging.NOTSET)


def test_perfil_de_ensaio_sem_arquivo():
    configurar_processo_ensaio()
    for nome in (NOME_PADRAO, *PACOTES):
        alvo = logging.getLogger(nome)
        assert len(alvo.handlers) == 1
        assert alvo.level == logging.ERROR
        assert not alvo.propagate
    assert not (ConfiguradorLog.DIR_LOGS).exists()


def test_nivel_efetivo():
    assert PERFIS["producao"].nivel_efetivo == logging.DEBUG
    assert PERFIS["ensaio"].nivel_efetivo == logging.ERROR


def test_producao_grava_os_pacotes_no_arquivo():
    ConfiguradorLog.configurar_producao("ensaio_teste")
    logging.getLogger("TGS.TabelaScores").debug("score atualizado")
    for handler in logging.getLogger("TGS").handlers:
        handler.flush()

    arquivos = list(ConfiguradorLog.DIR_LOGS.glob("ensaio_teste_*.log"))
    assert len(arquivos) == 1
    conteudo = arquivos[0].read_text(encoding="utf-8")
    assert "[TGS.TabelaScores] score atualizado" in conteudo


def test_reconfigurar_troca_os_handlers():
    ConfiguradorLog.configurar_producao()
    ConfiguradorLog.configurar_desenvolvimento()
    principal = logging.getLogger(NOME_PADRAO)
    assert len(principal.handlers) == 2
    assert principal.handlers[0].level == logging.DEBUG


def test_adaptador_prefixa_tempo_simulado():
    sim = SimpleNamespace(agora=12_345_678_000)
    logger = logging.getLogger("Sistema.teste")

    msg, _ = AdaptadorSimulacao(logger, sim, 3).process("rodada decidida", {})
    assert msg == "[t=12.345678s N3] rodada decidida"

    sim.agora = 0
    msg, _ = AdaptadorSimulacao(logger, sim).process("início", {})
    assert msg == "[t=0.000000s] início"
