"""
Logging do simulador.

O CLI configura uma única vez o logger principal e os loggers dos pacotes;
os módulos só fazem logging.getLogger(__name__). Cada modo de execução é um
PerfilLog: produção (console INFO, arquivo DEBUG), desenvolvimento (tudo em
DEBUG) e ensaio, usado nos processos do Monte Carlo, que só mostra erros.
"""

import logging
import sys
from dataclasses import dataclass
from datetime import datetime
from pathlib import Path
from typing import Dict, List, Optional

try:
    import colorlog
    COLORLOG_DISPONIVEL = True
except ImportError:
    COLORLOG_DISPONIVEL = False


NOME_PADRAO = "SimuladorGeoShield"

# Loggers de pacote que recebem os mesmos handlers do logger principal
PACOTES = ("Nucleo", "SimRede", "Medicao", "PoC", "TGS", "Recuperacao",
           "Adversario", "Sistema", "EstudosCaso", "Experimentos")

CORES = {
    "DEBUG": "cyan",
    "INFO": "green",
    "WARNING": "yellow",
    "ERROR": "red",
    "CRITICAL": "bold_red",
}


@dataclass(frozen=True)
class PerfilLog:
    """Níveis e destinos de um modo de execução."""
    nivel_console: int
    nivel_arquivo: int
    cores: bool = True
    arquivo: bool = True

    @property
    def nivel_efetivo(self) -> int:
        if not self.arquivo:
            return self.nivel_console
        return min(self.nivel_console, self.nivel_arquivo)


PERFIS: Dict[str, PerfilLog] = {
    "producao": PerfilLog(logging.INFO, logging.DEBUG),
    "desenvolvimento": PerfilLog(logging.DEBUG, logging.DEBUG),
    "ensaio": PerfilLog(logging.ERROR, logging.INFO, cores=False, arquivo=False),
}


class ConfiguradorLog:
    """Monta os handlers do simulador a partir de um PerfilLog."""

    DIR_LOGS = Path("logs")

    @classmethod
    def configurar(cls, nome_modulo: str = NOME_PADRAO,
                   perfil: PerfilLog = PERFIS["producao"]) -> logging.Logger:
        """
        Instala os handlers do perfil no logger principal e nos pacotes.

        Reconfigurar troca os handlers anteriores, então o CLI pode subir o
        nível para DEBUG depois de ler as opções.

        Args:
            nome_modulo: Nome do logger principal e do arquivo de log
            perfil: Níveis e destinos

        Returns:
            Logger principal
        """
        handlers: List[logging.Handler] = [cls._handler_console(perfil)]
        if perfil.arquivo:
            arquivo = cls._handler_arquivo(nome_modulo, perfil.nivel_arquivo)
            if arquivo is not None:
                handlers.append(arquivo)

        for nome in (nome_modulo, *PACOTES):
            alvo = logging.getLogger(nome)
            alvo.setLevel(perfil.nivel_efetivo)
            alvo.handlers = list(handlers)
            alvo.propagate = False
        return logging.getLogger(nome_modulo)

    @staticmethod
    def _handler_console(perfil: PerfilLog) -> logging.Handler:
        handler = logging.StreamHandler(sys.stdout)
        handler.setLevel(perfil.nivel_console)
        if perfil.cores and COLORLOG_DISPONIVEL:
            handler.setFormatter(colorlog.ColoredFormatter(
                "%(log_color)s%(asctime)s [%(levelname)-8s]%(reset)s %(message)s",
                datefmt="%H:%M:%S",
                log_colors=CORES,
            ))
        else:
            handler.setFormatter(logging.Formatter("%(asctime)s [%(levelname)-8s] %(message)s",
                                                   datefmt="%H:%M:%S"))
        return handler

    @classmethod
    def _handler_arquivo(cls, nome_modulo: str, nivel: int) -> Optional[logging.FileHandler]:
        """
        Arquivo diário logs/<nome>_<AAAAMMDD>.log, em modo append.

        Returns:
            FileHandler, ou None se a pasta não puder ser criada
        """
        try:
            cls.DIR_LOGS.mkdir(exist_ok=True)
            caminho = cls.DIR_LOGS / f"{nome_modulo}_{datetime.now():%Y%m%d}.log"
            handler = logging.FileHandler(caminho, mode="a", encoding="utf-8")
        except OSError as e:
            print(f"Aviso: não foi possível criar arquivo de log: {e}", file=sys.stderr)
            return None
        handler.setLevel(nivel)
        handler.setFormatter(logging.Formatter("%(asctime)s [%(levelname)-8s] [%(name)s] %(message)s",
                                               datefmt="%Y-%m-%d %H:%M:%S"))
        return handler

    @classmethod
    def configurar_producao(cls, nome_modulo: str = NOME_PADRAO) -> logging.Logger:
        return cls.configurar(nome_modulo, PERFIS["producao"])

    @classmethod
    def configurar_desenvolvimento(cls, nome_modulo: str = NOME_PADRAO) -> logging.Logger:
        return cls.configurar(nome_modulo, PERFIS["desenvolvimento"])

    @classmethod
    def configurar_minimo(cls, nome_modulo: str = NOME_PADRAO) -> logging.Logger:
        """Só erros no console e nenhum arquivo (processos do Monte Carlo)."""
        return cls.configurar(nome_modulo, PERFIS["ensaio"])


class AdaptadorSimulacao(logging.LoggerAdapter):
    """
    Prefixa cada mensagem com o tempo simulado e o nó: "[t=12.345678s N3]".

    Args:
        logger: Logger do módulo (logging.getLogger(__name__))
        sim: Objeto com atributo `agora` em ns
        no: NodeId do emissor das mensagens, se houver
    """

    def __init__(self, logger: logging.Logger, sim, no: Optional[int] = None):
        super().__init__(logger, {})
        self.sim = sim
        self.no = no

    def process(self, msg, kwargs):
        rotulo = f" N{self.no}" if self.no is not None else ""
        return f"[t={self.sim.agora / 1e9:.6f}s{rotulo}] {msg}", kwargs


# ===== FUNÇÕES DE CONVENIÊNCIA =====

def obter_logger(nome_modulo: str = NOME_PADRAO, producao: bool = True) -> logging.Logger:
    """
    Configura o logging e devolve o logger principal.

    Args:
        nome_modulo: Nome do logger principal
        producao: False liga o perfil de desenvolvimento (DEBUG no console)
    """
    if producao:
        return ConfiguradorLog.configurar_producao(nome_modulo)
    return ConfiguradorLog.configurar_desenvolvimento(nome_modulo)


def configurar_processo_ensaio() -> None:
    """Initializer dos processos do Monte Carlo."""
    ConfiguradorLog.configurar_minimo()
