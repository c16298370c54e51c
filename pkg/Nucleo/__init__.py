"""
Pacote Nucleo - tipos de domínio, tempo e autenticação
"""

from .Erros import ErroGeoShield, ErroParametros
from .Identificadores import JobId, NodeId, RegionId, TaskId
from .Tempo import (
    AgendaRodada, ErroTempo, ParametrosTempo, SIMTIME_MAX,
    em_ms, em_segundos, instante_envio, ms, primeira_rodada, round_schedule, s, us,
)
from .Assinatura import Assinador, Assinatura, ErroChaveDesconhecida, RegistroChaves, canonico, resumo
from .Falhas import EscopoFalha, RegistroFalha, TipoFalha
from .ModeloTamanho import ModeloTamanho
from .Topologia import ErroTopologia, FluxoAplicacao, Regiao, Topologia

__all__ = [
    'ErroGeoShield', 'ErroParametros', 'ErroTempo', 'ErroChaveDesconhecida', 'ErroTopologia',
    'JobId', 'NodeId', 'RegionId', 'TaskId',
    'AgendaRodada', 'ParametrosTempo', 'SIMTIME_MAX',
    'em_ms', 'em_segundos', 'instante_envio', 'ms', 's', 'us', 'primeira_rodada', 'round_schedule',
    'Assinador', 'Assinatura', 'RegistroChaves', 'canonico', 'resumo',
    'EscopoFalha', 'RegistroFalha', 'TipoFalha',
    'ModeloTamanho',
    'FluxoAplicacao', 'Regiao', 'Topologia',
]
