"""
Pacote SimRede - motor de eventos e modelo de rede em dois níveis
"""

from .Simulador import ErroAgendamento, Evento, FilaEventos, RegistroTrace, Simulador
from .Relogio import ModeloRelogio
from .Enlaces import (
    EnlaceInterRegiao, EnlaceIntraRegiao, FalhaEnlace, ModeloJitter,
    ProcessoLatenciaBase, SobreposicaoDoS, probabilidade_pico,
)
from .Rede import AcaoEnvio, Rede, TipoAcao
from .ConfigRede import ConfigEnlaceInter, ConfigRede

__all__ = [
    'ErroAgendamento', 'Evento', 'FilaEventos', 'RegistroTrace', 'Simulador',
    'ModeloRelogio',
    'EnlaceInterRegiao', 'EnlaceIntraRegiao', 'FalhaEnlace', 'ModeloJitter',
    'ProcessoLatenciaBase', 'SobreposicaoDoS', 'probabilidade_pico',
    'AcaoEnvio', 'Rede', 'TipoAcao',
    'ConfigEnlaceInter', 'ConfigRede',
]
