"""
Rede simulada: entrega mensagens entre nós usando os modelos de enlace,
aplica interceptadores de nós comprometidos e contabiliza bytes.
"""
import logging
from collections import defaultdict
from dataclasses import dataclass
from enum import Enum
from typing import Any, Callable, Dict, Iterable, List, Optional, Tuple

from Nucleo.Identificadores import NodeId, RegionId
from Nucleo.ModeloTamanho import ModeloTamanho
from Nucleo.Topologia import ErroTopologia, Topologia

from .Enlaces import EnlaceInterRegiao, EnlaceIntraRegiao, FalhaEnlace
from .Simulador import Simulador

logger = logging.getLogger(__name__)

Receptor = Callable[[Any, NodeId, int], None]


class TipoAcao(Enum):
    PASSAR = "passar"
    DESCARTAR = "descartar"
    ATRASAR = "atrasar"
    SUBSTITUIR = "substituir"


@dataclass(frozen=True)
class AcaoEnvio:
    """Decisão de um interceptador sobre um envio."""
    tipo: TipoAcao
    atraso: int = 0
    mensagem: Any = None

    @classmethod
    def passar(cls) -> "AcaoEnvio":
        return cls(TipoAcao.PASSAR)

    @classmethod
    def descartar(cls) -> "AcaoEnvio":
        return cls(TipoAcao.DESCARTAR)

    @classmethod
    def atrasar(cls, atraso: int) -> "AcaoEnvio":
        return cls(TipoAcao.ATRASAR, atraso=atraso)

    @classmethod
    def substituir(cls, mensagem: Any) -> "AcaoEnvio":
        return cls(TipoAcao.SUBSTITUIR, mensagem=mensagem)


Interceptador = Callable[[NodeId, Any, int], AcaoEnvio]


def tamanho_de(msg: Any, modelo: ModeloTamanho) -> int:
    medir = getattr(msg, "tamanho", None)
    return modelo.pacote(medir(modelo) if medir else modelo.cabecalho)


class Rede:
    """
    Args:
        sim: Simulador do ensaio
        topologia: Topologia (para localizar a região de cada nó)
        intra: Enlace intra-região por região
        inter: Enlace dirigido por par (origem, destino) de regiões
        modelo_tamanho: Tamanhos usados na contabilidade de banda
        falhas: Janelas de perda de enlace
    """

    def __init__(self, sim: Simulador, topologia: Topologia,
                 intra: Dict[RegionId, EnlaceIntraRegiao],
                 inter: Dict[Tuple[RegionId, RegionId], EnlaceInterRegiao],
                 modelo_tamanho: Optional[ModeloTamanho] = None,
                 falhas: Optional[List[FalhaEnlace]] = None):
        self.sim = sim
        self.topologia = topologia
        self.intra = intra
        self.inter = inter
        self.modelo_tamanho = modelo_tamanho or ModeloTamanho()
        self.falhas = list(falhas or [])
        self._receptores: Dict[NodeId, Receptor] = {}
        self._interceptadores: Dict[NodeId, Interceptador] = {}
        self.bytes_enviados: Dict[NodeId, Dict[str, int]] = defaultdict(lambda: {"intra": 0, "inter": 0})
        self.bytes_recebidos: Dict[NodeId, Dict[str, int]] = defaultdict(lambda: {"intra": 0, "inter": 0})
        self.contabilizar = True

    def registrar(self, no: NodeId, receptor: Receptor) -> None:
        self.topologia.regiao_de(no)
        self._receptores[no] = receptor

    def instalar_interceptador(self, no: NodeId, interceptador: Interceptador) -> None:
        self._interceptadores[no] = interceptador

    def zerar_contadores(self) -> None:
        self.bytes_enviados.clear()
        self.bytes_recebidos.clear()

    def send(self, msg: Any, origem: NodeId, destino: NodeId) -> None:
        """
        Envia `msg` de `origem` para `destino`.

        Raises:
            ErroTopologia: Se algum dos nós não existir
        """
        regiao_origem = self.topologia.regiao_de(origem)
        regiao_destino = self.topologia.regiao_de(destino)
        if destino not in self._receptores:
            raise ErroTopologia(f"Nó sem receptor: {destino}")
        agora = self.sim.agora
        atraso_extra = 0

        interceptador = self._interceptadores.get(origem)
        if interceptador is not None:
            acao = interceptador(destino, msg, agora)
            if acao.tipo is TipoAcao.DESCARTAR:
                return
            if acao.tipo is TipoAcao.ATRASAR:
                atraso_extra = acao.atraso
            elif acao.tipo is TipoAcao.SUBSTITUIR:
                msg = acao.mensagem

        escopo = "intra" if regiao_origem == regiao_destino else "inter"
        tamanho = tamanho_de(msg, self.modelo_tamanho)
        if self.contabilizar:
            self.bytes_enviados[origem][escopo] += tamanho

        t_envio = agora + atraso_extra
        if any(f.afeta(t_envio, origem, destino, regiao_origem, regiao_destino) for f in self.falhas):
            return

        if escopo == "intra":
            latencia = self.intra[regiao_origem].latencia()
        else:
            enlace = self.inter.get((regiao_origem, regiao_destino))
            if enlace is None:
                raise ErroTopologia(f"Sem enlace R{regiao_origem} -> R{regiao_destino}")
            latencia = enlace.latencia(t_envio)
            if latencia is None:
                return

        def entregar(msg=msg, escopo=escopo, tamanho=tamanho):
            if self.contabilizar:
                self.bytes_recebidos[destino][escopo] += tamanho
            self._receptores[destino](msg, origem, t_envio)

        self.sim.schedule(t_envio + latencia, entregar)

    def multicast(self, msg: Any, origem: NodeId, destinos: Iterable[NodeId]) -> None:
        for destino in destinos:
            if destino != origem:
                self.send(msg, origem, destino)
