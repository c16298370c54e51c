"""
Especificação do ataque de um ensaio: nós comprometidos, estratégia de cada
um e instante de comprometimento.
"""
import logging
from collections import Counter
from dataclasses import dataclass, field
from typing import Any, Dict, Mapping, Optional

from Nucleo.Erros import ErroGeoShield
from Nucleo.Identificadores import NodeId
from Nucleo.Topologia import Topologia

from .Estrategias import ESTRATEGIAS, Estrategia, QuadroConluio, nome_canonico

logger = logging.getLogger(__name__)


class ErroAtaque(ErroGeoShield):
    """Estratégia desconhecida ou orçamento de nós comprometidos excedido"""
    pass


@dataclass(frozen=True)
class AtaqueNo:
    estrategia: str
    parametros: Mapping[str, Any] = field(default_factory=dict)


@dataclass
class EspecificacaoAtaque:
    """
    Args:
        comprometidos: NodeId -> AtaqueNo
        inicio: Instante (ns) a partir do qual os nós agem de forma bizantina
    """
    comprometidos: Dict[NodeId, AtaqueNo] = field(default_factory=dict)
    inicio: int = 0

    @classmethod
    def de_dict(cls, dados: Optional[Mapping[str, Any]]) -> "EspecificacaoAtaque":
        """
        Lê a seção `ataque` de um cenário já validado.

        Formato: {"inicio_ms": 0, "nos": {"3": {"estrategia": "agressiva", "parametros": {...}}}}
        """
        if not dados:
            return cls()
        comprometidos = {
            NodeId(int(no)): AtaqueNo(nome_canonico(cfg["estrategia"]), dict(cfg.get("parametros", {})))
            for no, cfg in dados.get("nos", {}).items()
        }
        return cls(comprometidos, int(round(float(dados.get("inicio_ms", 0)) * 1_000_000)))

    @classmethod
    def uniforme(cls, nos, estrategia: str, parametros: Optional[Mapping[str, Any]] = None,
                 inicio: int = 0) -> "EspecificacaoAtaque":
        return cls({NodeId(n): AtaqueNo(nome_canonico(estrategia), dict(parametros or {})) for n in nos}, inicio)

    def validar(self, topologia: Topologia) -> None:
        """
        Raises:
            ErroAtaque: Estratégia desconhecida, nó inexistente ou mais de f_i
                comprometidos numa região
        """
        for no, ataque in self.comprometidos.items():
            if ataque.estrategia not in ESTRATEGIAS:
                raise ErroAtaque(f"Estratégia desconhecida para N{no}: {ataque.estrategia}")
            if no not in topologia.nos:
                raise ErroAtaque(f"Nó comprometido inexistente: N{no}")
        por_regiao = Counter(topologia.regiao_de(no) for no in self.comprometidos)
        for regiao, quantidade in sorted(por_regiao.items()):
            f = topologia.regiao(regiao).f
            if quantidade > f:
                raise ErroAtaque(f"Região {regiao}: {quantidade} nós comprometidos > f={f}")

    def criar_estrategias(self) -> Dict[NodeId, Estrategia]:
        """Uma instância por nó, todas ligadas ao mesmo QuadroConluio."""
        quadro = QuadroConluio()
        estrategias = {
            no: ESTRATEGIAS[ataque.estrategia](ataque.parametros, quadro, self.inicio)
            for no, ataque in sorted(self.comprometidos.items())
        }
        if estrategias:
            logger.info("Ataque: %s", ", ".join(f"N{no}={e.nome}" for no, e in estrategias.items()))
        return estrategias
