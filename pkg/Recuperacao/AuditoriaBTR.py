"""
Auditoria da recuperação em tempo limitado sobre os registros de um ensaio.

Para cada falha que levou algum nó correto a agir, todo nó correto da região
do culpado precisa iniciar a recuperação (adotar a falha) ou entrar em modo
seguro até t_det + D_RP. Uma nova falha na mesma região detectada antes do
prazo reinicia a contagem a partir da detecção dela.
"""
import csv
import logging
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, List, Optional

from Nucleo.Falhas import RegistroFalha
from Nucleo.Identificadores import NodeId, RegionId
from Nucleo.Tempo import ParametrosTempo
from Nucleo.Topologia import Topologia
from SimRede.Relogio import ModeloRelogio
from Sistema.ColetorResultados import ColetorResultados

from .Propagacao import MOTIVO_PEDIDO, btr_deadline

logger = logging.getLogger(__name__)

# Adoções que representam início de recuperação (FL só marca o enlace)
FORMAS_RECUPERACAO = frozenset({"FN", "flag", "rp"})


@dataclass(frozen=True)
class LinhaAuditoria:
    t_det: int
    motivo: str
    culpado: NodeId
    no: NodeId
    t_inicio: Optional[int]
    d_rp: int
    prazo: int

    @property
    def cumprido(self) -> bool:
        return self.t_inicio is not None and self.t_inicio <= self.prazo


@dataclass
class RelatorioBTR:
    linhas: List[LinhaAuditoria] = field(default_factory=list)
    falhas_auditadas: int = 0
    falhas_sem_prazo: int = 0

    @property
    def violacoes(self) -> List[LinhaAuditoria]:
        return [linha for linha in self.linhas if not linha.cumprido]

    @property
    def ok(self) -> bool:
        return not self.violacoes

    def exportar_csv(self, caminho: Path) -> Path:
        caminho = Path(caminho)
        caminho.parent.mkdir(parents=True, exist_ok=True)
        with open(caminho, "w", newline="", encoding="utf-8") as arquivo:
            escritor = csv.writer(arquivo, lineterminator="\n")
            escritor.writerow(["t_det_ns", "reason", "culprit", "node", "t_start_ns", "d_rp_ns",
                               "deadline_ns", "met"])
            for linha in self.linhas:
                escritor.writerow([linha.t_det, linha.motivo, linha.culpado, linha.no,
                                   "" if linha.t_inicio is None else linha.t_inicio,
                                   linha.d_rp, linha.prazo, int(linha.cumprido)])
        return caminho


@dataclass
class _Falha:
    chave: tuple
    registro: RegistroFalha
    t_det: int
    d_rp: int
    regiao: RegionId


def audit_btr(coletor: ColetorResultados, topologia: Topologia, relogios: ModeloRelogio,
              params: Callable[[RegionId], ParametrosTempo], t_fim: int) -> RelatorioBTR:
    """
    Confere o limite de recuperação de todas as falhas consequentes do ensaio.

    Args:
        coletor: Registros do ensaio
        topologia: Regiões do ensaio
        relogios: Offsets usados para levar t_det ao tempo real
        params: RegionId -> ParametrosTempo
        t_fim: Fim do ensaio; falhas com prazo depois dele não são julgadas

    Returns:
        RelatorioBTR com uma linha por (falha, nó obrigado)
    """
    relatorio = RelatorioBTR()
    adocoes: Dict[tuple, Dict[NodeId, int]] = defaultdict(dict)
    for adocao in coletor.adocoes:
        if adocao.forma not in FORMAS_RECUPERACAO or not coletor.correto(adocao.no):
            continue
        anterior = adocoes[adocao.chave].get(adocao.no)
        if anterior is None or adocao.t < anterior:
            adocoes[adocao.chave][adocao.no] = adocao.t

    agrupadas: Dict[tuple, _Falha] = {}
    for registro in coletor.falhas:
        if registro.motivo == MOTIVO_PEDIDO or registro.chave not in adocoes:
            continue
        t_det = relogios.tempo_real(registro.detector, registro.t_det)
        regiao = topologia.regiao_de(registro.culpado)
        d_rp = max(btr_deadline(params(regiao)), btr_deadline(params(topologia.regiao_de(registro.detector))))
        atual = agrupadas.get(registro.chave)
        if atual is None or t_det < atual.t_det:
            agrupadas[registro.chave] = _Falha(registro.chave, registro, t_det, max(d_rp, atual.d_rp if atual else 0),
                                               regiao)

    por_regiao: Dict[RegionId, List[_Falha]] = defaultdict(list)
    for falha in agrupadas.values():
        por_regiao[falha.regiao].append(falha)

    for regiao, falhas in sorted(por_regiao.items()):
        falhas.sort(key=lambda f: (f.t_det, str(f.chave)))
        obrigados = [no for no in topologia.regiao(regiao).nos if coletor.correto(no)]
        for indice, falha in enumerate(falhas):
            prazo = falha.t_det + falha.d_rp
            # Reinício: falha seguinte da mesma região detectada antes do prazo
            for seguinte in falhas[indice + 1:]:
                if seguinte.t_det <= prazo:
                    prazo = max(prazo, seguinte.t_det + seguinte.d_rp)
            if prazo > t_fim:
                relatorio.falhas_sem_prazo += 1
                continue
            relatorio.falhas_auditadas += 1
            for no in obrigados:
                if no == falha.registro.culpado:
                    continue
                candidatos = [t for t in (adocoes[falha.chave].get(no),) if t is not None]
                candidatos += [m.t_real for m in coletor.modo_seguro if m.no == no and m.t_real >= falha.t_det]
                relatorio.linhas.append(LinhaAuditoria(
                    falha.t_det, falha.registro.motivo, falha.registro.culpado, no,
                    min(candidatos) if candidatos else None, falha.d_rp, prazo,
                ))

    if relatorio.violacoes:
        logger.warning("Auditoria BTR: %d violações em %d falhas", len(relatorio.violacoes),
                       relatorio.falhas_auditadas)
    else:
        logger.debug("Auditoria BTR: %d falhas auditadas sem violação", relatorio.falhas_auditadas)
    return relatorio
