"""
Montagem de um ensaio a partir de um cenário: chaves, relógios, enlaces, nós
e tarefas de aplicação. `SistemaGeoShield.executar` roda o ensaio e devolve
um ResultadoSimulacao.
"""
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, List, Optional

import numpy as np

from config_logging import AdaptadorSimulacao
from Nucleo.Assinatura import RegistroChaves
from Nucleo.Identificadores import NodeId, RegionId
from Nucleo.Tempo import ParametrosTempo, em_segundos, round_schedule
from SimRede.Simulador import Simulador

from .ColetorResultados import ColetorResultados, RegistroModoSeguro
from .NoGeoShield import NoGeoShield

logger = logging.getLogger(__name__)

# (nó, fluxo, job, mensagem, estado) com estado em provisoria/confirmada/corrigida/endossada
Consumidor = Callable[..., None]
OuvinteModoSeguro = Callable[[RegistroModoSeguro], None]


@dataclass(frozen=True)
class LarguraBanda:
    """Bytes enviados por segundo, por nó e escopo."""
    por_no: Dict[NodeId, Dict[str, float]]

    def media(self, escopo: str, nos=None) -> float:
        nos = sorted(self.por_no) if nos is None else list(nos)
        if not nos:
            return 0.0
        return sum(self.por_no[n][escopo] for n in nos) / len(nos)

    @property
    def intra_kb_s(self) -> float:
        return self.media("intra") / 1000

    @property
    def inter_kb_s(self) -> float:
        return self.media("inter") / 1000


@dataclass
class ResultadoSimulacao:
    """
    Resultado de um ensaio.

    Args:
        semente: Semente usada
        coletor: Registros do ensaio
        bytes_enviados: NodeId -> {"intra": b, "inter": b}
        duracao: Duração simulada (ns)
        eventos_ataque: Ações registradas pelas estratégias bizantinas
        sistema: Sistema que produziu o resultado
    """
    semente: int
    coletor: ColetorResultados
    bytes_enviados: Dict[NodeId, Dict[str, int]]
    duracao: int
    eventos_ataque: list = field(default_factory=list)
    sistema: Optional["SistemaGeoShield"] = None

    @property
    def permaneceu_normal(self) -> bool:
        """Nenhum nó correto entrou em modo seguro e o ensaio ficou dentro do modelo."""
        if self.coletor.fora_do_modelo:
            return False
        return not any(self.coletor.correto(m.no) for m in self.coletor.modo_seguro)

    @property
    def t_modo_seguro(self) -> Optional[int]:
        instantes = [m.t_real for m in self.coletor.modo_seguro if self.coletor.correto(m.no)]
        return min(instantes) if instantes else None

    def largura_banda(self) -> LarguraBanda:
        return account_bandwidth(self)

    def auditoria(self):
        from Recuperacao.AuditoriaBTR import audit_btr

        s = self.sistema
        return audit_btr(self.coletor, s.topologia, s.relogios, s.params, self.duracao)

    def exportar(self, diretorio: Path) -> List[Path]:
        """Escreve os CSVs, o JSON lines de disputas e o trace do ensaio."""
        diretorio = Path(diretorio)
        diretorio.mkdir(parents=True, exist_ok=True)
        coletor = self.coletor
        arquivos = [
            coletor.exportar_rodadas(diretorio / "rodadas.csv"),
            coletor.exportar_veredictos(diretorio / "veredictos.csv"),
            coletor.exportar_disputas(diretorio / "disputas.jsonl"),
            coletor.exportar_modo_seguro(diretorio / "modo_seguro.csv"),
            self.auditoria().exportar_csv(diretorio / "auditoria_btr.csv"),
        ]
        if coletor.registrar_scores:
            arquivos.append(coletor.exportar_scores(diretorio / "scores.csv"))
        if coletor.registrar_chegadas:
            arquivos.append(coletor.exportar_chegadas(diretorio / "chegadas.csv"))
        if self.sistema is not None and self.sistema.sim.registrar_trace:
            arquivos.append(self.sistema.sim.exportar_trace_csv(diretorio / "trace.csv"))
        return arquivos


def account_bandwidth(resultado: ResultadoSimulacao) -> LarguraBanda:
    """
    Média de bytes/s enviados por nó no ensaio, separada em intra e inter.

    Returns:
        LarguraBanda com todos os nós da topologia (zero para quem não enviou)
    """
    segundos = em_segundos(resultado.duracao) or 1.0
    nos = resultado.sistema.topologia.nos if resultado.sistema is not None else sorted(resultado.bytes_enviados)
    por_no = {}
    for no in nos:
        contagem = resultado.bytes_enviados.get(no, {"intra": 0, "inter": 0})
        por_no[no] = {escopo: contagem[escopo] / segundos for escopo in ("intra", "inter")}
    return LarguraBanda(por_no)


class SistemaGeoShield:
    """
    Args:
        cenario: Cenário carregado (Experimentos.Cenario.Cenario)
        semente: Substitui a semente do cenário
        registrar_trace: Guarda o trace de eventos (desligar em Monte Carlo)
        registrar_scores: Guarda a série de scores do TGS
        registrar_chegadas: Guarda a latência de cada mensagem de aplicação
        consumidores: Recebem as entradas adotadas pelas réplicas de τ' corretas
        deteccao: False desliga declarações de falha e sinalizações do TGS (nós
            só trocam mensagens, sem exclusão nem modo seguro)
    """

    def __init__(self, cenario, semente: Optional[int] = None, registrar_trace: bool = True,
                 registrar_scores: bool = True, registrar_chegadas: bool = False,
                 consumidores: Optional[List[Consumidor]] = None, deteccao: bool = True):
        self.cenario = cenario
        self.semente = cenario.semente if semente is None else semente
        self.topologia = cenario.topologia
        self.parametros_tgs = cenario.tgs
        self.consumidores: List[Consumidor] = list(consumidores or [])
        self.deteccao = deteccao
        self.ouvintes_modo_seguro: List[OuvinteModoSeguro] = []
        self._iniciado = False

        self._params: Dict[RegionId, ParametrosTempo] = {
            regiao.id: cenario.parametros_regiao(regiao.id).com_fase(regiao.fase)
            for regiao in self.topologia.regioes.values()
        }

        sementes = np.random.SeedSequence(self.semente)
        semente_rede, semente_relogio, semente_nos = sementes.spawn(3)

        self.sim = Simulador(registrar_trace=registrar_trace)
        self.log = AdaptadorSimulacao(logger, self.sim)
        self.coletor = ColetorResultados(
            comprometidos=set(cenario.ataque.comprometidos),
            registrar_scores=registrar_scores,
            registrar_chegadas=registrar_chegadas,
        )
        self.registro = RegistroChaves(self.semente, self.topologia.nos, modo=cenario.assinatura)
        delta_syn = max(p.delta_syn for p in self._params.values())
        self.relogios = cenario.rede.montar_relogios(self.topologia, delta_syn, semente_relogio)
        self.rede = cenario.rede.montar_rede(self.sim, self.topologia, self.params, semente_rede,
                                             cenario.tamanhos)
        self._rng_nos = {
            no: np.random.default_rng(filho)
            for no, filho in zip(self.topologia.nos, semente_nos.spawn(len(self.topologia.nos)))
        }

        estrategias = cenario.ataque.criar_estrategias()
        self.estrategias = estrategias
        self.nos: Dict[NodeId, NoGeoShield] = {
            no: NoGeoShield(no, self, estrategias.get(no)) for no in self.topologia.nos
        }
        for no, estrategia in estrategias.items():
            estrategia.instalar(self.nos[no])

        logger.debug("Sistema montado: %d regiões, %d nós, %d fluxos, semente %s",
                     len(self.topologia.regioes), len(self.nos), len(self.topologia.fluxos), self.semente)

    # ===== INTERFACE USADA PELOS NÓS =====

    def params(self, regiao: RegionId) -> ParametrosTempo:
        return self._params[regiao]

    def rng_no(self, no: NodeId) -> np.random.Generator:
        return self._rng_nos[no]

    def d_real(self, j: RegionId, i: RegionId, n: int) -> Optional[int]:
        """D_real do enlace R_j -> R_i no t_send da rodada n."""
        enlace = self.rede.inter.get((j, i))
        if enlace is None:
            return None
        return enlace.d_real(round_schedule(n, self.params(j)).t_send)

    def notificar_modo_seguro(self, no: NoGeoShield, regiao: RegionId, instante: int, motivo: str) -> None:
        registro = RegistroModoSeguro(no.id, regiao, instante, self.sim.agora, motivo)
        self.coletor.modo_seguro.append(registro)
        self.sim.anotar(no.id, "modo_seguro", motivo)
        for ouvinte in self.ouvintes_modo_seguro:
            ouvinte(registro)

    def consumir(self, no: NoGeoShield, fluxo, job, mensagem, estado: str) -> None:
        if no.comprometido:
            return
        for consumidor in self.consumidores:
            consumidor(no, fluxo, job, mensagem, estado)

    # ===== EXECUÇÃO =====

    def iniciar(self) -> None:
        if self._iniciado:
            return
        self._iniciado = True
        for no in self.nos.values():
            no.iniciar()

    def executar(self, t_fim: Optional[int] = None) -> ResultadoSimulacao:
        """
        Roda o ensaio até t_fim (padrão: duração do cenário).

        Pode ser chamado de novo com um t_fim maior para continuar o mesmo ensaio.
        """
        t_fim = self.cenario.duracao if t_fim is None else t_fim
        self.iniciar()
        self.sim.run_until(t_fim)
        self.log.info("Ensaio concluído: %d eventos, %d falhas, %d registros de modo seguro",
                      self.sim.eventos_processados, len(self.coletor.falhas), len(self.coletor.modo_seguro))
        eventos = []
        if self.estrategias:
            eventos = next(iter(self.estrategias.values())).quadro.eventos
        return ResultadoSimulacao(
            self.semente, self.coletor,
            {no: dict(contagem) for no, contagem in self.rede.bytes_enviados.items()},
            t_fim, eventos, self,
        )
