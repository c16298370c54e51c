"""
Processo de protocolo de um nó.

O nó compõe os componentes de medição, disputa, PoC, TGS e recuperação e
despacha as mensagens recebidas pelo tipo. Toda ação é agendada no relógio
local do nó; o simulador converte para tempo real.
"""
import logging
from typing import Any, Callable, Dict, Iterable, List, Optional, Tuple

from config_logging import AdaptadorSimulacao
from Nucleo.Falhas import RegistroFalha
from Nucleo.Identificadores import NodeId, RegionId, TaskId
from Nucleo.Tempo import AgendaRodada, ParametrosTempo, round_schedule
from Recuperacao.CenarioFalhas import TAREFA_LOG, TAREFA_MEDICAO, AtribuicaoRegiao, CenarioFalhas

logger = logging.getLogger(__name__)

# Retorno de NoGeoShield.passo que suprime o envio
SILENCIO = object()


class NoGeoShield:
    """
    Args:
        id: NodeId
        sistema: SistemaGeoShield que hospeda o nó (simulador, rede, chaves)
        estrategia: Estratégia bizantina, se o nó estiver comprometido
    """

    def __init__(self, id: NodeId, sistema, estrategia=None):
        # Imports locais: os componentes importam tipos deste pacote
        from Medicao.Disputa import GerenciadorDisputas
        from Medicao.ProtocoloMedicao import ProtocoloMedicao
        from PoC.ValidacaoPoC import GerenciadorPoC
        from Recuperacao.Propagacao import PropagadorRecuperacao
        from TGS.GovernancaTGS import GovernancaTGS

        self.id = id
        self.sistema = sistema
        self.sim = sistema.sim
        self.rede = sistema.rede
        self.registro = sistema.registro
        self.topologia = sistema.topologia
        self.coletor = sistema.coletor
        self.regiao_id: RegionId = self.topologia.regiao_de(id)
        self.assinador = self.registro.assinador(id)
        self.estrategia = estrategia
        self.log = AdaptadorSimulacao(logger, self.sim, id)
        self.rng = sistema.rng_no(id)

        self.cenario = CenarioFalhas()
        self.atribuicoes: Dict[RegionId, AtribuicaoRegiao] = {
            regiao_id: AtribuicaoRegiao(regiao, self.topologia.fluxos)
            for regiao_id, regiao in self.topologia.regioes.items()
        }
        self._tratadores: Dict[type, Callable[[Any, NodeId, int], None]] = {}

        self.recuperacao = PropagadorRecuperacao(self)
        self.medicao = ProtocoloMedicao(self)
        self.disputas = GerenciadorDisputas(self)
        self.poc = GerenciadorPoC(self)
        self.tgs = GovernancaTGS(self)

        self.rede.registrar(id, self.receber)

    def iniciar(self) -> None:
        """Agenda as rodadas de medição e os jobs das tarefas do nó."""
        self.medicao.iniciar()
        self.poc.iniciar()
        self.tgs.iniciar()

    # ===== IDENTIDADE E TEMPO =====

    @property
    def comprometido(self) -> bool:
        return self.estrategia is not None

    @property
    def excluido(self) -> bool:
        """O próprio nó sabe que foi excluído da região e para de agir."""
        return self.id in self.cenario.fn

    @property
    def regiao(self):
        return self.topologia.regiao(self.regiao_id)

    def params(self, regiao: Optional[RegionId] = None) -> ParametrosTempo:
        return self.sistema.params(self.regiao_id if regiao is None else regiao)

    def agenda(self, regiao: RegionId, n: int) -> AgendaRodada:
        return round_schedule(n, self.params(regiao))

    def agora(self) -> int:
        """Leitura do relógio local."""
        return self.sistema.relogios.local_clock(self.id, self.sim.agora)

    def agendar(self, t_local: int, acao: Callable[[], None], tipo: str = "", detalhes: str = "") -> None:
        """
        Agenda `acao` para o instante local `t_local`.

        Instantes locais já passados disparam imediatamente. A ação não roda se
        o nó tiver sido excluído até lá.
        """
        t_real = max(self.sistema.relogios.tempo_real(self.id, t_local), self.sim.agora)

        def executar():
            if not self.excluido:
                acao()

        self.sim.schedule(t_real, executar, tipo=tipo, no=self.id, detalhes=detalhes)

    # ===== COMUNICAÇÃO =====

    def enviar(self, msg: Any, destino: NodeId) -> None:
        if destino == self.id:
            return
        self.rede.send(msg, self.id, destino)

    def difundir(self, msg: Any, destinos: Iterable[NodeId]) -> None:
        for destino in sorted(set(destinos)):
            self.enviar(msg, destino)

    def difundir_regiao(self, msg: Any) -> None:
        self.difundir(msg, self.regiao.nos)

    def registrar_tratador(self, tipo: type, tratador: Callable[[Any, NodeId, int], None]) -> None:
        self._tratadores[tipo] = tratador

    def receber(self, msg: Any, origem: NodeId, t_envio_real: int) -> None:
        """Receptor registrado na rede: descarta remetentes em FN e despacha."""
        if self.excluido or origem in self.cenario.fn:
            return
        tratador = self._tratadores.get(type(msg))
        if tratador is None:
            self.log.debug("Mensagem sem tratador: %s", type(msg).__name__)
            return
        tratador(msg, origem, t_envio_real)

    # ===== PAPÉIS =====

    def medidores(self, regiao: RegionId, t: Optional[int] = None) -> Tuple[NodeId, ...]:
        return self.atribuicoes[regiao].membros(TAREFA_MEDICAO, t)

    def guardioes(self, regiao: RegionId, t: Optional[int] = None) -> Tuple[NodeId, ...]:
        return self.atribuicoes[regiao].membros(TAREFA_LOG, t)

    def participantes(self, regiao: RegionId, t: Optional[int] = None) -> Tuple[NodeId, ...]:
        """Medidores e guardiões de log: os nós que resolvem uma disputa."""
        return tuple(sorted(set(self.medidores(regiao, t)) | set(self.guardioes(regiao, t))))

    def replicas(self, tarefa: TaskId, t: Optional[int] = None) -> Tuple[NodeId, ...]:
        fluxo = self.topologia.fluxo_por_tarefa(tarefa)
        regiao = fluxo.regiao_origem if tarefa == fluxo.tarefa_origem else fluxo.regiao_destino
        return self.atribuicoes[regiao].membros(tarefa, t)

    # ===== GANCHOS =====

    def passo(self, nome: str, padrao: Any, **contexto) -> Any:
        """
        Ponto de decisão do protocolo. Nós corretos seguem `padrao`; a
        estratégia de um nó comprometido pode substituí-lo.
        """
        if self.estrategia is None:
            return padrao
        return self.estrategia.no_passo(self, nome, padrao, contexto)

    def declarar_falha(self, registro: RegistroFalha) -> None:
        if not self.sistema.deteccao:
            return
        self.recuperacao.declarar(registro)

    def entrar_modo_seguro(self, regiao: RegionId, instante: int, motivo: str) -> None:
        """Trava o modo seguro da região (uma única vez por nó)."""
        if regiao in self.cenario.modo_seguro or not self.sistema.deteccao:
            return
        self.cenario.modo_seguro[regiao] = instante
        self.log.warning("Modo seguro na região %s (instante %.6fs): %s", regiao, instante / 1e9, motivo)
        self.sistema.notificar_modo_seguro(self, regiao, instante, motivo)
