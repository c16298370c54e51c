"""
Cenário de um ensaio: leitura do JSON, validação e montagem dos objetos de
domínio (topologia, tempos, rede, TGS, ataque).
"""
import json
import logging
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Dict, Mapping, Optional

from Adversario.EspecificacaoAtaque import ErroAtaque, EspecificacaoAtaque
from Nucleo.Erros import ErroParametros
from Nucleo.Identificadores import JobId, NodeId, RegionId, TaskId
from Nucleo.ModeloTamanho import ModeloTamanho
from Nucleo.Tempo import ErroTempo, ParametrosTempo, ms, s
from Nucleo.Topologia import ErroTopologia, FluxoAplicacao, Regiao, Topologia
from SimRede.ConfigRede import ConfigRede
from TGS.ParametrosTGS import ParametrosTGS
from validadores import ErroCenario, validar_cenario

logger = logging.getLogger(__name__)

# Parâmetros de tempo padrão (ms)
TEMPOS_PADRAO_MS = {
    "t_int": 1000.0,
    "hb_timeout": 200.0,
    "t_0": 0.0,
    "d_intra": 2.0,
    "delta_intra": 0.5,
    "t_hb": 1.0,
    "delta_hb": 0.5,
    "t_prop": 1.0,
    "delta_prop": 0.5,
    "delta_syn": 0.1,
    "delta_inter": 2.406,
    "p_norm": 0.999,
    "e_hb": 1.0,
}


def saida_com_carga(carga: Mapping[str, Any]):
    """Saída determinística de um fluxo: o índice do job mais a carga fixa."""
    carga = dict(carga)

    def saida(job: JobId) -> Dict[str, Any]:
        return {"job": job.invocacao, **carga}

    return saida


@dataclass
class Cenario:
    """
    Args:
        nome: Rótulo do cenário
        topologia: Regiões e fluxos
        tempos: ParametrosTempo comum às regiões
        por_regiao: Substituições por região
        rede: Configuração dos enlaces
        tgs: Parâmetros do TGS (None desliga o TGS)
        ataque: Nós comprometidos e estratégias
        duracao: Duração de cada ensaio (ns)
        semente: Semente raiz
        ensaios: Número de ensaios Monte Carlo
        assinatura: "hmac" ou "ed25519"
        tamanhos: Modelo de tamanho de mensagens
        experimento: Seção `experimento` crua
        estudo_caso: Seção `estudo_caso` crua
        bruto: Documento JSON original (eco no manifesto)
    """
    nome: str
    topologia: Topologia
    tempos: ParametrosTempo
    por_regiao: Dict[RegionId, ParametrosTempo] = field(default_factory=dict)
    rede: ConfigRede = field(default_factory=ConfigRede)
    tgs: Optional[ParametrosTGS] = None
    ataque: EspecificacaoAtaque = field(default_factory=EspecificacaoAtaque)
    duracao: int = s(60)
    semente: int = 0
    ensaios: int = 1
    assinatura: str = "hmac"
    tamanhos: ModeloTamanho = field(default_factory=ModeloTamanho)
    experimento: Dict[str, Any] = field(default_factory=dict)
    estudo_caso: Dict[str, Any] = field(default_factory=dict)
    bruto: Dict[str, Any] = field(default_factory=dict)

    def parametros_regiao(self, regiao: RegionId) -> ParametrosTempo:
        return self.por_regiao.get(regiao, self.tempos)

    def com(self, **alteracoes) -> "Cenario":
        return replace(self, **alteracoes)

    # ===== LEITURA =====

    @classmethod
    def de_dict(cls, dados: Mapping[str, Any]) -> "Cenario":
        """
        Monta um cenário a partir do documento JSON.

        Raises:
            ErroCenario: Esquema inválido ou objetos de domínio incoerentes
        """
        validar_cenario(dados)
        try:
            return cls._montar(dados)
        except (ErroTopologia, ErroParametros, ErroAtaque, ErroTempo) as e:
            raise ErroCenario(str(e)) from e

    @classmethod
    def _montar(cls, dados: Mapping[str, Any]) -> "Cenario":
        tempos_ms = dict(dados.get("tempos", {}))
        por_regiao_ms = tempos_ms.pop("por_regiao", {})
        base_ms = {**TEMPOS_PADRAO_MS, **tempos_ms}
        tempos = ParametrosTempo.de_milissegundos(**base_ms)
        por_regiao = {
            RegionId(int(rid)): ParametrosTempo.de_milissegundos(**{**base_ms, **campos})
            for rid, campos in por_regiao_ms.items()
        }

        topologia = montar_topologia(dados["topologia"])
        ataque = EspecificacaoAtaque.de_dict(dados.get("ataque"))
        ataque.validar(topologia)

        tgs = None
        if dados.get("tgs") is not None:
            t = dados["tgs"]
            tgs = ParametrosTGS.de_valores(t["alfa"], t["beta"], t.get("p_norm", tempos.p_norm))

        return cls(
            nome=dados.get("nome", "cenario"),
            topologia=topologia,
            tempos=tempos,
            por_regiao=por_regiao,
            rede=ConfigRede.de_dict(dados.get("rede")),
            tgs=tgs,
            ataque=ataque,
            duracao=ms(dados.get("duracao_ms", 60_000)),
            semente=int(dados.get("semente", 0)),
            ensaios=int(dados.get("ensaios", 1)),
            assinatura=dados.get("assinatura", "hmac"),
            tamanhos=ModeloTamanho(**dados.get("tamanhos", {})),
            experimento=dict(dados.get("experimento", {})),
            estudo_caso=dict(dados.get("estudo_caso", {})),
            bruto=dict(dados),
        )


def montar_topologia(dados: Mapping[str, Any]) -> Topologia:
    """Seção `topologia` já validada -> Topologia."""
    if "uniforme" in dados:
        u = dados["uniforme"]
        base = Topologia.uniforme(int(u["regioes"]), int(u["f"]), u.get("nos_por_regiao"),
                                  int(u.get("capacidade", 4)))
        regioes = list(base.regioes.values())
    else:
        regioes = [
            Regiao(
                RegionId(r["id"]), tuple(NodeId(n) for n in r["nos"]), int(r["f"]),
                tuple(NodeId(n) for n in r.get("medidores", ())),
                tuple(NodeId(n) for n in r.get("guardioes", ())),
                ms(r.get("fase_ms", 0)), int(r.get("capacidade", 4)),
            )
            for r in dados["regioes"]
        ]
    por_id = {r.id: r for r in regioes}

    fluxos = []
    for i, f in enumerate(dados.get("fluxos", [])):
        origem, destino = por_id[RegionId(f["regiao_origem"])], por_id[RegionId(f["regiao_destino"])]
        prazo = f.get("prazo_ms", 50)
        fluxos.append(FluxoAplicacao(
            tarefa_origem=TaskId(f["tarefa_origem"]),
            tarefa_destino=TaskId(f["tarefa_destino"]),
            regiao_origem=origem.id,
            regiao_destino=destino.id,
            replicas_origem=tuple(NodeId(n) for n in f.get("replicas_origem", origem.nos[:origem.f + 1])),
            replicas_destino=tuple(NodeId(n) for n in f.get("replicas_destino", destino.nos[:destino.f + 1])),
            periodo=ms(f["periodo_ms"]),
            fase=ms(f.get("fase_ms", 0)),
            prazo=ms(prazo),
            timeout_entrada=ms(f["timeout_entrada_ms"]) if f.get("timeout_entrada_ms") is not None else None,
            saida=saida_com_carga(f.get("carga", {})),
            nome=f.get("nome", f"fluxo{i}"),
        ))
    return Topologia(regioes, fluxos)


def carregar_cenario(caminho: Path) -> Cenario:
    """
    Lê e valida um arquivo de cenário.

    Raises:
        ErroCenario: Arquivo ausente, JSON malformado ou esquema inválido
    """
    caminho = Path(caminho)
    try:
        with open(caminho, "r", encoding="utf-8") as arquivo:
            dados = json.load(arquivo)
    except FileNotFoundError:
        raise ErroCenario(f"Arquivo de cenário não encontrado: {caminho}") from None
    except json.JSONDecodeError as e:
        raise ErroCenario(f"JSON inválido em {caminho}: {e}") from e
    cenario = Cenario.de_dict(dados)
    logger.info("Cenário '%s' carregado de %s", cenario.nome, caminho)
    return cenario
