"""
Checagens das garantias do protocolo sobre os registros de um ensaio e
checagens aritméticas dos limites do TGS.

As checagens de trace devolvem contagens de violação (zero é o esperado) e
nunca levantam exceção: um ensaio com violação é um achado, não um erro de
configuração. As suítes montam cenários adversariais como dicionários JSON
para rodar no Monte Carlo.
"""
import itertools
import logging
import math
from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

from Nucleo.Tempo import round_schedule
from TGS.ParametrosTGS import ParametrosTGS

from .ModeloTGS import unidades_score

logger = logging.getLogger(__name__)

# Violações que invalidam um ensaio; "acima_do_limite" é estatística
VIOLACOES_DURAS = (
    "heartbeat_antecipado",
    "abaixo_do_limite",
    "desacordo",
    "disputa_fora_do_prazo",
    "veredito_divergente",
    "modo_seguro_divergente",
    "btr",
)


@dataclass
class ChecagemEnsaio:
    """Contagens de um ensaio."""
    violacoes: Dict[str, int] = field(default_factory=lambda: {nome: 0 for nome in VIOLACOES_DURAS})
    rodadas: int = 0
    acima_do_limite: int = 0
    disputas: int = 0

    @property
    def ok(self) -> bool:
        return not any(self.violacoes.values())

    def somar(self, outra: "ChecagemEnsaio") -> None:
        for nome, valor in outra.violacoes.items():
            self.violacoes[nome] = self.violacoes.get(nome, 0) + valor
        self.rodadas += outra.rodadas
        self.acima_do_limite += outra.acima_do_limite
        self.disputas += outra.disputas


# ===== CHECAGENS DE TRACE =====

def checar_heartbeats_antecipados(resultado) -> int:
    """Heartbeats aceitos que saíram antes de t_send - t_early (tempo real)."""
    sistema = resultado.sistema
    violacoes = 0
    for hb in resultado.coletor.heartbeats:
        p = sistema.params(hb.regiao)
        limite = round_schedule(hb.n, p).t_send - p.t_early
        if hb.t_envio_real < limite:
            violacoes += 1
            logger.warning("Heartbeat de N%s (rodada %d) aceito por N%s %d ns antes do limite",
                           hb.remetente, hb.n, hb.receptor, limite - hb.t_envio_real)
    return violacoes


def checar_precisao(resultado) -> Tuple[int, int, int]:
    """
    Limites da medição sobre as decisões dos nós corretos.

    Inferior (sempre): D_n >= D_real - (t_early + Δ_prop + Δ_intra + Δ_syn).
    Superior (com probabilidade p_norm): D_n <= D_real + Δ_inter + Δ_syn.

    Returns:
        (rodadas avaliadas, violações do inferior, rodadas acima do superior)
    """
    sistema = resultado.sistema
    coletor = resultado.coletor
    avaliadas = abaixo = acima = 0
    for (regiao, origem, n), decisoes in coletor.decisoes_por_rodada().items():
        p = sistema.params(regiao)
        d_real = next((r.d_real for r in coletor.rodadas
                       if (r.regiao, r.origem, r.n) == (regiao, origem, n) and r.d_real is not None), None)
        valores = [v for no, v in decisoes.items() if coletor.correto(no) and v is not None]
        if d_real is None or not valores:
            continue
        avaliadas += 1
        inferior = d_real - (p.t_early + p.delta_prop + p.delta_intra + p.delta_syn)
        superior = d_real + p.delta_inter + p.delta_syn
        if min(valores) < inferior:
            abaixo += 1
        if max(valores) > superior:
            acima += 1
    return avaliadas, abaixo, acima


def checar_acordo(resultado) -> int:
    """Rodadas em que nós corretos terminaram com D_n diferentes."""
    coletor = resultado.coletor
    desacordos = 0
    for chave, decisoes in coletor.decisoes_por_rodada().items():
        valores = {v for no, v in decisoes.items() if coletor.correto(no)}
        if len(valores) > 1:
            desacordos += 1
            logger.warning("Desacordo na rodada %s: %s", chave, sorted(valores, key=str))
    return desacordos


def checar_disputas(resultado) -> int:
    """Disputas decididas por nós corretos depois do prazo do último estágio."""
    coletor = resultado.coletor
    return sum(1 for d in coletor.disputas if coletor.correto(d.no) and not d.dentro_do_prazo)


def checar_vereditos(resultado) -> int:
    """Mensagens (fluxo, job, remetente) com vereditos corretos divergentes."""
    coletor = resultado.coletor
    por_mensagem: Dict[tuple, set] = defaultdict(set)
    for v in coletor.veredictos:
        if coletor.correto(v.no) and v.veredito in ("correta", "incorreta"):
            por_mensagem[(v.fluxo, v.job, v.remetente)].add(v.veredito)
    return sum(1 for vereditos in por_mensagem.values() if len(vereditos) > 1)


def checar_modo_seguro_unanime(resultado) -> int:
    """
    Regiões em que só parte das réplicas corretas de τ' entrou em modo seguro.

    Considera as réplicas de destino iniciais dos fluxos; os cenários das
    suítes não têm TGS, então réplicas corretas não são trocadas.
    """
    sistema = resultado.sistema
    coletor = resultado.coletor
    em_seguro = {m.no for m in coletor.modo_seguro if coletor.correto(m.no)}
    divergencias = 0
    for regiao in sistema.topologia.regioes:
        replicas = {
            no for fluxo in sistema.topologia.fluxos if fluxo.regiao_destino == regiao
            for no in fluxo.replicas_destino if coletor.correto(no)
        }
        entraram = replicas & em_seguro
        if entraram and entraram != replicas:
            divergencias += 1
            logger.warning("Região %s: modo seguro só em %s de %s", regiao, sorted(entraram), sorted(replicas))
    return divergencias


def checar_btr(resultado) -> int:
    return len(resultado.auditoria().violacoes)


def verificar_ensaio(resultado) -> ChecagemEnsaio:
    """Aplica todas as checagens de trace a um ResultadoSimulacao."""
    checagem = ChecagemEnsaio()
    avaliadas, abaixo, acima = checar_precisao(resultado)
    checagem.rodadas = avaliadas
    checagem.acima_do_limite = acima
    checagem.disputas = len(resultado.coletor.disputas)
    checagem.violacoes.update({
        "heartbeat_antecipado": checar_heartbeats_antecipados(resultado),
        "abaixo_do_limite": abaixo,
        "desacordo": checar_acordo(resultado),
        "disputa_fora_do_prazo": checar_disputas(resultado),
        "veredito_divergente": checar_vereditos(resultado),
        "modo_seguro_divergente": checar_modo_seguro_unanime(resultado),
        "btr": checar_btr(resultado),
    })
    return checagem


def margem_binomial(p: float, n: int, sigmas: float = 3.0) -> float:
    """Limite inferior p - kσ para a fração de sucessos em n rodadas."""
    if n <= 0:
        return 0.0
    return p - sigmas * math.sqrt(p * (1 - p) / n)


# ===== LIMITES DO TGS =====

def identidades_tgs(tgs: ParametrosTGS) -> Dict[str, bool]:
    """Identidades exatas: s_pen = s_max/β e s_pen/s_awd = α·p/(1-p)."""
    return {
        "s_pen": tgs.s_pen == tgs.s_max / tgs.beta,
        "razao": tgs.s_pen / tgs.s_awd == tgs.alfa * tgs.p_norm / (1 - tgs.p_norm),
        "p_longo_prazo": tgs.p_longo_prazo == (tgs.s_pen / tgs.s_awd) / (1 + tgs.s_pen / tgs.s_awd),
        "beta_penalidades": tgs.s_max - tgs.beta * tgs.s_pen == 0,
    }


def _passo(score: int, descarte: bool, pen: int, awd: int, s_max: int) -> int:
    return score - pen if descarte else min(s_max, score + awd)


def padrao_sinalizado(tgs: ParametrosTGS, padrao: Sequence[bool], limite_periodos: int = 100_000) -> bool:
    """
    Repete `padrao` (True = descarte) a partir de s_max até a sinalização.

    Um período que termina com score não menor que o anterior se repete igual
    para sempre (a atualização é monótona), então o padrão nunca é sinalizado.
    """
    pen, awd, s_max = unidades_score(tgs)
    score = s_max
    for _ in range(limite_periodos):
        inicio = score
        for descarte in padrao:
            score = _passo(score, descarte, pen, awd, s_max)
            if score <= 0:
                return True
        if score >= inicio:
            return False
    return False


def arranjos_canonicos(periodo: int, descartes: int) -> Iterable[Tuple[bool, ...]]:
    """Descartes no início, no fim, espalhados e em blocos alternados."""
    normais = periodo - descartes
    yield (True,) * descartes + (False,) * normais
    yield (False,) * normais + (True,) * descartes
    yield tuple((i * descartes) // periodo != ((i + 1) * descartes) // periodo for i in range(periodo))
    metade = descartes // 2
    yield ((True,) * metade + (False,) * (normais // 2) + (True,) * (descartes - metade)
           + (False,) * (normais - normais // 2))


@dataclass
class RelatorioLongoPrazo:
    padroes: int = 0
    abaixo_de_p: int = 0
    contraexemplos: List[Tuple[bool, ...]] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.contraexemplos


def busca_limite_longo_prazo(tgs: ParametrosTGS, periodo_maximo: int = 50,
                             periodo_exaustivo: int = 12) -> RelatorioLongoPrazo:
    """
    Todo padrão periódico com fração normal < p' precisa ser sinalizado.

    Até `periodo_exaustivo` testa todos os padrões binários; acima disso,
    todas as contagens de descarte em arranjos canônicos.
    """
    relatorio = RelatorioLongoPrazo()
    p_linha = tgs.p_longo_prazo

    def avaliar(padrao: Tuple[bool, ...]) -> None:
        relatorio.padroes += 1
        normais = padrao.count(False)
        if Fraction(normais, len(padrao)) >= p_linha:
            return
        relatorio.abaixo_de_p += 1
        if not padrao_sinalizado(tgs, padrao):
            relatorio.contraexemplos.append(padrao)

    for periodo in range(1, periodo_maximo + 1):
        if periodo <= periodo_exaustivo:
            for padrao in itertools.product((False, True), repeat=periodo):
                avaliar(padrao)
        else:
            for descartes in range(1, periodo + 1):
                for padrao in set(arranjos_canonicos(periodo, descartes)):
                    avaliar(padrao)
    logger.info("Longo prazo (α=%s, β=%s): %d padrões, %d abaixo de p', %d sem sinalização",
                tgs.alfa, tgs.beta, relatorio.padroes, relatorio.abaixo_de_p, len(relatorio.contraexemplos))
    return relatorio


def max_suspeitos_sem_sinalizar(tgs: ParametrosTGS, comprimento: int) -> int:
    """
    Máximo de eventos suspeitos numa janela de `comprimento` mensagens sem
    sinalização, partindo de s_max.

    Programação dinâmica sobre (descartes -> maior score possível): um score
    maior domina um menor porque a atualização é monótona, então guardar só o
    maior score por contagem é exato.
    """
    pen, awd, s_max = unidades_score(tgs)
    melhor: Dict[int, int] = {0: s_max}
    for _ in range(comprimento):
        proximo: Dict[int, int] = {}
        for descartes, score in melhor.items():
            normal = min(s_max, score + awd)
            if normal > proximo.get(descartes, 0):
                proximo[descartes] = normal
            punido = score - pen
            if punido > 0 and punido > proximo.get(descartes + 1, 0):
                proximo[descartes + 1] = punido
        melhor = proximo
    return max(melhor)


def max_suspeitos_forca_bruta(tgs: ParametrosTGS, comprimento: int) -> int:
    """Mesma pergunta por enumeração de todos os 2^comprimento padrões."""
    pen, awd, s_max = unidades_score(tgs)
    maximo = 0
    for padrao in itertools.product((False, True), repeat=comprimento):
        score = s_max
        for descarte in padrao:
            score = _passo(score, descarte, pen, awd, s_max)
            if score <= 0:
                break
        else:
            maximo = max(maximo, sum(padrao))
    return maximo


@dataclass(frozen=True)
class LinhaCurtoPrazo:
    beta: int
    k: int
    janela: Fraction
    comprimento: int
    max_suspeitos: int

    @property
    def ok(self) -> bool:
        return self.max_suspeitos < self.beta + self.k


def busca_limite_curto_prazo(alfa, p_norm, betas: Iterable[int] = range(1, 6), ks: Iterable[int] = (1, 2, 3),
                             arredondar=math.floor, forca_bruta_ate: int = 20) -> List[LinhaCurtoPrazo]:
    """
    Em w = β + k + k·α·p/(1-p) mensagens seguidas não cabem β + k eventos
    suspeitos sem sinalização.

    A janela inteira usada é floor(w) por padrão: com w fracionário, ceil(w)
    slots já admitem β + k suspeitos (o último deles cai depois de w).
    """
    linhas = []
    for beta in betas:
        tgs = ParametrosTGS.de_valores(alfa, beta, p_norm)
        for k in ks:
            janela = tgs.janela(k)
            comprimento = int(arredondar(janela))
            if comprimento <= forca_bruta_ate:
                maximo = max_suspeitos_forca_bruta(tgs, comprimento)
            else:
                maximo = max_suspeitos_sem_sinalizar(tgs, comprimento)
            linhas.append(LinhaCurtoPrazo(beta, k, janela, comprimento, maximo))
    return linhas


# ===== SUÍTES ADVERSARIAIS =====

SUITES = ("heartbeat", "precisao", "acordo", "poc")


def cenario_propriedade(f: int = 1, estrategia: Optional[str] = None, no: int = 0,
                        parametros: Optional[Mapping[str, Any]] = None, duracao_ms: float = 20_000,
                        nome: Optional[str] = None, rede: Optional[Mapping[str, Any]] = None,
                        tempos: Optional[Mapping[str, Any]] = None) -> Dict[str, Any]:
    """
    Cenário de duas regiões (n = 2f+1) com um fluxo em cada sentido e no
    máximo um nó comprometido, como documento JSON.
    """
    dados: Dict[str, Any] = {
        "nome": nome or f"propriedade-f{f}-{estrategia or 'sem_ataque'}",
        "duracao_ms": duracao_ms,
        "topologia": {
            "uniforme": {"regioes": 2, "f": f},
            "fluxos": [
                {"nome": "ida", "tarefa_origem": 0, "tarefa_destino": 1, "regiao_origem": 0,
                 "regiao_destino": 1, "periodo_ms": 1000, "prazo_ms": 50, "carga": {"valor": 1}},
                {"nome": "volta", "tarefa_origem": 2, "tarefa_destino": 3, "regiao_origem": 1,
                 "regiao_destino": 0, "periodo_ms": 1000, "prazo_ms": 50, "carga": {"valor": 2}},
            ],
        },
    }
    if estrategia is not None:
        dados["ataque"] = {"inicio_ms": 0,
                           "nos": {str(no): {"estrategia": estrategia, "parametros": dict(parametros or {})}}}
    if rede is not None:
        dados["rede"] = dict(rede)
    if tempos is not None:
        dados["tempos"] = dict(tempos)
    return dados


def _subconjuntos(itens: Sequence[int]) -> Iterable[List[int]]:
    for tamanho in range(len(itens) + 1):
        for combinacao in itertools.combinations(itens, tamanho):
            yield list(combinacao)


def cenarios_suite(nome: str, fs: Sequence[int] = (1, 2), duracao_ms: float = 20_000) -> List[Dict[str, Any]]:
    """
    Cenários de uma suíte.

    Na região 0 com n = 2f+1 os medidores são os nós 0..f e os guardiões
    f+1..2f; o nó 0 também é réplica de τ0.
    """
    if nome not in SUITES:
        raise ValueError(f"Suíte desconhecida: {nome}")
    cenarios: List[Dict[str, Any]] = []
    for f in fs:
        if nome == "heartbeat":
            cenarios.append(cenario_propriedade(f, "heartbeat_antecipado", 0, {"passo_grade_ms": 0.1},
                                                duracao_ms))
        elif nome == "precisao":
            cenarios.append(cenario_propriedade(f, duracao_ms=duracao_ms))
        elif nome == "acordo":
            cenarios.append(cenario_propriedade(f, "aceite_equivocado", 0, {}, duracao_ms))
            cenarios.append(cenario_propriedade(f, "silenciosa", 0, {}, duracao_ms))
            cenarios.append(cenario_propriedade(f, "adulteracao_log", f + 1, {"modo": "adulterar"}, duracao_ms))
            cenarios.append(cenario_propriedade(f, "adulteracao_log", f + 1, {"modo": "omitir"}, duracao_ms))
        else:
            cenarios.append(cenario_propriedade(f, "saida_incorreta", 0, {"carga": {"valor": 99}, "parcela": "correta"}, duracao_ms))
            cenarios.append(cenario_propriedade(f, "encaminhamento_seletivo", 0, {}, duracao_ms))
            cenarios.append(cenario_propriedade(f, "poc_fabricada", 0, {}, duracao_ms))
            cenarios.append(cenario_propriedade(f, "replay", 0, {}, duracao_ms))
    if nome == "acordo" and 1 in fs:
        # f=1: região de 3 nós, todos os subconjuntos de destinos desviados
        for desviados in _subconjuntos([1, 2]):
            cenarios.append(cenario_propriedade(
                1, "aceite_equivocado", 0, {"desviados": desviados},
                duracao_ms, nome=f"propriedade-f1-equivoco-{'-'.join(map(str, desviados)) or 'nenhum'}",
            ))
    return cenarios


@dataclass
class RelatorioSuite:
    nome: str
    ensaios: int = 0
    fora_do_modelo: int = 0
    checagem: ChecagemEnsaio = field(default_factory=ChecagemEnsaio)
    p_norm: float = 0.999

    @property
    def fracao_no_limite(self) -> float:
        if not self.checagem.rodadas:
            return 1.0
        return 1 - self.checagem.acima_do_limite / self.checagem.rodadas

    @property
    def ok(self) -> bool:
        if not self.checagem.ok:
            return False
        if self.nome == "precisao":
            return self.fracao_no_limite >= margem_binomial(self.p_norm, self.checagem.rodadas)
        return True

    def linhas(self) -> List[str]:
        c = self.checagem
        saida = [f"suite {self.nome}: {'OK' if self.ok else 'FALHOU'}",
                 f"  ensaios: {self.ensaios} (fora do modelo: {self.fora_do_modelo})",
                 f"  rodadas avaliadas: {c.rodadas}, disputas: {c.disputas}",
                 f"  fração dentro do limite superior: {self.fracao_no_limite:.6f}"]
        saida += [f"  {nome}: {valor}" for nome, valor in c.violacoes.items()]
        return saida


def executar_suite(nome: str, ensaios_por_cenario: int = 10, semente: int = 0,
                   fs: Sequence[int] = (1, 2), duracao_ms: float = 20_000,
                   processos: Optional[int] = None) -> RelatorioSuite:
    """Roda cada cenário da suíte no Monte Carlo e soma as checagens."""
    from .MonteCarlo import run_protocol_trials

    relatorio = RelatorioSuite(nome)
    for i, dados in enumerate(cenarios_suite(nome, fs, duracao_ms)):
        resultados = run_protocol_trials(dados, ensaios_por_cenario, semente + i, processos)
        for r in resultados:
            relatorio.ensaios += 1
            if r.fora_do_modelo:
                relatorio.fora_do_modelo += 1
                continue
            relatorio.checagem.somar(r.checagem)
    logger.info("Suíte %s: %d ensaios, ok=%s", nome, relatorio.ensaios, relatorio.ok)
    return relatorio
