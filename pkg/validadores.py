"""
Validação do esquema dos arquivos de cenário.

Um validador por seção; chaves desconhecidas são erro. Os valores chegam como
saíram do json.load (durações em ms); a conversão para ns fica com quem monta
os objetos.
"""
import re
from collections import Counter
from typing import Any, Dict, Iterable, List, Mapping, Optional

from Nucleo.Erros import ErroGeoShield

# Versão do esquema, ecoada no manifesto de cada execução
SCHEMA_VERSAO = "geoshield-cenario/1"


class ErroCenario(ErroGeoShield):
    """Arquivo de cenário inválido ou incoerente"""
    pass


CHAVES_RAIZ = {
    "versao", "nome", "descricao", "semente", "duracao_ms", "ensaios", "assinatura",
    "topologia", "tempos", "rede", "tgs", "ataque", "tamanhos", "experimento", "estudo_caso",
}

CAMPOS_TEMPO = {
    "t_int", "hb_timeout", "t_0", "d_intra", "delta_intra", "t_hb", "delta_hb", "t_prop", "delta_prop",
    "delta_syn", "delta_inter", "e_poc", "e_sig", "e_hb", "e_dclr_v", "e_log_ex", "e_log_v", "e_decide",
    "delta_det", "d_det", "d_rec_intra",
}

CHAVES_ENLACE = {"base_ms", "passo_ms", "minimo_ms", "maximo_ms", "intervalo_ms", "prob_descarte", "p_norm_real"}

CHAVES_EXPERIMENTO = {
    "tipo", "ensaios", "invocacoes", "f", "p_norm", "p_norm_real", "p_drop", "alfas", "betas", "ataques",
    "compromisso", "regioes", "processos", "duracao_ms", "tgs",
}

TIPOS_EXPERIMENTO = {"monte_carlo", "varredura_tgs", "dos", "banda", "protocolo"}

CHAVES_ESTUDO = {
    "tipo", "variante", "protegido", "a_servico", "a_emergencia", "distancia_visada_m", "margem_m",
    "passo_ms", "obstaculo_m", "ma_m", "ma_atacada_m", "job_ataque", "velocidade_inicial",
    "posicao_frente_m", "t_raio_ms", "t_aviso_ms", "velocidade_a_vista_kmh",
    "t_comprometimento_ms", "atraso_ms", "alvos",
}

TIPOS_ESTUDO = {"ma_ataque", "wenzhou", "rede_eletrica"}
VARIANTES_WENZHOU = {"geoshield", "incidente", "marcha_a_vista"}


# ===== AUXILIARES =====

def _falhar(caminho: str, mensagem: str) -> None:
    raise ErroCenario(f"{caminho}: {mensagem}")


def _objeto(dados: Any, caminho: str) -> Mapping[str, Any]:
    if not isinstance(dados, Mapping):
        _falhar(caminho, f"esperado objeto, recebido {type(dados).__name__}")
    return dados


def _lista(dados: Any, caminho: str) -> List[Any]:
    if not isinstance(dados, list):
        _falhar(caminho, f"esperada lista, recebido {type(dados).__name__}")
    return dados


def _chaves(dados: Mapping[str, Any], permitidas: Iterable[str], caminho: str,
            obrigatorias: Iterable[str] = ()) -> None:
    desconhecidas = sorted(set(dados) - set(permitidas))
    if desconhecidas:
        _falhar(caminho, f"chaves desconhecidas: {', '.join(desconhecidas)}")
    faltando = sorted(set(obrigatorias) - set(dados))
    if faltando:
        _falhar(caminho, f"chaves obrigatórias ausentes: {', '.join(faltando)}")


def _numero(valor: Any, caminho: str, minimo: Optional[float] = None, maximo: Optional[float] = None,
            inteiro: bool = False, aberto_min: bool = False, aberto_max: bool = False) -> float:
    if isinstance(valor, bool) or not isinstance(valor, (int, float)):
        _falhar(caminho, f"esperado número, recebido {valor!r}")
    if inteiro and not float(valor).is_integer():
        _falhar(caminho, f"esperado inteiro, recebido {valor!r}")
    if minimo is not None and (valor < minimo or (aberto_min and valor == minimo)):
        _falhar(caminho, f"{valor} abaixo do mínimo {minimo}")
    if maximo is not None and (valor > maximo or (aberto_max and valor == maximo)):
        _falhar(caminho, f"{valor} acima do máximo {maximo}")
    return valor


def _probabilidade(valor: Any, caminho: str, aberta: bool = True) -> float:
    return _numero(valor, caminho, 0, 1, aberto_min=aberta, aberto_max=aberta)


def _ids(valor: Any, caminho: str) -> List[int]:
    ids = _lista(valor, caminho)
    for i, no in enumerate(ids):
        _numero(no, f"{caminho}[{i}]", minimo=0, inteiro=True)
    if len(set(ids)) != len(ids):
        _falhar(caminho, "ids repetidos")
    return ids


def _lista_numeros(valor: Any, caminho: str, **limites) -> List[float]:
    itens = _lista(valor, caminho)
    if not itens:
        _falhar(caminho, "lista vazia")
    for i, item in enumerate(itens):
        _numero(item, f"{caminho}[{i}]", **limites)
    return itens


# ===== SEÇÕES =====

def validar_topologia(dados: Any) -> Dict[int, Dict[str, Any]]:
    """
    Valida a seção `topologia`.

    Returns:
        RegionId -> {"nos": [...], "f": f} para as checagens cruzadas
    """
    dados = _objeto(dados, "topologia")
    _chaves(dados, {"regioes", "uniforme", "fluxos"}, "topologia")
    if ("regioes" in dados) == ("uniforme" in dados):
        _falhar("topologia", "informe exatamente uma de 'regioes' ou 'uniforme'")

    regioes: Dict[int, Dict[str, Any]] = {}
    if "uniforme" in dados:
        u = _objeto(dados["uniforme"], "topologia.uniforme")
        _chaves(u, {"regioes", "f", "nos_por_regiao", "capacidade"}, "topologia.uniforme", {"regioes", "f"})
        quantidade = int(_numero(u["regioes"], "topologia.uniforme.regioes", minimo=1, inteiro=True))
        f = int(_numero(u["f"], "topologia.uniforme.f", minimo=0, inteiro=True))
        n = int(_numero(u.get("nos_por_regiao", 2 * f + 1), "topologia.uniforme.nos_por_regiao",
                        minimo=2 * f + 1, inteiro=True))
        _numero(u.get("capacidade", 4), "topologia.uniforme.capacidade", minimo=1, inteiro=True)
        for r in range(quantidade):
            regioes[r] = {"nos": list(range(r * n, r * n + n)), "f": f}
    else:
        todos: Counter = Counter()
        for i, regiao in enumerate(_lista(dados["regioes"], "topologia.regioes")):
            caminho = f"topologia.regioes[{i}]"
            regiao = _objeto(regiao, caminho)
            _chaves(regiao, {"id", "nos", "f", "medidores", "guardioes", "fase_ms", "capacidade"}, caminho,
                    {"id", "nos", "f"})
            rid = int(_numero(regiao["id"], f"{caminho}.id", minimo=0, inteiro=True))
            if rid in regioes:
                _falhar(caminho, f"região {rid} repetida")
            nos = _ids(regiao["nos"], f"{caminho}.nos")
            f = int(_numero(regiao["f"], f"{caminho}.f", minimo=0, inteiro=True))
            if len(nos) < 2 * f + 1:
                _falhar(caminho, f"n_i={len(nos)} < 2f_i+1={2 * f + 1}")
            for papel, tamanho in (("medidores", f + 1), ("guardioes", f)):
                if papel in regiao:
                    membros = _ids(regiao[papel], f"{caminho}.{papel}")
                    if len(membros) != tamanho or not set(membros) <= set(nos):
                        _falhar(f"{caminho}.{papel}", f"esperados {tamanho} nós da própria região")
            if "fase_ms" in regiao:
                _numero(regiao["fase_ms"], f"{caminho}.fase_ms", minimo=0)
            if "capacidade" in regiao:
                _numero(regiao["capacidade"], f"{caminho}.capacidade", minimo=1, inteiro=True)
            todos.update(nos)
            regioes[rid] = {"nos": nos, "f": f}
        repetidos = sorted(no for no, vezes in todos.items() if vezes > 1)
        if repetidos:
            _falhar("topologia.regioes", f"nós em mais de uma região: {repetidos}")
        if not regioes:
            _falhar("topologia.regioes", "nenhuma região")

    tarefas: Counter = Counter()
    for i, fluxo in enumerate(_lista(dados.get("fluxos", []), "topologia.fluxos")):
        caminho = f"topologia.fluxos[{i}]"
        fluxo = _objeto(fluxo, caminho)
        _chaves(fluxo, {"nome", "tarefa_origem", "tarefa_destino", "regiao_origem", "regiao_destino",
                        "replicas_origem", "replicas_destino", "periodo_ms", "fase_ms", "prazo_ms",
                        "timeout_entrada_ms", "carga"}, caminho,
                {"tarefa_origem", "tarefa_destino", "regiao_origem", "regiao_destino", "periodo_ms"})
        for lado in ("origem", "destino"):
            rid = fluxo[f"regiao_{lado}"]
            if rid not in regioes:
                _falhar(f"{caminho}.regiao_{lado}", f"região inexistente: {rid}")
            tarefas[fluxo[f"tarefa_{lado}"]] += 1
            chave = f"replicas_{lado}"
            if chave in fluxo:
                replicas = _ids(fluxo[chave], f"{caminho}.{chave}")
                f = regioes[rid]["f"]
                if len(replicas) != f + 1:
                    _falhar(f"{caminho}.{chave}", f"são necessárias f+1={f + 1} réplicas")
                if not set(replicas) <= set(regioes[rid]["nos"]):
                    _falhar(f"{caminho}.{chave}", "réplica fora da região")
        if fluxo["regiao_origem"] == fluxo["regiao_destino"]:
            _falhar(caminho, "origem e destino na mesma região")
        periodo = _numero(fluxo["periodo_ms"], f"{caminho}.periodo_ms", minimo=0, aberto_min=True)
        prazo = _numero(fluxo.get("prazo_ms", 50), f"{caminho}.prazo_ms", minimo=0, aberto_min=True)
        if prazo >= periodo:
            _falhar(f"{caminho}.prazo_ms", "prazo precisa ser menor que o período")
        for chave in ("fase_ms", "timeout_entrada_ms"):
            if chave in fluxo:
                _numero(fluxo[chave], f"{caminho}.{chave}", minimo=0)
        if "carga" in fluxo:
            _objeto(fluxo["carga"], f"{caminho}.carga")
    repetidas = sorted(t for t, vezes in tarefas.items() if vezes > 1)
    if repetidas:
        _falhar("topologia.fluxos", f"tarefas repetidas: {repetidas}")
    return regioes


def _validar_campos_tempo(dados: Mapping[str, Any], caminho: str) -> None:
    _chaves(dados, CAMPOS_TEMPO | {"p_norm"}, caminho)
    for chave, valor in dados.items():
        if chave == "p_norm":
            _probabilidade(valor, f"{caminho}.p_norm")
        else:
            _numero(valor, f"{caminho}.{chave}", minimo=0)


def validar_tempos(dados: Any, regioes: Mapping[int, Any]) -> None:
    dados = _objeto(dados, "tempos")
    base = {k: v for k, v in dados.items() if k != "por_regiao"}
    _validar_campos_tempo(base, "tempos")
    por_regiao = _objeto(dados.get("por_regiao", {}), "tempos.por_regiao")
    for rid, campos in por_regiao.items():
        if not re.fullmatch(r"\d+", str(rid)) or int(rid) not in regioes:
            _falhar("tempos.por_regiao", f"região inexistente: {rid}")
        _validar_campos_tempo(_objeto(campos, f"tempos.por_regiao.{rid}"), f"tempos.por_regiao.{rid}")


def _validar_enlace(dados: Mapping[str, Any], caminho: str, extras: Iterable[str] = ()) -> None:
    _chaves(dados, CHAVES_ENLACE | set(extras), caminho)
    for chave in ("base_ms", "passo_ms", "minimo_ms", "maximo_ms", "intervalo_ms"):
        if dados.get(chave) is not None:
            _numero(dados[chave], f"{caminho}.{chave}", minimo=0, aberto_min=chave in ("base_ms", "intervalo_ms"))
    if "prob_descarte" in dados:
        _numero(dados["prob_descarte"], f"{caminho}.prob_descarte", 0, 1, aberto_max=True)
    if dados.get("p_norm_real") is not None:
        _probabilidade(dados["p_norm_real"], f"{caminho}.p_norm_real")
    minimo, maximo = dados.get("minimo_ms"), dados.get("maximo_ms")
    if minimo is not None and maximo is not None and minimo > maximo:
        _falhar(caminho, "minimo_ms > maximo_ms")


def _validar_janela(dados: Mapping[str, Any], caminho: str) -> None:
    inicio = _numero(dados["inicio_ms"], f"{caminho}.inicio_ms", minimo=0)
    fim = _numero(dados["fim_ms"], f"{caminho}.fim_ms", minimo=0)
    if fim <= inicio:
        _falhar(caminho, "fim_ms precisa ser maior que inicio_ms")


def validar_rede(dados: Any, regioes: Mapping[int, Any]) -> None:
    dados = _objeto(dados, "rede")
    _chaves(dados, {"inter", "pares", "dos", "falhas_enlace", "relogios_sincronizados"}, "rede")
    _validar_enlace(_objeto(dados.get("inter", {}), "rede.inter"), "rede.inter")
    for i, par in enumerate(_lista(dados.get("pares", []), "rede.pares")):
        caminho = f"rede.pares[{i}]"
        par = _objeto(par, caminho)
        _validar_enlace(par, caminho, {"origem", "destino"})
        for lado in ("origem", "destino"):
            if par.get(lado) not in regioes:
                _falhar(f"{caminho}.{lado}", f"região inexistente: {par.get(lado)}")
    for i, janela in enumerate(_lista(dados.get("dos", []), "rede.dos")):
        caminho = f"rede.dos[{i}]"
        janela = _objeto(janela, caminho)
        _chaves(janela, {"inicio_ms", "fim_ms", "p_norm_efetivo", "delta_efetivo_ms"}, caminho,
                {"inicio_ms", "fim_ms", "p_norm_efetivo"})
        _validar_janela(janela, caminho)
        _probabilidade(janela["p_norm_efetivo"], f"{caminho}.p_norm_efetivo")
        if janela.get("delta_efetivo_ms") is not None:
            _numero(janela["delta_efetivo_ms"], f"{caminho}.delta_efetivo_ms", minimo=0, aberto_min=True)
    nos = {no for r in regioes.values() for no in r["nos"]}
    for i, falha in enumerate(_lista(dados.get("falhas_enlace", []), "rede.falhas_enlace")):
        caminho = f"rede.falhas_enlace[{i}]"
        falha = _objeto(falha, caminho)
        _chaves(falha, {"inicio_ms", "fim_ms", "regiao", "no", "direcao", "inter_apenas"}, caminho,
                {"inicio_ms", "fim_ms"})
        _validar_janela(falha, caminho)
        if (falha.get("regiao") is None) == (falha.get("no") is None):
            _falhar(caminho, "informe exatamente um de 'regiao' ou 'no'")
        if falha.get("regiao") is not None and falha["regiao"] not in regioes:
            _falhar(f"{caminho}.regiao", f"região inexistente: {falha['regiao']}")
        if falha.get("no") is not None and falha["no"] not in nos:
            _falhar(f"{caminho}.no", f"nó inexistente: {falha['no']}")
        if falha.get("direcao", "saida") not in ("saida", "entrada", "ambos"):
            _falhar(f"{caminho}.direcao", f"direção inválida: {falha['direcao']}")
    if not isinstance(dados.get("relogios_sincronizados", False), bool):
        _falhar("rede.relogios_sincronizados", "esperado booleano")


def validar_tgs(dados: Any) -> None:
    if dados is None:
        return
    dados = _objeto(dados, "tgs")
    _chaves(dados, {"alfa", "beta", "p_norm"}, "tgs", {"alfa", "beta"})
    _numero(dados["alfa"], "tgs.alfa", 0, 1, aberto_min=True)
    _numero(dados["beta"], "tgs.beta", minimo=1, inteiro=True)
    if "p_norm" in dados:
        _probabilidade(dados["p_norm"], "tgs.p_norm")


def validar_ataque(dados: Any, regioes: Mapping[int, Any]) -> None:
    from Adversario.Estrategias import ESTRATEGIAS, nome_canonico

    dados = _objeto(dados, "ataque")
    _chaves(dados, {"inicio_ms", "nos"}, "ataque")
    if "inicio_ms" in dados:
        _numero(dados["inicio_ms"], "ataque.inicio_ms", minimo=0)
    regiao_de = {no: rid for rid, r in regioes.items() for no in r["nos"]}
    por_regiao: Counter = Counter()
    for no, cfg in _objeto(dados.get("nos", {}), "ataque.nos").items():
        caminho = f"ataque.nos.{no}"
        if not re.fullmatch(r"\d+", str(no)) or int(no) not in regiao_de:
            _falhar(caminho, "nó inexistente")
        cfg = _objeto(cfg, caminho)
        _chaves(cfg, {"estrategia", "parametros"}, caminho, {"estrategia"})
        if nome_canonico(cfg["estrategia"]) not in ESTRATEGIAS:
            _falhar(f"{caminho}.estrategia", f"estratégia desconhecida: {cfg['estrategia']}")
        _objeto(cfg.get("parametros", {}), f"{caminho}.parametros")
        por_regiao[regiao_de[int(no)]] += 1
    for rid, quantidade in sorted(por_regiao.items()):
        if quantidade > regioes[rid]["f"]:
            _falhar("ataque.nos", f"região {rid}: {quantidade} nós comprometidos > f={regioes[rid]['f']}")


def validar_tamanhos(dados: Any) -> None:
    dados = _objeto(dados, "tamanhos")
    _chaves(dados, {"assinatura", "hash", "cabecalho", "id", "duracao", "transporte"}, "tamanhos")
    for chave, valor in dados.items():
        _numero(valor, f"tamanhos.{chave}", minimo=0, inteiro=True)


def validar_experimento(dados: Any) -> None:
    dados = _objeto(dados, "experimento")
    _chaves(dados, CHAVES_EXPERIMENTO, "experimento")
    if dados.get("tipo", "monte_carlo") not in TIPOS_EXPERIMENTO:
        _falhar("experimento.tipo", f"tipo desconhecido: {dados['tipo']}")
    for chave in ("ensaios", "invocacoes", "processos"):
        if chave in dados:
            _numero(dados[chave], f"experimento.{chave}", minimo=1, inteiro=True)
    if "f" in dados:
        _numero(dados["f"], "experimento.f", minimo=1, inteiro=True)
    for chave in ("p_norm", "p_norm_real"):
        if chave in dados:
            _probabilidade(dados[chave], f"experimento.{chave}")
    if "p_drop" in dados:
        _numero(dados["p_drop"], "experimento.p_drop", 0, 1, aberto_max=True)
    if "alfas" in dados:
        _lista_numeros(dados["alfas"], "experimento.alfas", minimo=0, maximo=1, aberto_min=True)
    if "betas" in dados:
        _lista_numeros(dados["betas"], "experimento.betas", minimo=1, inteiro=True)
    if "regioes" in dados:
        _lista_numeros(dados["regioes"], "experimento.regioes", minimo=2, inteiro=True)
    if "duracao_ms" in dados:
        _numero(dados["duracao_ms"], "experimento.duracao_ms", minimo=0, aberto_min=True)
    for i, ataque in enumerate(_lista(dados.get("ataques", []), "experimento.ataques")):
        if ataque not in ("agressivo", "adaptativo", "nenhum"):
            _falhar(f"experimento.ataques[{i}]", f"ataque desconhecido: {ataque}")
    for i, alvo in enumerate(_lista(dados.get("compromisso", []), "experimento.compromisso")):
        if alvo not in ("r1", "r2", "ambas"):
            _falhar(f"experimento.compromisso[{i}]", f"alvo desconhecido: {alvo}")
    if "tgs" in dados and not isinstance(dados["tgs"], bool):
        _falhar("experimento.tgs", "esperado booleano")


def validar_estudo_caso(dados: Any) -> None:
    dados = _objeto(dados, "estudo_caso")
    _chaves(dados, CHAVES_ESTUDO, "estudo_caso", {"tipo"})
    if dados["tipo"] not in TIPOS_ESTUDO:
        _falhar("estudo_caso.tipo", f"tipo desconhecido: {dados['tipo']}")
    if "variante" in dados and dados["variante"] not in VARIANTES_WENZHOU:
        _falhar("estudo_caso.variante", f"variante desconhecida: {dados['variante']}")
    if "protegido" in dados and not isinstance(dados["protegido"], bool):
        _falhar("estudo_caso.protegido", "esperado booleano")
    a_s = _numero(dados.get("a_servico", 0.6), "estudo_caso.a_servico", minimo=0, aberto_min=True)
    a_e = _numero(dados.get("a_emergencia", 1.2), "estudo_caso.a_emergencia", minimo=0, aberto_min=True)
    if a_e <= a_s:
        _falhar("estudo_caso", "a_emergencia precisa ser maior que a_servico")
    for chave in ("distancia_visada_m", "margem_m", "obstaculo_m", "ma_m", "ma_atacada_m", "velocidade_inicial",
                  "posicao_frente_m", "t_raio_ms", "t_aviso_ms", "velocidade_a_vista_kmh",
                  "t_comprometimento_ms", "atraso_ms"):
        if chave in dados:
            _numero(dados[chave], f"estudo_caso.{chave}", minimo=0)
    if "passo_ms" in dados:
        _numero(dados["passo_ms"], "estudo_caso.passo_ms", minimo=0, aberto_min=True)
    for chave in ("job_ataque", "alvos"):
        if chave in dados:
            _numero(dados[chave], f"estudo_caso.{chave}", minimo=0, inteiro=True)


# ===== CENÁRIO COMPLETO =====

def validar_cenario(dados: Any) -> None:
    """
    Valida um cenário inteiro (estrutura, faixas e checagens cruzadas).

    Raises:
        ErroCenario: Na primeira violação encontrada, com o caminho da chave
    """
    dados = _objeto(dados, "cenario")
    _chaves(dados, CHAVES_RAIZ, "cenario", {"topologia"})
    if "versao" in dados and dados["versao"] != SCHEMA_VERSAO:
        _falhar("versao", f"esquema {dados['versao']!r} não suportado (esperado {SCHEMA_VERSAO!r})")
    if "semente" in dados:
        _numero(dados["semente"], "semente", minimo=0, inteiro=True)
    if "duracao_ms" in dados:
        _numero(dados["duracao_ms"], "duracao_ms", minimo=0, aberto_min=True)
    if "ensaios" in dados:
        _numero(dados["ensaios"], "ensaios", minimo=1, inteiro=True)
    if dados.get("assinatura", "hmac") not in ("hmac", "ed25519"):
        _falhar("assinatura", f"modo desconhecido: {dados['assinatura']}")

    regioes = validar_topologia(dados["topologia"])
    validar_tempos(dados.get("tempos", {}), regioes)
    validar_rede(dados.get("rede", {}), regioes)
    validar_tgs(dados.get("tgs"))
    validar_ataque(dados.get("ataque", {}), regioes)
    validar_tamanhos(dados.get("tamanhos", {}))
    if "experimento" in dados:
        validar_experimento(dados["experimento"])
    if "estudo_caso" in dados:
        validar_estudo_caso(dados["estudo_caso"])
