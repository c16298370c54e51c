"""
Manifesto de execução: texto simples com semente, versão do esquema, eco
dos parâmetros e desvios de modelo conhecidos.
"""
import json
import logging
from pathlib import Path
from typing import Any, Iterable, Mapping, Optional

from validadores import SCHEMA_VERSAO

logger = logging.getLogger(__name__)

NOME_MANIFESTO = "manifesto.txt"

# Desvios conhecidos entre o modelo abstrato e os valores de referência
DESVIOS_MODELO = {
    "baseline_f2": (
        "Sem TGS com f=2 o modelo de perda compartilhada por job dá ≈0.474 de permanência no modo "
        "normal; o valor de referência é 0.486. O gatilho exato usado na referência não é publicado."
    ),
    "janela_curto_prazo": (
        "O limite de curto prazo é checado em floor(w) mensagens; com w fracionário, ceil(w) "
        "mensagens admitem β+k eventos suspeitos sem sinalização."
    ),
    "fracao_rede_eletrica": (
        "A fração de respostas atrasadas na rede elétrica é medida, não comparada com 1/66."
    ),
}


def escrever_manifesto(diretorio: Path, comando: str, semente: Optional[int],
                       parametros: Optional[Mapping[str, Any]] = None,
                       resultados: Iterable[str] = (), desvios: Iterable[str] = (),
                       arquivos: Iterable[Path] = ()) -> Path:
    """
    Escreve `manifesto.txt` em `diretorio`.

    Args:
        diretorio: Pasta de saída
        comando: Subcomando executado
        semente: Semente raiz
        parametros: Eco dos parâmetros (documento do cenário ou argumentos)
        resultados: Linhas de resumo
        desvios: Chaves de DESVIOS_MODELO ou textos livres
        arquivos: Saídas geradas
    """
    diretorio = Path(diretorio)
    diretorio.mkdir(parents=True, exist_ok=True)
    caminho = diretorio / NOME_MANIFESTO
    linhas = [
        f"comando: {comando}",
        f"semente: {semente}",
        f"esquema: {SCHEMA_VERSAO}",
    ]
    arquivos = sorted(Path(a).name for a in arquivos)
    if arquivos:
        linhas.append("arquivos:")
        linhas += [f"  {nome}" for nome in arquivos]
    resultados = list(resultados)
    if resultados:
        linhas.append("resultados:")
        linhas += [f"  {linha}" for linha in resultados]
    desvios = [DESVIOS_MODELO.get(d, d) for d in desvios]
    if desvios:
        linhas.append("desvios de modelo:")
        linhas += [f"  - {texto}" for texto in desvios]
    linhas.append("parametros:")
    linhas.append(json.dumps(parametros or {}, sort_keys=True, indent=2, ensure_ascii=False, default=str))
    with open(caminho, "w", encoding="utf-8", newline="\n") as arquivo:
        arquivo.write("\n".join(linhas) + "\n")
    logger.info("Manifesto escrito em %s", caminho)
    return caminho
