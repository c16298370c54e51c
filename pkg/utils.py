"""
Funções auxiliares de caminhos compartilhadas entre os módulos do projeto.
"""
from pathlib import Path

from validadores import ErroCenario


def get_project_root(start_path: Path = None) -> Path:
    """
    Encontra o diretório raiz do projeto procurando por main.py.

    Args:
        start_path: Caminho inicial para busca (padrão: arquivo atual)

    Returns:
        Path para o diretório raiz do projeto
    """
    if start_path is None:
        start_path = Path(__file__).resolve().parent

    current = Path(start_path).resolve()

    # Sobe até encontrar main.py ou chegar na raiz do sistema
    max_levels = 10  # Limite de segurança
    for _ in range(max_levels):
        if (current / "main.py").exists():
            return current

        parent = current.parent
        if parent == current:  # Chegou na raiz do sistema
            break
        current = parent

    # Se não encontrou, retorna o diretório do arquivo atual
    return Path(__file__).resolve().parent


def get_cenarios_dir() -> Path:
    """Diretório Cenarios/ com os cenários publicados."""
    return get_project_root() / "Cenarios"


def get_resultados_dir(create: bool = True) -> Path:
    """
    Retorna o caminho para o diretório Resultados/.

    Args:
        create: Se True, cria o diretório caso não exista

    Returns:
        Path para o diretório Resultados/
    """
    resultados_dir = get_project_root() / "Resultados"

    if create and not resultados_dir.exists():
        resultados_dir.mkdir(parents=True, exist_ok=True)

    return resultados_dir


def get_cenario_path(nome: str) -> Path:
    """
    Resolve um cenário pelo caminho ou pelo nome dentro de Cenarios/.

    Args:
        nome: Caminho de arquivo, ou nome com ou sem a extensão .json

    Returns:
        Path do arquivo existente

    Raises:
        ErroCenario: Se nenhum arquivo corresponder
    """
    direto = Path(nome)
    if direto.is_file():
        return direto
    for candidato in (get_cenarios_dir() / nome, get_cenarios_dir() / f"{nome}.json"):
        if candidato.is_file():
            return candidato
    raise ErroCenario(f"Cenário não encontrado: {nome}")
