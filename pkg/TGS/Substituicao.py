"""
Escolha determinística do nó substituto de uma tarefa.
"""
from Nucleo.Erros import ErroGeoShield
from Nucleo.Identificadores import NodeId, TaskId


class ErroSemSubstituto(ErroGeoShield):
    """Nenhum nó da região tem capacidade para assumir a tarefa"""
    pass


def select_replacement(atribuicao, sinalizado: NodeId, tarefa: TaskId) -> NodeId:
    """
    Menor contador de sinalizações, desempate pelo menor NodeId, entre os nós
    com capacidade livre que ainda não executam a tarefa.

    Args:
        atribuicao: AtribuicaoRegiao da região que hospeda a tarefa
        sinalizado: Nó que deixa a tarefa
        tarefa: Tarefa a reatribuir

    Returns:
        NodeId do substituto

    Raises:
        ErroSemSubstituto: Se nenhum nó for elegível (modo seguro da região)
    """
    candidatos = [
        no for no in atribuicao.elegiveis(tarefa)
        if no != sinalizado
    ]
    if not candidatos:
        raise ErroSemSubstituto(
            f"Região {atribuicao.regiao}: sem substituto para τ{tarefa} (sai N{sinalizado})"
        )
    return min(candidatos, key=lambda no: (atribuicao.contadores.get(no, 0), no))
