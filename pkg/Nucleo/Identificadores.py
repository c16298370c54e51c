"""
Identificadores de nós, regiões, tarefas e jobs.
"""
from typing import NamedTuple, NewType

NodeId = NewType("NodeId", int)
RegionId = NewType("RegionId", int)
TaskId = NewType("TaskId", int)


class JobId(NamedTuple):
    """Job j de uma tarefa: (tarefa, índice da invocação)."""
    tarefa: TaskId
    invocacao: int

    def __str__(self) -> str:
        return f"{self.tarefa}:{self.invocacao}"
