"""
Modelo de tamanho serializado das mensagens (contabilidade de banda).
"""
from dataclasses import dataclass


@dataclass(frozen=True)
class ModeloTamanho:
    """
    Tamanhos em bytes dos elementos de uma mensagem.

    `transporte` é o custo fixo de cada pacote na rede: Ethernet (14),
    IPv4 (20) e TCP com timestamps (32).
    """
    assinatura: int = 64
    hash: int = 32
    cabecalho: int = 16
    id: int = 4
    duracao: int = 8
    transporte: int = 66

    def assinaturas(self, quantidade: int) -> int:
        """Conjunto de assinaturas com o id de cada signatário."""
        return quantidade * (self.assinatura + self.id)

    def envelope(self, ids: int = 1, duracoes: int = 0) -> int:
        """Cabeçalho + ids + durações + assinatura do remetente."""
        return self.cabecalho + ids * self.id + duracoes * self.duracao + self.assinatura

    def pacote(self, carga: int) -> int:
        return carga + self.transporte
