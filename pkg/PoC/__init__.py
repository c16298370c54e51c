"""
Pacote PoC - provas de corretude para falhas de comissão entre regiões
"""
