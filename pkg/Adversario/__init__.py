"""
Pacote Adversario - estratégias bizantinas plugáveis
"""
