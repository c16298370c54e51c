"""
Pacote Experimentos - cenários, Monte Carlo, varreduras e exportação
"""
