"""
Pacote Sistema - montagem dos nós GeoShield e coleta de resultados
"""
