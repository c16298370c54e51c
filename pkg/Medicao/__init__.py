"""
Pacote Medicao - protocolo de medição de latência tolerante a bizantinos e disputas
"""
