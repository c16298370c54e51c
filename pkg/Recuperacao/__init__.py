"""
Pacote Recuperacao - propagação de recuperação e auditoria de prazos BTR
"""
