"""
Pacote TGS - sistema de governança de pontualidade (scores, sinalização e substituição)
"""
