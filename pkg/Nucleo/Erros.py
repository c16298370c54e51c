"""
Exceção raiz do simulador.

Cada pacote declara suas próprias exceções ao lado do código que as lança;
todas derivam de ErroGeoShield para que o CLI possa tratá-las de uma vez.
"""


class ErroGeoShield(Exception):
    """Erro base do simulador GeoShield"""
    pass


class ErroParametros(ErroGeoShield):
    """Parâmetros de tempo ou do TGS fora do domínio válido"""
    pass
