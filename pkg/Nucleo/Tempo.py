"""
Aritmética de tempo do protocolo.

Todo instante e toda duração são inteiros em nanossegundos. Os parâmetros de
tempo seguem a tabela de notações do protocolo de medição; a agenda de cada
rodada (t_sig, t_send, t_hb_stop, t_accept, t_decide) é derivada deles.
"""
from dataclasses import dataclass, fields

from .Erros import ErroGeoShield, ErroParametros


class ErroTempo(ErroGeoShield):
    """Instante negativo ou estouro da aritmética de SimTime"""
    pass


NS_POR_US = 1_000
NS_POR_MS = 1_000_000
NS_POR_S = 1_000_000_000

# Maior instante representável (int64 com sinal)
SIMTIME_MAX = 2**63 - 1


def us(valor: float) -> int:
    """Microssegundos → ns"""
    return round(valor * NS_POR_US)


def ms(valor: float) -> int:
    """Milissegundos → ns"""
    return round(valor * NS_POR_MS)


def s(valor: float) -> int:
    """Segundos → ns"""
    return round(valor * NS_POR_S)


def em_segundos(t: int) -> float:
    return t / NS_POR_S


def em_ms(t: int) -> float:
    return t / NS_POR_MS


def checar(t: int) -> int:
    """
    Valida um SimTime.

    Raises:
        ErroTempo: Se negativo ou acima de SIMTIME_MAX
    """
    if t < 0:
        raise ErroTempo(f"Instante negativo: {t} ns")
    if t > SIMTIME_MAX:
        raise ErroTempo(f"Estouro de SimTime: {t} ns")
    return t


def somar(*partes: int) -> int:
    """Soma instantes/durações e falha em vez de estourar silenciosamente."""
    return checar(sum(partes))


# ===== PARÂMETROS DE TEMPO =====

@dataclass(frozen=True)
class ParametrosTempo:
    """
    Parâmetros de tempo de uma região (durações em ns).

    Os campos delta_* admitem zero; as demais durações precisam ser positivas.
    """
    t_int: int
    hb_timeout: int
    t_0: int
    d_intra: int
    delta_intra: int
    t_hb: int
    delta_hb: int
    t_prop: int
    delta_prop: int
    delta_syn: int
    delta_inter: int
    p_norm: float
    e_poc: int = 100_000
    e_sig: int = 100_000
    e_hb: int = 1_000_000
    e_dclr_v: int = 100_000
    e_log_ex: int = 100_000
    e_log_v: int = 100_000
    e_decide: int = 100_000
    delta_det: int = 5_000_000
    d_det: int = 150_000_000
    d_rec_intra: int = 50_000_000

    # Campos que podem valer zero
    CAMPOS_DELTA = ("delta_intra", "delta_hb", "delta_prop", "delta_syn", "delta_inter", "t_0")

    def __post_init__(self):
        for campo in fields(self):
            if campo.name == "p_norm":
                continue
            valor = getattr(self, campo.name)
            if not isinstance(valor, int):
                raise ErroParametros(f"{campo.name} deve ser inteiro em ns, recebido {valor!r}")
            if campo.name in self.CAMPOS_DELTA:
                if valor < 0:
                    raise ErroParametros(f"{campo.name} não pode ser negativo")
            elif valor <= 0:
                raise ErroParametros(f"{campo.name} deve ser positivo")

        if not 0 < self.p_norm < 1:
            raise ErroParametros(f"p_norm fora de (0, 1): {self.p_norm}")
        if self.delta_intra > self.d_intra:
            raise ErroParametros("delta_intra > d_intra")
        if self.delta_hb > self.t_hb:
            raise ErroParametros("delta_hb > t_hb")
        if self.delta_prop > self.t_prop:
            raise ErroParametros("delta_prop > t_prop")
        if self.delta_det > self.d_det:
            raise ErroParametros("delta_det > d_det")
        # t_hb_stop precisa ficar depois de t_send
        if self.hb_timeout <= self.t_prop + self.d_intra:
            raise ErroParametros("hb_timeout precisa exceder t_prop + d_intra")

    @classmethod
    def de_milissegundos(cls, **valores) -> "ParametrosTempo":
        """
        Constrói a partir de valores em milissegundos (formato dos cenários).

        Args:
            **valores: Campos do dataclass; p_norm é repassado sem conversão

        Returns:
            ParametrosTempo com durações em ns
        """
        convertidos = {
            chave: (valor if chave == "p_norm" else ms(valor))
            for chave, valor in valores.items()
        }
        return cls(**convertidos)

    def com_fase(self, fase: int) -> "ParametrosTempo":
        """Mesmos parâmetros com t_0 deslocado (fase própria da região)."""
        if fase == 0:
            return self
        campos = {campo.name: getattr(self, campo.name) for campo in fields(self)}
        campos["t_0"] = self.t_0 + fase
        return ParametrosTempo(**campos)

    @property
    def t_early(self) -> int:
        """Antecedência máxima de um heartbeat válido em relação a t_n."""
        return self.delta_syn + self.delta_intra + self.delta_hb

    @property
    def d_gap_poc(self) -> int:
        return self.e_poc + 2 * self.d_intra + self.e_sig + self.t_hb


# ===== AGENDA DA RODADA =====

@dataclass(frozen=True)
class AgendaRodada:
    n: int
    t_sig: int
    t_send: int
    t_hb_stop: int
    t_accept: int
    t_decide: int


def instante_envio(n: int, p: ParametrosTempo) -> int:
    """t_n = t_0 + n·T_int, sem montar os demais instantes da rodada."""
    if n < 0:
        raise ErroTempo(f"Rodada negativa: {n}")
    return somar(p.t_0, n * p.t_int)


def round_schedule(n: int, p: ParametrosTempo) -> AgendaRodada:
    """
    Calcula os seis instantes da rodada n.

    Args:
        n: Índice da rodada (n >= 0)
        p: Parâmetros de tempo da região emissora

    Returns:
        AgendaRodada com t_sig < t_send < t_hb_stop < t_accept < t_decide

    Raises:
        ErroTempo: Se n for negativo ou a aritmética estourar
    """
    t_send = instante_envio(n, p)
    t_sig = checar(t_send - p.d_intra - p.t_hb)
    t_accept = somar(t_send, p.hb_timeout)
    t_hb_stop = t_accept - p.t_prop - p.d_intra
    t_decide = somar(t_accept, p.t_prop, p.d_intra)
    return AgendaRodada(n, t_sig, t_send, t_hb_stop, t_accept, t_decide)


def primeira_rodada(p: ParametrosTempo, alvo: int, campo: str = "t_send") -> int:
    """
    Menor n >= 0 cujo instante `campo` da agenda é >= alvo.

    Todos os campos são t_send somado a uma constante, então basta uma divisão
    inteira com teto.
    """
    deslocamento = _DESLOCAMENTOS[campo](p)
    restante = alvo - p.t_0 - deslocamento
    if restante <= 0:
        return 0
    return -(-restante // p.t_int)


def rodada_em(p: ParametrosTempo, t: int) -> int:
    """Índice da última rodada com t_send <= t (0 antes de t_0)."""
    if t <= p.t_0:
        return 0
    return (t - p.t_0) // p.t_int


# Offset de cada campo da agenda em relação a t_send
_DESLOCAMENTOS = {
    "t_sig": lambda p: -p.d_intra - p.t_hb,
    "t_send": lambda p: 0,
    "t_hb_stop": lambda p: p.hb_timeout - p.t_prop - p.d_intra,
    "t_accept": lambda p: p.hb_timeout,
    "t_decide": lambda p: p.hb_timeout + p.t_prop + p.d_intra,
}
