"""
Verificação de evidências de falha de comissão.

Uma falha de comissão com evidência verificável é adotada por qualquer nó
correto com uma única declaração; sem evidência, são necessárias f+1
declarações de nós distintos. Cada motivo tem seu verificador.
"""
import logging
from typing import Callable, Dict

from Nucleo.Falhas import RegistroFalha, TipoFalha

logger = logging.getLogger(__name__)


def _heartbeat_invalido(r: RegistroFalha, sistema) -> bool:
    hb = r.evidencia
    return (hb.remetente == r.culpado
            and sistema.registro.verify(hb.remetente, hb.conteudo(), hb.assinatura)
            and not hb.valido(sistema.registro, sistema.topologia))


def _proposta_invalida(r: RegistroFalha, sistema) -> bool:
    proposta = r.evidencia
    return (proposta.proponente == r.culpado
            and proposta.assinatura_valida(sistema.registro)
            and not proposta.heartbeat.valido(sistema.registro, sistema.topologia))


def _mensagem_incorreta(r: RegistroFalha, sistema) -> bool:
    mensagem, heartbeat = r.evidencia
    if mensagem.remetente != r.culpado or not mensagem.valida(sistema.registro):
        return False
    if not heartbeat.valido(sistema.registro, sistema.topologia):
        return False
    return any(
        poc.tarefa_destino == mensagem.tarefa_destino and tuple(poc.job) == tuple(mensagem.job)
        and poc.hash_m != mensagem.hash
        for poc in heartbeat.anexos.pocs
    )


def _parcela_divergente(r: RegistroFalha, sistema) -> bool:
    from PoC.ProvaCorretude import MensagemAplicacao

    parcela = r.evidencia
    if parcela.remetente != r.culpado or not parcela.valida(sistema.registro):
        return False
    fluxo = sistema.topologia.fluxo_por_tarefa(parcela.tarefa_destino)
    esperada = MensagemAplicacao(parcela.remetente, fluxo.tarefa_origem, fluxo.tarefa_destino,
                                 parcela.job, fluxo.saida(parcela.job))
    return parcela.hash_m != esperada.hash


def _aceite_equivocado(r: RegistroFalha, sistema) -> bool:
    a, b = r.evidencia
    return (a.remetente == b.remetente == r.culpado
            and (a.regiao_origem, a.n) == (b.regiao_origem, b.n)
            and a.valor != b.valor
            and a.valido(sistema.registro) and b.valido(sistema.registro))


def _aceite_inconsistente(r: RegistroFalha, sistema) -> bool:
    from Medicao.Disputa import valor_esperado_do_log

    log = r.evidencia
    if log.dono != r.culpado or log.aceite is None or not log.valido(sistema.registro):
        return False
    if log.aceite.remetente != log.dono or not log.aceite.valido(sistema.registro):
        return False
    delta = sistema.params(sistema.topologia.regiao_de(log.dono)).delta_inter
    return log.aceite.valor != valor_esperado_do_log(log, delta)


def _proposta_equivocada(r: RegistroFalha, sistema) -> bool:
    a, b = r.evidencia
    return (a.proponente == b.proponente == r.culpado
            and a.emissor == b.emissor
            and (a.regiao_origem, a.n) == (b.regiao_origem, b.n)
            and a.d != b.d
            and a.assinatura_valida(sistema.registro) and b.assinatura_valida(sistema.registro))


def _declaracao_invalida(r: RegistroFalha, sistema) -> bool:
    decl = r.evidencia
    return (decl.declarante == r.culpado
            and decl.assinatura_valida(sistema.registro)
            and not decl.conteudo_valido(sistema.registro))


def _log_invalido(r: RegistroFalha, sistema) -> bool:
    from Medicao.Disputa import entradas_validas

    log = r.evidencia
    return (log.dono == r.culpado and log.valido(sistema.registro)
            and not entradas_validas(log, sistema.registro))


def _novo_aceite_invalido(r: RegistroFalha, sistema) -> bool:
    novo, participantes, f = r.evidencia
    from Medicao.Disputa import novo_aceite_valido

    delta = sistema.params(sistema.topologia.regiao_de(novo.remetente)).delta_inter
    return (novo.remetente == r.culpado and novo.assinatura_valida(sistema.registro)
            and not novo_aceite_valido(novo, participantes, f, delta, sistema.registro))


def _flag_divergente(r: RegistroFalha, sistema) -> bool:
    divergente, maioria = r.evidencia
    if divergente.remetente != r.culpado or not divergente.valida(sistema.registro):
        return False
    remetentes = {p.remetente for p in maioria if p.valida(sistema.registro)
                  and p.chave == divergente.chave and p.substituto != divergente.substituto}
    regiao = sistema.topologia.regiao(sistema.topologia.regiao_de(divergente.remetente))
    return len(remetentes) >= regiao.f + 1


VERIFICADORES: Dict[str, Callable[[RegistroFalha, object], bool]] = {
    "heartbeat_invalido": _heartbeat_invalido,
    "proposta_invalida": _proposta_invalida,
    "mensagem_incorreta": _mensagem_incorreta,
    "parcela_divergente": _parcela_divergente,
    "aceite_equivocado": _aceite_equivocado,
    "aceite_inconsistente": _aceite_inconsistente,
    "proposta_equivocada": _proposta_equivocada,
    "declaracao_invalida": _declaracao_invalida,
    "log_invalido": _log_invalido,
    "novo_aceite_invalido": _novo_aceite_invalido,
    "flag_divergente": _flag_divergente,
}


def verificar_evidencia(registro: RegistroFalha, sistema) -> bool:
    """
    True se a evidência anexada prova, sozinha, a falha de comissão.

    Motivos sem verificador e registros sem evidência nunca são aceitos por
    esta via.
    """
    if registro.tipo is not TipoFalha.COMISSAO or registro.evidencia is None:
        return False
    verificador = VERIFICADORES.get(registro.motivo)
    if verificador is None:
        return False
    try:
        return verificador(registro, sistema)
    except (AttributeError, TypeError, ValueError) as e:
        logger.debug("Evidência malformada para %s: %s", registro.motivo, e)
        return False
