"""
Assinaturas digitais dos nós.

Dois modos:
- "ed25519": chaves Ed25519 reais (cryptography), derivadas da semente do ensaio
- "hmac": HMAC-SHA256 com chave secreta por nó, para ensaios longos

Nos dois modos um nó só assina com o próprio Assinador; o registro verifica
qualquer assinatura sem expor chaves privadas aos nós.
"""
import functools
import hashlib
import json
from dataclasses import dataclass, fields, is_dataclass
from enum import Enum
from typing import Any, Dict, Iterable

from cryptography.exceptions import InvalidSignature
from cryptography.hazmat.primitives import hashes, hmac
from cryptography.hazmat.primitives.asymmetric.ed25519 import Ed25519PrivateKey

from .Erros import ErroGeoShield
from .Identificadores import NodeId


class ErroChaveDesconhecida(ErroGeoShield):
    """NodeId sem par de chaves no registro"""
    pass


# ===== SERIALIZAÇÃO CANÔNICA =====

def _padrao(obj: Any) -> Any:
    if isinstance(obj, bytes):
        return obj.hex()
    if isinstance(obj, Enum):
        return obj.value
    if isinstance(obj, (set, frozenset)):
        return sorted(obj, key=repr)
    if is_dataclass(obj):
        return {campo.name: getattr(obj, campo.name) for campo in fields(obj)}
    raise TypeError(f"Tipo não serializável: {type(obj).__name__}")


def canonico(obj: Any) -> bytes:
    """Serialização determinística usada em assinaturas e hashes."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), default=_padrao).encode("utf-8")


def resumo(obj: Any) -> bytes:
    """H(obj): SHA-256 da forma canônica."""
    return hashlib.sha256(canonico(obj)).digest()


# ===== ASSINATURA =====

@dataclass(frozen=True)
class Assinatura:
    signatario: NodeId
    resumo: bytes
    valor: bytes

    def __repr__(self) -> str:
        return f"Assinatura(N{self.signatario}, {self.resumo[:4].hex()})"


class Assinador:
    """Capacidade de assinar em nome de um único nó."""

    def __init__(self, registro: "RegistroChaves", no: NodeId):
        self._registro = registro
        self.no = no

    def assinar(self, conteudo: Any) -> Assinatura:
        return self._registro.sign(self.no, conteudo)


class RegistroChaves:
    """
    Chaves de todos os nós de um ensaio.

    Args:
        semente: Semente do ensaio (as chaves são derivadas dela)
        nos: Nós participantes
        modo: "ed25519" ou "hmac"
    """

    MODOS = ("ed25519", "hmac")
    LIMITE_VERIFICADAS = 4096

    def __init__(self, semente: int, nos: Iterable[NodeId], modo: str = "hmac"):
        if modo not in self.MODOS:
            raise ErroGeoShield(f"Modo de assinatura desconhecido: {modo}")
        self.modo = modo
        self._privadas: Dict[NodeId, Any] = {}
        self._publicas: Dict[NodeId, Any] = {}
        # Verificações já feitas: (nó, resumo, valor) -> válida
        self._verificar = functools.lru_cache(maxsize=self.LIMITE_VERIFICADAS)(self._verificar_criptografia)

        for no in nos:
            material = hashlib.sha256(f"{semente}:{no}".encode("utf-8")).digest()
            if modo == "ed25519":
                privada = Ed25519PrivateKey.from_private_bytes(material)
                self._privadas[no] = privada
                self._publicas[no] = privada.public_key()
            else:
                self._privadas[no] = material

    def assinador(self, no: NodeId) -> Assinador:
        self._exigir(no)
        return Assinador(self, no)

    def _exigir(self, no: NodeId) -> None:
        if no not in self._privadas:
            raise ErroChaveDesconhecida(f"Nó sem chave: {no}")

    def _hmac(self, no: NodeId, digest: bytes) -> bytes:
        h = hmac.HMAC(self._privadas[no], hashes.SHA256())
        h.update(digest)
        return h.finalize()

    def sign(self, no: NodeId, conteudo: Any) -> Assinatura:
        """
        Assina H(conteudo) com a chave de `no`.

        Raises:
            ErroChaveDesconhecida: Se o nó não existir
        """
        self._exigir(no)
        digest = resumo(conteudo)
        if self.modo == "ed25519":
            valor = self._privadas[no].sign(digest)
        else:
            valor = self._hmac(no, digest)
        return Assinatura(no, digest, valor)

    def verify(self, no: NodeId, conteudo: Any, assinatura: Assinatura) -> bool:
        """
        Verifica `assinatura` sobre `conteudo` atribuída a `no`.

        Raises:
            ErroChaveDesconhecida: Se o nó não existir
        """
        self._exigir(no)
        if assinatura is None or assinatura.signatario != no:
            return False
        if resumo(conteudo) != assinatura.resumo:
            return False
        return self._verificar(no, assinatura.resumo, assinatura.valor)

    def _verificar_criptografia(self, no: NodeId, digest: bytes, valor: bytes) -> bool:
        if self.modo == "ed25519":
            try:
                self._publicas[no].verify(valor, digest)
                return True
            except InvalidSignature:
                return False
        h = hmac.HMAC(self._privadas[no], hashes.SHA256())
        h.update(digest)
        try:
            h.verify(valor)
            return True
        except InvalidSignature:
            return False

    def conhece(self, no: NodeId) -> bool:
        return no in self._privadas
