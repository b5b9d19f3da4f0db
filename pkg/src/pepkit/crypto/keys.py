"""Actor key material: Ed25519 signing pairs and X25519 box pairs.

Every actor (owner, service, platform, ttp, asserter) gets both kinds; raw
32-byte encodings are used throughout the wire formats.
"""

from __future__ import annotations

from dataclasses import dataclass

from cryptography.hazmat.primitives import serialization
from cryptography.hazmat.primitives.asymmetric.ed25519 import Ed25519PrivateKey, Ed25519PublicKey
from cryptography.hazmat.primitives.asymmetric.x25519 import X25519PrivateKey, X25519PublicKey

from ..encoding import b64d, b64e
from ..rng import SYSTEM_RNG, RandomSource

_RAW = serialization.Encoding.Raw
_PUB = serialization.PublicFormat.Raw
_PRIV = serialization.PrivateFormat.Raw
_NOENC = serialization.NoEncryption()


def _sign_sk(raw: bytes) -> Ed25519PrivateKey:
    return Ed25519PrivateKey.from_private_bytes(raw)


def _box_sk(raw: bytes) -> X25519PrivateKey:
    return X25519PrivateKey.from_private_bytes(raw)


@dataclass(frozen=True)
class KeyPair:
    """One raw 32-byte keypair, kind 'sign' (Ed25519) or 'box' (X25519)."""

    kind: str
    public: bytes
    secret: bytes

    @classmethod
    def generate(cls, kind: str, rng: RandomSource = SYSTEM_RNG) -> "KeyPair":
        if kind not in ("sign", "box"):
            raise ValueError(f"unknown keypair kind {kind!r}")
        raw = rng.token_bytes(32)
        if kind == "sign":
            sk = _sign_sk(raw)
        else:
            sk = _box_sk(raw)
        pub = sk.public_key().public_bytes(_RAW, _PUB)
        return cls(kind=kind, public=pub, secret=raw)


@dataclass(frozen=True)
class ActorKeys:
    """Signing and box pairs for one actor."""

    actor_id: str
    role: str
    sign: KeyPair
    box: KeyPair

    @classmethod
    def generate(cls, actor_id: str, role: str, rng: RandomSource = SYSTEM_RNG) -> "ActorKeys":
        return cls(
            actor_id=actor_id,
            role=role,
            sign=KeyPair.generate("sign", rng),
            box=KeyPair.generate("box", rng),
        )

    def to_json_obj(self) -> dict:
        return {
            "actor_id": self.actor_id,
            "role": self.role,
            "sign": {"public": b64e(self.sign.public), "secret": b64e(self.sign.secret)},
            "box": {"public": b64e(self.box.public), "secret": b64e(self.box.secret)},
        }

    @classmethod
    def from_json_obj(cls, obj: dict) -> "ActorKeys":
        return cls(
            actor_id=obj["actor_id"],
            role=obj["role"],
            sign=KeyPair("sign", b64d(obj["sign"]["public"]), b64d(obj["sign"]["secret"])),
            box=KeyPair("box", b64d(obj["box"]["public"]), b64d(obj["box"]["secret"])),
        )


def sign(secret: bytes, message: bytes) -> bytes:
    """Detached Ed25519 signature."""
    return _sign_sk(secret).sign(message)


def verify(public: bytes, message: bytes, signature: bytes) -> bool:
    """Deterministic verification; malformed keys or signatures yield False."""
    try:
        Ed25519PublicKey.from_public_bytes(public).verify(signature, message)
        return True
    except Exception:
        return False


def box_public(secret: bytes) -> bytes:
    return _box_sk(secret).public_key().public_bytes(_RAW, _PUB)


def x25519_shared(secret: bytes, peer_public: bytes) -> bytes:
    return _box_sk(secret).exchange(X25519PublicKey.from_public_bytes(peer_public))
