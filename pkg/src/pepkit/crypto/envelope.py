"""Per-field envelope encryption.

Each (owner, field, epoch) triple owns a fresh random 256-bit data-protection
key. Field values are AEAD-encrypted under that key with the full record
context bound as associated data, and access is delegated by wrapping epoch
keys to a service's public key as a KeyGrant.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from ..encoding import pack_str
from ..rng import SYSTEM_RNG, RandomSource
from . import chacha, primitives
from .chacha import AuthFailure  # re-exported: decrypt_field raises it

__all__ = [
    "AuthFailure",
    "UnwrapFailure",
    "DuplicateEpoch",
    "NonContiguousEpochs",
    "MixedFields",
    "EpochKey",
    "AadContext",
    "FieldCiphertext",
    "GrantReason",
    "KeyGrant",
    "encrypt_field",
    "decrypt_field",
    "wrap_grant",
    "unwrap_grant",
]


class UnwrapFailure(Exception):
    """Grant could not be unwrapped with the supplied service secret key."""


class DuplicateEpoch(Exception):
    pass


class NonContiguousEpochs(Exception):
    pass


class MixedFields(Exception):
    pass


@dataclass(frozen=True)
class EpochKey:
    owner_id: str
    field_id: str
    epoch: int
    key_material: bytes  # 32 bytes, never serialized unencrypted outside the gateway

    def __post_init__(self):
        if len(self.key_material) != chacha.KEY_LEN:
            raise ValueError("epoch key must be 32 bytes")
        if self.epoch < 0:
            raise ValueError("epoch must be non-negative")

    @classmethod
    def generate(cls, owner_id: str, field_id: str, epoch: int, rng: RandomSource = SYSTEM_RNG) -> "EpochKey":
        return cls(owner_id, field_id, epoch, rng.token_bytes(chacha.KEY_LEN))


@dataclass(frozen=True)
class AadContext:
    """Record context authenticated alongside each field ciphertext."""

    owner_id: str
    record_id: str
    field_id: str
    epoch: int
    timestamp: int

    def to_bytes(self) -> bytes:
        out = pack_str(self.owner_id) + pack_str(self.record_id) + pack_str(self.field_id)
        out += self.epoch.to_bytes(8, "little") + self.timestamp.to_bytes(8, "little")
        return out


@dataclass(frozen=True)
class FieldCiphertext:
    field_id: str
    epoch: int
    nonce: bytes  # 24 bytes
    ciphertext: bytes  # includes the 16-byte tag
    aad: AadContext

    def __post_init__(self):
        if len(self.nonce) != chacha.NONCE_LEN:
            raise ValueError("nonce must be 24 bytes")


@dataclass(frozen=True)
class GrantReason:
    kind: str  # "consent" | "emergency"
    rule_id: Optional[str] = None

    CONSENT = "consent"
    EMERGENCY = "emergency"

    @classmethod
    def consent(cls) -> "GrantReason":
        return cls(kind=cls.CONSENT)

    @classmethod
    def emergency(cls, rule_id: str) -> "GrantReason":
        return cls(kind=cls.EMERGENCY, rule_id=rule_id)


@dataclass(frozen=True)
class KeyGrant:
    owner_id: str
    grantee_service_id: str
    field_id: str
    epoch_lo: int
    epoch_hi: int
    wrapped_keys: tuple  # sealed blob per epoch, epoch_lo..epoch_hi inclusive
    issued_at: int
    reason: GrantReason
    expires_at: Optional[int] = None  # emergency grants are time-limited

    def covers_epoch(self, epoch: int) -> bool:
        return self.epoch_lo <= epoch <= self.epoch_hi

    def expired(self, now: int) -> bool:
        return self.expires_at is not None and now > self.expires_at


def _wrap_context(owner_id: str, field_id: str, epoch: int) -> bytes:
    return b"epoch-key:" + pack_str(owner_id) + pack_str(field_id) + epoch.to_bytes(8, "little")


def encrypt_field(
    key: EpochKey, plaintext: bytes, aad: AadContext, rng: RandomSource = SYSTEM_RNG
) -> FieldCiphertext:
    if (aad.field_id, aad.epoch) != (key.field_id, key.epoch) or aad.owner_id != key.owner_id:
        raise ValueError("aad context does not match the epoch key")
    nonce = rng.token_bytes(chacha.NONCE_LEN)
    ct = chacha.xchacha20poly1305_encrypt(key.key_material, nonce, plaintext, aad.to_bytes())
    return FieldCiphertext(field_id=key.field_id, epoch=key.epoch, nonce=nonce, ciphertext=ct, aad=aad)


def decrypt_field(key: EpochKey, ct: FieldCiphertext, aad: AadContext) -> bytes:
    """Plaintext iff key, nonce, ciphertext, and aad all match; AuthFailure otherwise."""
    return chacha.xchacha20poly1305_decrypt(key.key_material, ct.nonce, ct.ciphertext, aad.to_bytes())


def wrap_grant(
    keys: list[EpochKey],
    service_id: str,
    service_public: bytes,
    reason: GrantReason,
    issued_at: int,
    expires_at: Optional[int] = None,
    rng: RandomSource = SYSTEM_RNG,
) -> KeyGrant:
    if not keys:
        raise ValueError("cannot wrap an empty key list")
    owner_id, field_id = keys[0].owner_id, keys[0].field_id
    if any((k.owner_id, k.field_id) != (owner_id, field_id) for k in keys):
        raise MixedFields("all keys in a grant must share owner and field")
    ordered = sorted(keys, key=lambda k: k.epoch)
    epochs = [k.epoch for k in ordered]
    if epochs != list(range(epochs[0], epochs[-1] + 1)):
        raise NonContiguousEpochs(f"epochs {epochs} are not contiguous")
    wrapped = tuple(
        primitives.seal(service_public, k.key_material, _wrap_context(owner_id, field_id, k.epoch), rng)
        for k in ordered
    )
    return KeyGrant(
        owner_id=owner_id,
        grantee_service_id=service_id,
        field_id=field_id,
        epoch_lo=epochs[0],
        epoch_hi=epochs[-1],
        wrapped_keys=wrapped,
        issued_at=issued_at,
        reason=reason,
        expires_at=expires_at,
    )


def unwrap_grant(grant: KeyGrant, service_secret: bytes) -> list[EpochKey]:
    """Recover exactly the epoch keys in the grant's range."""
    out = []
    for offset, blob in enumerate(grant.wrapped_keys):
        epoch = grant.epoch_lo + offset
        try:
            material = primitives.unseal(
                service_secret, blob, _wrap_context(grant.owner_id, grant.field_id, epoch)
            )
        except primitives.UnsealFailure as exc:
            raise UnwrapFailure(f"cannot unwrap epoch {epoch}") from exc
        out.append(EpochKey(grant.owner_id, grant.field_id, epoch, material))
    return out
