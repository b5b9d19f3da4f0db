"""Sealed boxes and hash chaining.

Sealed box layout (version 0x01): ephemeral X25519 public key (32 bytes)
followed by an XChaCha20-Poly1305 ciphertext under a key derived with
HKDF-SHA256 from the ECDH shared secret, salted with both public keys. The
nonce is all-zero: the derived key is unique per message because the
ephemeral key is fresh. A caller-supplied context string binds the blob to
its purpose, so a wrapped epoch key cannot be replayed as, say, a log
payload.
"""

from __future__ import annotations

import hashlib

from cryptography.hazmat.primitives import hashes
from cryptography.hazmat.primitives.kdf.hkdf import HKDF

from ..rng import SYSTEM_RNG, RandomSource
from . import chacha
from .chacha import AuthFailure
from .keys import KeyPair, x25519_shared

SEALED_VERSION = 0x01
HASH_LEN = 32
GENESIS_HASH = b"\x00" * HASH_LEN


class UnsealFailure(Exception):
    """Sealed box could not be opened with the supplied secret key."""


def _seal_key(shared: bytes, eph_pub: bytes, recipient_pub: bytes, context: bytes) -> bytes:
    hkdf = HKDF(
        algorithm=hashes.SHA256(),
        length=chacha.KEY_LEN,
        salt=eph_pub + recipient_pub,
        info=b"pepkit-sealed-box-v1:" + context,
    )
    return hkdf.derive(shared)


def seal(recipient_public: bytes, plaintext: bytes, context: bytes = b"", rng: RandomSource = SYSTEM_RNG) -> bytes:
    eph = KeyPair.generate("box", rng)
    shared = x25519_shared(eph.secret, recipient_public)
    key = _seal_key(shared, eph.public, recipient_public, context)
    ct = chacha.xchacha20poly1305_encrypt(key, b"\x00" * chacha.NONCE_LEN, plaintext, context)
    return bytes([SEALED_VERSION]) + eph.public + ct


def unseal(recipient_secret: bytes, blob: bytes, context: bytes = b"") -> bytes:
    if len(blob) < 1 + 32 + chacha.TAG_LEN or blob[0] != SEALED_VERSION:
        raise UnsealFailure("malformed sealed box")
    eph_pub, ct = blob[1:33], blob[33:]
    try:
        from .keys import box_public

        recipient_pub = box_public(recipient_secret)
        shared = x25519_shared(recipient_secret, eph_pub)
        key = _seal_key(shared, eph_pub, recipient_pub, context)
        return chacha.xchacha20poly1305_decrypt(key, b"\x00" * chacha.NONCE_LEN, ct, context)
    except (AuthFailure, ValueError) as exc:
        raise UnsealFailure("unseal failed") from exc


def chain_hash(prev_hash: bytes, entry_bytes: bytes) -> bytes:
    """SHA-256 over prev_hash || entry_bytes. Genesis prev_hash is 32 zero bytes."""
    if len(prev_hash) != HASH_LEN:
        raise ValueError("prev_hash must be 32 bytes")
    return hashlib.sha256(prev_hash + entry_bytes).digest()


def sha256(data: bytes) -> bytes:
    return hashlib.sha256(data).digest()
