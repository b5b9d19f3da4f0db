"""XChaCha20-Poly1305 on top of the stock ChaCha20-Poly1305 AEAD.

The extended 192-bit nonce makes random nonces collision-safe. The stock
library exposes only the 96-bit-nonce AEAD, so the HChaCha20 subkey
derivation (one run of the ChaCha permutation, no final state addition)
is implemented here and cross-checked in tests against the library's
ChaCha20 keystream.
"""

from __future__ import annotations

import struct

from cryptography.exceptions import InvalidTag
from cryptography.hazmat.primitives.ciphers.aead import ChaCha20Poly1305

KEY_LEN = 32
NONCE_LEN = 24
TAG_LEN = 16

_MASK = 0xFFFFFFFF
_CONSTANTS = (0x61707865, 0x3320646E, 0x79622D32, 0x6B206574)


class AuthFailure(Exception):
    """Decryption failed: wrong key, modified ciphertext, or modified AAD.

    Deliberately a single indistinguishable error for all three causes.
    """


def _rotl(v: int, n: int) -> int:
    return ((v << n) | (v >> (32 - n))) & _MASK


def _quarter_round(s: list[int], a: int, b: int, c: int, d: int) -> None:
    s[a] = (s[a] + s[b]) & _MASK
    s[d] = _rotl(s[d] ^ s[a], 16)
    s[c] = (s[c] + s[d]) & _MASK
    s[b] = _rotl(s[b] ^ s[c], 12)
    s[a] = (s[a] + s[b]) & _MASK
    s[d] = _rotl(s[d] ^ s[a], 8)
    s[c] = (s[c] + s[d]) & _MASK
    s[b] = _rotl(s[b] ^ s[c], 7)


def chacha20_permute(state: tuple[int, ...]) -> list[int]:
    """The 20-round ChaCha permutation, without the feed-forward addition."""
    s = list(state)
    for _ in range(10):
        _quarter_round(s, 0, 4, 8, 12)
        _quarter_round(s, 1, 5, 9, 13)
        _quarter_round(s, 2, 6, 10, 14)
        _quarter_round(s, 3, 7, 11, 15)
        _quarter_round(s, 0, 5, 10, 15)
        _quarter_round(s, 1, 6, 11, 12)
        _quarter_round(s, 2, 7, 8, 13)
        _quarter_round(s, 3, 4, 9, 14)
    return s


def chacha20_block(key: bytes, counter: int, nonce12: bytes) -> bytes:
    """One 64-byte keystream block (permutation plus feed-forward)."""
    state = _CONSTANTS + struct.unpack("<8I", key) + (counter,) + struct.unpack("<3I", nonce12)
    permuted = chacha20_permute(state)
    return struct.pack("<16I", *((permuted[i] + state[i]) & _MASK for i in range(16)))


def hchacha20(key: bytes, nonce16: bytes) -> bytes:
    """Derive a 256-bit subkey from a key and the first 16 nonce bytes."""
    if len(key) != KEY_LEN or len(nonce16) != 16:
        raise ValueError("hchacha20 needs a 32-byte key and 16-byte nonce")
    state = _CONSTANTS + struct.unpack("<8I", key) + struct.unpack("<4I", nonce16)
    p = chacha20_permute(state)
    return struct.pack("<8I", p[0], p[1], p[2], p[3], p[12], p[13], p[14], p[15])


def _subcipher(key: bytes, nonce: bytes) -> tuple[ChaCha20Poly1305, bytes]:
    if len(key) != KEY_LEN:
        raise ValueError("key must be 32 bytes")
    if len(nonce) != NONCE_LEN:
        raise ValueError("nonce must be 24 bytes")
    subkey = hchacha20(key, nonce[:16])
    return ChaCha20Poly1305(subkey), b"\x00\x00\x00\x00" + nonce[16:]


def xchacha20poly1305_encrypt(key: bytes, nonce: bytes, plaintext: bytes, aad: bytes) -> bytes:
    cipher, n12 = _subcipher(key, nonce)
    return cipher.encrypt(n12, plaintext, aad)


def xchacha20poly1305_decrypt(key: bytes, nonce: bytes, ciphertext: bytes, aad: bytes) -> bytes:
    cipher, n12 = _subcipher(key, nonce)
    try:
        return cipher.decrypt(n12, ciphertext, aad)
    except InvalidTag:
        raise AuthFailure("authenticated decryption failed") from None
