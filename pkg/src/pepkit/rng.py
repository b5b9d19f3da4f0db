"""Randomness sources.

Production paths draw from the OS. Scenario mode swaps in a deterministic
generator seeded from the scenario file so reports are byte-reproducible;
the underlying cipher suite is unchanged, only nonce/keypair sampling is.
"""

from __future__ import annotations

import hashlib
import os
import struct


class RandomSource:
    def token_bytes(self, n: int) -> bytes:
        raise NotImplementedError


class SystemRandomSource(RandomSource):
    def token_bytes(self, n: int) -> bytes:
        return os.urandom(n)


class DeterministicRandomSource(RandomSource):
    """SHA-256 counter-mode DRBG. Test/scenario use only."""

    def __init__(self, seed: int | bytes):
        if isinstance(seed, int):
            seed = seed.to_bytes(16, "little", signed=False)
        self._key = hashlib.sha256(b"pepkit-drbg-v1" + seed).digest()
        self._counter = 0
        self._buf = b""

    def token_bytes(self, n: int) -> bytes:
        while len(self._buf) < n:
            block = hashlib.sha256(self._key + struct.pack("<Q", self._counter)).digest()
            self._counter += 1
            self._buf += block
        out, self._buf = self._buf[:n], self._buf[n:]
        return out


SYSTEM_RNG = SystemRandomSource()
