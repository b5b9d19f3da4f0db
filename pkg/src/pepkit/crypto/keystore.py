"""Gateway-resident keystore for per-field epoch keys.

Keys live in memory; at rest they are sealed into a single file encrypted
under a key derived from the PEP master secret (environment-supplied), so no
plaintext key material ever touches disk.
"""

from __future__ import annotations

import json
from pathlib import Path

from cryptography.hazmat.primitives import hashes
from cryptography.hazmat.primitives.kdf.hkdf import HKDF

from ..encoding import b64d, b64e
from ..rng import SYSTEM_RNG, RandomSource
from . import chacha
from .envelope import DuplicateEpoch, EpochKey


class Keystore:
    """All epoch keys for one owner, keyed by (field_id, epoch)."""

    def __init__(self, owner_id: str, rng: RandomSource = SYSTEM_RNG):
        self.owner_id = owner_id
        self._rng = rng
        self._keys: dict[tuple[str, int], EpochKey] = {}

    def new_epoch_key(self, field_id: str, epoch: int) -> EpochKey:
        if (field_id, epoch) in self._keys:
            raise DuplicateEpoch(f"epoch {epoch} already exists for {field_id}")
        key = EpochKey.generate(self.owner_id, field_id, epoch, self._rng)
        self._keys[(field_id, epoch)] = key
        return key

    def get(self, field_id: str, epoch: int) -> EpochKey | None:
        return self._keys.get((field_id, epoch))

    def get_or_create(self, field_id: str, epoch: int) -> EpochKey:
        key = self._keys.get((field_id, epoch))
        return key if key is not None else self.new_epoch_key(field_id, epoch)

    def epochs_for(self, field_id: str) -> list[int]:
        return sorted(e for (f, e) in self._keys if f == field_id)

    def fields(self) -> set[str]:
        return {f for (f, _) in self._keys}

    def __len__(self) -> int:
        return len(self._keys)

    # --- at-rest encryption -------------------------------------------------

    @staticmethod
    def _file_key(master_secret: bytes) -> bytes:
        return HKDF(
            algorithm=hashes.SHA256(), length=chacha.KEY_LEN, salt=b"pepkit-keystore", info=b"at-rest-v1"
        ).derive(master_secret)

    def save(self, path: str | Path, master_secret: bytes) -> None:
        payload = json.dumps(
            [
                {"field_id": k.field_id, "epoch": k.epoch, "key": b64e(k.key_material)}
                for k in sorted(self._keys.values(), key=lambda k: (k.field_id, k.epoch))
            ]
        ).encode("utf-8")
        nonce = self._rng.token_bytes(chacha.NONCE_LEN)
        sealed = chacha.xchacha20poly1305_encrypt(
            self._file_key(master_secret), nonce, payload, self.owner_id.encode("utf-8")
        )
        Path(path).write_bytes(nonce + sealed)

    @classmethod
    def load(cls, path: str | Path, owner_id: str, master_secret: bytes, rng: RandomSource = SYSTEM_RNG) -> "Keystore":
        blob = Path(path).read_bytes()
        nonce, sealed = blob[: chacha.NONCE_LEN], blob[chacha.NONCE_LEN :]
        payload = chacha.xchacha20poly1305_decrypt(
            cls._file_key(master_secret), nonce, sealed, owner_id.encode("utf-8")
        )
        store = cls(owner_id, rng)
        for item in json.loads(payload.decode("utf-8")):
            key = EpochKey(owner_id, item["field_id"], item["epoch"], b64d(item["key"]))
            store._keys[(key.field_id, key.epoch)] = key
        return store
