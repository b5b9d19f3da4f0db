"""Tamper-evident, owner-confidential access log.

Entries are hash-chained and platform-signed; payloads are sealed to the
owner's public key, and the chain hash covers the sealed bytes so any third
party can verify integrity without reading contents. A trusted third party
countersigns the chain head every CHECKPOINT_INTERVAL entries (and at log
close), anchoring history even against a compromised platform key.

On-disk layout: one canonical JSON object per line for entries, a sidecar
JSONL file for checkpoints. All binary fields are base64; hashes are
lowercase hex. Verification re-encodes each field and rejects non-canonical
encodings, so every single-byte change to a stored line is detectable.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Callable, Optional

from .crypto import primitives
from .crypto.keys import sign as _sign
from .crypto.keys import verify as _verify
from .encoding import b64d, b64e, canonical_json_bytes, hexd
from .rng import SYSTEM_RNG, RandomSource

CHECKPOINT_INTERVAL = 64

PAYLOAD_CONTEXT = b"access-log-payload-v1"

OUTCOME_VALUE = "value"
OUTCOME_DENIED_NO_CONSENT = "denied_no_consent"
OUTCOME_DENIED_NO_KEY = "denied_no_key"
OUTCOME_DENIED_DISABLED_METHOD = "denied_disabled_method"
OUTCOME_EMERGENCY_GRANT = "emergency_grant_issued"


class UnsealFailure(Exception):
    pass


@dataclass(frozen=True)
class LogPayload:
    timestamp: int
    service_id: str
    method: str  # Class.method, empty for gateway-originated events
    attribute: str
    purpose: str
    outcome: str
    record_ids: tuple[str, ...] = ()

    def to_obj(self) -> dict:
        return {
            "timestamp": self.timestamp,
            "service_id": self.service_id,
            "method": self.method,
            "attribute": self.attribute,
            "purpose": self.purpose,
            "outcome": self.outcome,
            "record_ids": list(self.record_ids),
        }

    @classmethod
    def from_obj(cls, obj: dict) -> "LogPayload":
        return cls(
            timestamp=obj["timestamp"],
            service_id=obj["service_id"],
            method=obj["method"],
            attribute=obj["attribute"],
            purpose=obj["purpose"],
            outcome=obj["outcome"],
            record_ids=tuple(obj["record_ids"]),
        )


@dataclass(frozen=True)
class AccessLogEntry:
    seq: int
    owner_id: str
    payload_ciphertext: bytes
    prev_hash: bytes
    entry_hash: bytes
    platform_signature: bytes

    def canonical_bytes(self) -> bytes:
        """The bytes the chain hash covers: sealed payload plus position."""
        return canonical_json_bytes(
            {"seq": self.seq, "owner_id": self.owner_id, "payload": b64e(self.payload_ciphertext)}
        )

    def to_line(self) -> str:
        return json.dumps(
            {
                "seq": self.seq,
                "owner_id": self.owner_id,
                "payload": b64e(self.payload_ciphertext),
                "prev_hash": self.prev_hash.hex(),
                "entry_hash": self.entry_hash.hex(),
                "platform_signature": b64e(self.platform_signature),
            },
            sort_keys=True,
            separators=(",", ":"),
        )

    @classmethod
    def from_line(cls, line: str) -> "AccessLogEntry":
        obj = json.loads(line)
        entry = cls(
            seq=obj["seq"],
            owner_id=obj["owner_id"],
            payload_ciphertext=b64d(obj["payload"]),
            prev_hash=hexd(obj["prev_hash"]),
            entry_hash=hexd(obj["entry_hash"]),
            platform_signature=b64d(obj["platform_signature"]),
        )
        if not isinstance(entry.seq, int) or isinstance(entry.seq, bool):
            raise ValueError("seq must be an integer")
        if entry.to_line() != line:
            raise ValueError("non-canonical entry line")
        return entry


@dataclass(frozen=True)
class Checkpoint:
    owner_id: str
    up_to_seq: int
    head_hash: bytes
    ttp_signature: bytes

    def signed_bytes(self) -> bytes:
        return (
            b"log-checkpoint-v1:"
            + canonical_json_bytes({"owner_id": self.owner_id, "up_to_seq": self.up_to_seq})
            + self.head_hash
        )

    def to_line(self) -> str:
        return json.dumps(
            {
                "owner_id": self.owner_id,
                "up_to_seq": self.up_to_seq,
                "head_hash": self.head_hash.hex(),
                "ttp_signature": b64e(self.ttp_signature),
            },
            sort_keys=True,
            separators=(",", ":"),
        )

    @classmethod
    def from_line(cls, line: str) -> "Checkpoint":
        obj = json.loads(line)
        cp = cls(
            owner_id=obj["owner_id"],
            up_to_seq=obj["up_to_seq"],
            head_hash=hexd(obj["head_hash"]),
            ttp_signature=b64d(obj["ttp_signature"]),
        )
        if cp.to_line() != line:
            raise ValueError("non-canonical checkpoint line")
        return cp


@dataclass(frozen=True)
class VerificationReport:
    ok: bool
    failure_index: Optional[int] = None
    detail: str = ""


class OwnerLog:
    """Append-only log for one owner; one appender, many readers."""

    def __init__(
        self,
        owner_id: str,
        owner_box_public: bytes,
        platform_sign_secret: bytes,
        checkpoint_signer: Optional[Callable[[str, int, bytes], bytes]] = None,
        rng: RandomSource = SYSTEM_RNG,
    ):
        self.owner_id = owner_id
        self.owner_box_public = owner_box_public
        self._platform_secret = platform_sign_secret
        self._checkpoint_signer = checkpoint_signer
        self._rng = rng
        self.entries: list[AccessLogEntry] = []
        self.checkpoints: list[Checkpoint] = []

    @property
    def head_hash(self) -> bytes:
        return self.entries[-1].entry_hash if self.entries else primitives.GENESIS_HASH

    def append(self, payload: LogPayload) -> AccessLogEntry:
        sealed = primitives.seal(
            self.owner_box_public, canonical_json_bytes(payload.to_obj()), PAYLOAD_CONTEXT, self._rng
        )
        seq = len(self.entries)
        prev = self.head_hash
        body = canonical_json_bytes({"seq": seq, "owner_id": self.owner_id, "payload": b64e(sealed)})
        entry_hash = primitives.chain_hash(prev, body)
        entry = AccessLogEntry(
            seq=seq,
            owner_id=self.owner_id,
            payload_ciphertext=sealed,
            prev_hash=prev,
            entry_hash=entry_hash,
            platform_signature=_sign(self._platform_secret, entry_hash),
        )
        self.entries.append(entry)
        if self._checkpoint_signer is not None and len(self.entries) % CHECKPOINT_INTERVAL == 0:
            self.make_checkpoint()
        return entry

    def make_checkpoint(self) -> Checkpoint:
        if self._checkpoint_signer is None:
            raise RuntimeError("no checkpoint signer configured")
        if not self.entries:
            raise RuntimeError("cannot checkpoint an empty log")
        up_to = self.entries[-1].seq
        head = self.head_hash
        signature = self._checkpoint_signer(self.owner_id, up_to, head)
        cp = Checkpoint(self.owner_id, up_to, head, signature)
        self.checkpoints.append(cp)
        return cp


def verify_chain(
    entries: list[AccessLogEntry],
    checkpoints: list[Checkpoint],
    platform_public: bytes,
    ttp_public: bytes,
) -> VerificationReport:
    """Structure first (density, links, recomputed hashes), then signatures,
    then checkpoints. Reports the first failing entry index."""
    prev = primitives.GENESIS_HASH
    for i, entry in enumerate(entries):
        if entry.seq != i:
            return VerificationReport(False, i, f"sequence gap: expected {i}, found {entry.seq}")
        if entry.prev_hash != prev:
            return VerificationReport(False, i, "previous-hash link broken")
        recomputed = primitives.chain_hash(prev, entry.canonical_bytes())
        if recomputed != entry.entry_hash:
            return VerificationReport(False, i, "entry hash does not match contents")
        prev = entry.entry_hash
    for i, entry in enumerate(entries):
        if not _verify(platform_public, entry.entry_hash, entry.platform_signature):
            return VerificationReport(False, i, "platform signature invalid")
    by_seq = {e.seq: e for e in entries}
    for cp in checkpoints:
        if not _verify(ttp_public, cp.signed_bytes(), cp.ttp_signature):
            return VerificationReport(
                False, min(cp.up_to_seq, len(entries) - 1) if entries else 0,
                f"checkpoint signature invalid at seq {cp.up_to_seq}",
            )
        anchored = by_seq.get(cp.up_to_seq)
        if anchored is None or anchored.entry_hash != cp.head_hash:
            return VerificationReport(
                False, min(cp.up_to_seq, len(entries) - 1) if entries else 0,
                f"checkpoint head disagrees with chain at seq {cp.up_to_seq}",
            )
    return VerificationReport(True)


def unseal_payload(entry: AccessLogEntry, owner_box_secret: bytes) -> LogPayload:
    try:
        raw = primitives.unseal(owner_box_secret, entry.payload_ciphertext, PAYLOAD_CONTEXT)
    except primitives.UnsealFailure as exc:
        raise UnsealFailure(f"entry {entry.seq}") from exc
    return LogPayload.from_obj(json.loads(raw.decode("utf-8")))


def read_as_owner(entries: list[AccessLogEntry], owner_box_secret: bytes) -> list[LogPayload]:
    return [unseal_payload(e, owner_box_secret) for e in entries]


# --- file formats -------------------------------------------------------------


def write_log_files(entries, checkpoints, log_path, checkpoint_path) -> None:
    with open(log_path, "w", encoding="utf-8", newline="\n") as fh:
        for e in entries:
            fh.write(e.to_line() + "\n")
    with open(checkpoint_path, "w", encoding="utf-8", newline="\n") as fh:
        for cp in checkpoints:
            fh.write(cp.to_line() + "\n")


def verify_log_lines(
    entry_lines: list[bytes],
    checkpoint_lines: list[bytes],
    platform_public: bytes,
    ttp_public: bytes,
) -> VerificationReport:
    """File-level verification: parse failures and non-canonical encodings
    count as failures at the offending line."""
    entries = []
    for i, line in enumerate(entry_lines):
        try:
            entries.append(AccessLogEntry.from_line(line.decode("utf-8")))
        except (ValueError, KeyError, TypeError, UnicodeDecodeError):
            return VerificationReport(False, i, "unparseable or non-canonical entry line")
    checkpoints = []
    for i, line in enumerate(checkpoint_lines):
        try:
            checkpoints.append(Checkpoint.from_line(line.decode("utf-8")))
        except (ValueError, KeyError, TypeError, UnicodeDecodeError):
            return VerificationReport(False, 0, f"unparseable checkpoint line {i}")
    return verify_chain(entries, checkpoints, platform_public, ttp_public)


def verify_log_files(log_path, checkpoint_path, platform_public, ttp_public) -> VerificationReport:
    entry_lines = _read_lines(log_path)
    checkpoint_lines = _read_lines(checkpoint_path)
    return verify_log_lines(entry_lines, checkpoint_lines, platform_public, ttp_public)


def _read_lines(path) -> list[bytes]:
    with open(path, "rb") as fh:
        data = fh.read()
    return [line for line in data.split(b"\n") if line]
