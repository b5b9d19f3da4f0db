"""Canonical encodings shared across wire formats and digests.

Canonical JSON is key-sorted, separator-minimal, UTF-8. File variants add a
2-space indent and a trailing LF but keep key order, so both are stable.
"""

from __future__ import annotations

import base64
import json
import struct
from typing import Any


def canonical_json_bytes(obj: Any) -> bytes:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False).encode("utf-8")


def canonical_json_file(obj: Any) -> str:
    """Pretty, key-sorted rendering with LF line endings for on-disk artifacts."""
    return json.dumps(obj, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def b64e(data: bytes) -> str:
    return base64.b64encode(data).decode("ascii")


def b64d(text: str) -> bytes:
    raw = base64.b64decode(text.encode("ascii"), validate=True)
    # reject non-canonical encodings (e.g. nonzero padding bits)
    if base64.b64encode(raw).decode("ascii") != text:
        raise ValueError("non-canonical base64")
    return raw


def hexd(text: str) -> bytes:
    raw = bytes.fromhex(text)
    if raw.hex() != text:
        raise ValueError("non-canonical hex")
    return raw


def pack_str(s: str) -> bytes:
    """Length-prefixed UTF-8: u32 little-endian length, then bytes."""
    raw = s.encode("utf-8")
    return struct.pack("<I", len(raw)) + raw


def pack_bytes(b: bytes) -> bytes:
    return struct.pack("<I", len(b)) + b


class ByteReader:
    """Sequential reader for the length-prefixed little-endian wire format."""

    def __init__(self, data: bytes):
        self._data = data
        self._pos = 0

    def u8(self) -> int:
        return self.raw(1)[0]

    def u32(self) -> int:
        return struct.unpack("<I", self.raw(4))[0]

    def u64(self) -> int:
        return struct.unpack("<Q", self.raw(8))[0]

    def raw(self, n: int) -> bytes:
        if self._pos + n > len(self._data):
            raise ValueError("truncated wire data")
        out = self._data[self._pos : self._pos + n]
        self._pos += n
        return out

    def string(self) -> str:
        return self.raw(self.u32()).decode("utf-8")

    def blob(self) -> bytes:
        return self.raw(self.u32())

    def done(self) -> bool:
        return self._pos == len(self._data)

    def expect_done(self) -> None:
        if not self.done():
            raise ValueError("trailing wire data")
