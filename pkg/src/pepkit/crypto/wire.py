"""Binary wire formats for ciphertexts and grants.

Layouts (all integers little-endian, strings and blobs u32-length-prefixed;
see README for the field-by-field table):

  FieldCiphertext v1:
    u8 version(0x01) | owner_id | record_id | field_id | u64 epoch |
    u64 timestamp | nonce(24 raw) | blob ciphertext

  KeyGrant v1:
    u8 version(0x01) | owner_id | grantee_service_id | field_id |
    u64 epoch_lo | u64 epoch_hi | u64 issued_at | u64 expires_at(0=none) |
    u8 reason(0=consent,1=emergency) | rule_id (only when emergency) |
    u32 count | blob wrapped_key * count
"""

from __future__ import annotations

from ..encoding import ByteReader, pack_bytes, pack_str
from .chacha import NONCE_LEN
from .envelope import AadContext, FieldCiphertext, GrantReason, KeyGrant

WIRE_VERSION = 0x01

_REASON_CODES = {GrantReason.CONSENT: 0, GrantReason.EMERGENCY: 1}
_REASON_NAMES = {v: k for k, v in _REASON_CODES.items()}


def encode_field_ciphertext(ct: FieldCiphertext) -> bytes:
    out = bytes([WIRE_VERSION])
    out += pack_str(ct.aad.owner_id) + pack_str(ct.aad.record_id) + pack_str(ct.field_id)
    out += ct.epoch.to_bytes(8, "little") + ct.aad.timestamp.to_bytes(8, "little")
    out += ct.nonce + pack_bytes(ct.ciphertext)
    return out


def decode_field_ciphertext(data: bytes) -> FieldCiphertext:
    r = ByteReader(data)
    if r.u8() != WIRE_VERSION:
        raise ValueError("unsupported ciphertext wire version")
    owner_id, record_id, field_id = r.string(), r.string(), r.string()
    epoch, timestamp = r.u64(), r.u64()
    nonce = r.raw(NONCE_LEN)
    ciphertext = r.blob()
    r.expect_done()
    aad = AadContext(owner_id=owner_id, record_id=record_id, field_id=field_id, epoch=epoch, timestamp=timestamp)
    return FieldCiphertext(field_id=field_id, epoch=epoch, nonce=nonce, ciphertext=ciphertext, aad=aad)


def encode_key_grant(g: KeyGrant) -> bytes:
    out = bytes([WIRE_VERSION])
    out += pack_str(g.owner_id) + pack_str(g.grantee_service_id) + pack_str(g.field_id)
    out += g.epoch_lo.to_bytes(8, "little") + g.epoch_hi.to_bytes(8, "little")
    out += g.issued_at.to_bytes(8, "little")
    out += (g.expires_at or 0).to_bytes(8, "little")
    out += bytes([_REASON_CODES[g.reason.kind]])
    if g.reason.kind == GrantReason.EMERGENCY:
        out += pack_str(g.reason.rule_id or "")
    out += len(g.wrapped_keys).to_bytes(4, "little")
    for blob in g.wrapped_keys:
        out += pack_bytes(blob)
    return out


def decode_key_grant(data: bytes) -> KeyGrant:
    r = ByteReader(data)
    if r.u8() != WIRE_VERSION:
        raise ValueError("unsupported grant wire version")
    owner_id, grantee, field_id = r.string(), r.string(), r.string()
    epoch_lo, epoch_hi, issued_at, expires_raw = r.u64(), r.u64(), r.u64(), r.u64()
    reason_code = r.u8()
    if reason_code not in _REASON_NAMES:
        raise ValueError("unknown grant reason code")
    if _REASON_NAMES[reason_code] == GrantReason.EMERGENCY:
        reason = GrantReason.emergency(r.string())
    else:
        reason = GrantReason.consent()
    count = r.u32()
    wrapped = tuple(r.blob() for _ in range(count))
    r.expect_done()
    if count != epoch_hi - epoch_lo + 1:
        raise ValueError("wrapped key count does not match epoch range")
    return KeyGrant(
        owner_id=owner_id,
        grantee_service_id=grantee,
        field_id=field_id,
        epoch_lo=epoch_lo,
        epoch_hi=epoch_hi,
        wrapped_keys=wrapped,
        issued_at=issued_at,
        reason=reason,
        expires_at=expires_raw or None,
    )
