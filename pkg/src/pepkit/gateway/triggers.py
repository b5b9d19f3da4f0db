"""Event triggers for flexible access control.

Internal triggers aggregate recent device readings against a threshold;
external triggers require a signed, fresh assertion from a trusted party
(say, a doctor declaring the user unconscious). And/Or compose them, so a
rule can demand that a doctor's statement be consistent with the vital-signs
readings before any emergency grant is issued.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional

from ..encoding import pack_str
from ..crypto.keys import sign as _sign
from ..crypto.keys import verify as _verify

AGGREGATES = ("latest", "min", "max", "avg")
COMPARATORS = ("<", "<=", ">", ">=", "==", "!=")


class BadSignature(Exception):
    pass


class UnknownAsserter(Exception):
    pass


@dataclass(frozen=True)
class Trigger:
    """One of internal | external | and | or."""

    kind: str
    # internal
    field_id: Optional[str] = None
    aggregate: Optional[str] = None
    window: Optional[int] = None
    comparator: Optional[str] = None
    threshold: Optional[float] = None
    # external
    claim_id: Optional[str] = None
    trusted_keys: tuple[bytes, ...] = ()
    freshness: Optional[int] = None
    # composite
    left: Optional["Trigger"] = None
    right: Optional["Trigger"] = None

    INTERNAL = "internal"
    EXTERNAL = "external"
    AND = "and"
    OR = "or"

    @classmethod
    def internal(
        cls, field_id: str, aggregate: str, window: int, comparator: str, threshold: float
    ) -> "Trigger":
        if aggregate not in AGGREGATES:
            raise ValueError(f"unknown aggregate {aggregate!r}")
        if comparator not in COMPARATORS:
            raise ValueError(f"unknown comparator {comparator!r}")
        return cls(
            kind=cls.INTERNAL,
            field_id=field_id,
            aggregate=aggregate,
            window=window,
            comparator=comparator,
            threshold=threshold,
        )

    @classmethod
    def external(cls, claim_id: str, trusted_keys: Iterable[bytes], freshness: int) -> "Trigger":
        return cls(
            kind=cls.EXTERNAL,
            claim_id=claim_id,
            trusted_keys=tuple(trusted_keys),
            freshness=freshness,
        )

    @classmethod
    def and_(cls, left: "Trigger", right: "Trigger") -> "Trigger":
        return cls(kind=cls.AND, left=left, right=right)

    @classmethod
    def or_(cls, left: "Trigger", right: "Trigger") -> "Trigger":
        return cls(kind=cls.OR, left=left, right=right)

    def depth(self) -> int:
        if self.kind in (self.AND, self.OR):
            return 1 + max(self.left.depth(), self.right.depth())
        return 1

    def asserter_keys(self) -> set[bytes]:
        if self.kind == self.EXTERNAL:
            return set(self.trusted_keys)
        if self.kind in (self.AND, self.OR):
            return self.left.asserter_keys() | self.right.asserter_keys()
        return set()


@dataclass(frozen=True)
class ExternalAssertion:
    claim_id: str
    subject_owner_id: str
    asserter_public: bytes
    timestamp: int
    signature: bytes

    def signed_bytes(self) -> bytes:
        return (
            b"assertion-v1:"
            + pack_str(self.claim_id)
            + pack_str(self.subject_owner_id)
            + self.asserter_public
            + self.timestamp.to_bytes(8, "little")
        )

    def signature_valid(self) -> bool:
        return _verify(self.asserter_public, self.signed_bytes(), self.signature)


def sign_assertion(
    claim_id: str, subject_owner_id: str, asserter_public: bytes, asserter_secret: bytes, timestamp: int
) -> ExternalAssertion:
    unsigned = ExternalAssertion(claim_id, subject_owner_id, asserter_public, timestamp, b"")
    return ExternalAssertion(
        claim_id, subject_owner_id, asserter_public, timestamp, _sign(asserter_secret, unsigned.signed_bytes())
    )


def _aggregate(values: list[float], how: str) -> float:
    if how == "latest":
        return values[-1]
    if how == "min":
        return min(values)
    if how == "max":
        return max(values)
    return sum(values) / len(values)


def _compare(value: float, comparator: str, threshold: float) -> bool:
    return {
        "<": value < threshold,
        "<=": value <= threshold,
        ">": value > threshold,
        ">=": value >= threshold,
        "==": value == threshold,
        "!=": value != threshold,
    }[comparator]


def evaluate_trigger(trigger: Trigger, readings, assertions, now: int, owner_id: str) -> bool:
    """Strict evaluation. Internal arms over an empty window are false;
    external arms need a valid, fresh signature from a trusted key."""
    if trigger.kind == Trigger.INTERNAL:
        values = [
            r.numeric()
            for r in readings
            if r.field_id == trigger.field_id
            and now - trigger.window <= r.timestamp <= now
            and r.numeric() is not None
        ]
        if not values:
            return False
        return _compare(_aggregate(values, trigger.aggregate), trigger.comparator, trigger.threshold)
    if trigger.kind == Trigger.EXTERNAL:
        for a in assertions:
            if (
                a.claim_id == trigger.claim_id
                and a.subject_owner_id == owner_id
                and a.asserter_public in trigger.trusted_keys
                and now - a.timestamp <= trigger.freshness
                and a.signature_valid()
            ):
                return True
        return False
    left = evaluate_trigger(trigger.left, readings, assertions, now, owner_id)
    right = evaluate_trigger(trigger.right, readings, assertions, now, owner_id)
    return (left and right) if trigger.kind == Trigger.AND else (left or right)
