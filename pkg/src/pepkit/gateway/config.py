"""Per-owner gateway state: readings, annotations, event rules, consents.

The configuration object is immutable; the gateway swaps it atomically so a
reading in flight observes exactly one version.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace
from typing import Optional, Union

from ..clock import DAY, HOUR
from ..policy import ResolvedConsent
from .triggers import Trigger

MAX_GRANT_DURATION = 7 * DAY
DEFAULT_ROTATION_PERIOD = 24 * HOUR


class EmptyRestrictionSet(Exception):
    pass


class AnnotationLevel(enum.Enum):
    LOCAL_ONLY = "local_only"
    RESTRICTED_TO = "restricted_to"
    UNRESTRICTED = "unrestricted"


@dataclass(frozen=True)
class Annotation:
    """User-attached flow restriction on one device field."""

    field_id: str
    level: AnnotationLevel
    endpoints: frozenset[str] = frozenset()  # only for RESTRICTED_TO

    def __post_init__(self):
        if self.level == AnnotationLevel.RESTRICTED_TO and not self.endpoints:
            raise EmptyRestrictionSet(self.field_id)

    @classmethod
    def local_only(cls, field_id: str) -> "Annotation":
        return cls(field_id, AnnotationLevel.LOCAL_ONLY)

    @classmethod
    def restricted_to(cls, field_id: str, endpoints) -> "Annotation":
        return cls(field_id, AnnotationLevel.RESTRICTED_TO, frozenset(endpoints))

    @classmethod
    def unrestricted(cls, field_id: str) -> "Annotation":
        return cls(field_id, AnnotationLevel.UNRESTRICTED)


@dataclass(frozen=True)
class Reading:
    owner_id: str
    device_id: str
    field_id: str
    value: Union[bytes, int, float, str]
    timestamp: int

    def value_bytes(self) -> bytes:
        """Canonical byte encoding of the value for encryption."""
        if isinstance(self.value, bytes):
            return self.value
        if isinstance(self.value, bool):  # bool before int: it is a subtype
            return b"true" if self.value else b"false"
        if isinstance(self.value, (int, float)):
            return repr(self.value).encode("ascii")
        return self.value.encode("utf-8")

    def numeric(self) -> Optional[float]:
        if isinstance(self.value, bool) or not isinstance(self.value, (int, float)):
            return None
        return float(self.value)


@dataclass(frozen=True)
class ForwardDecision:
    FORWARD = "forward"
    STORE_LOCAL = "store_local"
    STORE_LOCAL_WITH_WARNING = "store_local_with_warning"

    kind: str
    endpoint: Optional[str] = None
    reason: Optional[str] = None

    @classmethod
    def forward(cls, endpoint: str) -> "ForwardDecision":
        return cls(kind=cls.FORWARD, endpoint=endpoint)

    @classmethod
    def store_local(cls) -> "ForwardDecision":
        return cls(kind=cls.STORE_LOCAL)

    @classmethod
    def store_local_with_warning(cls, reason: str) -> "ForwardDecision":
        return cls(kind=cls.STORE_LOCAL_WITH_WARNING, reason=reason)


@dataclass(frozen=True)
class EventRule:
    """Upfront-defined emergency authorization: who gets what when."""

    rule_id: str
    grantee: str  # service id, or "role:<role_id>" resolved via the signed directory
    scope: frozenset[str]  # field ids
    trigger: Trigger
    grant_duration: int

    def __post_init__(self):
        if not self.scope:
            raise ValueError("rule scope must be non-empty")
        if not 0 < self.grant_duration <= MAX_GRANT_DURATION:
            raise ValueError("grant duration must be positive and at most 7 days")
        if self.trigger.depth() > 4:
            raise ValueError("trigger nesting depth exceeds 4")


@dataclass(frozen=True)
class PrivacyConfiguration:
    owner_id: str
    annotations: tuple[Annotation, ...] = ()
    consents: tuple[ResolvedConsent, ...] = ()
    event_rules: tuple[EventRule, ...] = ()
    rotation_period: int = DEFAULT_ROTATION_PERIOD
    default_annotation_level: AnnotationLevel = AnnotationLevel.UNRESTRICTED
    derived_from_default: Optional[tuple[str, str]] = None  # (preset id, ttp signature b64)

    def annotation_for(self, field_id: str) -> Annotation:
        for a in self.annotations:
            if a.field_id == field_id:
                return a
        return Annotation(field_id, self.default_annotation_level)

    def consent_for(self, service_id: str) -> Optional[ResolvedConsent]:
        for c in self.consents:
            if c.service_id == service_id:
                return c
        return None

    def with_annotation(self, annotation: Annotation) -> "PrivacyConfiguration":
        kept = tuple(a for a in self.annotations if a.field_id != annotation.field_id)
        return replace(self, annotations=kept + (annotation,))

    def with_consent(self, consent: ResolvedConsent) -> "PrivacyConfiguration":
        kept = tuple(c for c in self.consents if c.service_id != consent.service_id)
        return replace(self, consents=kept + (consent,))

    def without_consent(self, service_id: str) -> "PrivacyConfiguration":
        return replace(self, consents=tuple(c for c in self.consents if c.service_id != service_id))

    def with_rule(self, rule: EventRule) -> "PrivacyConfiguration":
        kept = tuple(r for r in self.event_rules if r.rule_id != rule.rule_id)
        return replace(self, event_rules=kept + (rule,))
