"""The privacy enforcement point and its per-owner configuration."""

from .config import (
    Annotation,
    AnnotationLevel,
    EventRule,
    ForwardDecision,
    PrivacyConfiguration,
    Reading,
)
from .pep import Gateway, ServiceNotAudited, NoSuchConsent, grantable_fields
from .triggers import (
    BadSignature,
    ExternalAssertion,
    Trigger,
    UnknownAsserter,
    evaluate_trigger,
    sign_assertion,
)

__all__ = [
    "Annotation",
    "AnnotationLevel",
    "BadSignature",
    "EventRule",
    "ExternalAssertion",
    "ForwardDecision",
    "Gateway",
    "NoSuchConsent",
    "PrivacyConfiguration",
    "Reading",
    "ServiceNotAudited",
    "Trigger",
    "UnknownAsserter",
    "evaluate_trigger",
    "grantable_fields",
    "sign_assertion",
]
