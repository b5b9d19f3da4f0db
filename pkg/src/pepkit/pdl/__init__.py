"""PDL: the privacy development language.

Parsing, validation, canonical rendering, and the derived access-edge
relation between attributes and service methods.
"""

from .model import (
    AccessEdge,
    EdgeKind,
    MethodRef,
    PdlAttribute,
    PdlClass,
    PdlMethod,
    PdlModel,
    render,
)
from .parser import PdlSyntaxError, parse
from .validate import (
    Finding,
    InvalidModel,
    UnknownMethod,
    ValidationReport,
    access_edges,
    method_status,
    validate,
)

__all__ = [
    "AccessEdge",
    "EdgeKind",
    "Finding",
    "InvalidModel",
    "MethodRef",
    "PdlAttribute",
    "PdlClass",
    "PdlMethod",
    "PdlModel",
    "PdlSyntaxError",
    "UnknownMethod",
    "ValidationReport",
    "access_edges",
    "method_status",
    "parse",
    "render",
    "validate",
]
