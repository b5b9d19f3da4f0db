"""Model validation and the derived access-edge relation.

Rules:
  V1  every mandatory/optional reference resolves to a declared method
  V2  every Optional-status method has both use and notUsed texts
  V3  no method is referenced both as Mandatory and as Optional
  V4  notUsed on a method that is not Optional
  V5  every method carries a use text
  W1  (warning) attribute with neither use text nor references is
      unreachable by any service method
"""

from __future__ import annotations

from dataclasses import dataclass

from .model import AccessEdge, EdgeKind, MethodRef, PdlModel


class InvalidModel(Exception):
    """Operation requires a model that validates without errors."""


class UnknownMethod(Exception):
    pass


@dataclass(frozen=True)
class Finding:
    code: str
    location: str
    message: str


@dataclass(frozen=True)
class ValidationReport:
    errors: tuple[Finding, ...]
    warnings: tuple[Finding, ...]

    @property
    def valid(self) -> bool:
        return not self.errors


def _ref_kinds(model: PdlModel) -> dict[MethodRef, set[EdgeKind]]:
    kinds: dict[MethodRef, set[EdgeKind]] = {}
    for _, attr in model.iter_attributes():
        for ref in attr.mandatory_refs:
            kinds.setdefault(ref, set()).add(EdgeKind.MANDATORY)
        for ref in attr.optional_refs:
            kinds.setdefault(ref, set()).add(EdgeKind.OPTIONAL)
    return kinds


def validate(model: PdlModel) -> ValidationReport:
    errors: list[Finding] = []
    warnings: list[Finding] = []
    kinds = _ref_kinds(model)

    # attribute-side checks, in declaration order
    for cls, attr in model.iter_attributes():
        loc = f"{cls.name}.{attr.name}"
        for ref in list(attr.mandatory_refs) + list(attr.optional_refs):
            if model.find_method(ref) is None:
                errors.append(
                    Finding("V1", loc, f"reference to undeclared method {ref.qualified()}")
                )
        if not attr.declared():
            warnings.append(
                Finding("W1", loc, "attribute has no use text and no method references; "
                                   "it is unreachable by any service method")
            )

    # method-side checks; Optional status matches method_status: any optional ref
    for cls, meth in model.iter_methods():
        ref = MethodRef(cls.name, meth.name)
        loc = ref.qualified()
        referenced = kinds.get(ref, set())
        is_optional = EdgeKind.OPTIONAL in referenced
        if referenced == {EdgeKind.MANDATORY, EdgeKind.OPTIONAL}:
            errors.append(
                Finding("V3", loc, "method is referenced both as mandatory and as optional")
            )
        if is_optional and (meth.use_text is None or meth.not_used_text is None):
            errors.append(
                Finding("V2", loc, "optional method must carry both use and notUsed texts")
            )
        if meth.not_used_text is not None and not is_optional:
            errors.append(
                Finding("V4", loc, "notUsed text on a method that is not optional")
            )
        if meth.use_text is None:
            errors.append(Finding("V5", loc, "method has no use text"))

    return ValidationReport(errors=tuple(errors), warnings=tuple(warnings))


def access_edges(model: PdlModel) -> list[AccessEdge]:
    """One edge per stereotype reference, in declaration order."""
    report = validate(model)
    if not report.valid:
        raise InvalidModel(f"{len(report.errors)} validation error(s)")
    edges: list[AccessEdge] = []
    for cls, attr in model.iter_attributes():
        qualified = f"{cls.name}.{attr.name}"
        for ref in attr.mandatory_refs:
            edges.append(AccessEdge(qualified, ref, EdgeKind.MANDATORY))
        for ref in attr.optional_refs:
            edges.append(AccessEdge(qualified, ref, EdgeKind.OPTIONAL))
    return edges


def method_status(model: PdlModel, ref: MethodRef) -> EdgeKind:
    """Optional iff at least one optional reference targets the method;
    Mandatory otherwise (unreferenced methods included)."""
    if model.find_method(ref) is None:
        raise UnknownMethod(ref.qualified())
    kinds = _ref_kinds(model).get(ref, set())
    return EdgeKind.OPTIONAL if EdgeKind.OPTIONAL in kinds else EdgeKind.MANDATORY
