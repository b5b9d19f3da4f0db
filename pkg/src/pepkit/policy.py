"""Privacy policy and monitoring-spec generation from a validated model.

The policy document carries one decision per optional method plus the stated
purpose of every declared attribute; the monitoring spec lists exactly the
attributes whose accesses the platform must log. Both embed a digest of the
canonical model text so user-facing artifacts are bound to what the auditor
reviewed.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

from .encoding import canonical_json_file
from .pdl.model import EdgeKind, MethodRef, PdlModel, render
from .pdl.validate import InvalidModel, method_status, validate

USE = "use"
NOT_USED = "notUsed"


class MissingSelection(Exception):
    pass


class UnknownSelection(Exception):
    pass


@dataclass(frozen=True)
class PolicyChoice:
    method: MethodRef
    use_option_text: str
    not_used_option_text: str


@dataclass(frozen=True)
class DataUse:
    attribute: str
    purpose: str
    methods: tuple[tuple[MethodRef, EdgeKind], ...]  # accessing methods with status


@dataclass(frozen=True)
class PolicyDocument:
    service_id: str
    data_uses: tuple[DataUse, ...]
    choices: tuple[PolicyChoice, ...]
    methods: tuple[tuple[MethodRef, EdgeKind], ...]  # every declared method with status
    model_digest: str
    preamble: str = ""  # optional legal boilerplate, attached verbatim, never generated

    def choice_methods(self) -> list[MethodRef]:
        return [c.method for c in self.choices]


@dataclass(frozen=True)
class MonitoredMethod:
    method: MethodRef
    status: EdgeKind
    purpose: str  # the method's own use text


@dataclass(frozen=True)
class MonitoredAttribute:
    attribute: str
    purpose: str  # display purpose: attribute use text, else joined method texts
    attr_use: str | None  # the attribute's own use text, if declared
    methods: tuple[MonitoredMethod, ...]


@dataclass(frozen=True)
class MonitoringSpec:
    service_id: str
    monitored: tuple[MonitoredAttribute, ...]
    model_digest: str

    def purpose_of(self, attribute: str) -> str | None:
        for entry in self.monitored:
            if entry.attribute == attribute:
                return entry.purpose
        return None

    def access_purpose(self, attribute: str, method: MethodRef | None = None) -> str | None:
        """Purpose recorded for one access: the attribute's own use text when
        present, else the accessing method's."""
        for entry in self.monitored:
            if entry.attribute != attribute:
                continue
            if entry.attr_use is not None:
                return entry.attr_use
            if method is not None:
                for m in entry.methods:
                    if m.method == method:
                        return m.purpose
            return entry.purpose
        return None


@dataclass(frozen=True)
class ResolvedConsent:
    """Outcome of the user's choices for one service."""

    service_id: str
    model_digest: str
    enabled_methods: tuple[MethodRef, ...]
    selections: tuple[tuple[MethodRef, str], ...]

    def is_enabled(self, method: MethodRef) -> bool:
        return method in self.enabled_methods


def model_digest(model: PdlModel) -> str:
    """SHA-256 over the canonical rendering; the model text is what the
    auditor reviews, so the digest binds to it rather than to any JSON shape."""
    return hashlib.sha256(render(model).encode("utf-8")).hexdigest()


def _require_valid(model: PdlModel) -> None:
    report = validate(model)
    if not report.valid:
        raise InvalidModel(
            "; ".join(f"{f.code} at {f.location}: {f.message}" for f in report.errors)
        )


def _attribute_purpose(model: PdlModel, attr, edges) -> str:
    if attr.use_text is not None:
        return attr.use_text
    texts = []
    for ref in edges:
        meth = model.find_method(ref)
        if meth is not None and meth.use_text:
            texts.append(meth.use_text)
    return "; ".join(texts)


def _declared_uses(model: PdlModel) -> list[DataUse]:
    uses = []
    for cls, attr in model.iter_attributes():
        if not attr.declared():
            continue
        refs = list(attr.mandatory_refs) + list(attr.optional_refs)
        methods = tuple((ref, method_status(model, ref)) for ref in refs)
        uses.append(
            DataUse(
                attribute=f"{cls.name}.{attr.name}",
                purpose=_attribute_purpose(model, attr, refs),
                methods=methods,
            )
        )
    return uses


def generate_policy(model: PdlModel, service_id: str, preamble: str = "") -> PolicyDocument:
    _require_valid(model)
    choices = []
    methods = []
    for cls, meth in model.iter_methods():
        ref = MethodRef(cls.name, meth.name)
        status = method_status(model, ref)
        methods.append((ref, status))
        if status == EdgeKind.OPTIONAL:
            choices.append(
                PolicyChoice(
                    method=ref,
                    use_option_text=meth.use_text or "",
                    not_used_option_text=meth.not_used_text or "",
                )
            )
    return PolicyDocument(
        service_id=service_id,
        data_uses=tuple(_declared_uses(model)),
        choices=tuple(choices),
        methods=tuple(methods),
        model_digest=model_digest(model),
        preamble=preamble,
    )


def generate_monitoring_spec(model: PdlModel, service_id: str = "") -> MonitoringSpec:
    _require_valid(model)
    monitored = []
    attr_use = {f"{c.name}.{a.name}": a.use_text for c, a in model.iter_attributes()}
    for use in _declared_uses(model):
        methods = tuple(
            MonitoredMethod(
                method=ref,
                status=status,
                purpose=(model.find_method(ref).use_text or ""),
            )
            for ref, status in use.methods
        )
        monitored.append(
            MonitoredAttribute(
                attribute=use.attribute,
                purpose=use.purpose,
                attr_use=attr_use[use.attribute],
                methods=methods,
            )
        )
    return MonitoringSpec(
        service_id=service_id, monitored=tuple(monitored), model_digest=model_digest(model)
    )


def render_policy_text(doc: PolicyDocument) -> str:
    lines = []
    if doc.preamble:
        lines += [doc.preamble, ""]
    lines.append(f"Privacy policy for service: {doc.service_id}")
    lines.append(f"Model digest: {doc.model_digest}")
    lines.append("")
    lines.append("Data uses:")
    for use in doc.data_uses:
        lines.append("")
        lines.append(f"{use.attribute} is used to: {use.purpose}")
        for ref, status in use.methods:
            lines.append(f"  accessed by {ref.qualified()} ({status.value})")
    lines.append("")
    if not doc.choices:
        lines.append("No decisions required.")
    else:
        lines.append("Decisions:")
        for i, choice in enumerate(doc.choices, start=1):
            lines.append("")
            lines.append(f"{i}. {choice.method.qualified()}")
            lines.append(f"   [use]     {choice.use_option_text}")
            lines.append(f"   [notUsed] {choice.not_used_option_text}")
    return "\n".join(lines) + "\n"


def resolve_choices(doc: PolicyDocument, selections: dict[MethodRef, str]) -> ResolvedConsent:
    """Enabled set = every mandatory method plus optional methods selected use."""
    expected = set(doc.choice_methods())
    for ref, value in selections.items():
        if ref not in expected:
            raise UnknownSelection(ref.qualified())
        if value not in (USE, NOT_USED):
            raise UnknownSelection(f"{ref.qualified()}: bad value {value!r}")
    missing = expected - set(selections)
    if missing:
        raise MissingSelection(", ".join(sorted(r.qualified() for r in missing)))

    enabled = [ref for ref, status in doc.methods if status == EdgeKind.MANDATORY]
    enabled += [c.method for c in doc.choices if selections[c.method] == USE]
    ordered_selections = tuple((c.method, selections[c.method]) for c in doc.choices)
    return ResolvedConsent(
        service_id=doc.service_id,
        model_digest=doc.model_digest,
        enabled_methods=tuple(enabled),
        selections=ordered_selections,
    )


# --- JSON (de)serialization -------------------------------------------------


def _methods_obj(methods) -> list[dict]:
    return [{"method": ref.qualified(), "status": status.value} for ref, status in methods]


def _methods_from_obj(items) -> tuple:
    return tuple((MethodRef.parse(i["method"]), EdgeKind(i["status"])) for i in items)


def policy_to_obj(doc: PolicyDocument) -> dict:
    return {
        "kind": "policy-document",
        "service_id": doc.service_id,
        "model_digest": doc.model_digest,
        "preamble": doc.preamble,
        "data_uses": [
            {"attribute": u.attribute, "purpose": u.purpose, "methods": _methods_obj(u.methods)}
            for u in doc.data_uses
        ],
        "choices": [
            {
                "method": c.method.qualified(),
                "use": c.use_option_text,
                "notUsed": c.not_used_option_text,
            }
            for c in doc.choices
        ],
        "methods": _methods_obj(doc.methods),
    }


def policy_from_obj(obj: dict) -> PolicyDocument:
    return PolicyDocument(
        service_id=obj["service_id"],
        data_uses=tuple(
            DataUse(u["attribute"], u["purpose"], _methods_from_obj(u["methods"]))
            for u in obj["data_uses"]
        ),
        choices=tuple(
            PolicyChoice(MethodRef.parse(c["method"]), c["use"], c["notUsed"])
            for c in obj["choices"]
        ),
        methods=_methods_from_obj(obj["methods"]),
        model_digest=obj["model_digest"],
        preamble=obj.get("preamble", ""),
    )


def monitoring_to_obj(spec: MonitoringSpec) -> dict:
    return {
        "kind": "monitoring-spec",
        "service_id": spec.service_id,
        "model_digest": spec.model_digest,
        "monitored": [
            {
                "attribute": m.attribute,
                "purpose": m.purpose,
                "attr_use": m.attr_use,
                "methods": [
                    {"method": mm.method.qualified(), "status": mm.status.value, "purpose": mm.purpose}
                    for mm in m.methods
                ],
            }
            for m in spec.monitored
        ],
    }


def monitoring_from_obj(obj: dict) -> MonitoringSpec:
    return MonitoringSpec(
        service_id=obj["service_id"],
        monitored=tuple(
            MonitoredAttribute(
                m["attribute"],
                m["purpose"],
                m["attr_use"],
                tuple(
                    MonitoredMethod(MethodRef.parse(mm["method"]), EdgeKind(mm["status"]), mm["purpose"])
                    for mm in m["methods"]
                ),
            )
            for m in obj["monitored"]
        ),
        model_digest=obj["model_digest"],
    )


def consent_to_obj(consent: ResolvedConsent) -> dict:
    return {
        "service_id": consent.service_id,
        "model_digest": consent.model_digest,
        "enabled_methods": [m.qualified() for m in consent.enabled_methods],
        "selections": [{"method": m.qualified(), "value": v} for m, v in consent.selections],
    }


def consent_from_obj(obj: dict) -> ResolvedConsent:
    return ResolvedConsent(
        service_id=obj["service_id"],
        model_digest=obj["model_digest"],
        enabled_methods=tuple(MethodRef.parse(m) for m in obj["enabled_methods"]),
        selections=tuple((MethodRef.parse(s["method"]), s["value"]) for s in obj["selections"]),
    )


def policy_file_text(doc: PolicyDocument) -> str:
    return canonical_json_file(policy_to_obj(doc))


def monitoring_file_text(spec: MonitoringSpec) -> str:
    return canonical_json_file(monitoring_to_obj(spec))
