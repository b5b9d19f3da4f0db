"""Trusted third party: service audit, verdict signing, default privacy
configurations, role directory, and log-checkpoint countersigning.

The audit is static analysis of the declarative access script plus an
exhaustive simulation over every choice assignment:

  (a) a read of an attribute with neither an edge to the reading method nor
      an attribute-level use purpose;
  (b) a method that performs reads but declares no use purpose;
  (c) under some assignment, a disabled optional method still performs reads
      because an enabled method reaches it through internal calls;
  (d) a proposed emergency rule that can fire without any trusted external
      assertion (the trigger is satisfiable with all external arms false).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Optional

from .cloud import AuditVerdictInfo, normalize_script
from .crypto.keys import ActorKeys, sign as _sign, verify as _verify
from .encoding import b64d, b64e, canonical_json_bytes
from .gateway.config import AnnotationLevel
from .gateway.triggers import Trigger
from .pdl import InvalidModel, MethodRef, PdlModel, method_status, validate
from .pdl.model import EdgeKind
from .policy import NOT_USED, USE, model_digest

MAX_CHOICE_ASSIGNMENTS = 10  # 2**10 exhaustive simulation bound


class UnknownLevel(Exception):
    pass


@dataclass(frozen=True)
class Violation:
    code: str  # a | b | c | d
    subject: str
    detail: str

    def to_obj(self) -> list:
        return [self.code, self.subject, self.detail]


@dataclass(frozen=True)
class DefaultConfiguration:
    preset_id: str
    level: str  # strict | balanced | permissive
    default_choice: str  # use | notUsed
    default_annotation: str  # AnnotationLevel value
    whitelist: tuple[str, ...]  # fields exempt from local_only under strict
    ttp_signature: bytes

    def signed_bytes(self) -> bytes:
        return b"default-config-v1:" + canonical_json_bytes(
            {
                "preset_id": self.preset_id,
                "level": self.level,
                "default_choice": self.default_choice,
                "default_annotation": self.default_annotation,
                "whitelist": list(self.whitelist),
            }
        )

    def to_obj(self) -> dict:
        return {
            "preset_id": self.preset_id,
            "level": self.level,
            "default_choice": self.default_choice,
            "default_annotation": self.default_annotation,
            "whitelist": list(self.whitelist),
            "ttp_signature": b64e(self.ttp_signature),
        }

    @classmethod
    def from_obj(cls, obj: dict) -> "DefaultConfiguration":
        return cls(
            preset_id=obj["preset_id"],
            level=obj["level"],
            default_choice=obj["default_choice"],
            default_annotation=obj["default_annotation"],
            whitelist=tuple(obj["whitelist"]),
            ttp_signature=b64d(obj["ttp_signature"]),
        )


_PRESETS = {
    "strict": (NOT_USED, AnnotationLevel.LOCAL_ONLY.value),
    "balanced": (NOT_USED, AnnotationLevel.UNRESTRICTED.value),
    "permissive": (USE, AnnotationLevel.UNRESTRICTED.value),
}


@dataclass(frozen=True)
class RoleDirectory:
    """TTP-signed mapping from role id to member services."""

    members: tuple[tuple[str, str, bytes], ...]  # (role_id, service_id, box public key)
    ttp_signature: bytes

    def signed_bytes(self) -> bytes:
        return b"role-directory-v1:" + canonical_json_bytes(
            [[r, s, b64e(pk)] for r, s, pk in self.members]
        )

    def resolve(self, role_id: str) -> list[tuple[str, bytes]]:
        return [(s, pk) for r, s, pk in self.members if r == role_id]


class Ttp:
    def __init__(self, keys: ActorKeys):
        self._keys = keys
        self.public_key = keys.sign.public

    # --- audit -----------------------------------------------------------------

    def audit_service(
        self,
        model: PdlModel,
        script: dict,
        proposed_rules: Optional[list[dict]] = None,
        audited_at: int = 0,
        service_id: str = "",
    ) -> AuditVerdictInfo:
        report = validate(model)
        if not report.valid:
            raise InvalidModel("; ".join(e.message for e in report.errors))
        violations = audit_violations(model, script, proposed_rules or [])
        result = "pass" if not violations else "fail"
        return self.sign_verdict(
            AuditVerdictInfo(
                service_id=service_id,
                model_digest=model_digest(model),
                result=result,
                violations=tuple(v.to_obj() for v in violations),
                audited_at=audited_at,
                signature=b"",
            )
        )

    def sign_verdict(self, verdict: AuditVerdictInfo) -> AuditVerdictInfo:
        from dataclasses import replace

        return replace(verdict, signature=_sign(self._keys.sign.secret, verdict.signed_bytes()))

    # --- defaults and directory ---------------------------------------------------

    def publish_default_config(self, level: str, whitelist: tuple[str, ...] = ()) -> DefaultConfiguration:
        if level not in _PRESETS:
            raise UnknownLevel(level)
        choice, annotation = _PRESETS[level]
        unsigned = DefaultConfiguration(
            preset_id=f"{level}-v1",
            level=level,
            default_choice=choice,
            default_annotation=annotation,
            whitelist=tuple(whitelist) if level == "strict" else (),
            ttp_signature=b"",
        )
        from dataclasses import replace

        return replace(unsigned, ttp_signature=_sign(self._keys.sign.secret, unsigned.signed_bytes()))

    def publish_role_directory(self, members: list[tuple[str, str, bytes]]) -> RoleDirectory:
        unsigned = RoleDirectory(members=tuple(members), ttp_signature=b"")
        from dataclasses import replace

        return replace(unsigned, ttp_signature=_sign(self._keys.sign.secret, unsigned.signed_bytes()))

    # --- checkpoint countersigning ---------------------------------------------------

    def checkpoint_signer(self):
        from .auditlog import Checkpoint

        def signer(owner_id: str, up_to_seq: int, head_hash: bytes) -> bytes:
            unsigned = Checkpoint(owner_id, up_to_seq, head_hash, b"")
            return _sign(self._keys.sign.secret, unsigned.signed_bytes())

        return signer


def verify_verdict(verdict: AuditVerdictInfo, ttp_public: bytes) -> bool:
    return _verify(ttp_public, verdict.signed_bytes(), verdict.signature)


def verify_default_config(preset: DefaultConfiguration, ttp_public: bytes) -> bool:
    return _verify(ttp_public, preset.signed_bytes(), preset.ttp_signature)


def verify_role_directory(directory: RoleDirectory, ttp_public: bytes) -> bool:
    return _verify(ttp_public, directory.signed_bytes(), directory.ttp_signature)


# --- audit analysis ----------------------------------------------------------------


def audit_violations(model: PdlModel, script: dict, proposed_rules: list[dict]) -> list[Violation]:
    script = normalize_script(script)
    violations: list[Violation] = []

    attr_use: dict[str, bool] = {}
    edges: set[tuple[str, str]] = set()
    for cls in model.classes:
        for attr in cls.attributes:
            q = f"{cls.name}.{attr.name}"
            attr_use[q] = attr.use_text is not None
            for ref in list(attr.mandatory_refs) + list(attr.optional_refs):
                edges.add((q, ref.qualified()))

    for method_name in sorted(script):
        entry = script[method_name]
        for attribute in entry["reads"]:
            if not attr_use.get(attribute, False) and (attribute, method_name) not in edges:
                violations.append(
                    Violation(
                        "a",
                        f"{method_name}->{attribute}",
                        "read without a declared edge or attribute-level use",
                    )
                )
        if entry["reads"]:
            try:
                meth = model.find_method(MethodRef.parse(method_name))
            except ValueError:
                meth = None
            if meth is not None and meth.use_text is None:
                violations.append(Violation("b", method_name, "reading method lacks a use purpose"))

    violations += _simulate_choice_assignments(model, script)

    for rule in proposed_rules:
        trigger = rule["trigger"] if isinstance(rule["trigger"], Trigger) else trigger_from_obj(rule["trigger"])
        if _fires_without_external(trigger):
            violations.append(
                Violation("d", rule["rule_id"], "emergency rule can fire without a trusted external assertion")
            )
    return violations


def _simulate_choice_assignments(model: PdlModel, script: dict) -> list[Violation]:
    optional = sorted(
        {
            ref
            for cls in model.classes
            for attr in cls.attributes
            for ref in attr.optional_refs
        },
        key=lambda r: r.qualified(),
    )
    if len(optional) > MAX_CHOICE_ASSIGNMENTS:
        raise InvalidModel(f"audit supports at most {MAX_CHOICE_ASSIGNMENTS} choices")

    all_methods = {MethodRef(c.name, m.name) for c, m in model.iter_methods()}
    mandatory = {m for m in all_methods if method_status(model, m) == EdgeKind.MANDATORY}

    violations = []
    seen: set[tuple] = set()
    for assignment in itertools.product((USE, NOT_USED), repeat=len(optional)):
        selections = dict(zip(optional, assignment))
        enabled = {m.qualified() for m in mandatory}
        enabled |= {m.qualified() for m, v in selections.items() if v == USE}
        disabled = {m.qualified() for m, v in selections.items() if v == NOT_USED}

        reached: set[str] = set()
        queue = [m for m in script if m in enabled]
        while queue:
            name = queue.pop(0)
            if name in reached:
                continue
            reached.add(name)
            queue.extend(script.get(name, {}).get("calls", []))

        for name in sorted(reached & disabled):
            if script.get(name, {}).get("reads"):
                key = ("c", name)
                if key not in seen:
                    seen.add(key)
                    choices_text = ",".join(f"{m.qualified()}={v}" for m, v in sorted(
                        selections.items(), key=lambda kv: kv[0].qualified()))
                    violations.append(
                        Violation(
                            "c",
                            name,
                            f"disabled optional method performs reads under [{choices_text}]",
                        )
                    )
    return violations


def _fires_without_external(trigger: Trigger) -> bool:
    internals: list[Trigger] = []

    def collect(t: Trigger):
        if t.kind == Trigger.INTERNAL:
            internals.append(t)
        elif t.kind in (Trigger.AND, Trigger.OR):
            collect(t.left)
            collect(t.right)

    collect(trigger)

    def evaluate(t: Trigger, truth: dict[int, bool]) -> bool:
        if t.kind == Trigger.INTERNAL:
            return truth[id(t)]
        if t.kind == Trigger.EXTERNAL:
            return False
        left, right = evaluate(t.left, truth), evaluate(t.right, truth)
        return (left and right) if t.kind == Trigger.AND else (left or right)

    for mask in range(2 ** len(internals)):
        truth = {id(node): bool((mask >> i) & 1) for i, node in enumerate(internals)}
        if evaluate(trigger, truth):
            return True
    return False


# --- trigger JSON form (shared with scenarios and the HTTP API) ----------------------


def trigger_to_obj(t: Trigger) -> dict:
    if t.kind == Trigger.INTERNAL:
        return {
            "kind": "internal",
            "field_id": t.field_id,
            "aggregate": t.aggregate,
            "window": t.window,
            "comparator": t.comparator,
            "threshold": t.threshold,
        }
    if t.kind == Trigger.EXTERNAL:
        return {
            "kind": "external",
            "claim_id": t.claim_id,
            "trusted_keys": [b64e(k) for k in t.trusted_keys],
            "freshness": t.freshness,
        }
    return {"kind": t.kind, "left": trigger_to_obj(t.left), "right": trigger_to_obj(t.right)}


def trigger_from_obj(obj: dict) -> Trigger:
    kind = obj["kind"]
    if kind == "internal":
        return Trigger.internal(
            obj["field_id"], obj["aggregate"], obj["window"], obj["comparator"], obj["threshold"]
        )
    if kind == "external":
        return Trigger.external(obj["claim_id"], [b64d(k) for k in obj["trusted_keys"]], obj["freshness"])
    if kind in ("and", "or"):
        left, right = trigger_from_obj(obj["left"]), trigger_from_obj(obj["right"])
        return Trigger.and_(left, right) if kind == "and" else Trigger.or_(left, right)
    raise ValueError(f"unknown trigger kind {kind!r}")
