"""Multi-tenant mock cloud.

Stores encrypted records and key grants, hosts audited services as
declarative access scripts, and routes every attribute access through the
monitor, which appends one owner-encrypted log entry per attempt (denials
included). Method-level enablement is enforced here from the synced consent
copy, independently of the key-level enforcement at the gateway.

An access script maps each method to the attribute ids it reads and,
optionally, to the other methods it invokes internally:

    {"Analysis.healthCritical": {"reads": ["Camera.recognizedPersons"], "calls": []}}

A bare list is accepted as shorthand for {"reads": [...], "calls": []}.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Callable, Optional

from . import auditlog
from .auditlog import LogPayload, OwnerLog
from .clock import Clock, SystemClock
from .crypto import wire
from .crypto.envelope import (
    AuthFailure,
    FieldCiphertext,
    KeyGrant,
    UnwrapFailure,
    decrypt_field,
    unwrap_grant,
)
from .crypto.keys import verify as _verify
from .encoding import b64d, b64e, canonical_json_bytes
from .pdl import MethodRef, parse, validate
from .policy import (
    MonitoringSpec,
    PolicyDocument,
    ResolvedConsent,
    consent_from_obj,
    consent_to_obj,
    model_digest,
    monitoring_from_obj,
    monitoring_to_obj,
    policy_from_obj,
    policy_to_obj,
)
from .rng import SYSTEM_RNG, RandomSource


class UnknownService(Exception):
    pass


class UnknownMethod(Exception):
    pass


class DigestMismatch(Exception):
    pass


class UnknownScriptMethod(Exception):
    pass


class AadMismatch(Exception):
    pass


def normalize_script(script: dict) -> dict[str, dict]:
    out = {}
    for method, entry in script.items():
        if isinstance(entry, dict):
            out[method] = {"reads": list(entry.get("reads", [])), "calls": list(entry.get("calls", []))}
        else:
            out[method] = {"reads": list(entry), "calls": []}
    return out


@dataclass(frozen=True)
class AuditVerdictInfo:
    """The platform's view of a verdict: payload plus detached TTP signature."""

    service_id: str
    model_digest: str
    result: str  # "pass" | "fail"
    violations: tuple
    audited_at: int
    signature: bytes

    def signed_bytes(self) -> bytes:
        return b"audit-verdict-v1:" + canonical_json_bytes(
            {
                "service_id": self.service_id,
                "model_digest": self.model_digest,
                "result": self.result,
                "violations": [list(v) for v in self.violations],
                "audited_at": self.audited_at,
            }
        )


@dataclass(frozen=True)
class ServiceRegistration:
    service_id: str
    public_key: bytes  # box key grants are wrapped to
    model_text: str  # canonical PDL
    policy: PolicyDocument
    monitoring: MonitoringSpec
    script: dict  # normalized access script
    verdict: Optional[AuditVerdictInfo] = None


@dataclass(frozen=True)
class StoredRecord:
    owner_id: str
    record_id: str
    ciphertexts: tuple[FieldCiphertext, ...]
    received_at: int

    def field_ids(self) -> list[str]:
        return [c.field_id for c in self.ciphertexts]


@dataclass(frozen=True)
class AttributeOutcome:
    attribute: str
    outcome: str  # auditlog.OUTCOME_*
    values: tuple[tuple[str, bytes], ...] = ()  # (record_id, plaintext) when value
    record_ids: tuple[str, ...] = ()


@dataclass(frozen=True)
class InvocationResult:
    service_id: str
    method: MethodRef
    outcomes: tuple[AttributeOutcome, ...]


class CloudPlatform:
    def __init__(
        self,
        platform_sign_secret: bytes,
        platform_sign_public: bytes,
        ttp_sign_public: bytes,
        checkpoint_signer: Optional[Callable[[str, int, bytes], bytes]] = None,
        clock: Clock | None = None,
        rng: RandomSource = SYSTEM_RNG,
        store_path: str | Path | None = None,
    ):
        self._platform_secret = platform_sign_secret
        self.platform_public = platform_sign_public
        self.ttp_public = ttp_sign_public
        self._checkpoint_signer = checkpoint_signer
        self._clock = clock or SystemClock()
        self._rng = rng
        self._store_path = Path(store_path) if store_path else None

        self.services: dict[str, ServiceRegistration] = {}
        self.service_secrets: dict[str, bytes] = {}  # hosted-service runtime keys
        self.records: dict[str, dict[str, StoredRecord]] = {}
        self.grants: dict[tuple[str, str, str], list[KeyGrant]] = {}  # (owner, service, field)
        self.consents: dict[tuple[str, str], ResolvedConsent] = {}
        self.owner_box_keys: dict[str, bytes] = {}
        self.logs: dict[str, OwnerLog] = {}
        self.presets: dict[str, dict] = {}  # TTP-published default configurations, opaque here

    # --- owners ---------------------------------------------------------------

    def register_owner(self, owner_id: str, box_public: bytes) -> None:
        self.owner_box_keys[owner_id] = box_public
        self._persist()

    def _log_for(self, owner_id: str) -> OwnerLog:
        if owner_id not in self.logs:
            if owner_id not in self.owner_box_keys:
                raise KeyError(f"owner {owner_id} not registered")
            self.logs[owner_id] = OwnerLog(
                owner_id,
                self.owner_box_keys[owner_id],
                self._platform_secret,
                self._checkpoint_signer,
                self._rng,
            )
        return self.logs[owner_id]

    # --- services ---------------------------------------------------------------

    def register_service(self, reg: ServiceRegistration) -> str:
        model = parse(reg.model_text, source_name=reg.service_id)
        report = validate(model)
        if not report.valid:
            raise ValueError(f"service model does not validate: {report.errors[0].message}")
        digest = model_digest(model)
        if reg.policy.model_digest != digest or reg.monitoring.model_digest != digest:
            raise DigestMismatch(f"policy/monitoring digest does not match model for {reg.service_id}")
        script = normalize_script(reg.script)
        declared = {MethodRef(c.name, m.name).qualified() for c, m in model.iter_methods()}
        for method, entry in script.items():
            if method not in declared:
                raise UnknownScriptMethod(method)
            for callee in entry["calls"]:
                if callee not in declared:
                    raise UnknownScriptMethod(callee)
        self.services[reg.service_id] = replace(reg, script=script)
        self._persist()
        return reg.service_id

    def host_service_key(self, service_id: str, box_secret: bytes) -> None:
        """Deploy the service's decryption key into its runtime context."""
        self.service_secrets[service_id] = box_secret

    def attach_verdict(self, service_id: str, verdict: AuditVerdictInfo) -> None:
        reg = self.services.get(service_id)
        if reg is None:
            raise UnknownService(service_id)
        self.services[service_id] = replace(reg, verdict=verdict)
        self._persist()

    def _verdict_ok(self, reg: ServiceRegistration) -> bool:
        v = reg.verdict
        return (
            v is not None
            and v.result == "pass"
            and v.service_id == reg.service_id
            and v.model_digest == reg.policy.model_digest
            and _verify(self.ttp_public, v.signed_bytes(), v.signature)
        )

    def list_services(self) -> list[ServiceRegistration]:
        """PASS-verdict services only; signatures re-verified on every read."""
        return [reg for reg in self.services.values() if self._verdict_ok(reg)]

    def get_service(self, service_id: str) -> ServiceRegistration:
        reg = self.services.get(service_id)
        if reg is None or not self._verdict_ok(reg):
            raise UnknownService(service_id)
        return reg

    # --- TTP publications ---------------------------------------------------------

    def publish_preset(self, preset_obj: dict) -> None:
        """Distribute a TTP-signed default configuration. The platform is a
        dumb channel; gateways verify the signature before applying."""
        self.presets[preset_obj["preset_id"]] = preset_obj
        self._persist()

    def get_presets(self) -> list[dict]:
        return [self.presets[k] for k in sorted(self.presets)]

    # --- records and grants ------------------------------------------------------

    def store_record(self, record: StoredRecord) -> bool:
        for ct in record.ciphertexts:
            if ct.aad.owner_id != record.owner_id or ct.aad.record_id != record.record_id:
                raise AadMismatch(
                    f"ciphertext aad ({ct.aad.owner_id},{ct.aad.record_id}) does not match "
                    f"record ({record.owner_id},{record.record_id})"
                )
            if ct.aad.field_id != ct.field_id or ct.aad.epoch != ct.epoch:
                raise AadMismatch("ciphertext metadata disagrees with its aad")
        per_owner = self.records.setdefault(record.owner_id, {})
        if record.record_id not in per_owner:  # idempotent on (owner, record)
            per_owner[record.record_id] = record
            self._persist()
        return True

    def store_grant(self, grant: KeyGrant) -> None:
        key = (grant.owner_id, grant.grantee_service_id, grant.field_id)
        self.grants.setdefault(key, []).append(grant)
        self._persist()

    def sync_consent(self, owner_id: str, service_id: str, consent: Optional[ResolvedConsent]) -> None:
        if consent is None:
            self.consents.pop((owner_id, service_id), None)
        else:
            self.consents[(owner_id, service_id)] = consent
        self._persist()

    def records_for(self, owner_id: str, field_id: str) -> list[StoredRecord]:
        per_owner = self.records.get(owner_id, {})
        hits = [r for r in per_owner.values() if field_id in r.field_ids()]
        return sorted(hits, key=lambda r: (r.received_at, r.record_id))

    def ciphertext_count(self, owner_id: str, field_id: str) -> int:
        return sum(
            1
            for r in self.records.get(owner_id, {}).values()
            for ct in r.ciphertexts
            if ct.field_id == field_id
        )

    # --- invocation ----------------------------------------------------------------

    def _select_records(self, owner_id: str, field_id: str, selector: dict) -> list[StoredRecord]:
        candidates = self.records_for(owner_id, field_id)
        mode = selector.get("mode", "latest")
        if mode == "all":
            return candidates
        if mode == "ids":
            wanted = set(selector.get("ids", []))
            return [r for r in candidates if r.record_id in wanted]
        return candidates[-1:]  # latest

    def _try_decrypt(
        self, owner_id: str, service_id: str, record: StoredRecord, field_id: str, now: int
    ) -> Optional[bytes]:
        ct = next(c for c in record.ciphertexts if c.field_id == field_id)
        secret = self.service_secrets.get(service_id)
        if secret is None:
            return None
        for grant in self.grants.get((owner_id, service_id, field_id), []):
            if grant.expired(now) or not grant.covers_epoch(ct.epoch):
                continue
            try:
                keys = {k.epoch: k for k in unwrap_grant(grant, secret)}
                return decrypt_field(keys[ct.epoch], ct, ct.aad)
            except (UnwrapFailure, AuthFailure, KeyError):
                continue
        return None

    def invoke_method(
        self, service_id: str, method: MethodRef, owner_id: str, selector: Optional[dict] = None
    ) -> InvocationResult:
        reg = self.services.get(service_id)
        if reg is None or not self._verdict_ok(reg):
            raise UnknownService(service_id)
        if method.qualified() not in reg.script:
            raise UnknownMethod(method.qualified())
        selector = selector or {"mode": "latest"}
        now = self._clock.now()
        consent = self.consents.get((owner_id, service_id))

        outcomes: list[AttributeOutcome] = []
        # execution closure: the invoked method plus everything it calls,
        # each callee checked against the owner's enablement on its own
        seen: set[str] = set()
        queue = [method.qualified()]
        order: list[str] = []
        while queue:
            name = queue.pop(0)
            if name in seen:
                continue
            seen.add(name)
            order.append(name)
            queue.extend(reg.script.get(name, {}).get("calls", []))

        for name in order:
            ref = MethodRef.parse(name)
            for attribute in reg.script.get(name, {}).get("reads", []):
                outcomes.append(
                    self._access_attribute(reg, ref, attribute, owner_id, consent, selector, now)
                )
        result = InvocationResult(service_id=service_id, method=method, outcomes=tuple(outcomes))
        self._persist()
        return result

    def _access_attribute(
        self,
        reg: ServiceRegistration,
        method: MethodRef,
        attribute: str,
        owner_id: str,
        consent: Optional[ResolvedConsent],
        selector: dict,
        now: int,
    ) -> AttributeOutcome:
        purpose = reg.monitoring.access_purpose(attribute, method) or ""
        records = self._select_records(owner_id, attribute, selector)
        record_ids = tuple(r.record_id for r in records)

        if consent is None:
            outcome = AttributeOutcome(attribute, auditlog.OUTCOME_DENIED_NO_CONSENT, record_ids=record_ids)
        elif not consent.is_enabled(method):
            outcome = AttributeOutcome(
                attribute, auditlog.OUTCOME_DENIED_DISABLED_METHOD, record_ids=record_ids
            )
        else:
            values = []
            ok = bool(records)
            for record in records:
                plaintext = self._try_decrypt(owner_id, reg.service_id, record, attribute, now)
                if plaintext is None:
                    ok = False
                    break
                values.append((record.record_id, plaintext))
            if ok:
                outcome = AttributeOutcome(
                    attribute, auditlog.OUTCOME_VALUE, values=tuple(values), record_ids=record_ids
                )
            else:
                outcome = AttributeOutcome(attribute, auditlog.OUTCOME_DENIED_NO_KEY, record_ids=record_ids)

        self._log_for(owner_id).append(
            LogPayload(
                timestamp=now,
                service_id=reg.service_id,
                method=method.qualified(),
                attribute=attribute,
                purpose=purpose,
                outcome=outcome.outcome,
                record_ids=outcome.record_ids,
            )
        )
        return outcome

    # --- log access -------------------------------------------------------------

    def append_gateway_log_entry(self, owner_id: str, payload: LogPayload) -> None:
        """Gateway-originated events (emergency grants) recorded in the owner log."""
        self._log_for(owner_id).append(payload)
        self._persist()

    def fetch_log(self, owner_id: str):
        log = self._log_for(owner_id)
        return list(log.entries), list(log.checkpoints)

    def checkpoint_log(self, owner_id: str):
        cp = self._log_for(owner_id).make_checkpoint()
        self._persist()
        return cp

    # --- persistence ---------------------------------------------------------------

    def _persist(self) -> None:
        if self._store_path is None:
            return
        self._store_path.write_text(json.dumps(self._snapshot_obj(), sort_keys=True), encoding="utf-8")

    def _snapshot_obj(self) -> dict:
        return {
            "services": {sid: registration_to_obj(reg) for sid, reg in self.services.items()},
            "records": {
                owner: {rid: record_to_obj(rec) for rid, rec in per_owner.items()}
                for owner, per_owner in self.records.items()
            },
            "grants": [
                b64e(wire.encode_key_grant(g)) for grants in self.grants.values() for g in grants
            ],
            "consents": [
                {"owner_id": o, "service_id": s, "consent": consent_to_obj(c)}
                for (o, s), c in self.consents.items()
            ],
            "owners": {o: b64e(pk) for o, pk in self.owner_box_keys.items()},
            "presets": self.presets,
            "logs": {
                owner: {
                    "entries": [e.to_line() for e in log.entries],
                    "checkpoints": [cp.to_line() for cp in log.checkpoints],
                }
                for owner, log in self.logs.items()
            },
        }

    def load_snapshot(self, obj: dict) -> None:
        for owner, pk in obj.get("owners", {}).items():
            self.owner_box_keys[owner] = b64d(pk)
        self.presets.update(obj.get("presets", {}))
        for sid, s in obj.get("services", {}).items():
            self.services[sid] = registration_from_obj(s)
        for owner, per_owner in obj.get("records", {}).items():
            for rid, r in per_owner.items():
                self.records.setdefault(owner, {})[rid] = record_from_obj(r)
        for blob in obj.get("grants", []):
            self.store_grant(wire.decode_key_grant(b64d(blob)))
        for c in obj.get("consents", []):
            self.consents[(c["owner_id"], c["service_id"])] = consent_from_obj(c["consent"])
        for owner, log_obj in obj.get("logs", {}).items():
            log = self._log_for(owner)
            log.entries = [auditlog.AccessLogEntry.from_line(l) for l in log_obj["entries"]]
            log.checkpoints = [auditlog.Checkpoint.from_line(l) for l in log_obj["checkpoints"]]

    @classmethod
    def load(cls, path: str | Path, **kwargs) -> "CloudPlatform":
        platform = cls(store_path=path, **kwargs)
        p = Path(path)
        if p.exists():
            platform.load_snapshot(json.loads(p.read_text(encoding="utf-8")))
        return platform


# --- JSON shapes shared by the snapshot store and the HTTP API ---------------------


def verdict_to_obj(v: Optional[AuditVerdictInfo]) -> Optional[dict]:
    if v is None:
        return None
    return {
        "service_id": v.service_id,
        "model_digest": v.model_digest,
        "result": v.result,
        "violations": [list(x) for x in v.violations],
        "audited_at": v.audited_at,
        "signature": b64e(v.signature),
    }


def verdict_from_obj(obj: Optional[dict]) -> Optional[AuditVerdictInfo]:
    if obj is None:
        return None
    return AuditVerdictInfo(
        service_id=obj["service_id"],
        model_digest=obj["model_digest"],
        result=obj["result"],
        violations=tuple(tuple(x) for x in obj["violations"]),
        audited_at=obj["audited_at"],
        signature=b64d(obj["signature"]),
    )


def registration_to_obj(reg: ServiceRegistration) -> dict:
    return {
        "service_id": reg.service_id,
        "public_key": b64e(reg.public_key),
        "model_text": reg.model_text,
        "policy": policy_to_obj(reg.policy),
        "monitoring": monitoring_to_obj(reg.monitoring),
        "script": reg.script,
        "verdict": verdict_to_obj(reg.verdict),
    }


def registration_from_obj(obj: dict) -> ServiceRegistration:
    return ServiceRegistration(
        service_id=obj["service_id"],
        public_key=b64d(obj["public_key"]),
        model_text=obj["model_text"],
        policy=policy_from_obj(obj["policy"]),
        monitoring=monitoring_from_obj(obj["monitoring"]),
        script=normalize_script(obj["script"]),
        verdict=verdict_from_obj(obj.get("verdict")),
    )


def record_to_obj(rec: StoredRecord) -> dict:
    return {
        "owner_id": rec.owner_id,
        "record_id": rec.record_id,
        "received_at": rec.received_at,
        "ciphertexts": [b64e(wire.encode_field_ciphertext(c)) for c in rec.ciphertexts],
    }


def record_from_obj(obj: dict) -> StoredRecord:
    return StoredRecord(
        owner_id=obj["owner_id"],
        record_id=obj["record_id"],
        ciphertexts=tuple(wire.decode_field_ciphertext(b64d(b)) for b in obj["ciphertexts"]),
        received_at=obj["received_at"],
    )
