"""The privacy enforcement point.

One gateway serves one owner. It is the boundary where data leaves the
owner's control: every outbound value is encrypted under the current
per-field epoch key, annotations decide whether a value may leave at all,
consent turns into wrapped key grants, and event rules can authorize
emergency access to recent history. The cloud is reached through a client
object (in-process platform or HTTP); the gateway never ships plaintext or
unwrapped keys to it.
"""

from __future__ import annotations

import base64
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from ..auditlog import (
    OUTCOME_EMERGENCY_GRANT,
    LogPayload,
    read_as_owner,
    verify_chain,
)
from ..clock import Clock, SystemClock
from ..crypto.envelope import GrantReason, KeyGrant, wrap_grant
from ..crypto.keys import ActorKeys
from ..crypto.keystore import Keystore
from ..pdl import MethodRef, PdlModel, access_edges, method_status, parse, validate
from ..pdl.model import EdgeKind
from ..pdl.validate import InvalidModel
from ..policy import USE, MissingSelection, model_digest, resolve_choices
from ..rng import SYSTEM_RNG, RandomSource
from ..ttp import (
    DefaultConfiguration,
    RoleDirectory,
    verify_default_config,
    verify_role_directory,
    verify_verdict,
)
from .config import Annotation, AnnotationLevel, EventRule, ForwardDecision, PrivacyConfiguration, Reading
from .triggers import BadSignature, ExternalAssertion, UnknownAsserter, evaluate_trigger


class ServiceNotAudited(Exception):
    pass


class NoSuchConsent(Exception):
    pass


class UnknownPreset(Exception):
    pass


def grantable_fields(model: PdlModel, selections: dict[MethodRef, str]) -> set[str]:
    """Fields a consent may unlock: attributes with a use purpose, plus
    attributes with an edge to any enabled method (mandatory, or optional
    selected use)."""
    report = validate(model)
    if not report.valid:
        raise InvalidModel("model does not validate")
    optional = {
        MethodRef(c.name, m.name)
        for c, m in model.iter_methods()
        if method_status(model, MethodRef(c.name, m.name)) == EdgeKind.OPTIONAL
    }
    missing = optional - set(selections)
    if missing:
        raise MissingSelection(", ".join(sorted(r.qualified() for r in missing)))

    enabled = {
        MethodRef(c.name, m.name)
        for c, m in model.iter_methods()
        if method_status(model, MethodRef(c.name, m.name)) == EdgeKind.MANDATORY
    }
    enabled |= {ref for ref in optional if selections[ref] == USE}

    fields = {f"{c.name}.{a.name}" for c, a in model.iter_attributes() if a.use_text is not None}
    for edge in access_edges(model):
        if edge.method in enabled:
            fields.add(edge.attribute)
    return fields


@dataclass
class IssuedGrantRecord:
    """Journal entry for the grant-soundness replay check."""

    grant: KeyGrant
    kind: str  # consent | emergency
    service_id: str
    rule_id: Optional[str] = None


class Gateway:
    def __init__(
        self,
        keys: ActorKeys,
        cloud,
        ttp_public: bytes,
        endpoint: str = "cloud",
        clock: Clock | None = None,
        rng: RandomSource = SYSTEM_RNG,
        local_store_path: str | Path | None = None,
        keystore_path: str | Path | None = None,
        master_secret: bytes | None = None,
    ):
        self.owner_id = keys.actor_id
        self.keys = keys
        self.cloud = cloud
        self.ttp_public = ttp_public
        self.endpoint = endpoint
        self.clock = clock or SystemClock()
        self._rng = rng
        self.config = PrivacyConfiguration(owner_id=self.owner_id)
        self._keystore_path = Path(keystore_path) if keystore_path else None
        self._master_secret = master_secret
        if self._keystore_path is not None and master_secret is None:
            raise ValueError("a keystore path needs a master secret (PEP_MASTER_SECRET)")
        if self._keystore_path is not None and self._keystore_path.exists():
            self.keystore = Keystore.load(self._keystore_path, self.owner_id, master_secret, rng)
        else:
            self.keystore = Keystore(self.owner_id, rng)
        self.local_store: list[Reading] = []
        self._local_store_path = Path(local_store_path) if local_store_path else None
        # field -> (epoch, started_at); on reload, resume from the highest
        # stored epoch so counters never move backwards
        self._epochs: dict[str, tuple[int, int]] = {}
        for field_id in self.keystore.fields():
            self._epochs[field_id] = (max(self.keystore.epochs_for(field_id)), self.clock.now())
        self._last_ts: dict[str, int] = {}  # device -> last reading timestamp
        self._assertions: list[ExternalAssertion] = []
        self._outstanding: dict[str, int] = {}  # rule_id -> grant expiry
        self._consent_context: dict[str, tuple[str, dict]] = {}  # service -> (model text, selections)
        self.issued_grants: list[IssuedGrantRecord] = []
        self.role_directory: Optional[RoleDirectory] = None
        self.readings: list[Reading] = []

        cloud.register_owner(self.owner_id, keys.box.public)

    # --- configuration --------------------------------------------------------

    def set_annotation(self, field_id: str, level: AnnotationLevel, endpoints=()) -> None:
        annotation = Annotation(field_id, level, frozenset(endpoints))
        self.config = self.config.with_annotation(annotation)

    def set_default_annotation_level(self, level: AnnotationLevel) -> None:
        from dataclasses import replace

        self.config = replace(self.config, default_annotation_level=level)

    def set_rotation_period(self, seconds: int) -> None:
        from dataclasses import replace

        self.config = replace(self.config, rotation_period=seconds)

    def define_rule(self, rule: EventRule) -> None:
        self.config = self.config.with_rule(rule)

    def set_role_directory(self, directory: RoleDirectory) -> None:
        if not verify_role_directory(directory, self.ttp_public):
            raise BadSignature("role directory signature invalid")
        self.role_directory = directory

    def apply_default_config_by_id(self, preset_id: str) -> DefaultConfiguration:
        preset = self.find_preset(preset_id)
        self.apply_default_config(preset)
        return preset

    def apply_default_config(self, preset: DefaultConfiguration) -> None:
        """Adopt a TTP preset: default annotation level now, default choices
        at the next consent. Refused when the signature does not verify."""
        if not verify_default_config(preset, self.ttp_public):
            raise BadSignature("default configuration signature invalid")
        from dataclasses import replace

        self.config = replace(
            self.config,
            default_annotation_level=AnnotationLevel(preset.default_annotation),
            derived_from_default=(preset.preset_id, preset.ttp_signature.hex()),
        )
        for field_id in preset.whitelist:
            self.set_annotation(field_id, AnnotationLevel.UNRESTRICTED)

    def preset_selections(self, preset: DefaultConfiguration, model: PdlModel, overrides=None) -> dict:
        """Selections for every optional method from the preset default, with
        individual user overrides winning."""
        if not verify_default_config(preset, self.ttp_public):
            raise BadSignature("default configuration signature invalid")
        selections = {}
        for c, m in model.iter_methods():
            ref = MethodRef(c.name, m.name)
            if method_status(model, ref) == EdgeKind.OPTIONAL:
                selections[ref] = preset.default_choice
        selections.update(overrides or {})
        return selections

    def fetch_presets(self) -> list[DefaultConfiguration]:
        """TTP presets distributed via the cloud; invalid signatures dropped."""
        out = []
        for obj in self.cloud.get_presets():
            preset = DefaultConfiguration.from_obj(obj)
            if verify_default_config(preset, self.ttp_public):
                out.append(preset)
        return out

    def find_preset(self, preset_id: str) -> DefaultConfiguration:
        for preset in self.fetch_presets():
            if preset.preset_id == preset_id or preset.level == preset_id:
                return preset
        raise UnknownPreset(preset_id)

    def consent_with_preset(self, service_id: str, preset_id: str, overrides=None):
        """Consent where every choice defaults from a TTP preset and the
        user's individual overrides win."""
        reg = self._audited_registration(service_id)
        preset = self.find_preset(preset_id)
        model = parse(reg.model_text, source_name=service_id)
        selections = self.preset_selections(preset, model, overrides)
        return self.apply_consent(service_id, selections)

    # --- epochs ------------------------------------------------------------------

    def current_epoch(self, field_id: str) -> int:
        epoch, _ = self._epochs.setdefault(field_id, (0, self.clock.now()))
        return epoch

    def rotate_epochs(self, now: int | None = None) -> dict[str, int]:
        """Advance epochs whose rotation period has elapsed. Existing grants
        are never extended; new epochs need new grants."""
        now = self.clock.now() if now is None else now
        rotated = {}
        for field_id, (epoch, started_at) in sorted(self._epochs.items()):
            if now - started_at >= self.config.rotation_period:
                self._epochs[field_id] = (epoch + 1, now)
                rotated[field_id] = epoch + 1
        return rotated

    def _force_rotate(self, field_ids, now: int) -> None:
        for field_id in field_ids:
            epoch, _ = self._epochs.setdefault(field_id, (0, now))
            self._epochs[field_id] = (epoch + 1, now)

    def _current_key(self, field_id: str):
        key = self.keystore.get_or_create(field_id, self.current_epoch(field_id))
        self._persist_keys()
        return key

    def _persist_keys(self) -> None:
        if self._keystore_path is not None:
            self.keystore.save(self._keystore_path, self._master_secret)

    # --- ingestion -----------------------------------------------------------------

    def ingest(self, reading: Reading):
        """Apply the flow annotation, retain locally, encrypt and forward when
        allowed. Returns (decision, stored record or None)."""
        if reading.owner_id != self.owner_id:
            raise ValueError(f"reading for {reading.owner_id} sent to {self.owner_id}'s gateway")
        last = self._last_ts.get(reading.device_id)
        if last is not None and reading.timestamp < last:
            raise ValueError(f"timestamp regression for device {reading.device_id}")
        self._last_ts[reading.device_id] = reading.timestamp

        config = self.config  # one configuration version per reading
        self.readings.append(reading)
        self._store_local(reading)

        annotation = config.annotation_for(reading.field_id)
        record = None
        if annotation.level == AnnotationLevel.LOCAL_ONLY:
            decision = ForwardDecision.store_local()
        elif annotation.level == AnnotationLevel.RESTRICTED_TO and self.endpoint not in annotation.endpoints:
            decision = ForwardDecision.store_local_with_warning(
                f"endpoint {self.endpoint} not in the allowed set for {reading.field_id}"
            )
        else:
            decision = ForwardDecision.forward(self.endpoint)
            record = self._encrypt_and_upload(reading)

        self._evaluate_rules(self.clock.now())
        return decision, record

    def _store_local(self, reading: Reading) -> None:
        self.local_store.append(reading)
        if self._local_store_path is not None:
            value = reading.value
            if isinstance(value, bytes):
                value = {"b64": base64.b64encode(value).decode("ascii")}
            line = json.dumps(
                {
                    "owner_id": reading.owner_id,
                    "device_id": reading.device_id,
                    "field_id": reading.field_id,
                    "value": value,
                    "timestamp": reading.timestamp,
                },
                sort_keys=True,
            )
            with open(self._local_store_path, "a", encoding="utf-8", newline="\n") as fh:
                fh.write(line + "\n")

    def _encrypt_and_upload(self, reading: Reading):
        from ..cloud import StoredRecord
        from ..crypto.envelope import AadContext, encrypt_field

        key = self._current_key(reading.field_id)
        record_id = f"r{len(self.local_store):06d}"
        aad = AadContext(
            owner_id=self.owner_id,
            record_id=record_id,
            field_id=reading.field_id,
            epoch=key.epoch,
            timestamp=reading.timestamp,
        )
        ct = encrypt_field(key, reading.value_bytes(), aad, self._rng)
        record = StoredRecord(
            owner_id=self.owner_id,
            record_id=record_id,
            ciphertexts=(ct,),
            received_at=reading.timestamp,
        )
        self.cloud.store_record(record)
        return record

    # --- consent ----------------------------------------------------------------

    def apply_consent(self, service_id: str, selections: dict[MethodRef, str]):
        """Verify the audit verdict, resolve the user's choices, wrap
        current-epoch keys for every grantable field, and sync the consent to
        the cloud monitor."""
        reg = self._audited_registration(service_id)
        model = parse(reg.model_text, source_name=service_id)
        consent = resolve_choices(reg.policy, selections)
        fields = grantable_fields(model, selections)

        now = self.clock.now()
        grants = []
        for field_id in sorted(fields):
            key = self._current_key(field_id)
            grant = wrap_grant(
                [key], service_id, reg.public_key, GrantReason.consent(), issued_at=now, rng=self._rng
            )
            self.cloud.store_grant(grant)
            self.issued_grants.append(IssuedGrantRecord(grant, "consent", service_id))
            grants.append(grant)

        self.config = self.config.with_consent(consent)
        self._consent_context[service_id] = (reg.model_text, dict(selections))
        self.cloud.sync_consent(self.owner_id, service_id, consent)
        return consent, grants

    def _audited_registration(self, service_id: str):
        from ..cloud import UnknownService

        try:
            reg = self.cloud.get_service(service_id)
        except UnknownService:
            raise ServiceNotAudited(service_id) from None
        verdict = reg.verdict
        if (
            verdict is None
            or verdict.result != "pass"
            or not verify_verdict(verdict, self.ttp_public)
            or verdict.model_digest != model_digest(parse(reg.model_text))
        ):
            raise ServiceNotAudited(service_id)
        return reg

    def revoke_consent(self, service_id: str) -> None:
        """Forward-only revocation: rotate the granted fields so no future
        data is readable; nothing already disclosed is recalled."""
        if self.config.consent_for(service_id) is None:
            raise NoSuchConsent(service_id)
        model_text, selections = self._consent_context[service_id]
        fields = grantable_fields(parse(model_text), selections)
        self._force_rotate(sorted(fields), self.clock.now())
        self.config = self.config.without_consent(service_id)
        self._consent_context.pop(service_id, None)
        self.cloud.sync_consent(self.owner_id, service_id, None)

    # --- emergencies ----------------------------------------------------------------

    def submit_external_assertion(self, assertion: ExternalAssertion) -> list[KeyGrant]:
        if not assertion.signature_valid():
            raise BadSignature("assertion signature invalid")
        trusted = set()
        for rule in self.config.event_rules:
            trusted |= rule.trigger.asserter_keys()
        if assertion.asserter_public not in trusted:
            raise UnknownAsserter("assertion signed by a key no rule trusts")
        self._assertions.append(assertion)
        return self._evaluate_rules(self.clock.now())

    def _evaluate_rules(self, now: int) -> list[KeyGrant]:
        issued: list[KeyGrant] = []
        for rule in self.config.event_rules:
            expiry = self._outstanding.get(rule.rule_id)
            if expiry is not None and now <= expiry:
                continue  # idempotent while outstanding
            if not evaluate_trigger(rule.trigger, self.readings, self._assertions, now, self.owner_id):
                continue
            for service_id, service_public in self._resolve_grantee(rule.grantee):
                for field_id in sorted(rule.scope):
                    issued += self._issue_emergency_grant(rule, service_id, service_public, field_id, now)
            self._outstanding[rule.rule_id] = now + rule.grant_duration
        return issued

    def _issue_emergency_grant(self, rule, service_id, service_public, field_id, now) -> list[KeyGrant]:
        current = self.current_epoch(field_id)
        lo = max(0, current - 1)  # current plus immediately preceding epoch
        keys = [self.keystore.get_or_create(field_id, e) for e in range(lo, current + 1)]
        self._persist_keys()
        grant = wrap_grant(
            keys,
            service_id,
            service_public,
            GrantReason.emergency(rule.rule_id),
            issued_at=now,
            expires_at=now + rule.grant_duration,
            rng=self._rng,
        )
        self.cloud.store_grant(grant)
        self.issued_grants.append(IssuedGrantRecord(grant, "emergency", service_id, rule.rule_id))
        self.cloud.append_gateway_log_entry(
            self.owner_id,
            LogPayload(
                timestamp=now,
                service_id=service_id,
                method="",
                attribute=field_id,
                purpose=f"emergency access under rule {rule.rule_id}",
                outcome=OUTCOME_EMERGENCY_GRANT,
                record_ids=(),
            ),
        )
        return [grant]

    def _resolve_grantee(self, grantee: str) -> list[tuple[str, bytes]]:
        if grantee.startswith("role:"):
            if self.role_directory is None:
                return []
            return self.role_directory.resolve(grantee[len("role:") :])
        reg = self.cloud.get_service(grantee)
        return [(grantee, reg.public_key)]

    # --- owner log view ----------------------------------------------------------

    def fetch_decrypted_log(self):
        """Pull the owner's log from the cloud, verify the chain, and decrypt
        the payloads with the owner key held here."""
        entries, checkpoints = self.cloud.fetch_log(self.owner_id)
        report = verify_chain(entries, checkpoints, self.cloud.platform_public, self.ttp_public)
        payloads = read_as_owner(entries, self.keys.box.secret) if report.ok else []
        return payloads, report
