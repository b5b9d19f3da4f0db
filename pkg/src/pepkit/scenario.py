"""Deterministic scenario runner.

A scenario file declares actors (owners, devices implied by readings,
services with scripts, asserters), a timeline of steps, and ordered
expectations. Everything runs in-process against a simulated clock, and all
randomness derives from the scenario seed, so two runs of the same file
produce byte-identical reports.

Key-generation order (fixed for reproducibility): TTP, platform, then owners,
asserters, and services in file order.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .clock import SimClock
from .cloud import CloudPlatform, ServiceRegistration
from .crypto.keys import ActorKeys
from .gateway.config import AnnotationLevel, EventRule, Reading
from .gateway.pep import Gateway
from .gateway.triggers import sign_assertion
from .pdl import MethodRef, parse
from .policy import generate_monitoring_spec, generate_policy, model_digest
from .rng import DeterministicRandomSource
from .ttp import Ttp, trigger_from_obj
from .cloud import AuditVerdictInfo


class MalformedScenario(Exception):
    pass


@dataclass
class StepResult:
    op: str
    decision: Optional[str] = None
    endpoint: Optional[str] = None
    outcomes: dict = field(default_factory=dict)
    grants_issued: int = 0
    granted_fields: list = field(default_factory=list)
    error: Optional[str] = None


@dataclass
class ScenarioReport:
    name: str
    seed: int
    steps_executed: int
    lines: list[str]
    passed: int
    failed: int

    @property
    def all_passed(self) -> bool:
        return self.failed == 0

    def to_text(self) -> str:
        out = [f"scenario: {self.name}", f"seed: {self.seed}", f"steps executed: {self.steps_executed}"]
        out += self.lines
        out.append(f"result: {self.passed}/{self.passed + self.failed} expectations passed")
        return "\n".join(out) + "\n"


class _Runner:
    def __init__(self, spec: dict, base_dir: Path):
        self.spec = spec
        self.base_dir = base_dir
        if "seed" not in spec:
            raise MalformedScenario("scenario must declare a seed")
        self.rng = DeterministicRandomSource(int(spec["seed"]))
        self.clock = SimClock(start=int(spec.get("start_time", 0)))
        self.ttp = Ttp(ActorKeys.generate("ttp", "ttp", self.rng))
        platform_keys = ActorKeys.generate("platform", "platform", self.rng)
        self.cloud = CloudPlatform(
            platform_sign_secret=platform_keys.sign.secret,
            platform_sign_public=platform_keys.sign.public,
            ttp_sign_public=self.ttp.public_key,
            checkpoint_signer=self.ttp.checkpoint_signer(),
            clock=self.clock,
            rng=self.rng,
        )
        for level in ("strict", "balanced", "permissive"):
            self.cloud.publish_preset(self.ttp.publish_default_config(level).to_obj())
        self.gateways: dict[str, Gateway] = {}
        self.asserters: dict[str, ActorKeys] = {}
        self.service_keys: dict[str, ActorKeys] = {}
        self.results: list[StepResult] = []

        for owner in spec.get("owners", []):
            keys = ActorKeys.generate(owner["id"], "owner", self.rng)
            self.gateways[owner["id"]] = Gateway(
                keys=keys,
                cloud=self.cloud,
                ttp_public=self.ttp.public_key,
                endpoint=owner.get("endpoint", "cloudA"),
                clock=self.clock,
                rng=self.rng,
            )
        for asserter in spec.get("asserters", []):
            self.asserters[asserter["id"]] = ActorKeys.generate(asserter["id"], "asserter", self.rng)
        for svc in spec.get("services", []):
            self._register_service(svc)
        roles = spec.get("roles", {})
        if roles:
            members = []
            for role_id in sorted(roles):
                for service_id in roles[role_id]:
                    members.append((role_id, service_id, self.service_keys[service_id].box.public))
            directory = self.ttp.publish_role_directory(members)
            for gw in self.gateways.values():
                gw.set_role_directory(directory)

    # --- setup ---------------------------------------------------------------

    def _model_text(self, svc: dict) -> str:
        if "model_text" in svc:
            return svc["model_text"]
        if "model_file" in svc:
            return (self.base_dir / svc["model_file"]).read_text(encoding="utf-8")
        raise MalformedScenario(f"service {svc.get('id')} needs model_text or model_file")

    def _register_service(self, svc: dict) -> None:
        service_id = svc["id"]
        keys = ActorKeys.generate(service_id, "service", self.rng)
        self.service_keys[service_id] = keys
        model_text = self._model_text(svc)
        model = parse(model_text, source_name=service_id)
        reg = ServiceRegistration(
            service_id=service_id,
            public_key=keys.box.public,
            model_text=model_text,
            policy=generate_policy(model, service_id),
            monitoring=generate_monitoring_spec(model, service_id),
            script=svc.get("script", {}),
        )
        self.cloud.register_service(reg)
        self.cloud.host_service_key(service_id, keys.box.secret)
        audit_mode = svc.get("audit", "audit")
        if audit_mode == "audit":
            verdict = self.ttp.audit_service(
                model,
                svc.get("script", {}),
                [self._rule_obj(r) for r in svc.get("proposed_rules", [])],
                audited_at=self.clock.now(),
                service_id=service_id,
            )
            self.cloud.attach_verdict(service_id, verdict)
        elif audit_mode == "forge_pass":
            verdict = self.ttp.sign_verdict(
                AuditVerdictInfo(
                    service_id=service_id,
                    model_digest=model_digest(model),
                    result="pass",
                    violations=(),
                    audited_at=self.clock.now(),
                    signature=b"",
                )
            )
            self.cloud.attach_verdict(service_id, verdict)
        elif audit_mode != "none":
            raise MalformedScenario(f"unknown audit mode {audit_mode!r}")

    def _resolve_trigger_obj(self, obj: dict) -> dict:
        """Replace asserter names with their runtime public keys."""
        out = dict(obj)
        if out.get("kind") == "external" and "trusted_asserters" in out:
            names = out.pop("trusted_asserters")
            from .encoding import b64e

            out["trusted_keys"] = [b64e(self.asserters[n].sign.public) for n in names]
        if out.get("kind") in ("and", "or"):
            out["left"] = self._resolve_trigger_obj(out["left"])
            out["right"] = self._resolve_trigger_obj(out["right"])
        return out

    def _rule_obj(self, obj: dict) -> dict:
        return {"rule_id": obj["rule_id"], "trigger": trigger_from_obj(self._resolve_trigger_obj(obj["trigger"]))}

    def _event_rule(self, obj: dict) -> EventRule:
        return EventRule(
            rule_id=obj["rule_id"],
            grantee=obj["grantee"],
            scope=frozenset(obj["scope"]),
            trigger=trigger_from_obj(self._resolve_trigger_obj(obj["trigger"])),
            grant_duration=int(obj["grant_duration"]),
        )

    # --- steps -----------------------------------------------------------------

    def _check_actor_references(self) -> None:
        for i, step in enumerate(self.spec.get("timeline", [])):
            owner = step.get("owner")
            if owner is not None and owner not in self.gateways:
                raise MalformedScenario(f"step {i} references undeclared owner {owner!r}")
            asserter = step.get("asserter")
            if asserter is not None and asserter not in self.asserters:
                raise MalformedScenario(f"step {i} references undeclared asserter {asserter!r}")

    def run(self) -> ScenarioReport:
        self._check_actor_references()
        last_at = None
        for step in self.spec.get("timeline", []):
            at = step.get("at")
            if at is not None:
                if last_at is not None and at < last_at:
                    raise MalformedScenario("timeline timestamps must be non-decreasing")
                last_at = at
                self.clock.set(int(at))
            self.results.append(self._run_step(step))
        lines, passed, failed = self._evaluate_expectations()
        return ScenarioReport(
            name=self.spec.get("name", "scenario"),
            seed=int(self.spec["seed"]),
            steps_executed=len(self.results),
            lines=lines,
            passed=passed,
            failed=failed,
        )

    def _gateway(self, step: dict) -> Gateway:
        owner = step["owner"]
        if owner not in self.gateways:
            raise MalformedScenario(f"unknown owner {owner!r}")
        return self.gateways[owner]

    def _run_step(self, step: dict) -> StepResult:
        op = step.get("op")
        result = StepResult(op=op or "?")
        before = {owner: len(gw.issued_grants) for owner, gw in self.gateways.items()}
        try:
            if op == "ingest":
                self._step_ingest(step, result)
            elif op in ("consent", "choice"):
                self._step_consent(step, result)
            elif op == "annotate":
                self._step_annotate(step, result)
            elif op == "define_rule":
                self._gateway(step).define_rule(self._event_rule(step["rule"]))
            elif op == "assert":
                self._step_assert(step, result)
            elif op == "invoke":
                self._step_invoke(step, result)
            elif op == "rotate":
                rotated = self._gateway(step).rotate_epochs()
                result.outcomes = {f: str(e) for f, e in rotated.items()}
            elif op == "revoke":
                self._gateway(step).revoke_consent(step["service"])
            elif op == "checkpoint":
                self.cloud.checkpoint_log(step["owner"])
            elif op == "set_endpoint":
                self._gateway(step).endpoint = step["endpoint"]
            elif op == "advance":
                self.clock.advance(int(step["seconds"]))
            else:
                raise MalformedScenario(f"unknown op {op!r}")
        except MalformedScenario:
            raise
        except Exception as exc:  # recorded, assertable by expectations
            result.error = type(exc).__name__
        new_grants = []
        for owner, gw in self.gateways.items():
            new_grants += [rec.grant.field_id for rec in gw.issued_grants[before[owner]:]]
        result.grants_issued = len(new_grants)
        result.granted_fields = sorted(new_grants)
        return result

    def _step_ingest(self, step: dict, result: StepResult) -> None:
        gw = self._gateway(step)
        value = step["value"]
        if isinstance(value, dict) and "b64" in value:
            import base64

            value = base64.b64decode(value["b64"])
        reading = Reading(
            owner_id=step["owner"],
            device_id=step.get("device", "device"),
            field_id=step["field"],
            value=value,
            timestamp=self.clock.now(),
        )
        decision, record = gw.ingest(reading)
        result.decision = decision.kind
        result.endpoint = decision.endpoint

    def _step_consent(self, step: dict, result: StepResult) -> None:
        gw = self._gateway(step)
        service_id = step["service"]
        if "preset" in step and step["preset"]:
            overrides = {MethodRef.parse(k): v for k, v in step.get("overrides", {}).items()}
            gw.consent_with_preset(service_id, step["preset"], overrides)
        else:
            selections = {MethodRef.parse(k): v for k, v in step.get("selections", {}).items()}
            gw.apply_consent(service_id, selections)

    def _step_annotate(self, step: dict, result: StepResult) -> None:
        gw = self._gateway(step)
        level = step["level"]
        if level == "local_only":
            gw.set_annotation(step["field"], AnnotationLevel.LOCAL_ONLY)
        elif level == "unrestricted":
            gw.set_annotation(step["field"], AnnotationLevel.UNRESTRICTED)
        elif isinstance(level, dict) and "restricted_to" in level:
            gw.set_annotation(step["field"], AnnotationLevel.RESTRICTED_TO, level["restricted_to"])
        else:
            raise MalformedScenario(f"unknown annotation level {level!r}")

    def _step_assert(self, step: dict, result: StepResult) -> None:
        keys = self.asserters[step["asserter"]]
        at = int(step.get("signed_at", self.clock.now()))
        assertion = sign_assertion(step["claim"], step["owner"], keys.sign.public, keys.sign.secret, at)
        self._gateway(step).submit_external_assertion(assertion)

    def _step_invoke(self, step: dict, result: StepResult) -> None:
        invocation = self.cloud.invoke_method(
            step["service"],
            MethodRef.parse(step["method"]),
            step["owner"],
            step.get("selector"),
        )
        result.outcomes = {o.attribute: o.outcome for o in invocation.outcomes}

    # --- expectations ---------------------------------------------------------------

    def _evaluate_expectations(self):
        lines: list[str] = []
        passed = failed = 0
        for i, exp in enumerate(self.spec.get("expectations", []), start=1):
            ok, detail = self._check(exp)
            if ok:
                passed += 1
            else:
                failed += 1
            status = "PASS" if ok else "FAIL"
            lines.append(f"{i:02d} {status} {exp.get('check')}: {detail}")
        return lines, passed, failed

    def _check(self, exp: dict):
        kind = exp.get("check")
        if kind == "step_decision":
            r = self.results[exp["step"]]
            want = exp["equals"]
            ok = r.decision == want and (exp.get("endpoint") is None or r.endpoint == exp["endpoint"])
            return ok, f"step {exp['step']} decision={r.decision} endpoint={r.endpoint} (want {want})"
        if kind == "step_error":
            r = self.results[exp["step"]]
            return r.error == exp["equals"], f"step {exp['step']} error={r.error} (want {exp['equals']})"
        if kind == "invoke_outcomes":
            r = self.results[exp["step"]]
            want = exp["outcomes"]
            return r.outcomes == want, f"step {exp['step']} outcomes={r.outcomes} (want {want})"
        if kind == "grants_issued":
            r = self.results[exp["step"]]
            ok = r.grants_issued == exp["count"]
            if "fields" in exp:
                ok = ok and r.granted_fields == sorted(exp["fields"])
            return ok, f"step {exp['step']} grants={r.grants_issued} fields={r.granted_fields}"
        if kind == "cloud_field_ciphertexts":
            count = self.cloud.ciphertext_count(exp["owner"], exp["field"])
            return count == exp["count"], f"{exp['field']}: {count} at cloud (want {exp['count']})"
        if kind == "local_store_count":
            count = len(self.gateways[exp["owner"]].local_store)
            return count == exp["count"], f"local store {count} (want {exp['count']})"
        if kind == "log_count":
            entries, _ = self.cloud.fetch_log(exp["owner"])
            n = len(entries)
            if "equals" in exp:
                return n == exp["equals"], f"log entries {n} (want {exp['equals']})"
            return n >= exp.get("min", 0), f"log entries {n} (want >= {exp.get('min', 0)})"
        if kind == "log_chain_ok":
            payloads, report = self.gateways[exp["owner"]].fetch_decrypted_log()
            return report.ok, f"chain ok={report.ok} entries={len(payloads)}"
        if kind == "log_outcome_counts":
            payloads, _ = self.gateways[exp["owner"]].fetch_decrypted_log()
            counts: dict[str, int] = {}
            for p in payloads:
                counts[p.outcome] = counts.get(p.outcome, 0) + 1
            want = exp["counts"]
            ok = all(counts.get(k, 0) == v for k, v in want.items())
            return ok, f"outcome counts {counts} (want {want})"
        if kind == "service_listed":
            listed = [r.service_id for r in self.cloud.list_services()]
            ok = (exp["service"] in listed) == exp["listed"]
            return ok, f"listed={listed}"
        if kind == "verdict":
            reg = self.cloud.services.get(exp["service"])
            result = reg.verdict.result if reg and reg.verdict else "absent"
            return result == exp["result"], f"verdict={result} (want {exp['result']})"
        raise MalformedScenario(f"unknown expectation {kind!r}")


def load_scenario(path: str | Path) -> dict:
    path = Path(path)
    try:
        spec = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise MalformedScenario(f"invalid JSON: {exc}") from None
    if not isinstance(spec, dict):
        raise MalformedScenario("scenario must be a JSON object")
    return spec


def run_scenario(spec: dict, base_dir: str | Path = ".") -> ScenarioReport:
    return _Runner(spec, Path(base_dir)).run()


def run_scenario_file(path: str | Path) -> ScenarioReport:
    path = Path(path)
    return run_scenario(load_scenario(path), path.parent)
