"""TTP audit: violation detection, verdict integrity, presets."""

import dataclasses
import random

import pytest

from pepkit.crypto.keys import ActorKeys
from pepkit.gateway.config import AnnotationLevel
from pepkit.gateway.triggers import Trigger
from pepkit.pdl import InvalidModel, MethodRef, parse
from pepkit.policy import NOT_USED, USE
from pepkit.rng import DeterministicRandomSource
from pepkit.ttp import (
    Ttp,
    UnknownLevel,
    audit_violations,
    verify_default_config,
    verify_verdict,
)

from .modelgen import random_script, random_valid_model
from .oracles import brute_audit_violations
from .wiring import FAITHFUL_SCRIPT, FIXTURES

TTP_KEYS = ActorKeys.generate("ttp", "ttp", DeterministicRandomSource(31))
DOCTOR = ActorKeys.generate("doctor", "asserter", DeterministicRandomSource(32))


@pytest.fixture(scope="module")
def ttp():
    return Ttp(TTP_KEYS)


@pytest.fixture(scope="module")
def listing1():
    return parse((FIXTURES / "listing1.pdl").read_text(encoding="utf-8"))


class TestAuditRules:
    def test_faithful_script_passes(self, ttp, listing1):
        verdict = ttp.audit_service(listing1, FAITHFUL_SCRIPT, service_id="svc")
        assert verdict.result == "pass" and verdict.violations == ()

    def test_undeclared_attribute_read_fails_with_exactly_that_violation(self, ttp, listing1):
        script = dict(FAITHFUL_SCRIPT)
        script["Analysis.getPersonalizedAd"] = {"reads": ["Camera.stream"], "calls": []}
        verdict = ttp.audit_service(listing1, script, service_id="svc")
        assert verdict.result == "fail"
        assert len(verdict.violations) == 1
        code, subject, _ = verdict.violations[0]
        assert code == "a"
        assert "Analysis.getPersonalizedAd" in subject and "Camera.stream" in subject

    def test_read_without_edge_fails(self, listing1):
        # healthCritical has no edge from Camera.location, but location has
        # attribute-level use, so that read is fine; an edge-less, use-less
        # attribute is not
        script = {"Analysis.healthCritical": {"reads": ["Camera.location"], "calls": []}}
        assert audit_violations(listing1, script, []) == []
        script = {"Analysis.healthCritical": {"reads": ["Camera.stream"], "calls": []}}
        violations = audit_violations(listing1, script, [])
        assert [v.code for v in violations] == ["a"]

    def test_disabled_optional_reached_through_calls(self, listing1):
        script = {
            "Analysis.healthCritical": {
                "reads": ["Camera.recognizedPersons"],
                "calls": ["Analysis.getPersonalizedAd"],
            },
            "Analysis.getPersonalizedAd": {"reads": ["Camera.recognizedPersons"], "calls": []},
        }
        violations = audit_violations(listing1, script, [])
        assert [v.code for v in violations] == ["c"]
        assert violations[0].subject == "Analysis.getPersonalizedAd"

    def test_internal_only_emergency_rule_fails(self, listing1):
        rules = [
            {
                "rule_id": "hasty",
                "trigger": Trigger.internal("Body.heartRate", "latest", 600, "<", 40),
            }
        ]
        violations = audit_violations(listing1, FAITHFUL_SCRIPT, rules)
        assert [(v.code, v.subject) for v in violations] == [("d", "hasty")]

    def test_or_of_internal_and_external_fails(self, listing1):
        rules = [
            {
                "rule_id": "loose",
                "trigger": Trigger.or_(
                    Trigger.internal("Body.heartRate", "latest", 600, "<", 40),
                    Trigger.external("unconscious", [DOCTOR.sign.public], 600),
                ),
            }
        ]
        assert [v.code for v in audit_violations(listing1, FAITHFUL_SCRIPT, rules)] == ["d"]

    def test_and_of_internal_and_external_passes(self, listing1):
        rules = [
            {
                "rule_id": "sound",
                "trigger": Trigger.and_(
                    Trigger.internal("Body.heartRate", "latest", 600, "<", 40),
                    Trigger.external("unconscious", [DOCTOR.sign.public], 600),
                ),
            }
        ]
        assert audit_violations(listing1, FAITHFUL_SCRIPT, rules) == []

    def test_external_only_rule_passes(self, listing1):
        rules = [
            {
                "rule_id": "external",
                "trigger": Trigger.external("unconscious", [DOCTOR.sign.public], 600),
            }
        ]
        assert audit_violations(listing1, FAITHFUL_SCRIPT, rules) == []

    def test_invalid_model_rejected(self, ttp):
        with pytest.raises(InvalidModel):
            ttp.audit_service(parse("class S { int m(); }"), {}, service_id="svc")


class TestOracleEquivalence:
    @staticmethod
    def _normalize_impl(violations):
        out = set()
        for v in violations:
            if v.code == "a":
                method, attr = v.subject.split("->")
                out.add(("a", method, attr))
            else:
                out.add((v.code, v.subject))
        return out

    @staticmethod
    def _normalize_oracle(violations):
        out = set()
        for v in violations:
            if v[0] == "a":
                out.add(("a", v[1], v[2]))
            elif v[0] == "b":
                out.add(("b", v[1]))
            elif v[0] == "c":
                out.add(("c", v[2]))
            else:
                out.add(("d", v[1]))
        return out

    def test_verdicts_match_brute_force_on_100_random_pairs(self):
        rnd = random.Random(4242)
        checked = 0
        while checked < 100:
            model = random_valid_model(rnd, max_classes=5)
            optional = {r for c in model.classes for a in c.attributes for r in a.optional_refs}
            if len(optional) > 10:
                continue
            script = random_script(rnd, model)
            impl = self._normalize_impl(audit_violations(model, script, []))
            oracle = self._normalize_oracle(brute_audit_violations(model, script, []))
            assert impl == oracle, f"divergence on seed case {checked}"
            checked += 1


class TestVerdictIntegrity:
    def test_signature_verifies_and_mutations_invalidate(self, ttp, listing1):
        verdict = ttp.audit_service(listing1, FAITHFUL_SCRIPT, service_id="svc")
        assert verify_verdict(verdict, TTP_KEYS.sign.public)
        for mutation in (
            {"result": "fail"},
            {"service_id": "other"},
            {"model_digest": "0" * 64},
            {"audited_at": verdict.audited_at + 1},
            {"violations": (("a", "x", "y"),)},
        ):
            assert not verify_verdict(dataclasses.replace(verdict, **mutation), TTP_KEYS.sign.public)

    def test_resign_after_change_yields_valid_signature(self, ttp, listing1):
        verdict = ttp.audit_service(listing1, FAITHFUL_SCRIPT, service_id="svc")
        changed = dataclasses.replace(verdict, model_digest="f" * 64)
        assert not verify_verdict(changed, TTP_KEYS.sign.public)
        resigned = ttp.sign_verdict(changed)
        assert verify_verdict(resigned, TTP_KEYS.sign.public)


class TestDefaultConfigurations:
    def test_levels(self, ttp):
        strict = ttp.publish_default_config("strict")
        balanced = ttp.publish_default_config("balanced")
        permissive = ttp.publish_default_config("permissive")
        assert (strict.default_choice, strict.default_annotation) == (NOT_USED, "local_only")
        assert (balanced.default_choice, balanced.default_annotation) == (NOT_USED, "unrestricted")
        assert (permissive.default_choice, permissive.default_annotation) == (USE, "unrestricted")
        for preset in (strict, balanced, permissive):
            assert verify_default_config(preset, TTP_KEYS.sign.public)

    def test_unknown_level(self, ttp):
        with pytest.raises(UnknownLevel):
            ttp.publish_default_config("paranoid")

    def test_strict_applied_to_listing1(self, ttp, listing1):
        from .wiring import World

        world = World()
        world.register_listing1()
        preset = world.ttp.publish_default_config("strict")
        model = parse(world.cloud.services["assisted-living"].model_text)
        selections = world.gateway.preset_selections(preset, model)
        assert selections == {MethodRef("Analysis", "getPersonalizedAd"): NOT_USED}
        world.gateway.apply_default_config(preset)
        assert world.gateway.config.default_annotation_level == AnnotationLevel.LOCAL_ONLY
        assert world.gateway.config.derived_from_default[0] == "strict-v1"

    def test_override_wins_rest_intact(self, ttp, listing1):
        from .wiring import World

        world = World()
        world.register_listing1()
        preset = world.ttp.publish_default_config("strict")
        model = parse(world.cloud.services["assisted-living"].model_text)
        ad = MethodRef("Analysis", "getPersonalizedAd")
        selections = world.gateway.preset_selections(preset, model, overrides={ad: USE})
        assert selections == {ad: USE}

    def test_tampered_preset_refused(self, ttp):
        from pepkit.gateway.triggers import BadSignature

        from .wiring import World

        world = World()
        preset = ttp.publish_default_config("strict")  # signed by a different ttp key
        with pytest.raises(BadSignature):
            world.gateway.apply_default_config(preset)
