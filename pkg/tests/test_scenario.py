"""Scenario runner: bundled scenario, determinism, malformed input."""

import pytest

from pepkit.scenario import MalformedScenario, run_scenario, run_scenario_file

from .conftest import SCENARIOS


def test_assisted_living_all_expectations_pass():
    report = run_scenario_file(SCENARIOS / "assisted_living.scenario.json")
    assert report.all_passed, report.to_text()
    assert report.failed == 0 and report.passed == 17


def test_same_scenario_twice_byte_identical():
    a = run_scenario_file(SCENARIOS / "assisted_living.scenario.json").to_text()
    b = run_scenario_file(SCENARIOS / "assisted_living.scenario.json").to_text()
    assert a.encode() == b.encode()


def test_empty_timeline_empty_report():
    report = run_scenario({"name": "empty", "seed": 1, "timeline": [], "expectations": []})
    assert report.steps_executed == 0 and report.all_passed


def test_missing_seed_rejected():
    with pytest.raises(MalformedScenario):
        run_scenario({"name": "bad"})


def test_non_monotonic_timeline_rejected():
    spec = {
        "name": "bad",
        "seed": 1,
        "owners": [{"id": "alice"}],
        "timeline": [
            {"at": 100, "op": "rotate", "owner": "alice"},
            {"at": 50, "op": "rotate", "owner": "alice"},
        ],
    }
    with pytest.raises(MalformedScenario):
        run_scenario(spec)


def test_unknown_op_rejected():
    spec = {"name": "bad", "seed": 1, "timeline": [{"op": "frobnicate"}]}
    with pytest.raises(MalformedScenario):
        run_scenario(spec)


def test_undeclared_actor_rejected():
    spec = {
        "name": "bad",
        "seed": 1,
        "owners": [{"id": "alice"}],
        "timeline": [{"at": 1, "op": "rotate", "owner": "ghost"}],
    }
    with pytest.raises(MalformedScenario):
        run_scenario(spec)
    spec = {
        "name": "bad",
        "seed": 1,
        "owners": [{"id": "alice"}],
        "timeline": [{"at": 1, "op": "assert", "asserter": "nobody", "owner": "alice", "claim": "x"}],
    }
    with pytest.raises(MalformedScenario):
        run_scenario(spec)


def test_step_errors_are_recorded_and_assertable():
    spec = {
        "name": "unaudited",
        "seed": 7,
        "owners": [{"id": "alice"}],
        "services": [
            {
                "id": "svc",
                "model_text": 'class A { <<use="p">> int x; <<use="q">> int m(); }',
                "script": {"A.m": {"reads": ["A.x"], "calls": []}},
                "audit": "none",
            }
        ],
        "timeline": [{"at": 10, "op": "consent", "owner": "alice", "service": "svc", "selections": {}}],
        "expectations": [{"check": "step_error", "step": 0, "equals": "ServiceNotAudited"}],
    }
    report = run_scenario(spec)
    assert report.all_passed, report.to_text()


def test_failed_expectation_reported():
    spec = {
        "name": "failing",
        "seed": 7,
        "owners": [{"id": "alice"}],
        "timeline": [],
        "expectations": [{"check": "local_store_count", "owner": "alice", "count": 99}],
    }
    report = run_scenario(spec)
    assert not report.all_passed
    assert "FAIL" in report.lines[0]


def test_preset_consent_flow():
    model = (
        'class Camera { <<optional="Analysis.ad">> List<Person> persons; }\n'
        'class Analysis { <<use="Ad funded">> <<notUsed="Pay fee">> Ad ad(); }'
    )
    spec = {
        "name": "preset",
        "seed": 3,
        "owners": [{"id": "alice"}],
        "services": [
            {"id": "svc", "model_text": model, "script": {"Analysis.ad": {"reads": ["Camera.persons"]}}}
        ],
        "timeline": [
            {"at": 10, "op": "consent", "owner": "alice", "service": "svc", "preset": "strict"},
            {"at": 20, "op": "invoke", "service": "svc", "method": "Analysis.ad", "owner": "alice"},
            {
                "at": 30,
                "op": "consent",
                "owner": "alice",
                "service": "svc",
                "preset": "strict",
                "overrides": {"Analysis.ad": "use"},
            },
        ],
        "expectations": [
            {"check": "grants_issued", "step": 0, "count": 0},
            {"check": "invoke_outcomes", "step": 1, "outcomes": {"Camera.persons": "denied_disabled_method"}},
            {"check": "grants_issued", "step": 2, "count": 1, "fields": ["Camera.persons"]},
        ],
    }
    report = run_scenario(spec)
    assert report.all_passed, report.to_text()


def test_rotation_cuts_old_grants_in_scenario():
    model = 'class D { <<use="track">> int level; }'
    spec = {
        "name": "rotation",
        "seed": 11,
        "start_time": 0,
        "owners": [{"id": "alice"}],
        "services": [{"id": "svc", "model_text": model, "script": {}}],
        "timeline": [
            {"at": 0, "op": "consent", "owner": "alice", "service": "svc", "selections": {}},
            {"at": 1, "op": "ingest", "owner": "alice", "device": "d", "field": "D.level", "value": 1},
            {"at": 90000, "op": "rotate", "owner": "alice"},
            {"at": 90001, "op": "ingest", "owner": "alice", "device": "d", "field": "D.level", "value": 2},
        ],
        "expectations": [
            {"check": "grants_issued", "step": 0, "count": 1, "fields": ["D.level"]},
            {"check": "cloud_field_ciphertexts", "owner": "alice", "field": "D.level", "count": 2},
        ],
    }
    report = run_scenario(spec)
    assert report.all_passed, report.to_text()
