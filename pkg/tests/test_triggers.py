"""Trigger evaluation: aggregates, freshness, boolean algebra."""

import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pepkit.crypto.keys import ActorKeys
from pepkit.gateway.config import Reading
from pepkit.gateway.triggers import Trigger, evaluate_trigger, sign_assertion
from pepkit.rng import DeterministicRandomSource

DOCTOR = ActorKeys.generate("doctor", "asserter", DeterministicRandomSource(1))
OWNER = "alice"


def _reading(value, ts, field="Body.heartRate"):
    return Reading(owner_id=OWNER, device_id="monitor", field_id=field, value=value, timestamp=ts)


def _assertion(ts, claim="unconscious", keys=DOCTOR):
    return sign_assertion(claim, OWNER, keys.sign.public, keys.sign.secret, ts)


def _internal(threshold=40, window=600, aggregate="latest", comparator="<"):
    return Trigger.internal("Body.heartRate", aggregate, window, comparator, threshold)


def _external(freshness=600):
    return Trigger.external("unconscious", [DOCTOR.sign.public], freshness)


def test_internal_empty_window_is_false():
    assert not evaluate_trigger(_internal(), [], [], now=1000, owner_id=OWNER)


def test_internal_latest_threshold():
    readings = [_reading(80, 900), _reading(35, 950)]
    assert evaluate_trigger(_internal(), readings, [], now=1000, owner_id=OWNER)
    assert not evaluate_trigger(
        _internal(), [_reading(35, 900), _reading(80, 950)], [], now=1000, owner_id=OWNER
    )


def test_internal_window_excludes_old_readings():
    readings = [_reading(35, 100)]
    assert not evaluate_trigger(_internal(window=600), readings, [], now=1000, owner_id=OWNER)


@pytest.mark.parametrize(
    "aggregate,values,expected",
    [
        ("min", [50, 35, 60], 35),
        ("max", [50, 35, 60], 60),
        ("avg", [30, 60], 45),
        ("latest", [50, 35, 60], 60),
    ],
)
def test_aggregates(aggregate, values, expected):
    readings = [_reading(v, 900 + i) for i, v in enumerate(values)]
    t = Trigger.internal("Body.heartRate", aggregate, 600, "==", expected)
    assert evaluate_trigger(t, readings, [], now=1000, owner_id=OWNER)


def test_non_numeric_readings_ignored():
    readings = [_reading(b"\x01\x02", 950), _reading("text", 960)]
    assert not evaluate_trigger(_internal(), readings, [], now=1000, owner_id=OWNER)


def test_external_fresh_valid_assertion():
    assert evaluate_trigger(_external(), [], [_assertion(900)], now=1000, owner_id=OWNER)


def test_external_stale_assertion_false():
    assert not evaluate_trigger(_external(freshness=50), [], [_assertion(900)], now=1000, owner_id=OWNER)


def test_external_untrusted_key_false():
    other = ActorKeys.generate("other", "asserter", DeterministicRandomSource(2))
    assert not evaluate_trigger(_external(), [], [_assertion(950, keys=other)], now=1000, owner_id=OWNER)


def test_external_wrong_subject_false():
    a = sign_assertion("unconscious", "bob", DOCTOR.sign.public, DOCTOR.sign.secret, 950)
    assert not evaluate_trigger(_external(), [], [a], now=1000, owner_id=OWNER)


def test_external_wrong_claim_false():
    assert not evaluate_trigger(_external(), [], [_assertion(950, claim="other")], now=1000, owner_id=OWNER)


def test_external_tampered_signature_false():
    a = _assertion(950)
    import dataclasses

    bad = dataclasses.replace(a, signature=bytes([a.signature[0] ^ 1]) + a.signature[1:])
    assert not evaluate_trigger(_external(), [], [bad], now=1000, owner_id=OWNER)


def test_and_truth_table():
    vitals_low = [_reading(30, 950)]
    assertion = [_assertion(950)]
    t = Trigger.and_(_internal(), _external())
    assert evaluate_trigger(t, vitals_low, assertion, 1000, OWNER) is True
    assert evaluate_trigger(t, vitals_low, [], 1000, OWNER) is False
    assert evaluate_trigger(t, [], assertion, 1000, OWNER) is False
    assert evaluate_trigger(t, [], [], 1000, OWNER) is False


def test_or_truth_table():
    vitals_low = [_reading(30, 950)]
    assertion = [_assertion(950)]
    t = Trigger.or_(_internal(), _external())
    assert evaluate_trigger(t, vitals_low, assertion, 1000, OWNER) is True
    assert evaluate_trigger(t, vitals_low, [], 1000, OWNER) is True
    assert evaluate_trigger(t, [], assertion, 1000, OWNER) is True
    assert evaluate_trigger(t, [], [], 1000, OWNER) is False


def test_depth():
    leaf = _internal()
    assert leaf.depth() == 1
    assert Trigger.and_(leaf, Trigger.or_(leaf, _external())).depth() == 3


@st.composite
def _random_case(draw):
    rnd = random.Random(draw(st.integers(min_value=0, max_value=10_000)))
    readings = [_reading(rnd.randint(20, 100), 900 + i) for i in range(rnd.randint(0, 5))]
    assertions = [_assertion(900 + rnd.randint(0, 90))] if rnd.random() < 0.5 else []
    left = _internal(threshold=rnd.randint(20, 100), aggregate=rnd.choice(["latest", "min", "max", "avg"]))
    right = _external() if rnd.random() < 0.5 else _internal(threshold=rnd.randint(20, 100), comparator=">")
    return left, right, readings, assertions


@settings(max_examples=200, deadline=None)
@given(_random_case())
def test_composition_is_strict_boolean_algebra(case):
    left, right, readings, assertions = case
    lv = evaluate_trigger(left, readings, assertions, 1000, OWNER)
    rv = evaluate_trigger(right, readings, assertions, 1000, OWNER)
    assert evaluate_trigger(Trigger.and_(left, right), readings, assertions, 1000, OWNER) == (lv and rv)
    assert evaluate_trigger(Trigger.or_(left, right), readings, assertions, 1000, OWNER) == (lv or rv)
