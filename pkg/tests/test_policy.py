"""Policy document and monitoring spec generation."""

import random

import pytest

from pepkit.pdl import InvalidModel, MethodRef, parse
from pepkit.pdl.model import EdgeKind
from pepkit.policy import (
    NOT_USED,
    USE,
    MissingSelection,
    UnknownSelection,
    generate_monitoring_spec,
    generate_policy,
    model_digest,
    monitoring_from_obj,
    monitoring_to_obj,
    policy_file_text,
    policy_from_obj,
    policy_to_obj,
    render_policy_text,
    resolve_choices,
)

from .modelgen import random_valid_model
from .oracles import brute_enabled_methods, brute_monitored_attributes

AD = MethodRef("Analysis", "getPersonalizedAd")
HEALTH = MethodRef("Analysis", "healthCritical")


@pytest.fixture(scope="module")
def listing1_policy(listing1_model):
    return generate_policy(listing1_model, "assisted-living")


def test_listing1_single_choice(listing1_policy):
    assert len(listing1_policy.choices) == 1
    choice = listing1_policy.choices[0]
    assert choice.method == AD
    assert choice.use_option_text == "Ad funded service"
    assert choice.not_used_option_text == "Fee is $1 per Month"


def test_listing1_data_uses_cover_declared_only(listing1_policy):
    attrs = {u.attribute for u in listing1_policy.data_uses}
    assert attrs == {"Camera.location", "Camera.recognizedPersons"}


def test_no_optional_methods_no_choices():
    m = parse('class A { <<use="p">> int m(); <<mandatory="A.m">> int x; }')
    assert generate_policy(m, "svc").choices == ()


def test_invalid_model_rejected():
    m = parse("class A { int m(); }")  # V5
    with pytest.raises(InvalidModel):
        generate_policy(m, "svc")
    with pytest.raises(InvalidModel):
        generate_monitoring_spec(m)


def test_monitoring_spec_listing1(listing1_model):
    spec = generate_monitoring_spec(listing1_model, "assisted-living")
    assert [m.attribute for m in spec.monitored] == ["Camera.location", "Camera.recognizedPersons"]
    recognized = spec.monitored[1]
    assert {(m.method.qualified(), m.status) for m in recognized.methods} == {
        ("Analysis.healthCritical", EdgeKind.MANDATORY),
        ("Analysis.getPersonalizedAd", EdgeKind.OPTIONAL),
    }
    assert spec.purpose_of("Camera.location") == (
        "Determine where to display image in house overview map."
    )
    # the purpose of an individual access is the reading method's use text
    assert spec.access_purpose("Camera.recognizedPersons", HEALTH) == (
        "Determine whether resident is alone and needs help."
    )
    assert spec.access_purpose("Camera.recognizedPersons", AD) == "Ad funded service"
    assert spec.access_purpose("Camera.location", HEALTH) == (
        "Determine where to display image in house overview map."
    )


def test_monitoring_empty_model():
    assert generate_monitoring_spec(parse("")).monitored == ()


def test_monitored_set_matches_oracle_on_random_models():
    rnd = random.Random(55)
    for _ in range(100):
        model = random_valid_model(rnd)
        spec = generate_monitoring_spec(model)
        assert [m.attribute for m in spec.monitored] == brute_monitored_attributes(model)


def test_choice_count_equals_optional_count_on_random_models():
    rnd = random.Random(56)
    for _ in range(100):
        model = random_valid_model(rnd)
        optional = set()
        for cls in model.classes:
            for attr in cls.attributes:
                optional.update(attr.optional_refs)
        assert len(generate_policy(model, "s").choices) == len(optional)


def test_render_contains_purposes_and_choice(listing1_policy):
    text = render_policy_text(listing1_policy)
    assert "Determine whether resident is alone and needs help." in text
    assert "Ad funded service" in text and "Fee is $1 per Month" in text
    assert "Camera.stream" not in text


def test_render_no_choices_template():
    m = parse('class A { <<use="p">> int m(); }')
    text = render_policy_text(generate_policy(m, "svc"))
    assert "No decisions required." in text


def test_render_deterministic(listing1_policy):
    assert render_policy_text(listing1_policy) == render_policy_text(listing1_policy)


def test_resolve_not_used(listing1_policy):
    consent = resolve_choices(listing1_policy, {AD: NOT_USED})
    assert set(consent.enabled_methods) == {HEALTH}


def test_resolve_use(listing1_policy):
    consent = resolve_choices(listing1_policy, {AD: USE})
    assert set(consent.enabled_methods) == {HEALTH, AD}


def test_resolve_missing_and_unknown(listing1_policy):
    with pytest.raises(MissingSelection):
        resolve_choices(listing1_policy, {})
    with pytest.raises(UnknownSelection):
        resolve_choices(listing1_policy, {AD: NOT_USED, HEALTH: USE})
    with pytest.raises(UnknownSelection):
        resolve_choices(listing1_policy, {AD: "maybe"})


def test_resolve_matches_oracle_and_contains_all_mandatory():
    rnd = random.Random(57)
    for _ in range(100):
        model = random_valid_model(rnd)
        doc = generate_policy(model, "s")
        selections = {c.method: rnd.choice([USE, NOT_USED]) for c in doc.choices}
        consent = resolve_choices(doc, selections)
        oracle = brute_enabled_methods(model, selections)
        assert set(consent.enabled_methods) == oracle
        mandatory = {r for r, s in doc.methods if s == EdgeKind.MANDATORY}
        assert mandatory <= set(consent.enabled_methods)


def test_digest_sensitive_to_single_character(listing1_text):
    base = model_digest(parse(listing1_text))
    altered = listing1_text.replace("Ad funded service", "Ad funded servicE")
    assert model_digest(parse(altered)) != base


def test_digest_binds_to_semantics_not_layout(listing1_text):
    # reflowing whitespace inside a stereotype string does not change the model
    reflowed = listing1_text.replace("house\n    overview", "house overview")
    assert model_digest(parse(reflowed)) == model_digest(parse(listing1_text))


def test_policy_json_round_trip(listing1_policy):
    assert policy_from_obj(policy_to_obj(listing1_policy)) == listing1_policy


def test_monitoring_json_round_trip(listing1_model):
    spec = generate_monitoring_spec(listing1_model, "svc")
    assert monitoring_from_obj(monitoring_to_obj(spec)) == spec


def test_policy_file_text_stable(listing1_policy):
    a = policy_file_text(listing1_policy)
    b = policy_file_text(listing1_policy)
    assert a == b and a.endswith("\n") and "\r" not in a
