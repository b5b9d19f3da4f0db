"""HTTP surfaces exercised in-process via the ASGI test client."""

import pytest
from fastapi.testclient import TestClient

from pepkit.cloud import registration_to_obj
from pepkit.encoding import b64e
from pepkit.gateway.config import EventRule
from pepkit.gateway.triggers import Trigger, sign_assertion
from pepkit.httpapi import build_cloud_app, build_gateway_app
from pepkit.pdl import MethodRef
from pepkit.crypto.keys import ActorKeys
from pepkit.rng import DeterministicRandomSource

from .wiring import World

DOCTOR = ActorKeys.generate("doctor", "asserter", DeterministicRandomSource(61))


@pytest.fixture()
def world():
    w = World()
    w.register_listing1()
    return w


@pytest.fixture()
def gateway_client(world):
    return TestClient(build_gateway_app(world.gateway), raise_server_exceptions=False)


@pytest.fixture()
def cloud_client(world):
    return TestClient(build_cloud_app(world.cloud), raise_server_exceptions=False)


class TestGatewayApi:
    def test_ingest_and_config(self, gateway_client):
        r = gateway_client.put(
            "/config", json={"annotations": [{"field_id": "Camera.stream", "level": "local_only"}]}
        )
        assert r.status_code == 200
        r = gateway_client.post(
            "/ingest",
            json={"device_id": "cam1", "field_id": "Camera.stream", "value": {"b64": "enp6"}},
        )
        assert r.status_code == 200
        assert r.json()["decision"]["kind"] == "store_local"
        assert r.json()["record_id"] is None

        cfg = gateway_client.get("/config").json()
        assert cfg["annotations"] == [
            {"field_id": "Camera.stream", "level": "local_only", "endpoints": []}
        ]

    def test_consent_flow(self, gateway_client):
        r = gateway_client.post(
            "/consent/assisted-living",
            json={"selections": {"Analysis.getPersonalizedAd": "notUsed"}},
        )
        assert r.status_code == 200
        body = r.json()
        assert body["granted_fields"] == ["Camera.location", "Camera.recognizedPersons"]
        assert "Analysis.healthCritical" in body["enabled_methods"]

        r = gateway_client.delete("/consent/assisted-living")
        assert r.status_code == 200
        r = gateway_client.delete("/consent/assisted-living")
        assert r.status_code == 404
        assert r.json()["error"] == "NoSuchConsent"

    def test_consent_missing_selection_400(self, gateway_client):
        r = gateway_client.post("/consent/assisted-living", json={"selections": {}})
        assert r.status_code == 400
        assert r.json()["error"] == "MissingSelection"

    def test_consent_idempotent_repost(self, gateway_client):
        body = {"selections": {"Analysis.getPersonalizedAd": "notUsed"}}
        first = gateway_client.post("/consent/assisted-living", json=body).json()
        second = gateway_client.post("/consent/assisted-living", json=body).json()
        assert first["granted_fields"] == second["granted_fields"]
        assert first["enabled_methods"] == second["enabled_methods"]

    def test_presets_listed_with_valid_signatures(self, gateway_client):
        presets = gateway_client.get("/presets").json()["presets"]
        assert [p["preset_id"] for p in presets] == ["balanced-v1", "permissive-v1", "strict-v1"]

    def test_tampered_preset_dropped_from_listing(self, world, gateway_client):
        obj = dict(world.cloud.presets["strict-v1"])
        obj["default_choice"] = "use"  # mutation invalidates the signature
        world.cloud.publish_preset(obj)
        presets = gateway_client.get("/presets").json()["presets"]
        assert "strict-v1" not in [p["preset_id"] for p in presets]

    def test_consent_with_preset_and_override(self, gateway_client):
        body = {"preset": "strict-v1", "overrides": {"Analysis.getPersonalizedAd": "use"}}
        r = gateway_client.post("/consent/assisted-living", json=body)
        assert r.status_code == 200
        assert "Analysis.getPersonalizedAd" in r.json()["enabled_methods"]

        plain = gateway_client.post("/consent/assisted-living", json={"preset": "strict"})
        assert plain.status_code == 200
        assert "Analysis.getPersonalizedAd" not in plain.json()["enabled_methods"]

    def test_consent_with_unknown_preset_404(self, gateway_client):
        r = gateway_client.post("/consent/assisted-living", json={"preset": "paranoid"})
        assert r.status_code == 404 and r.json()["error"] == "UnknownPreset"

    def test_config_apply_preset(self, gateway_client):
        r = gateway_client.put("/config", json={"apply_preset": "strict-v1"})
        assert r.status_code == 200
        cfg = gateway_client.get("/config").json()
        assert cfg["default_annotation_level"] == "local_only"
        assert cfg["derived_from_default"][0] == "strict-v1"

    def test_policy_proxy(self, gateway_client):
        r = gateway_client.get("/policy/assisted-living")
        assert r.status_code == 200
        body = r.json()
        assert body["policy"]["choices"][0]["use"] == "Ad funded service"
        assert "Fee is $1 per Month" in body["rendered"]
        assert body["verdict"]["result"] == "pass"

    def test_services_proxy(self, gateway_client):
        body = gateway_client.get("/services").json()
        assert [s["service_id"] for s in body["services"]] == ["assisted-living"]

    def test_unknown_service_404(self, gateway_client):
        assert gateway_client.get("/policy/ghost").status_code == 404

    def test_assertions_endpoint(self, world, gateway_client):
        rule = EventRule(
            rule_id="r1",
            grantee="assisted-living",
            scope=frozenset({"Body.heartRate"}),
            trigger=Trigger.external("unconscious", [DOCTOR.sign.public], 600),
            grant_duration=3600,
        )
        world.gateway.define_rule(rule)
        a = sign_assertion(
            "unconscious", "alice", DOCTOR.sign.public, DOCTOR.sign.secret, world.clock.now()
        )
        r = gateway_client.post(
            "/assertions",
            json={
                "claim_id": a.claim_id,
                "subject_owner_id": a.subject_owner_id,
                "asserter_public": b64e(a.asserter_public),
                "timestamp": a.timestamp,
                "signature": b64e(a.signature),
            },
        )
        assert r.status_code == 200
        issued = r.json()["issued"]
        assert len(issued) == 1 and issued[0]["field_id"] == "Body.heartRate"
        assert issued[0]["rule_id"] == "r1"

    def test_assertion_bad_signature_400(self, gateway_client):
        r = gateway_client.post(
            "/assertions",
            json={
                "claim_id": "unconscious",
                "subject_owner_id": "alice",
                "asserter_public": b64e(DOCTOR.sign.public),
                "timestamp": 1,
                "signature": b64e(b"\x00" * 64),
            },
        )
        assert r.status_code == 400
        assert r.json()["error"] == "BadSignature"

    def test_log_view(self, world, gateway_client):
        gateway_client.post(
            "/consent/assisted-living",
            json={"selections": {"Analysis.getPersonalizedAd": "notUsed"}},
        )
        gateway_client.post(
            "/ingest", json={"device_id": "cam1", "field_id": "Camera.recognizedPersons", "value": "p"}
        )
        world.cloud.invoke_method(
            "assisted-living", MethodRef.parse("Analysis.healthCritical"), "alice"
        )
        body = gateway_client.get("/log").json()
        assert body["verification"]["ok"] is True
        assert len(body["entries"]) == 1
        assert body["entries"][0]["attribute"] == "Camera.recognizedPersons"


class TestCloudApi:
    def test_ttp_keys(self, world, cloud_client):
        body = cloud_client.get("/ttp/keys").json()
        assert body["ttp_public"] == b64e(world.ttp.public_key)

    def test_list_and_get_service(self, cloud_client):
        listed = cloud_client.get("/services").json()["services"]
        assert [s["service_id"] for s in listed] == ["assisted-living"]
        full = cloud_client.get("/services/assisted-living").json()
        assert full["script"]["Analysis.healthCritical"]["reads"] == ["Camera.recognizedPersons"]

    def test_register_duplicate_digest_mismatch(self, world, cloud_client):
        reg = registration_to_obj(world.cloud.services["assisted-living"])
        reg["service_id"] = "copy"
        reg["policy"] = dict(reg["policy"], model_digest="0" * 64)
        r = cloud_client.post("/services", json=reg)
        assert r.status_code == 400 and r.json()["error"] == "DigestMismatch"

    def test_invoke_endpoint(self, world, cloud_client):
        world.gateway.apply_consent(
            "assisted-living",
            {MethodRef.parse("Analysis.getPersonalizedAd"): "notUsed"},
        )
        from pepkit.gateway.config import Reading

        world.gateway.ingest(
            Reading(owner_id="alice", device_id="cam1", field_id="Camera.recognizedPersons",
                    value="bob", timestamp=world.clock.now())
        )
        r = cloud_client.post(
            "/invoke/assisted-living/Analysis.healthCritical", json={"owner_id": "alice"}
        )
        assert r.status_code == 200
        outcomes = r.json()["outcomes"]
        assert outcomes[0]["outcome"] == "value"
        import base64

        assert base64.b64decode(outcomes[0]["values"][0][1]) == b"bob"

    def test_fetch_log_lines_parse(self, world, cloud_client):
        world.gateway.apply_consent(
            "assisted-living",
            {MethodRef.parse("Analysis.getPersonalizedAd"): "notUsed"},
        )
        cloud_client.post("/invoke/assisted-living/Analysis.healthCritical", json={"owner_id": "alice"})
        body = cloud_client.get("/log/alice").json()
        from pepkit.auditlog import AccessLogEntry

        assert [AccessLogEntry.from_line(l).seq for l in body["entries"]] == [0]

    def test_unknown_invoke_404(self, cloud_client):
        r = cloud_client.post("/invoke/ghost/Analysis.healthCritical", json={"owner_id": "alice"})
        assert r.status_code == 404


class TestHttpCloudClient:
    def test_gateway_against_http_cloud(self, world):
        # run a second gateway whose cloud access goes through the HTTP layer
        from pepkit.gateway.pep import Gateway
        from pepkit.httpapi import HttpCloudClient

        app = build_cloud_app(world.cloud)
        http = TestClient(app, base_url="http://cloud", raise_server_exceptions=False)
        client = HttpCloudClient("http://cloud", client=http)

        keys = ActorKeys.generate("bob", "owner", DeterministicRandomSource(62))
        gw = Gateway(
            keys=keys, cloud=client, ttp_public=world.ttp.public_key,
            endpoint="cloudA", clock=world.clock, rng=DeterministicRandomSource(63),
        )
        consent, grants = gw.apply_consent(
            "assisted-living", {MethodRef.parse("Analysis.getPersonalizedAd"): "notUsed"}
        )
        assert sorted(g.field_id for g in grants) == ["Camera.location", "Camera.recognizedPersons"]

        from pepkit.gateway.config import Reading

        gw.ingest(Reading(owner_id="bob", device_id="cam", field_id="Camera.recognizedPersons",
                          value="carol", timestamp=world.clock.now()))
        result = world.cloud.invoke_method(
            "assisted-living", MethodRef.parse("Analysis.healthCritical"), "bob"
        )
        assert result.outcomes[0].outcome == "value"
        payloads, report = gw.fetch_decrypted_log()
        assert report.ok and len(payloads) == 1
