#!/usr/bin/env python3
"""Capture gateway API traffic for the console test suite.

Seeds an in-process gateway+cloud from the bundled assisted-living actors,
drives the flows the console exercises (list services, view policy, post
consent, view log), and records every request/response pair. The console's
vitest suite replays these fixtures through a mock fetch, so its tests run
against real gateway responses without a Python runtime.
"""

import json
import pathlib
import sys

ROOT = pathlib.Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT / "src"))
sys.path.insert(0, str(ROOT))

from fastapi.testclient import TestClient  # noqa: E402

from pepkit.clock import SimClock  # noqa: E402
from pepkit.cloud import CloudPlatform, ServiceRegistration  # noqa: E402
from pepkit.crypto.keys import ActorKeys  # noqa: E402
from pepkit.gateway.config import Reading  # noqa: E402
from pepkit.gateway.pep import Gateway  # noqa: E402
from pepkit.httpapi import build_gateway_app  # noqa: E402
from pepkit.pdl import MethodRef, parse  # noqa: E402
from pepkit.policy import generate_monitoring_spec, generate_policy  # noqa: E402
from pepkit.rng import DeterministicRandomSource  # noqa: E402
from pepkit.ttp import Ttp  # noqa: E402

OUT_DIR = ROOT / "frontend" / "tests" / "fixtures"

SCRIPT = {
    "Analysis.healthCritical": {"reads": ["Camera.recognizedPersons"], "calls": []},
    "Analysis.getPersonalizedAd": {"reads": ["Camera.recognizedPersons"], "calls": []},
}


def build_world():
    rng = DeterministicRandomSource(42)
    clock = SimClock(start=1_000)
    ttp = Ttp(ActorKeys.generate("ttp", "ttp", rng))
    platform_keys = ActorKeys.generate("platform", "platform", rng)
    cloud = CloudPlatform(
        platform_sign_secret=platform_keys.sign.secret,
        platform_sign_public=platform_keys.sign.public,
        ttp_sign_public=ttp.public_key,
        checkpoint_signer=ttp.checkpoint_signer(),
        clock=clock,
        rng=rng,
    )
    owner_keys = ActorKeys.generate("alice", "owner", rng)
    gateway = Gateway(
        keys=owner_keys, cloud=cloud, ttp_public=ttp.public_key,
        endpoint="cloudA", clock=clock, rng=rng,
    )
    service_keys = ActorKeys.generate("assisted-living", "service", rng)
    model_text = (ROOT / "fixtures" / "listing1.pdl").read_text(encoding="utf-8")
    model = parse(model_text, source_name="assisted-living")
    reg = ServiceRegistration(
        service_id="assisted-living",
        public_key=service_keys.box.public,
        model_text=model_text,
        policy=generate_policy(model, "assisted-living"),
        monitoring=generate_monitoring_spec(model, "assisted-living"),
        script=SCRIPT,
    )
    cloud.register_service(reg)
    cloud.host_service_key("assisted-living", service_keys.box.secret)
    verdict = ttp.audit_service(model, SCRIPT, audited_at=clock.now(), service_id="assisted-living")
    cloud.attach_verdict("assisted-living", verdict)
    for level in ("strict", "balanced", "permissive"):
        cloud.publish_preset(ttp.publish_default_config(level).to_obj())
    return gateway, cloud, clock


def main():
    gateway, cloud, clock = build_world()
    client = TestClient(build_gateway_app(gateway))
    transcript = []

    def record(name, method, path, body=None):
        response = getattr(client, method)(path, **({"json": body} if body is not None else {}))
        pair = {
            "name": name,
            "request": {"method": method.upper(), "path": path, "body": body},
            "response": {"status": response.status_code, "body": response.json()},
        }
        transcript.append(pair)
        (OUT_DIR / f"{name}.json").write_text(
            json.dumps(pair, indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
        return response.json()

    record("services", "get", "/services")
    record("policy", "get", "/policy/assisted-living")
    record("presets", "get", "/presets")
    record(
        "consent-preset-override",
        "post",
        "/consent/assisted-living",
        {"preset": "strict-v1", "overrides": {"Analysis.getPersonalizedAd": "use"}},
    )
    # the plain consent last: the log below must show a denied optional read
    record(
        "consent",
        "post",
        "/consent/assisted-living",
        {"selections": {"Analysis.getPersonalizedAd": "notUsed"}},
    )

    # traffic the monitor will log: one upload, one permitted read, one denial
    gateway.ingest(
        Reading(owner_id="alice", device_id="cam1", field_id="Camera.recognizedPersons",
                value="alice", timestamp=clock.now())
    )
    cloud.invoke_method("assisted-living", MethodRef.parse("Analysis.healthCritical"), "alice")
    cloud.invoke_method("assisted-living", MethodRef.parse("Analysis.getPersonalizedAd"), "alice")

    record("log", "get", "/log")
    record("config", "get", "/config")

    entries, _ = cloud.fetch_log("alice")
    meta = {
        "fetch_log_entry_count": len(entries),
        "owner_box_secret_b64": None,  # deliberately absent: secrets stay at the gateway
    }
    (OUT_DIR / "meta.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    (OUT_DIR / "transcript.json").write_text(
        json.dumps(transcript, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )

    # secret material that must never appear in any recorded traffic
    secrets = {
        "owner_box_secret": gateway.keys.box.secret.hex(),
        "owner_sign_secret": gateway.keys.sign.secret.hex(),
    }
    import base64

    secrets["owner_box_secret_b64"] = base64.b64encode(gateway.keys.box.secret).decode()
    secrets["owner_sign_secret_b64"] = base64.b64encode(gateway.keys.sign.secret).decode()
    epoch_key = gateway.keystore.get("Camera.recognizedPersons", 0)
    if epoch_key is not None:
        secrets["epoch_key_hex"] = epoch_key.key_material.hex()
        secrets["epoch_key_b64"] = base64.b64encode(epoch_key.key_material).decode()
    (OUT_DIR / "secret-material.json").write_text(
        json.dumps(secrets, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    print(f"captured {len(transcript)} fixtures to {OUT_DIR}")


if __name__ == "__main__":
    OUT_DIR.mkdir(parents=True, exist_ok=True)
    main()
