#!/usr/bin/env python3
"""End-to-end demo over real HTTP.

Boots the cloud and a gateway on localhost, registers the assisted-living
service from the bundled fixture, walks the consent flow, uploads a reading,
invokes the service, and prints the owner's decrypted access log.

Usage: python scripts/demo_http.py [--cloud-port 8080] [--gateway-port 8081]
"""

import argparse
import json
import pathlib
import sys
import threading
import time

import httpx
import uvicorn

ROOT = pathlib.Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT / "src"))

from pepkit.cloud import CloudPlatform, ServiceRegistration, registration_to_obj  # noqa: E402
from pepkit.crypto.keys import ActorKeys  # noqa: E402
from pepkit.gateway.pep import Gateway  # noqa: E402
from pepkit.httpapi import HttpCloudClient, build_cloud_app, build_gateway_app  # noqa: E402
from pepkit.pdl import parse  # noqa: E402
from pepkit.policy import generate_monitoring_spec, generate_policy  # noqa: E402
from pepkit.ttp import Ttp  # noqa: E402


def serve(app, port):
    config = uvicorn.Config(app, host="127.0.0.1", port=port, log_level="warning")
    server = uvicorn.Server(config)
    thread = threading.Thread(target=server.run, daemon=True)
    thread.start()
    deadline = time.time() + 10
    while not server.started:
        if time.time() > deadline:
            raise RuntimeError(f"server on :{port} did not start")
        time.sleep(0.05)
    return server


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--cloud-port", type=int, default=8080)
    parser.add_argument("--gateway-port", type=int, default=8081)
    args = parser.parse_args()

    ttp = Ttp(ActorKeys.generate("ttp", "ttp"))
    platform_keys = ActorKeys.generate("platform", "platform")
    platform = CloudPlatform(
        platform_sign_secret=platform_keys.sign.secret,
        platform_sign_public=platform_keys.sign.public,
        ttp_sign_public=ttp.public_key,
        checkpoint_signer=ttp.checkpoint_signer(),
    )
    for level in ("strict", "balanced", "permissive"):
        platform.publish_preset(ttp.publish_default_config(level).to_obj())
    cloud_server = serve(build_cloud_app(platform), args.cloud_port)
    cloud_url = f"http://127.0.0.1:{args.cloud_port}"
    print(f"cloud listening on {cloud_url}")

    model_text = (ROOT / "fixtures" / "listing1.pdl").read_text(encoding="utf-8")
    model = parse(model_text)
    service_keys = ActorKeys.generate("assisted-living", "service")
    script = {
        "Analysis.healthCritical": {"reads": ["Camera.recognizedPersons"], "calls": []},
        "Analysis.getPersonalizedAd": {"reads": ["Camera.recognizedPersons"], "calls": []},
    }
    reg = ServiceRegistration(
        service_id="assisted-living",
        public_key=service_keys.box.public,
        model_text=model_text,
        policy=generate_policy(model, "assisted-living"),
        monitoring=generate_monitoring_spec(model, "assisted-living"),
        script=script,
        verdict=ttp.audit_service(model, script, service_id="assisted-living"),
    )
    httpx.post(f"{cloud_url}/services", json=registration_to_obj(reg)).raise_for_status()
    platform.host_service_key("assisted-living", service_keys.box.secret)
    print("service registered with a PASS verdict")

    owner_keys = ActorKeys.generate("alice", "owner")
    gateway = Gateway(
        keys=owner_keys,
        cloud=HttpCloudClient(cloud_url),
        ttp_public=ttp.public_key,
        endpoint="cloudA",
    )
    gateway_server = serve(build_gateway_app(gateway), args.gateway_port)
    gateway_url = f"http://127.0.0.1:{args.gateway_port}"
    print(f"gateway listening on {gateway_url}")

    with httpx.Client(base_url=gateway_url) as client:
        services = client.get("/services").json()["services"]
        print(f"listed services: {[s['service_id'] for s in services]}")
        policy = client.get("/policy/assisted-living").json()
        print("--- rendered policy ---")
        print(policy["rendered"])
        consent = client.post(
            "/consent/assisted-living",
            json={"selections": {"Analysis.getPersonalizedAd": "notUsed"}},
        ).json()
        print(f"consent granted fields: {consent['granted_fields']}")
        client.put("/config", json={"annotations": [
            {"field_id": "Camera.stream", "level": "local_only"}]}).raise_for_status()
        for field, value in (
            ("Camera.recognizedPersons", "alice"),
            ("Camera.stream", {"b64": "ZnJhbWU="}),
        ):
            decision = client.post(
                "/ingest", json={"device_id": "cam1", "field_id": field, "value": value}
            ).json()
            print(f"ingest {field}: {decision['decision']['kind']}")

    invocation = httpx.post(
        f"{cloud_url}/invoke/assisted-living/Analysis.healthCritical",
        json={"owner_id": "alice"},
    ).json()
    print(f"invocation outcomes: {[(o['attribute'], o['outcome']) for o in invocation['outcomes']]}")

    with httpx.Client(base_url=gateway_url) as client:
        log_view = client.get("/log").json()
        print(f"log verification ok: {log_view['verification']['ok']}")
        for entry in log_view["entries"]:
            print(
                f"  t={entry['timestamp']} {entry['service_id']} {entry['method']} "
                f"{entry['attribute']} [{entry['outcome']}] purpose={entry['purpose']!r}"
            )

    cloud_server.should_exit = True
    gateway_server.should_exit = True
    time.sleep(0.2)
    print("demo complete")


if __name__ == "__main__":
    main()
