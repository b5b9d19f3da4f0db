"""HTTP surfaces for the gateway and the cloud platform.

JSON bodies throughout; binary values base64. Domain errors map to 400/404
with {"error", "message"} bodies. The console talks only to the gateway,
which proxies cloud reads, so the owner's trust boundary stays at the PEP.
"""

from __future__ import annotations

import base64
from typing import Any, Optional

import httpx
from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .auditlog import AccessLogEntry, Checkpoint, LogPayload
from .cloud import (
    AadMismatch,
    CloudPlatform,
    DigestMismatch,
    UnknownMethod,
    UnknownService,
    UnknownScriptMethod,
    record_from_obj,
    record_to_obj,
    registration_from_obj,
    registration_to_obj,
    verdict_to_obj,
)
from .crypto import wire
from .crypto.envelope import KeyGrant
from .encoding import b64d, b64e
from .gateway.config import AnnotationLevel, EmptyRestrictionSet, EventRule, Reading
from .gateway.pep import Gateway, NoSuchConsent, ServiceNotAudited, UnknownPreset
from .gateway.triggers import BadSignature, ExternalAssertion, UnknownAsserter
from .pdl import MethodRef
from .policy import (
    MissingSelection,
    ResolvedConsent,
    UnknownSelection,
    consent_from_obj,
    consent_to_obj,
    policy_to_obj,
    render_policy_text,
)
from .ttp import trigger_from_obj

_BAD_REQUEST = (
    AadMismatch,
    BadSignature,
    DigestMismatch,
    EmptyRestrictionSet,
    MissingSelection,
    ServiceNotAudited,
    UnknownAsserter,
    UnknownScriptMethod,
    UnknownSelection,
    ValueError,
)
_NOT_FOUND = (UnknownService, UnknownMethod, NoSuchConsent, UnknownPreset, KeyError)


def _install_error_handlers(app: FastAPI) -> None:
    @app.exception_handler(Exception)
    async def _domain_errors(request: Request, exc: Exception):
        if isinstance(exc, _NOT_FOUND):
            status = 404
        elif isinstance(exc, _BAD_REQUEST):
            status = 400
        else:
            raise exc
        return JSONResponse(
            status_code=status, content={"error": type(exc).__name__, "message": str(exc)}
        )


# --- cloud app -----------------------------------------------------------------------


def build_cloud_app(platform: CloudPlatform) -> FastAPI:
    app = FastAPI(title="pepkit cloud", docs_url=None, redoc_url=None)
    _install_error_handlers(app)

    @app.post("/services")
    async def register_service(body: dict):
        service_id = platform.register_service(registration_from_obj(body))
        return {"service_id": service_id}

    @app.get("/services")
    async def list_services():
        return {
            "services": [
                {
                    "service_id": reg.service_id,
                    "policy": policy_to_obj(reg.policy),
                    "verdict": verdict_to_obj(reg.verdict),
                }
                for reg in platform.list_services()
            ]
        }

    @app.get("/services/{service_id}")
    async def get_service(service_id: str):
        return registration_to_obj(platform.get_service(service_id))

    @app.post("/records")
    async def store_record(body: dict):
        platform.store_record(record_from_obj(body))
        return {"ok": True}

    @app.post("/grants")
    async def store_grant(body: dict):
        platform.store_grant(wire.decode_key_grant(b64d(body["grant"])))
        return {"ok": True}

    @app.post("/consent-sync")
    async def consent_sync(body: dict):
        consent = consent_from_obj(body["consent"]) if body.get("consent") else None
        platform.sync_consent(body["owner_id"], body["service_id"], consent)
        return {"ok": True}

    @app.post("/owners")
    async def register_owner(body: dict):
        platform.register_owner(body["owner_id"], b64d(body["box_public"]))
        return {"ok": True}

    @app.post("/invoke/{service_id}/{method}")
    async def invoke(service_id: str, method: str, body: dict):
        result = platform.invoke_method(
            service_id, MethodRef.parse(method), body["owner_id"], body.get("selector")
        )
        return {
            "service_id": result.service_id,
            "method": result.method.qualified(),
            "outcomes": [
                {
                    "attribute": o.attribute,
                    "outcome": o.outcome,
                    "record_ids": list(o.record_ids),
                    "values": [[rid, b64e(pt)] for rid, pt in o.values],
                }
                for o in result.outcomes
            ],
        }

    @app.get("/log/{owner_id}")
    async def fetch_log(owner_id: str):
        entries, checkpoints = platform.fetch_log(owner_id)
        return {
            "entries": [e.to_line() for e in entries],
            "checkpoints": [cp.to_line() for cp in checkpoints],
        }

    @app.post("/log/{owner_id}/gateway-entry")
    async def gateway_entry(owner_id: str, body: dict):
        platform.append_gateway_log_entry(owner_id, LogPayload.from_obj(body["payload"]))
        return {"ok": True}

    @app.post("/log/{owner_id}/checkpoint")
    async def checkpoint(owner_id: str):
        cp = platform.checkpoint_log(owner_id)
        return {"checkpoint": cp.to_line()}

    @app.get("/ttp/keys")
    async def ttp_keys():
        return {
            "platform_public": b64e(platform.platform_public),
            "ttp_public": b64e(platform.ttp_public),
        }

    @app.get("/ttp/presets")
    async def ttp_presets():
        return {"presets": platform.get_presets()}

    @app.post("/ttp/presets")
    async def publish_preset(body: dict):
        platform.publish_preset(body["preset"])
        return {"ok": True}

    return app


# --- gateway app --------------------------------------------------------------------


def _decision_obj(decision) -> dict:
    obj: dict[str, Any] = {"kind": decision.kind}
    if decision.endpoint:
        obj["endpoint"] = decision.endpoint
    if decision.reason:
        obj["reason"] = decision.reason
    return obj


def _parse_value(value):
    if isinstance(value, dict) and "b64" in value:
        return base64.b64decode(value["b64"])
    return value


def build_gateway_app(gw: Gateway) -> FastAPI:
    app = FastAPI(title="pepkit gateway", docs_url=None, redoc_url=None)
    _install_error_handlers(app)

    @app.post("/ingest")
    async def ingest(body: dict):
        reading = Reading(
            owner_id=gw.owner_id,
            device_id=body["device_id"],
            field_id=body["field_id"],
            value=_parse_value(body["value"]),
            timestamp=int(body.get("timestamp", gw.clock.now())),
        )
        decision, record = gw.ingest(reading)
        return {
            "decision": _decision_obj(decision),
            "record_id": record.record_id if record else None,
        }

    @app.get("/config")
    async def get_config():
        cfg = gw.config
        return {
            "owner_id": cfg.owner_id,
            "endpoint": gw.endpoint,
            "rotation_period": cfg.rotation_period,
            "default_annotation_level": cfg.default_annotation_level.value,
            "derived_from_default": list(cfg.derived_from_default) if cfg.derived_from_default else None,
            "annotations": [
                {
                    "field_id": a.field_id,
                    "level": a.level.value,
                    "endpoints": sorted(a.endpoints),
                }
                for a in cfg.annotations
            ],
            "consents": [consent_to_obj(c) for c in cfg.consents],
            "event_rules": [
                {
                    "rule_id": r.rule_id,
                    "grantee": r.grantee,
                    "scope": sorted(r.scope),
                    "grant_duration": r.grant_duration,
                }
                for r in cfg.event_rules
            ],
        }

    @app.put("/config")
    async def put_config(body: dict):
        if body.get("apply_preset"):
            gw.apply_default_config_by_id(body["apply_preset"])
        for a in body.get("annotations", []):
            level = AnnotationLevel(a["level"])
            gw.set_annotation(a["field_id"], level, a.get("endpoints", ()))
        if "rotation_period" in body:
            gw.set_rotation_period(int(body["rotation_period"]))
        if "default_annotation_level" in body:
            gw.set_default_annotation_level(AnnotationLevel(body["default_annotation_level"]))
        for r in body.get("event_rules", []):
            gw.define_rule(
                EventRule(
                    rule_id=r["rule_id"],
                    grantee=r["grantee"],
                    scope=frozenset(r["scope"]),
                    trigger=trigger_from_obj(r["trigger"]),
                    grant_duration=int(r["grant_duration"]),
                )
            )
        return {"ok": True}

    @app.post("/consent/{service_id}")
    async def consent(service_id: str, body: dict):
        if body.get("preset"):
            overrides = {MethodRef.parse(k): v for k, v in body.get("overrides", {}).items()}
            resolved, grants = gw.consent_with_preset(service_id, body["preset"], overrides)
        else:
            selections = {MethodRef.parse(k): v for k, v in body.get("selections", {}).items()}
            resolved, grants = gw.apply_consent(service_id, selections)
        return {
            "service_id": service_id,
            "model_digest": resolved.model_digest,
            "granted_fields": sorted(g.field_id for g in grants),
            "enabled_methods": [m.qualified() for m in resolved.enabled_methods],
        }

    @app.delete("/consent/{service_id}")
    async def revoke(service_id: str):
        gw.revoke_consent(service_id)
        return {"ok": True}

    @app.post("/assertions")
    async def assertions(body: dict):
        assertion = ExternalAssertion(
            claim_id=body["claim_id"],
            subject_owner_id=body["subject_owner_id"],
            asserter_public=b64d(body["asserter_public"]),
            timestamp=int(body["timestamp"]),
            signature=b64d(body["signature"]),
        )
        grants = gw.submit_external_assertion(assertion)
        return {
            "issued": [
                {
                    "field_id": g.field_id,
                    "grantee": g.grantee_service_id,
                    "epochs": [g.epoch_lo, g.epoch_hi],
                    "expires_at": g.expires_at,
                    "rule_id": g.reason.rule_id,
                }
                for g in grants
            ]
        }

    @app.get("/services")
    async def services():
        out = []
        for reg in gw.cloud.list_services():
            out.append(
                {
                    "service_id": reg.service_id,
                    "policy": policy_to_obj(reg.policy),
                    "verdict": verdict_to_obj(reg.verdict),
                }
            )
        return {"services": out}

    @app.get("/policy/{service_id}")
    async def policy(service_id: str):
        reg = gw.cloud.get_service(service_id)
        return {
            "service_id": service_id,
            "policy": policy_to_obj(reg.policy),
            "rendered": render_policy_text(reg.policy),
            "verdict": verdict_to_obj(reg.verdict),
        }

    @app.get("/log")
    async def log_view():
        payloads, report = gw.fetch_decrypted_log()
        return {
            "verification": {
                "ok": report.ok,
                "failure_index": report.failure_index,
                "detail": report.detail,
            },
            "entries": [p.to_obj() for p in payloads],
        }

    @app.get("/presets")
    async def presets():
        return {"presets": [p.to_obj() for p in gw.fetch_presets()]}

    @app.post("/rotate")
    async def rotate():
        return {"rotated": gw.rotate_epochs()}

    return app


# --- HTTP client used by a gateway process to reach the cloud --------------------------


class HttpCloudClient:
    """Implements the gateway-facing cloud interface over HTTP."""

    def __init__(self, base_url: str, client: Optional[httpx.Client] = None):
        self._http = client or httpx.Client(base_url=base_url, timeout=10.0)
        self._platform_public: Optional[bytes] = None

    def _check(self, response: httpx.Response) -> dict:
        if response.status_code >= 400:
            body = response.json()
            raise _remote_error(body.get("error", "HTTPError"), body.get("message", ""))
        return response.json()

    @property
    def platform_public(self) -> bytes:
        if self._platform_public is None:
            body = self._check(self._http.get("/ttp/keys"))
            self._platform_public = b64d(body["platform_public"])
        return self._platform_public

    def register_owner(self, owner_id: str, box_public: bytes) -> None:
        self._check(self._http.post("/owners", json={"owner_id": owner_id, "box_public": b64e(box_public)}))

    def get_service(self, service_id: str):
        return registration_from_obj(self._check(self._http.get(f"/services/{service_id}")))

    def list_services(self):
        body = self._check(self._http.get("/services"))
        return [self.get_service(item["service_id"]) for item in body["services"]]

    def store_record(self, record) -> None:
        self._check(self._http.post("/records", json=record_to_obj(record)))

    def store_grant(self, grant: KeyGrant) -> None:
        self._check(self._http.post("/grants", json={"grant": b64e(wire.encode_key_grant(grant))}))

    def sync_consent(self, owner_id: str, service_id: str, consent: Optional[ResolvedConsent]) -> None:
        self._check(
            self._http.post(
                "/consent-sync",
                json={
                    "owner_id": owner_id,
                    "service_id": service_id,
                    "consent": consent_to_obj(consent) if consent else None,
                },
            )
        )

    def append_gateway_log_entry(self, owner_id: str, payload: LogPayload) -> None:
        self._check(
            self._http.post(f"/log/{owner_id}/gateway-entry", json={"payload": payload.to_obj()})
        )

    def fetch_log(self, owner_id: str):
        body = self._check(self._http.get(f"/log/{owner_id}"))
        entries = [AccessLogEntry.from_line(line) for line in body["entries"]]
        checkpoints = [Checkpoint.from_line(line) for line in body["checkpoints"]]
        return entries, checkpoints

    def get_presets(self) -> list[dict]:
        return self._check(self._http.get("/ttp/presets"))["presets"]


def _remote_error(name: str, message: str) -> Exception:
    table = {
        "UnknownService": UnknownService,
        "UnknownMethod": UnknownMethod,
        "ServiceNotAudited": ServiceNotAudited,
        "MissingSelection": MissingSelection,
        "UnknownSelection": UnknownSelection,
        "NoSuchConsent": NoSuchConsent,
        "DigestMismatch": DigestMismatch,
        "UnknownScriptMethod": UnknownScriptMethod,
        "AadMismatch": AadMismatch,
        "BadSignature": BadSignature,
        "UnknownAsserter": UnknownAsserter,
    }
    return table.get(name, RuntimeError)(message)
