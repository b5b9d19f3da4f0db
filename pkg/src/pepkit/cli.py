"""Command-line entry points.

Exit codes: 0 success, 1 assertion/verification failure, 2 usage error.
Failures print machine-readable JSON to stderr.
"""

from __future__ import annotations

import json
import os
import sys
from pathlib import Path

import click

from . import __version__
from .encoding import b64d, b64e, canonical_json_file
from .pdl import PdlSyntaxError, parse, validate
from .policy import (
    generate_monitoring_spec,
    generate_policy,
    monitoring_file_text,
    policy_file_text,
    policy_from_obj,
    render_policy_text,
)


def _fail(code: str, message: str, exit_code: int = 1):
    click.echo(json.dumps({"error": code, "message": message}), err=True)
    sys.exit(exit_code)


@click.group()
@click.version_option(__version__)
def main():
    """Privacy enforcement toolkit: PDL compiler, gateway, cloud, auditor."""


# --- pdl ------------------------------------------------------------------------


@main.group()
def pdl():
    """Parse, validate, and compile PDL models."""


def _load_model(path: str):
    text = Path(path).read_text(encoding="utf-8")
    try:
        return parse(text, source_name=os.path.basename(path))
    except PdlSyntaxError as exc:
        _fail("syntax", str(exc))


@pdl.command("validate")
@click.argument("model_file", type=click.Path(exists=True))
def pdl_validate(model_file):
    """Exit 0 iff the model has no validation errors."""
    model = _load_model(model_file)
    report = validate(model)
    for finding in report.errors:
        click.echo(f"error {finding.code} {finding.location}: {finding.message}")
    for finding in report.warnings:
        click.echo(f"warning {finding.code} {finding.location}: {finding.message}")
    click.echo(f"{len(report.errors)} error(s), {len(report.warnings)} warning(s)")
    if report.errors:
        sys.exit(1)


@pdl.command("compile")
@click.argument("model_file", type=click.Path(exists=True))
@click.option("--policy", "policy_out", type=click.Path(), help="policy document output path")
@click.option("--monitor", "monitor_out", type=click.Path(), help="monitoring spec output path")
@click.option("--service-id", default=None, help="service id embedded in the outputs")
def pdl_compile(model_file, policy_out, monitor_out, service_id):
    """Derive the privacy policy and monitoring spec from a model."""
    model = _load_model(model_file)
    report = validate(model)
    if report.errors:
        _fail("invalid-model", "; ".join(f"{f.code} {f.location}" for f in report.errors))
    service_id = service_id or Path(model_file).stem
    doc = generate_policy(model, service_id)
    spec = generate_monitoring_spec(model, service_id)
    if policy_out:
        Path(policy_out).write_text(policy_file_text(doc), encoding="utf-8", newline="\n")
        click.echo(f"wrote {policy_out}")
    if monitor_out:
        Path(monitor_out).write_text(monitoring_file_text(spec), encoding="utf-8", newline="\n")
        click.echo(f"wrote {monitor_out}")
    if not policy_out and not monitor_out:
        click.echo(policy_file_text(doc), nl=False)


# --- policy -----------------------------------------------------------------------


@main.group()
def policy():
    """Work with generated policy documents."""


@policy.command("render")
@click.argument("policy_file", type=click.Path(exists=True))
def policy_render(policy_file):
    """Human-readable rendering of a policy JSON file."""
    obj = json.loads(Path(policy_file).read_text(encoding="utf-8"))
    click.echo(render_policy_text(policy_from_obj(obj)), nl=False)


# --- keys -------------------------------------------------------------------------


@main.group()
def keys():
    """Actor key material."""


@keys.command("gen")
@click.option("--role", "role", type=click.Choice(["owner", "service", "platform", "ttp", "asserter"]),
              required=True)
@click.option("--actor-id", default=None)
@click.option("--out", "out_path", type=click.Path(), default=None)
def keys_gen(role, actor_id, out_path):
    """Generate a signing + box keypair bundle for an actor."""
    from .crypto.keys import ActorKeys

    bundle = ActorKeys.generate(actor_id or role, role)
    text = canonical_json_file(bundle.to_json_obj())
    if out_path:
        Path(out_path).write_text(text, encoding="utf-8", newline="\n")
        click.echo(f"wrote {out_path}")
    else:
        click.echo(text, nl=False)


# --- scenario ------------------------------------------------------------------------


@main.group()
def scenario():
    """Deterministic end-to-end scenario runner."""


@scenario.command("run")
@click.argument("scenario_file", type=click.Path(exists=True))
@click.option("--report", "report_out", type=click.Path(), default=None)
def scenario_run(scenario_file, report_out):
    """Execute a scenario; exit 0 iff every expectation passes."""
    from .scenario import MalformedScenario, run_scenario_file

    try:
        report = run_scenario_file(scenario_file)
    except MalformedScenario as exc:
        _fail("malformed-scenario", str(exc), exit_code=2)
    text = report.to_text()
    if report_out:
        Path(report_out).write_text(text, encoding="utf-8", newline="\n")
    click.echo(text, nl=False)
    if not report.all_passed:
        sys.exit(1)


# --- log --------------------------------------------------------------------------


@main.group()
def log():
    """Access-log verification."""


@log.command("verify")
@click.argument("log_file", type=click.Path(exists=True))
@click.argument("checkpoint_file", type=click.Path(exists=True))
@click.option("--platform-key", required=True, help="base64 platform signing public key")
@click.option("--ttp-key", required=True, help="base64 TTP signing public key")
def log_verify(log_file, checkpoint_file, platform_key, ttp_key):
    """Verify chain hashes, signatures, and checkpoints of a stored log."""
    from .auditlog import verify_log_files

    report = verify_log_files(log_file, checkpoint_file, b64d(platform_key), b64d(ttp_key))
    if report.ok:
        click.echo("OK")
    else:
        click.echo(f"FAIL at index {report.failure_index}: {report.detail}")
        _fail("verification", f"failure at index {report.failure_index}: {report.detail}")


# --- audit ------------------------------------------------------------------------


@main.group()
def audit():
    """Trusted-third-party service audit."""


@audit.command("run")
@click.argument("model_file", type=click.Path(exists=True))
@click.argument("script_file", type=click.Path(exists=True))
@click.option("--rules", "rules_file", type=click.Path(exists=True), default=None,
              help="proposed emergency rules (JSON list)")
@click.option("--ttp-keys", "ttp_keys_file", type=click.Path(exists=True), default=None,
              help="TTP key bundle; generated fresh when omitted")
def audit_run(model_file, script_file, rules_file, ttp_keys_file):
    """Audit a script against its model; exit 0 on PASS, 1 on FAIL."""
    from .crypto.keys import ActorKeys
    from .pdl.validate import InvalidModel
    from .ttp import Ttp, trigger_from_obj

    model = _load_model(model_file)
    script = json.loads(Path(script_file).read_text(encoding="utf-8"))
    rules = []
    if rules_file:
        for obj in json.loads(Path(rules_file).read_text(encoding="utf-8")):
            rules.append({"rule_id": obj["rule_id"], "trigger": trigger_from_obj(obj["trigger"])})
    if ttp_keys_file:
        ttp = Ttp(ActorKeys.from_json_obj(json.loads(Path(ttp_keys_file).read_text(encoding="utf-8"))))
    else:
        ttp = Ttp(ActorKeys.generate("ttp", "ttp"))
    try:
        verdict = ttp.audit_service(model, script, rules, service_id=Path(model_file).stem)
    except InvalidModel as exc:
        _fail("invalid-model", str(exc))
    click.echo(
        canonical_json_file(
            {
                "service_id": verdict.service_id,
                "model_digest": verdict.model_digest,
                "result": verdict.result,
                "violations": [list(v) for v in verdict.violations],
                "signature": b64e(verdict.signature),
            }
        ),
        nl=False,
    )
    if verdict.result != "pass":
        sys.exit(1)


# --- servers ------------------------------------------------------------------------


@main.group()
def gateway():
    """Privacy enforcement point server."""


@gateway.command("run")
@click.option("--config", "config_file", type=click.Path(exists=True), required=True,
              help="gateway config JSON: owner_keys_file, cloud_url, ttp_public, endpoint, "
                   "local_store, keystore")
@click.option("--endpoint", default=None, help="override the configured upload endpoint")
@click.option("--listen", default=None, help="host:port (or env PEP_LISTEN)")
def gateway_run(config_file, endpoint, listen):
    """Serve the gateway HTTP API for one owner."""
    import uvicorn

    from .crypto.keys import ActorKeys
    from .httpapi import HttpCloudClient, build_gateway_app
    from .gateway.pep import Gateway

    cfg = json.loads(Path(config_file).read_text(encoding="utf-8"))
    listen = listen or os.environ.get("PEP_LISTEN") or cfg.get("listen", "127.0.0.1:8081")
    host, _, port = listen.partition(":")
    if "owner_keys" in cfg:
        keys = ActorKeys.from_json_obj(cfg["owner_keys"])
    else:
        keys = ActorKeys.from_json_obj(
            json.loads(Path(cfg["owner_keys_file"]).read_text(encoding="utf-8"))
        )
    keystore_path = cfg.get("keystore")
    master_secret = os.environ.get("PEP_MASTER_SECRET")
    if keystore_path and not master_secret:
        _fail("config", "keystore configured but PEP_MASTER_SECRET is not set", exit_code=2)
    gw = Gateway(
        keys=keys,
        cloud=HttpCloudClient(cfg["cloud_url"]),
        ttp_public=b64d(cfg["ttp_public"]),
        endpoint=endpoint or cfg.get("endpoint", "cloudA"),
        local_store_path=cfg.get("local_store"),
        keystore_path=keystore_path,
        master_secret=master_secret.encode("utf-8") if master_secret else None,
    )
    uvicorn.run(build_gateway_app(gw), host=host or "127.0.0.1", port=int(port or 8081))


@main.group()
def cloud():
    """Mock cloud platform server."""


@cloud.command("run")
@click.option("--keys", "keys_file", type=click.Path(exists=True), required=True,
              help="platform key bundle (keys --role platform)")
@click.option("--ttp-key", required=True, help="base64 TTP signing public key")
@click.option("--store", "store_path", type=click.Path(), default=None, help="embedded store file")
@click.option("--listen", default=None, help="host:port (or env CLOUD_LISTEN)")
def cloud_run(keys_file, ttp_key, store_path, listen):
    """Serve the cloud platform HTTP API."""
    import uvicorn

    from .cloud import CloudPlatform
    from .crypto.keys import ActorKeys
    from .httpapi import build_cloud_app

    listen = listen or os.environ.get("CLOUD_LISTEN", "127.0.0.1:8080")
    host, _, port = listen.partition(":")
    keys = ActorKeys.from_json_obj(json.loads(Path(keys_file).read_text(encoding="utf-8")))
    platform = CloudPlatform.load(
        store_path or "cloud-store.json",
        platform_sign_secret=keys.sign.secret,
        platform_sign_public=keys.sign.public,
        ttp_sign_public=b64d(ttp_key),
    )
    uvicorn.run(build_cloud_app(platform), host=host or "127.0.0.1", port=int(port or 8080))


if __name__ == "__main__":
    main()
