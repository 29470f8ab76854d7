"""Command-line client for the service.

By default each command runs against the FastAPI app in-process; pass
``--server`` to talk to a remote deployment instead.  File handling stays on
the client side: instance and config files are read locally, result files
are written locally.
"""

from __future__ import annotations

import json
import os
import sys
from pathlib import Path

import click

from .harness import OUTPUT_DIR_ENV, ExperimentConfig


def _client(server: str | None):
    if server:
        import httpx

        return httpx.Client(base_url=server, timeout=None)
    from fastapi.testclient import TestClient

    from .service import app

    return TestClient(app)


def _read_json(path: str, what: str) -> dict:
    p = Path(path)
    if not p.exists():
        click.echo(f"error: {what} file not found: {path}", err=True)
        sys.exit(2)
    try:
        with open(p, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        click.echo(f"error: {what} file {path} is not valid JSON: {exc}", err=True)
        sys.exit(2)


def _post(client, url: str, payload: dict) -> dict:
    resp = client.post(url, json=payload)
    if resp.status_code != 200:
        try:
            detail = resp.json().get("detail", resp.text)
        except Exception:
            detail = resp.text
        click.echo(f"error: {detail}", err=True)
        sys.exit(2 if resp.status_code in (409, 422) else 1)
    return resp.json()


@click.group()
def main():
    """Constrained-bandit simulation and lower-bound tools."""


@main.command()
@click.option("--config", "config_path", required=True, help="Experiment config JSON.")
@click.option("--server", default=None, help="Remote service URL (default: in-process).")
def run(config_path: str, server: str | None):
    """Run replications and write raw.csv plus summary.json."""
    doc = _read_json(config_path, "config")
    try:
        config = ExperimentConfig.from_doc(doc)
    except (KeyError, ValueError) as exc:
        click.echo(f"error: invalid config {config_path}: {exc}", err=True)
        sys.exit(2)
    instance_doc = _read_json(config.instance_path, "instance")
    payload = {
        "instance": instance_doc,
        "instance_path": config.instance_path,
        "horizon": config.horizon,
        "replications": config.replications,
        "base_seed": config.base_seed,
        "n0": config.n0,
        "mean_floor": config.mean_floor,
        "checkpoints": list(config.checkpoints),
        "check_identity_every_block": config.check_identity_every_block,
    }
    with _client(server) as client:
        result = _post(client, "/run", payload)
    out = Path(os.environ.get(OUTPUT_DIR_ENV) or config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    raw_path = out / "raw.csv"
    raw_path.write_text(result["raw_csv"], encoding="utf-8", newline="")
    summary = result["summary"]
    summary["raw_csv"] = str(raw_path)
    summary_path = out / "summary.json"
    summary_path.write_text(
        json.dumps(summary, indent=2, sort_keys=True) + "\n", encoding="utf-8", newline=""
    )
    click.echo(f"wrote {raw_path} and {summary_path}")


@main.command("lower-bound")
@click.option("--instance", "instance_path", required=True, help="Instance JSON file.")
@click.option("--family", default=None, help="Expected family name (validated against the file).")
@click.option("--server", default=None, help="Remote service URL (default: in-process).")
def lower_bound(instance_path: str, family: str | None, server: str | None):
    """Print the lower-bound report for an instance as JSON."""
    doc = _read_json(instance_path, "instance")
    if family is not None and doc.get("family") != family:
        click.echo(
            f"error: instance {instance_path} declares family {doc.get('family')!r}, "
            f"not {family!r}",
            err=True,
        )
        sys.exit(2)
    with _client(server) as client:
        result = _post(client, "/lower-bound", {"instance": doc})
    click.echo(json.dumps(result, sort_keys=True))


@main.command("plot-data")
@click.option("--bundle", "bundle_path", required=True, help="summary.json from a run.")
@click.option("--out", "out_path", default=None, help="Write CSV here instead of stdout.")
@click.option("--server", default=None, help="Remote service URL (default: in-process).")
def plot_data(bundle_path: str, out_path: str | None, server: str | None):
    """Emit (n, avg_regret, M log n, regret/log n) CSV for plotting."""
    doc = _read_json(bundle_path, "bundle")
    with _client(server) as client:
        result = _post(client, "/plot-data", {"summary": doc})
    if out_path:
        Path(out_path).write_text(result["csv"], encoding="utf-8", newline="")
        click.echo(f"wrote {out_path}")
    else:
        click.echo(result["csv"], nl=False)


@main.command()
@click.option("--host", default="127.0.0.1")
@click.option("--port", default=8000, type=int)
def serve(host: str, port: int):
    """Start the HTTP service."""
    import uvicorn

    uvicorn.run("cbandits.service:app", host=host, port=port)


if __name__ == "__main__":
    main()
