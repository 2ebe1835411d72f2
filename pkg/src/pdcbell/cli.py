"""Command-line interface: a thin HTTP client for the service.

By default commands talk to an in-process instance of the app (no
server needed); pass --server URL to target a running instance.
"""
from __future__ import annotations

import json
import sys

import click
import httpx

from .pipeline import CSV_HEADER, rows_to_csv_text


def _client(server: str | None) -> httpx.Client:
    if server:
        return httpx.Client(base_url=server, timeout=600.0)
    # no server given: run requests against an in-process application
    from starlette.testclient import TestClient

    from .service import app

    return TestClient(app, raise_server_exceptions=False)


def _post(ctx, path: str, payload: dict) -> dict:
    with _client(ctx.obj["server"]) as client:
        resp = client.post(path, json=payload)
    if resp.status_code != 200:
        try:
            detail = resp.json().get("detail", resp.text)
        except Exception:
            detail = resp.text
        _die(ctx, detail if isinstance(detail, dict)
             else {"error": "http", "message": str(detail)})
    return resp.json()


def _die(ctx, error: dict):
    if ctx.obj.get("json_errors"):
        click.echo(json.dumps({"error": error}), err=True)
    else:
        msg = error.get("message", error) if isinstance(error, dict) else error
        click.echo(f"error: {msg}", err=True)
    sys.exit(1)


def _read_config(path) -> dict:
    allowed = {"pair_rate_R0", "eta_t", "eta_r", "state_visibility_V",
               "repetition_rate", "window_ns", "acquisitions",
               "acquisition_duration_s", "background_rate", "seed",
               "n", "workers", "nodes_per_axis"}
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    unknown = set(data) - allowed
    if unknown:
        raise click.ClickException(f"unknown config keys: {sorted(unknown)}")
    return data


def _read_records_csv(path) -> list[dict]:
    import csv as _csv

    with open(path, newline="", encoding="utf-8") as fh:
        reader = _csv.DictReader(fh)
        if reader.fieldnames is None or \
                [h.strip() for h in reader.fieldnames] != CSV_HEADER:
            raise click.ClickException(
                f"bad CSV header, expected {','.join(CSV_HEADER)}")
        rows = []
        for row in reader:
            rows.append({
                "angle_rad": float(row["angle_rad"]),
                "label": row["label"].strip(),
                "singles_t": int(row["singles_t"]),
                "singles_r": int(row["singles_r"]),
                "coincidences": int(row["coincidences"]),
                "valid_starts": int(row["valid_starts"]),
                "duration_s": float(row["duration_s"]),
            })
    return rows


@click.group()
@click.option("--server", default=None, metavar="URL",
              help="Target a running service instead of in-process calls.")
@click.option("--json-errors", is_flag=True,
              help="Emit machine-readable error JSON on stderr.")
@click.pass_context
def main(ctx, server, json_errors):
    """Fair-sampling-free local-realism test toolkit."""
    ctx.ensure_object(dict)
    ctx.obj["server"] = server
    ctx.obj["json_errors"] = json_errors


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True),
              required=True, help="JSON experiment configuration.")
@click.option("--out", "out_path", type=click.Path(), required=True,
              help="Destination records CSV.")
@click.option("--seed", type=int, default=None, help="Override config seed.")
@click.option("--workers", type=int, default=None)
@click.pass_context
def simulate(ctx, config_path, out_path, seed, workers):
    """Simulate the full scan protocol and write a records CSV."""
    data = _read_config(config_path)
    n = int(data.pop("n", 8))
    w = int(data.pop("workers", 1))
    data.pop("nodes_per_axis", None)
    if workers is not None:
        w = workers
    payload = {"config": data, "n": n, "workers": w}
    if seed is not None:
        payload["seed"] = seed
    result = _post(ctx, "/simulate", payload)
    csv_text = rows_to_csv_text(result["records"])
    with open(out_path, "w", encoding="utf-8", newline="") as fh:
        fh.write(csv_text)
    click.echo(f"wrote {len(result['records'])} records to {out_path}")


@main.command()
@click.option("--records", "records_path", type=click.Path(exists=True),
              required=True, help="Records CSV to analyze.")
@click.option("--eta", type=float, default=0.62, show_default=True,
              help="Detection efficiency used in the bounds.")
@click.option("--r-tot", type=float, default=None,
              help="Measured total rate for the CH statistic.")
@click.option("--report", "report_path", type=click.Path(), default=None,
              help="Write the JSON report here (default: stdout).")
@click.option("--plot-data", "plot_path", type=click.Path(), default=None,
              help="Additionally emit phi_rad,rate,sigma,model_rate CSV.")
@click.pass_context
def analyze(ctx, records_path, eta, r_tot, report_path, plot_path):
    """Analyze a records CSV into a full verdict report."""
    from .pipeline import file_digest

    try:
        rows = _read_records_csv(records_path)
    except click.ClickException:
        raise
    except Exception as exc:
        _die(ctx, {"error": type(exc).__name__, "message": str(exc)})
    payload = {"records": rows, "eta": eta,
               "provenance": {"input_sha256": file_digest(records_path)}}
    if r_tot is not None:
        payload["r_tot"] = r_tot
    report = _post(ctx, "/analyze", payload)
    text = json.dumps(report, indent=2)
    if report_path:
        with open(report_path, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
        click.echo(f"wrote report to {report_path}")
    else:
        click.echo(text)
    if plot_path:
        scan = report["scan"]
        fit = report["fit"]["subtracted"]
        lines = ["phi_rad,rate,sigma,model_rate"]
        import math

        for phi, rate, sigma in zip(scan["phi_rad"],
                                    scan["subtracted"]["rate"],
                                    scan["subtracted"]["sigma"]):
            model = fit["amplitude"] * math.cos(phi) ** 2 + fit["offset"]
            lines.append(f"{phi},{rate},{sigma},{model}")
        with open(plot_path, "w", encoding="utf-8") as fh:
            fh.write("\n".join(lines) + "\n")
        click.echo(f"wrote plot data to {plot_path}")


@main.command()
@click.option("--eta", type=float, required=True)
@click.option("--vb", type=float, default=None,
              help="Visibility V_B feeding the F bound.")
@click.option("--vb-sigma", type=float, default=0.0)
@click.option("--v", type=float, default=None,
              help="Fringe parameter V feeding the D bound.")
@click.option("--v-sigma", type=float, default=0.0)
@click.pass_context
def bounds(ctx, eta, vb, vb_sigma, v, v_sigma):
    """Evaluate the F and/or D bounds at a given efficiency."""
    payload = {"eta": eta}
    if vb is not None:
        payload["vb"] = {"value": vb, "sigma": vb_sigma}
    if v is not None:
        payload["v"] = {"value": v, "sigma": v_sigma}
    click.echo(json.dumps(_post(ctx, "/bounds", payload), indent=2))


@main.command()
@click.option("--va", type=float, required=True)
@click.option("--va-sigma", type=float, default=0.0)
@click.option("--vb", type=float, required=True)
@click.option("--vb-sigma", type=float, default=0.0)
@click.option("--eta", type=float, default=0.62, show_default=True)
@click.pass_context
def santos1(ctx, va, va_sigma, vb, vb_sigma, eta):
    """Visibility-ratio test from directly supplied visibilities."""
    payload = {"va": va, "va_sigma": va_sigma,
               "vb": vb, "vb_sigma": vb_sigma, "eta": eta}
    click.echo(json.dumps(_post(ctx, "/santos1", payload), indent=2))


@main.command(name="verify-lhv")
@click.option("--family", type=click.Choice(["one-tier", "two-tier"]),
              default="one-tier", show_default=True)
@click.option("--eta", "etas", type=float, multiple=True,
              help="Efficiencies to test (repeatable).")
@click.option("--models", type=int, default=200, show_default=True)
@click.option("--seed", "seed0", type=int, default=0, show_default=True)
@click.option("--nodes", type=int, default=256, show_default=True)
@click.pass_context
def verify_lhv(ctx, family, etas, models, seed0, nodes):
    """Sample admissible hidden-variable models and check the bounds."""
    payload = {"family": family, "models": models, "seed0": seed0,
               "nodes_per_axis": nodes}
    if etas:
        payload["etas"] = list(etas)
    result = _post(ctx, "/verify-lhv", payload)
    click.echo(json.dumps(result, indent=2))
    if not result["conforms"]:
        sys.exit(1)


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8000, show_default=True)
def serve(host, port):
    """Run the HTTP service."""
    import uvicorn

    uvicorn.run("pdcbell.service:app", host=host, port=port)


if __name__ == "__main__":
    main()
