"""Command-line front end: a thin client of the analyzer service.

Every data command builds a request, sends it to the service (an in-process
instance by default, or a remote one via --server) and writes the response.
Exit codes: 0 success, 1 identity violation, 2 invalid input, 3 enumeration
or sampling budget exceeded.  Machine-readable error detail goes to stderr
as a single JSON object.
"""

from __future__ import annotations

import asyncio
import json
import sys

import click
import httpx

EXIT_IDENTITY_VIOLATION = 1
EXIT_INVALID_INPUT = 2
EXIT_BUDGET_EXCEEDED = 3


def _post(server: str | None, path: str, payload: dict) -> httpx.Response:
    if server:
        try:
            with httpx.Client(base_url=server, timeout=600.0) as client:
                return client.post(path, json=payload)
        except httpx.HTTPError as exc:
            _die(EXIT_INVALID_INPUT, "server_unreachable", str(exc))

    from .service.app import create_app

    async def go() -> httpx.Response:
        transport = httpx.ASGITransport(app=create_app())
        async with httpx.AsyncClient(transport=transport, base_url="http://infoflow.local", timeout=None) as client:
            return await client.post(path, json=payload)

    return asyncio.run(go())


def _die(code: int, tag: str, message) -> None:
    click.echo(json.dumps({"code": tag, "detail": message}, sort_keys=True), err=True)
    sys.exit(code)


def _check(response: httpx.Response) -> dict:
    if response.status_code == 200:
        return response.json()
    try:
        detail = response.json().get("detail")
    except ValueError:
        detail = response.text
    code_tag = detail.get("code") if isinstance(detail, dict) else None
    if code_tag == "budget_exceeded":
        _die(EXIT_BUDGET_EXCEEDED, "budget_exceeded", detail)
    _die(EXIT_INVALID_INPUT, code_tag or "invalid_input", detail)


def _read_system(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        _die(EXIT_INVALID_INPUT, "invalid_input", f"cannot read {path}: {exc}")
    except json.JSONDecodeError as exc:
        _die(EXIT_INVALID_INPUT, "invalid_input", f"{path} is not valid JSON: {exc}")


def _emit(text: str, output: str | None) -> None:
    if output:
        with open(output, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        click.echo(text, nl=not text.endswith("\n"))


def _dump(doc: dict) -> str:
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"


def _parse_params(pairs: tuple[str, ...]) -> dict[str, float]:
    params = {}
    for pair in pairs:
        if "=" not in pair:
            _die(EXIT_INVALID_INPUT, "invalid_input", f"--param expects key=value, got {pair!r}")
        key, _, raw = pair.partition("=")
        try:
            params[key.strip()] = float(raw)
        except ValueError:
            _die(EXIT_INVALID_INPUT, "invalid_input", f"--param {key}: {raw!r} is not a number")
    return params


server_option = click.option("--server", default=None, help="URL of a running service; in-process by default.")
budget_option = click.option("--budget", type=int, default=None, help="Override the enumeration budget.")
tolerance_option = click.option("--tolerance", type=float, default=1e-9, show_default=True, help="Residual tolerance.")
units_option = click.option(
    "--units", type=click.Choice(["bits", "nats"]), default="bits", show_default=True, help="Log base for all quantities."
)


@click.group()
def main() -> None:
    """Analyze information flow in state-dependent channels with noisy feedback."""


@main.command()
@click.option("--input", "-i", "input_path", required=True, type=click.Path(), help="System document (JSON).")
@budget_option
@server_option
def validate(input_path, budget, server):
    """Check a system document against every structural invariant."""
    body = _check(_post(server, "/validate", {"system": _read_system(input_path), "budget": budget}))
    click.echo(
        f"valid: horizon {body['horizon']}, {body['trajectory_count']} trajectories, "
        f"alphabets {body['alphabets']}"
    )


@main.command()
@click.option("--input", "-i", "input_path", required=True, type=click.Path(), help="System document (JSON).")
@click.option("--output", "-o", "output_path", default=None, type=click.Path(), help="Where to write the report JSON.")
@tolerance_option
@units_option
@budget_option
@server_option
def compute(input_path, output_path, tolerance, units, budget, server):
    """Compute the full identity report (including wall-clock duration)."""
    payload = {"system": _read_system(input_path), "tolerance": tolerance, "units": units, "budget": budget}
    body = _check(_post(server, "/compute", payload))
    _emit(_dump(body), output_path)


@main.command()
@click.option("--input", "-i", "input_path", required=True, type=click.Path(), help="System document (JSON).")
@click.option("--output", "-o", "output_path", default=None, type=click.Path(), help="Where to write the verdict JSON.")
@tolerance_option
@units_option
@budget_option
@server_option
def verify(input_path, output_path, tolerance, units, budget, server):
    """Verify the conservation law, its proof steps and applicable reductions.

    The verdict document is byte-identical across repeated runs on the same
    input; exit status 1 signals a residual above tolerance.
    """
    payload = {"system": _read_system(input_path), "tolerance": tolerance, "units": units, "budget": budget}
    body = _check(_post(server, "/verify", payload))
    _emit(_dump(body), output_path)
    if not body["passed"]:
        residuals = body["report"]["residuals"]
        _die(EXIT_IDENTITY_VIOLATION, "identity_violation", {"residuals": residuals, "tolerance": tolerance})


@main.command()
@click.option("--canonical", "name", required=True, help="Canonical system tag (e.g. bsc-bsc).")
@click.option("--param", "params", multiple=True, help="Fixed canonical parameter, key=value; repeatable.")
@click.option("--sweep", "axis", required=True, help="Swept parameter as name:start:stop:steps.")
@click.option("--output", "-o", "output_path", default=None, type=click.Path(), help="Where to write the CSV.")
@tolerance_option
@budget_option
@server_option
def sweep(name, params, axis, output_path, tolerance, budget, server):
    """Sweep one scalar parameter of a canonical system; emit per-point flow terms as CSV.

    Columns: param,lhs_bits,message_bits,cross_bits,feedback_bits,residual_bits
    (forward flow, message term, cross term, feedback term, conservation residual).
    """
    parts = axis.split(":")
    if len(parts) != 4:
        _die(EXIT_INVALID_INPUT, "invalid_input", f"--sweep expects name:start:stop:steps, got {axis!r}")
    try:
        axis_doc = {"param": parts[0], "start": float(parts[1]), "stop": float(parts[2]), "steps": int(parts[3])}
    except ValueError as exc:
        _die(EXIT_INVALID_INPUT, "invalid_input", f"--sweep {axis!r}: {exc}")
    payload = {
        "name": name,
        "params": _parse_params(params),
        "axis": axis_doc,
        "tolerance": tolerance,
        "budget": budget,
    }
    body = _check(_post(server, "/sweep", payload))
    _emit(body["csv"], output_path)


@main.command()
@click.option("--input", "-i", "input_path", default=None, type=click.Path(), help="System document (JSON).")
@click.option("--canonical", "name", default=None, help="Canonical system tag instead of --input.")
@click.option("--param", "params", multiple=True, help="Canonical parameter, key=value; repeatable.")
@click.option(
    "--quantity",
    default="directed_info",
    show_default=True,
    type=click.Choice(
        ["directed_info", "directed_info_causal", "message_info", "cross_term", "feedback_directed_info", "conservation_residual"]
    ),
    help="Quantity to estimate.",
)
@click.option("--samples", required=True, help="Comma-separated sample counts, e.g. 1000,10000,100000.")
@click.option("--seed", type=int, default=0, show_default=True, help="Sampling seed.")
@click.option("--output", "-o", "output_path", default=None, type=click.Path(), help="Where to write the CSV.")
@budget_option
@server_option
def sample(input_path, name, params, quantity, samples, seed, output_path, budget, server):
    """Monte Carlo convergence report against the exact value, as CSV.

    Columns: count,estimate_bits,std_error_bits,exact_bits,abs_error_bits.
    """
    try:
        counts = [int(c) for c in samples.split(",") if c.strip()]
    except ValueError:
        _die(EXIT_INVALID_INPUT, "invalid_input", f"--samples expects integers, got {samples!r}")
    payload = {
        "system": _read_system(input_path) if input_path else None,
        "canonical": name,
        "params": _parse_params(params),
        "quantity": quantity,
        "counts": counts,
        "seed": seed,
        "budget": budget,
    }
    body = _check(_post(server, "/sample", payload))
    _emit(body["csv"], output_path)


@main.command()
@click.option("--horizon", type=int, required=True, help="Number of channel uses.")
@click.option(
    "--sizes",
    default="2,2,2,2,2",
    show_default=True,
    help="Alphabet sizes as message,input,output,state,feedback.",
)
@click.option("--feedback-blind", is_flag=True, help="Encoder ignores the feedback track.")
@click.option("--state-blind", is_flag=True, help="Forward channel and encoder ignore the state track.")
@click.option("--noiseless-feedback", is_flag=True, help="Feedback copies the output exactly.")
@click.option("--seed", type=int, default=0, show_default=True, help="Generation seed.")
@click.option("--output", "-o", "output_path", default=None, type=click.Path(), help="Where to write the system JSON.")
@budget_option
@server_option
def generate(horizon, sizes, feedback_blind, state_blind, noiseless_feedback, seed, output_path, budget, server):
    """Generate a seeded random system and write its document."""
    try:
        message, input_size, output_size, state, feedback = (int(v) for v in sizes.split(","))
    except ValueError:
        _die(EXIT_INVALID_INPUT, "invalid_input", f"--sizes expects five integers, got {sizes!r}")
    payload = {
        "horizon": horizon,
        "alphabets": {
            "message": message,
            "input": input_size,
            "output": output_size,
            "state": state,
            "feedback": feedback,
        },
        "feedback_blind_encoder": feedback_blind,
        "state_blind": state_blind,
        "noiseless_feedback": noiseless_feedback,
        "seed": seed,
        "budget": budget,
    }
    body = _check(_post(server, "/generate", payload))
    _emit(_dump(body["system"]), output_path)


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8000, show_default=True)
def serve(host, port):
    """Run the analyzer service."""
    import uvicorn

    uvicorn.run("infoflow.service.app:app", host=host, port=port)


if __name__ == "__main__":
    main()
