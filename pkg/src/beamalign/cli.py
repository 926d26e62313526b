"""Command-line client for the beamalign service.

Requests are served by the FastAPI app in-process unless ``--server`` points
at a running instance (`beamalign serve`).  Exit codes: 0 success, 1 config
error, 2 numerical-check failure, 3 I/O error.
"""

from __future__ import annotations

import argparse
import asyncio
import json
import sys
from pathlib import Path

import httpx

from .errors import ConfigError
from .experiments import grid_to_csv, render_rows_csv, render_rows_json

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_CHECK = 2
EXIT_IO = 3

_GRID_FILES = {
    "antenna_magnitude": "antenna_domain.csv",
    "wavenumber_magnitude": "wavenumber_domain.csv",
    "truncated_magnitude": "truncated_wavenumber.csv",
}


class _Parser(argparse.ArgumentParser):
    """argparse that reports usage problems as config errors (exit 1)."""

    def error(self, message):
        raise ConfigError(message)


def _request(path: str, payload: dict, server: str | None) -> dict:
    if server:
        response = httpx.post(server.rstrip("/") + path, json=payload, timeout=None)
    else:
        from .service import app

        async def call():
            transport = httpx.ASGITransport(app=app)
            async with httpx.AsyncClient(
                transport=transport, base_url="http://beamalign", timeout=None
            ) as client:
                return await client.post(path, json=payload)

        response = asyncio.run(call())
    if response.status_code in (400, 422):
        raise ConfigError(json.dumps(response.json().get("detail")))
    if response.status_code != 200:
        raise RuntimeError(f"service returned {response.status_code}: {response.text}")
    return response.json()


def _load_config_file(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"config file {path} must contain a JSON object")
    return data


def _apply_overrides(config: dict, args) -> dict:
    if args.seed is not None:
        config["seed"] = args.seed
    if args.repeats is not None:
        config["repeats"] = args.repeats
    if args.policy is not None:
        config["policies"] = [p.strip() for p in args.policy.split(",") if p.strip()]
    return config


def _emit(text: str, out: str | None):
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text, encoding="utf-8")


def _run_experiment_command(args, require_sweep: bool) -> int:
    config = _apply_overrides(_load_config_file(args.config), args)
    out = args.out if args.out is not None else config.pop("output_path", None)
    fmt = args.format if args.format is not None else config.pop("output_format", "csv")
    config.pop("output_path", None)
    config.pop("output_format", None)
    if require_sweep:
        if not config.get("sweep"):
            raise ConfigError("the sweep command needs a 'sweep' entry in the config file")
    else:
        config.pop("sweep", None)
    if fmt not in ("csv", "json"):
        raise ConfigError(f"format must be csv or json, got {fmt!r}")
    data = _request("/experiments/run", config, args.server)
    if fmt == "csv":
        text = render_rows_csv(data["base_seed"], data["config"], data["rows"])
    else:
        text = render_rows_json(data["base_seed"], data["config"], data["rows"])
    _emit(text, out)
    return EXIT_OK


def _dump_command(args, path: str) -> int:
    config = _load_config_file(args.config)
    for key in ("repeats", "policies", "sweep", "output_path", "output_format",
                "rounds", "use_wtm", "localization_error", "bs_learning_rate",
                "ue_learning_rate", "bs_power", "ue_power", "bs_noise_power",
                "ue_noise_power", "pilot_phase"):
        config.pop(key, None)
    if path == "/dumps/channel":
        if args.seed is not None:
            config["seed"] = args.seed
    else:
        config.pop("seed", None)
        config.pop("scatterer_count", None)
        config.pop("scatterer_variance", None)
    fmt = args.format or "csv"
    if fmt not in ("csv", "json"):
        raise ConfigError(f"format must be csv or json, got {fmt!r}")
    data = _request(path, config, args.server)
    if fmt == "json":
        _emit(json.dumps(data, sort_keys=True) + "\n", args.out)
        return EXIT_OK
    if args.out is None:
        raise ConfigError("csv grid dumps need --out pointing at a directory")
    directory = Path(args.out)
    directory.mkdir(parents=True, exist_ok=True)
    comments = [
        f"config: {json.dumps(data['config'], sort_keys=True)}",
        f"seed: {data['seed']}",
    ]
    for key, filename in _GRID_FILES.items():
        if key in data:
            (directory / filename).write_text(
                grid_to_csv(data[key], comments), encoding="utf-8"
            )
    index_lines = ["side,kind,index"]
    for side in ("bs", "ue"):
        for kind in ("full", "truncated"):
            for idx in data[f"{side}_{kind}_indices"]:
                index_lines.append(f"{side},{kind},{idx}")
    bounds = [
        f"# bs_bounds: {data['bs_bounds']}",
        f"# ue_bounds: {data['ue_bounds']}",
    ]
    (directory / "index_sets.csv").write_text(
        "\n".join(bounds + index_lines) + "\n", encoding="utf-8"
    )
    return EXIT_OK


def _check_gradients_command(args) -> int:
    payload = {}
    if args.seed is not None:
        payload["seed"] = args.seed
    data = _request("/checks/gradients", payload, args.server)
    status = "PASS" if data["passed"] else "FAIL"
    print(
        f"gradient check {status}: max relative error {data['max_relative_error']:.3e} "
        f"(threshold {data['threshold']:.1e}, {data['trials']} trials)"
    )
    return EXIT_OK if data["passed"] else EXIT_CHECK


def _serve_command(args) -> int:
    import uvicorn

    from .service import app

    uvicorn.run(app, host=args.host, port=args.port)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="beamalign", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, with_repeats=True):
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--seed", type=int, help="base seed override")
        if with_repeats:
            p.add_argument("--repeats", type=int, help="repetitions per point")
            p.add_argument("--policy", help="comma-separated policy list")
        p.add_argument("--out", help="output path")
        p.add_argument("--format", choices=["csv", "json"], help="output format")
        p.add_argument("--server", help="remote service URL (default: in-process)")

    common(sub.add_parser("run", help="single-point alignment experiment"))
    common(sub.add_parser("sweep", help="parameter sweep experiment"))
    common(sub.add_parser("dump-channel", help="channel magnitude grids"), with_repeats=False)
    common(sub.add_parser("dump-transform", help="index sets and projected grids"), with_repeats=False)
    check = sub.add_parser("check-gradients", help="finite-difference gradient check")
    check.add_argument("--seed", type=int, help="seed for the check suite")
    check.add_argument("--server", help="remote service URL (default: in-process)")
    serve = sub.add_parser("serve", help="start the HTTP service")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8000)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "run":
            return _run_experiment_command(args, require_sweep=False)
        if args.command == "sweep":
            return _run_experiment_command(args, require_sweep=True)
        if args.command == "dump-channel":
            return _dump_command(args, "/dumps/channel")
        if args.command == "dump-transform":
            return _dump_command(args, "/dumps/transform")
        if args.command == "check-gradients":
            return _check_gradients_command(args)
        if args.command == "serve":
            return _serve_command(args)
        raise ConfigError(f"unknown command {args.command!r}")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (OSError, httpx.TransportError) as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
