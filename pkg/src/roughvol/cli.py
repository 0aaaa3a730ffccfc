"""Command-line front end for kernel, Riccati, pricing, and simulation runs.

The CLI is a thin HTTP client over the service module.  By default every
command runs against an in-process ASGI transport, so no server needs to
be running; --server points the same commands at a remote instance.

Configuration is a single JSON document.  The packaged defaults
reproduce the benchmark setting (lambda=0.3, rho=-0.7, nu=0.3, H=0.1,
V0=0.02, theta=0.02, T=1); a --config file is merged over the defaults,
and repeated --set key=value flags override individual entries, with
dotted keys for nesting and values parsed as JSON when possible.

Every command writes its outputs under the configured output directory,
echoes the resolved configuration into each JSON output, and prints the
written paths.  Exit status is 0 when all outputs were written, 2 on
configuration errors, 1 otherwise.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from importlib import resources
from pathlib import Path

import httpx

_EXIT_CONFIG = 2


class ConfigError(Exception):
    """Invalid configuration, bad override, or a request the service rejected."""


def _load_defaults() -> dict:
    with resources.files("roughvol").joinpath("data/defaults.json").open("rb") as fh:
        return json.load(fh)


def _merge(base: dict, overlay: dict) -> dict:
    out = dict(base)
    for key, value in overlay.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], value)
        else:
            out[key] = value
    return out


def _parse_set(item: str) -> tuple[str, object]:
    key, sep, raw = item.partition("=")
    if not sep or not key:
        raise ConfigError(f"--set expects key=value, got {item!r}")
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return key, value


def _set_path(config: dict, dotted: str, value: object) -> None:
    parts = dotted.split(".")
    node = config
    for part in parts[:-1]:
        if not isinstance(node.get(part), dict):
            node[part] = {}
        node = node[part]
    node[parts[-1]] = value


def _resolve_config(args: argparse.Namespace) -> dict:
    config = _load_defaults()
    if args.config is not None:
        try:
            with open(args.config, "rb") as fh:
                user = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config file: {exc}")
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file is not valid JSON: {exc}")
        if not isinstance(user, dict):
            raise ConfigError("config file must hold a JSON object")
        config = _merge(config, user)
    for item in args.set:
        key, value = _parse_set(item)
        _set_path(config, key, value)
    if args.out is not None:
        config["output_dir"] = args.out
    if args.seed is not None:
        _set_path(config, "simulation.seed", args.seed)
    return config


def _client(server: str | None) -> httpx.Client:
    if server:
        return httpx.Client(base_url=server, timeout=600.0)
    # in-process mode: drive the ASGI app synchronously without a socket
    import warnings

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        from starlette.testclient import TestClient

    from .service import app

    return TestClient(app, base_url="http://service.local", raise_server_exceptions=False)


def _post(client: httpx.Client, path: str, body: dict) -> dict:
    resp = client.post(path, json=body)
    if resp.status_code in (400, 422):
        try:
            detail = resp.json()["detail"]
        except (ValueError, KeyError):
            detail = resp.text
        raise ConfigError(f"{path} rejected the request: {detail}")
    if resp.status_code != 200:
        raise RuntimeError(f"{path} failed with status {resp.status_code}: {resp.text}")
    return resp.json()


def _section(config: dict, name: str) -> dict:
    value = config.get(name)
    if not isinstance(value, dict):
        raise ConfigError(f"config section {name!r} is missing or not an object")
    return value


def _kernel_spec(config: dict) -> dict:
    kc = _section(config, "kernel")
    choice = kc.get("choice", "uniform_optimal")
    spec = {"choice": choice, "n": kc.get("n", 20)}
    if choice == "explicit":
        partition_file = kc.get("partition_file")
        if not partition_file:
            raise ConfigError("kernel.choice explicit requires kernel.partition_file")
        try:
            with open(partition_file, "rb") as fh:
                spec["partition"] = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read partition file: {exc}")
        except json.JSONDecodeError as exc:
            raise ConfigError(f"partition file is not valid JSON: {exc}")
    return spec


def _write_json(path: Path, payload: dict) -> Path:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    return path


def _write_text(path: Path, text: str) -> Path:
    path.write_text(text)
    return path


def cmd_kernel(config: dict, client: httpx.Client, out_dir: Path, args) -> list[Path]:
    kc = _section(config, "kernel")
    spec = _kernel_spec(config)
    if spec["choice"] == "explicit":
        counts = [len(spec["partition"].get("etas", [0, 0])) - 1]
    else:
        counts = kc.get("factor_counts") or [spec["n"]]
    body = {
        "model": _section(config, "model"),
        "choice": spec["choice"],
        "factor_counts": counts,
        "partition": spec.get("partition"),
    }
    resp = _post(client, "/kernel", body)
    written = []
    for entry in resp["kernels"]:
        payload = dict(entry)
        payload["run_config"] = config
        payload["config"] = resp["config"]
        written.append(_write_json(out_dir / f"kernel_n{entry['n']}.json", payload))
    written.append(_write_text(out_dir / "kernels_summary.csv", resp["summary_csv"]))
    return written


def cmd_riccati(config: dict, client: httpx.Client, out_dir: Path, args) -> list[Path]:
    rc = _section(config, "riccati")
    body = {
        "model": _section(config, "model"),
        "choice": rc.get("choice", "uniform_optimal"),
        "factor_counts": rc.get("factor_counts", [10, 20, 50, 100, 500]),
        "b_grid": rc.get("b_grid", {"start": 1.0, "stop": 30.0, "count": 30}),
        "maturity": rc.get("maturity", 1.0),
        "steps": rc.get("steps", 200),
    }
    resp = _post(client, "/riccati", body)
    written = [
        _write_text(out_dir / "riccati_report.csv", resp["csv"]),
        _write_json(
            out_dir / "riccati_report.json",
            {"run_config": config, "config": resp["config"], "rows": resp["rows"]},
        ),
    ]
    return written


def _pricing_body(config: dict) -> dict:
    pc = _section(config, "pricing")
    return {
        "model": _section(config, "model"),
        "kernel": _kernel_spec(config),
        "maturity": pc.get("maturity", 1.0),
        "steps": pc.get("steps", 200),
        "integration": pc.get("integration", {}),
    }


def cmd_price(config: dict, client: httpx.Client, out_dir: Path, args) -> list[Path]:
    body = _pricing_body(config)
    body["k"] = _section(config, "pricing").get("k", 0.0)
    resp = _post(client, "/price", body)
    resp["run_config"] = config
    return [_write_json(out_dir / "price.json", resp)]


def cmd_smile(config: dict, client: httpx.Client, out_dir: Path, args) -> list[Path]:
    body = _pricing_body(config)
    body["k_grid"] = _section(config, "pricing").get(
        "k_grid", {"start": -0.4, "stop": 0.4, "count": 17}
    )
    resp = _post(client, "/smile", body)
    written = [
        _write_text(out_dir / "smile_fractional.csv", resp["fractional"]["csv"]),
        _write_text(out_dir / "smile_multifactor.csv", resp["multifactor"]["csv"]),
        _write_text(out_dir / "smile_diff.csv", resp["diff_csv"]),
        _write_json(
            out_dir / "smile.json",
            {
                "run_config": config,
                "config": resp["config"],
                "fractional": resp["fractional"]["points"],
                "multifactor": resp["multifactor"]["points"],
            },
        ),
    ]
    return written


def cmd_simulate(config: dict, client: httpx.Client, out_dir: Path, args) -> list[Path]:
    sim = _section(config, "simulate")
    body = {
        "model": _section(config, "model"),
        "kernel": _kernel_spec(config),
        "simulation": _section(config, "simulation"),
        "strikes": sim.get("strikes", [0.0]),
        "threads": args.threads,
        "include_paths": bool(sim.get("write_paths", False)),
    }
    resp = _post(client, "/simulate", body)
    spots_csv = resp.pop("terminal_spots_csv", None)
    resp["run_config"] = config
    written = [_write_json(out_dir / "simulate_summary.json", resp)]
    if spots_csv is not None:
        written.append(_write_text(out_dir / "terminal_spots.csv", spots_csv))
    return written


def cmd_bench(config: dict, client: httpx.Client, out_dir: Path, args) -> list[Path]:
    bc = _section(config, "bench")
    body = {
        "model": _section(config, "model"),
        "steps_grid": bc.get("steps_grid", [100, 200, 400, 800]),
        "factor_counts": bc.get("factor_counts", [20, 100, 500]),
        "z_batch": bc.get("z_batch", 256),
        "repeats": bc.get("repeats", 3),
    }
    resp = _post(client, "/bench", body)
    written = [
        _write_text(out_dir / "bench.csv", resp["csv"]),
        _write_json(
            out_dir / "bench.json",
            {
                "run_config": config,
                "config": resp["config"],
                "rows": resp["rows"],
                "ratios": resp["ratios"],
            },
        ),
    ]
    return written


_COMMANDS = {
    "kernel": cmd_kernel,
    "riccati": cmd_riccati,
    "price": cmd_price,
    "smile": cmd_smile,
    "simulate": cmd_simulate,
    "bench": cmd_bench,
}

_HELP = {
    "kernel": "build exponential-sum kernels and write errors and bounds per factor count",
    "riccati": "solver error report over the b-grid, written as CSV",
    "price": "one call price from both solvers at a single log-strike",
    "smile": "implied volatility smiles from both solvers plus difference columns",
    "simulate": "Monte Carlo run with call prices, standard errors, and diagnostics",
    "bench": "runtime table for both solvers over steps and factor counts",
}


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file merged over the packaged defaults")
    common.add_argument(
        "--set",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="override one config entry; dotted keys nest, values parse as JSON",
    )
    common.add_argument("--out", help="output directory (overrides output_dir)")
    common.add_argument("--server", help="base URL of a running service; default runs in process")
    common.add_argument(
        "--threads",
        type=int,
        default=os.cpu_count() or 1,
        help="worker threads for simulation (default: available cores)",
    )
    common.add_argument("--seed", type=int, help="override simulation.seed")

    parser = argparse.ArgumentParser(
        prog="roughvol",
        description="multi-factor approximation of rough volatility: kernels, solvers, pricing, simulation",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        sub.add_parser(name, parents=[common], help=_HELP[name])
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        config = _resolve_config(args)
        out_value = config.get("output_dir")
        if not isinstance(out_value, str) or not out_value:
            raise ConfigError("output_dir must be a non-empty string")
        out_dir = Path(out_value)
        out_dir.mkdir(parents=True, exist_ok=True)
        with _client(args.server) as client:
            written = _COMMANDS[args.command](config, client, out_dir, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return _EXIT_CONFIG
    except httpx.HTTPError as exc:
        print(f"request error: {exc}", file=sys.stderr)
        return 1
    except (RuntimeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    for path in written:
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
