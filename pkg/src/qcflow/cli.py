"""Command-line surface: verification suites, pointwise operator values,
flow-line tracing, and gradient-flow runs.

Exit codes: 0 success, 1 verification failure, 2 usage or config error,
3 halted run. Reports and records are JSON with sorted keys; series go
to CSV; grids to flat binary snapshots.
"""

from __future__ import annotations

import json
import os
import sys

import click
import numpy as np

from . import gradientflow, maps, operators, tensor, verify
from .errors import ConfigError, GuardViolation, QcflowError, UnknownMap, UnknownSuite

EXIT_FAIL = 1
EXIT_USAGE = 2
EXIT_HALTED = 3


def _resolve_threads(threads: int | None) -> int:
    if threads is not None:
        return max(1, threads)
    env = os.environ.get("QCFLOW_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ConfigError(f"QCFLOW_THREADS must be an integer, got {env!r}")
    return 1


def _parse_params(pairs) -> dict:
    """Parse repeated key=value map parameters.

    Comma-separated values become float lists, bare integers stay ints,
    anything else that parses as float becomes float.
    """
    out = {}
    for pair in pairs:
        if "=" not in pair:
            raise ConfigError(f"parameter {pair!r} is not of the form key=value")
        key, raw = pair.split("=", 1)
        if "," in raw:
            out[key] = [float(v) for v in raw.split(",") if v != ""]
            continue
        try:
            out[key] = int(raw)
        except ValueError:
            try:
                out[key] = float(raw)
            except ValueError:
                out[key] = raw
    return out


def _parse_point(text: str) -> np.ndarray:
    try:
        return np.array([float(v) for v in text.split(",") if v != ""])
    except ValueError:
        raise ConfigError(f"point {text!r} is not a comma-separated float list")


def _fail_usage(exc: Exception) -> None:
    click.echo(f"error: {exc}", err=True)
    sys.exit(EXIT_USAGE)


@click.group()
def main() -> None:
    """Dilation analysis toolkit for quasiconformal maps."""


@main.command("verify")
@click.argument("suite")
@click.option("--seed", type=int, default=0, show_default=True, help="Master seed for case generators.")
@click.option("--out", type=click.Path(dir_okay=False), default=None, help="Write the JSON report here instead of stdout.")
@click.option("--tol", "tol_scale", type=float, default=1.0, show_default=True,
              help="Multiplier applied to every case tolerance.")
@click.option("--threads", type=int, default=None, help="Case workers; falls back to QCFLOW_THREADS, then 1.")
@click.option("--timing", is_flag=True, help="Embed wall time in the report (breaks byte-level determinism).")
def cmd_verify(suite: str, seed: int, out: str | None, tol_scale: float,
               threads: int | None, timing: bool) -> None:
    """Run one verification suite and emit a JSON report."""
    try:
        workers = _resolve_threads(threads)
        report = verify.run_suite(suite, seed=seed, tol_scale=tol_scale,
                                  threads=workers, timing=timing)
    except (UnknownSuite, ConfigError) as exc:
        _fail_usage(exc)
        return
    text = report.to_json()
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        click.echo(text, nl=False)
    if not timing:
        click.echo(f"{suite}: {report.payload['summary']['passed']}/"
                   f"{report.payload['summary']['total']} passed in {report.wall_time:.3f}s",
                   err=True)
    sys.exit(0 if report.passed else EXIT_FAIL)


@main.command("ops")
@click.argument("map_id")
@click.option("--param", "params", multiple=True, help="Map parameter key=value; repeatable.")
@click.option("--point", required=True, help="Comma-separated evaluation point.")
@click.option("--p", "p_power", type=float, default=2.0, show_default=True, help="Finite operator power.")
@click.option("--out", type=click.Path(dir_okay=False), default=None, help="Write the JSON record here instead of stdout.")
def cmd_ops(map_id: str, params, point: str, p_power: float, out: str | None) -> None:
    """Evaluate dilation, distortion, and both operators at one point."""
    try:
        mapping = maps.make_map(map_id, **_parse_params(params))
        x = _parse_point(point)
        jet = mapping.jet(x)
    except (UnknownMap, ConfigError, GuardViolation, ValueError) as exc:
        _fail_usage(exc)
        return
    report = tensor.analyze(jet.J)
    record = {
        "map": map_id,
        "point": [float(v) for v in x],
        "p": p_power,
        "K": float(report.K),
        "KSquared": float(report.K) ** 2,
        "detJ": float(np.linalg.det(jet.J)),
        "normSqJ": float(np.sum(jet.J * jet.J)),
        "Sg": [[float(v) for v in row] for row in report.Sg],
        "SgNormSq": float(report.SgNormSq),
        "conformal": bool(report.conformal),
        "lp": [float(v) for v in operators.lp_nondiv(jet, p_power)],
        "linfty": [float(v) for v in operators.linfty_factored(jet)],
    }
    text = json.dumps(record, sort_keys=True, indent=2) + "\n"
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        click.echo(text, nl=False)


@main.command("flowline")
@click.argument("map_id")
@click.option("--param", "params", multiple=True, help="Map parameter key=value; repeatable.")
@click.option("--x0", required=True, help="Comma-separated start point.")
@click.option("--ds", type=float, default=1e-3, show_default=True, help="Arc-length step.")
@click.option("--max-len", type=float, default=1.0, show_default=True, help="Arc-length budget.")
@click.option("--radius", type=float, default=1.0, show_default=True, help="Ball domain radius.")
@click.option("--out", type=click.Path(dir_okay=False), default=None, help="CSV path; stdout when omitted.")
def cmd_flowline(map_id: str, params, x0: str, ds: float, max_len: float,
                 radius: float, out: str | None) -> None:
    """Trace one flow line and write the sampled curve as CSV."""
    from . import flowlines

    try:
        mapping = maps.make_map(map_id, **_parse_params(params))
        start = _parse_point(x0)
        traj = flowlines.trace_flowline(
            mapping, start, ds=ds, max_len=max_len,
            domain=flowlines.ball_domain(radius=radius),
        )
    except (UnknownMap, ConfigError, GuardViolation, ValueError) as exc:
        _fail_usage(exc)
        return
    except QcflowError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_HALTED)
        return
    if out:
        traj.write_csv(out)
    else:
        click.echo(traj.to_csv_text(), nl=False)
    drift = float(np.max(np.abs(traj.K - traj.K[0])))
    switches = int(np.sum(traj.row[1:] != traj.row[:-1])) if len(traj) > 1 else 0
    status = "degenerate at start" if traj.terminated == "degenerate" and len(traj) == 1 else traj.terminated
    click.echo(
        f"status={status} samples={len(traj)} Kdrift={drift:.6e} rowSwitches={switches}",
        err=True,
    )


_FLOW_REQUIRED = {"map", "shape", "h", "p", "t_final"}
_FLOW_OPTIONAL = {"origin", "mode", "safety", "outer", "stats", "snapshots"}


def _load_flow_config(path: str) -> dict:
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc}")
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path!r} is not valid JSON: {exc}")
    if not isinstance(cfg, dict):
        raise ConfigError("config root must be a JSON object")
    missing = _FLOW_REQUIRED - cfg.keys()
    if missing:
        raise ConfigError(f"config missing keys: {', '.join(sorted(missing))}")
    unknown = cfg.keys() - _FLOW_REQUIRED - _FLOW_OPTIONAL
    if unknown:
        raise ConfigError(f"config has unknown keys: {', '.join(sorted(unknown))}")
    mp = cfg["map"]
    if not isinstance(mp, dict) or "id" not in mp:
        raise ConfigError("config map must be an object with an id")
    snaps = cfg.get("snapshots", {})
    if not isinstance(snaps, dict) or snaps.keys() - {"initial", "final"}:
        raise ConfigError("snapshots must be an object with keys initial and/or final")
    return cfg


@main.command("flow")
@click.argument("config", type=click.Path(dir_okay=False))
def cmd_flow(config: str) -> None:
    """Run a gradient-flow evolution described by a JSON config.

    The config carries the initial map, grid geometry, power, horizon,
    and output paths. Nothing is written unless the config validates and
    the grid builds; a halted run still writes its partial series.
    """
    try:
        cfg = _load_flow_config(config)
        mapping = maps.make_map(cfg["map"]["id"], **cfg["map"].get("params", {}))
        shape = tuple(int(v) for v in cfg["shape"])
        grid = gradientflow.make_grid(mapping, shape, float(cfg["h"]),
                                      origin=cfg.get("origin"))
        p_power = float(cfg["p"])
        t_final = float(cfg["t_final"])
        mode = cfg.get("mode", "explicit")
        if mode not in ("explicit", "picard"):
            raise ConfigError(f"unknown mode {mode!r}")
        safety = float(cfg.get("safety", gradientflow.DEFAULT_SAFETY))
        outer = int(cfg.get("outer", 3))
    except (ConfigError, UnknownMap, GuardViolation, QcflowError, ValueError, TypeError) as exc:
        _fail_usage(exc)
        return
    snaps = cfg.get("snapshots", {})
    if "initial" in snaps:
        gradientflow.write_snapshot(grid, snaps["initial"])
    stats = gradientflow.run_flow(grid, p_power, t_final, mode=mode,
                                  safety=safety, outer=outer)
    if "stats" in cfg:
        stats.write_csv(cfg["stats"])
    if "final" in snaps:
        gradientflow.write_snapshot(stats.final_grid, snaps["final"])
    summary = {
        "steps": len(stats.times) - 1,
        "energyFirst": stats.energy[0],
        "energyLast": stats.energy[-1],
        "minDetLast": stats.min_det[-1],
        "haltReason": stats.halt_reason,
    }
    click.echo(json.dumps(summary, sort_keys=True, indent=2))
    sys.exit(EXIT_HALTED if stats.halt_reason else 0)


if __name__ == "__main__":
    main()
