"""Command-line front end.

Every run echoes its fully resolved configuration into the output (a
"config" object for JSON, leading '#' comment lines for CSV) so results are
reproducible from the artifact alone.  Exit codes: 0 success, 1 numeric
failure or oracle violation, 2 configuration error (with a JSON diagnostic
on stderr).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from typing import Optional

import numpy as np

from . import __version__
from .compliance import compliance_report
from .levels import optimal_weights, sweep_levels
from .models import Levels, LowRankSym, ModelSet, NumericalError, Sparse, model_to_obj
from .montecarlo import estimate_anu, estimate_au, experiment_3d_1sparse
from .parallel import resolve_workers
from .regularizers import LevelsL1, Nuclear, Regularizer, WeightedL1, reg_from_obj, reg_to_obj
from .validation import run_battery

SWEEP_COLUMNS = ["k1", "k2", "nu1_star", "ratio", "delta_nec", "c1", "c2"]
EXPERIMENT_COLUMNS = ["r2", "r3", "estimate", "ci_low", "ci_high", "rank"]


class _ConfigError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # machine-readable diagnostics instead of usage text
        raise _ConfigError(message)


def _parse_kv(spec: str, prefix: str) -> dict:
    body = spec[len(prefix) :]
    out = {}
    for item in body.split(","):
        if "=" not in item:
            raise _ConfigError(f"malformed field {item!r} in {spec!r}")
        key, val = item.split("=", 1)
        out[key.strip()] = int(val)
    return out


def parse_model(spec: str) -> ModelSet:
    try:
        if spec.startswith("sparse:"):
            kv = _parse_kv(spec, "sparse:")
            return Sparse(kv["k"], kv["n"])
        if spec.startswith("lowrank:"):
            kv = _parse_kv(spec, "lowrank:")
            return LowRankSym(kv["r"], kv["n"])
        if spec.startswith("levels:"):
            kv = _parse_kv(spec, "levels:")
            return Levels(kv["k1"], kv["k2"], kv["n1"], kv["n2"])
    except (KeyError, ValueError) as exc:
        raise _ConfigError(f"invalid model spec {spec!r}: {exc}") from exc
    raise _ConfigError(f"unknown model spec {spec!r} (sparse:/lowrank:/levels:)")


def parse_reg(spec: str, model: ModelSet) -> Regularizer:
    try:
        if spec == "l1":
            if isinstance(model, Sparse):
                return WeightedL1(np.ones(model.n))
            raise _ConfigError("'l1' applies to sparse models; use nuclear or levels_l1")
        if spec == "nuclear":
            return Nuclear()
        if spec.startswith("wl1:"):
            weights = np.array([float(x) for x in spec[4:].split(",")])
            return WeightedL1(weights)
        if spec.startswith("levels_l1:"):
            kv = {}
            for item in spec[len("levels_l1:") :].split(","):
                key, val = item.split("=", 1)
                kv[key.strip()] = float(val)
            if not isinstance(model, Levels):
                raise _ConfigError("levels_l1 applies to levels models")
            return LevelsL1(kv["w1"], kv["w2"], model.n1, model.n2)
        if spec.startswith("json:"):
            with open(spec[5:], encoding="utf-8") as fh:
                return reg_from_obj(json.load(fh))
    except _ConfigError:
        raise
    except (KeyError, ValueError, OSError) as exc:
        raise _ConfigError(f"invalid regularizer spec {spec!r}: {exc}") from exc
    raise _ConfigError(f"unknown regularizer spec {spec!r}")


def _resolve_seed(value: Optional[int]) -> int:
    if value is not None:
        return value
    env = os.environ.get("REGCOMP_SEED")
    return int(env) if env is not None else 0


def _emit_json(config: dict, result, output: Optional[str]) -> None:
    text = json.dumps({"config": config, "result": result}, indent=2, allow_nan=False)
    if output:
        with open(output, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    else:
        sys.stdout.write(text + "\n")


def _emit_csv(config: dict, columns, rows, output: Optional[str]) -> None:
    buf = io.StringIO()
    for key, val in sorted(config.items()):
        buf.write(f"# {key}={json.dumps(val, sort_keys=True)}\n")
    writer = csv.writer(buf)
    writer.writerow(columns)
    for row in rows:
        writer.writerow([row[c] for c in columns])
    if output:
        with open(output, "w", encoding="utf-8", newline="") as fh:
            fh.write(buf.getvalue())
    else:
        sys.stdout.write(buf.getvalue())


def _json_safe(obj):
    if isinstance(obj, float) and math.isinf(obj):
        return "inf"
    if isinstance(obj, dict):
        return {k: _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    return obj


def build_parser() -> _Parser:
    parser = _Parser(prog="regcomp", description="Compliance measures of convex regularizers")
    parser.add_argument("--version", action="version", version=f"regcomp {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, seed=True, workers=True, output=True):
        if seed:
            p.add_argument("--seed", type=int, default=None, help="RNG seed (env REGCOMP_SEED)")
        if workers:
            p.add_argument("--workers", type=int, default=None, help="worker count (env REGCOMP_WORKERS)")
        if output:
            p.add_argument("--output", default=None, help="output path (default: stdout)")

    p = sub.add_parser("compliance", help="necessary/sufficient RIP thresholds for a pair")
    p.add_argument("--model", required=True)
    p.add_argument("--reg", required=True)
    p.add_argument("--samples", type=int, default=20000)
    p.add_argument("--grid", type=int, default=2048)
    common(p)

    p = sub.add_parser("optimal-weights", help="optimal two-level l1 weights")
    p.add_argument("--k1", type=int, required=True)
    p.add_argument("--k2", type=int, required=True)
    p.add_argument("--n1", type=int, required=True)
    p.add_argument("--n2", type=int, required=True)
    p.add_argument("--grid", type=int, default=10**5)
    common(p, seed=False)

    p = sub.add_parser("sweep-levels", help="optimal-weight diagnostics over a (k1, k2) range")
    p.add_argument("--k-min", type=int, default=2)
    p.add_argument("--k-max", type=int, required=True)
    p.add_argument("--n-factor", type=int, default=4)
    p.add_argument("--grid", type=int, default=10**5)
    p.add_argument("--svg", default=None, help="also render heatmaps to '<PREFIX>_c1.svg'/'_c2.svg'")
    common(p, seed=False)

    p = sub.add_parser("mc-volume", help="Monte Carlo sphere-volume compliance")
    p.add_argument("--model", required=True)
    p.add_argument("--reg", required=True)
    p.add_argument("--samples", type=int, default=10**5)
    p.add_argument("--anu", action="store_true", help="non-uniform variant (upper bound)")
    p.add_argument("--x-samples", type=int, default=32)
    p.add_argument("--format", choices=["json", "csv"], default="json")
    common(p)

    p = sub.add_parser("experiment-3d", help="rank weighted l1 norms for 1-sparse vectors in R^3")
    p.add_argument("--ratios", default="0.5,0.75,1,1.5,2")
    p.add_argument("--samples", type=int, default=10**6)
    p.add_argument("--format", choices=["json", "csv"], default="json")
    common(p)

    p = sub.add_parser("oracle", help="brute-force validation battery; exit 1 on any violation")
    p.add_argument("--trials", type=int, default=200)
    common(p, workers=False)
    return parser


def _cmd_compliance(args) -> int:
    model = parse_model(args.model)
    reg = parse_reg(args.reg, model)
    seed = _resolve_seed(args.seed)
    workers = resolve_workers(args.workers)
    config = {
        "command": "compliance",
        "model": model_to_obj(model),
        "reg": reg_to_obj(reg),
        "samples": args.samples,
        "grid": args.grid,
        "seed": seed,
        "workers": workers,
        "output": args.output,
    }
    report = compliance_report(model, reg, samples=args.samples, seed=seed, grid=args.grid, workers=workers)
    _emit_json(config, report.to_obj(), args.output)
    return 0


def _cmd_optimal_weights(args) -> int:
    workers = resolve_workers(args.workers)
    config = {
        "command": "optimal-weights",
        "k1": args.k1,
        "k2": args.k2,
        "n1": args.n1,
        "n2": args.n2,
        "grid": args.grid,
        "workers": workers,
        "output": args.output,
    }
    opt = optimal_weights(args.k1, args.k2, args.n1, args.n2, args.grid, workers=workers)
    _emit_json(config, opt.to_obj(), args.output)
    return 0


def _cmd_sweep_levels(args) -> int:
    workers = resolve_workers(args.workers)
    config = {
        "command": "sweep-levels",
        "k_min": args.k_min,
        "k_max": args.k_max,
        "n_factor": args.n_factor,
        "grid": args.grid,
        "workers": workers,
        "output": args.output,
        "svg": args.svg,
    }
    rows = sweep_levels(args.k_min, args.k_max, args.grid, workers=workers, n_factor=args.n_factor)
    _emit_csv(config, SWEEP_COLUMNS, rows, args.output)
    if args.svg:
        from .figures import render_sweep_heatmaps

        render_sweep_heatmaps(rows, args.svg)
    return 0


def _cmd_mc_volume(args) -> int:
    model = parse_model(args.model)
    reg = parse_reg(args.reg, model)
    seed = _resolve_seed(args.seed)
    workers = resolve_workers(args.workers)
    config = {
        "command": "mc-volume",
        "model": model_to_obj(model),
        "reg": reg_to_obj(reg),
        "samples": args.samples,
        "anu": args.anu,
        "x_samples": args.x_samples,
        "seed": seed,
        "workers": workers,
        "format": args.format,
        "output": args.output,
    }
    if args.anu:
        est = estimate_anu(model, reg, args.x_samples, args.samples, seed, workers=workers)
        result = {"quantity": "anu_upper_bound", **est.to_obj()}
    else:
        est = estimate_au(model, reg, args.samples, seed, workers=workers)
        result = {"quantity": "au", **est.to_obj()}
    if args.format == "csv":
        cols = ["quantity", "estimate", "ci_low", "ci_high", "samples", "seed"]
        _emit_csv(config, cols, [result], args.output)
    else:
        _emit_json(config, result, args.output)
    return 0


def _cmd_experiment_3d(args) -> int:
    try:
        ratios = [float(x) for x in args.ratios.split(",") if x.strip()]
    except ValueError as exc:
        raise _ConfigError(f"invalid ratio list {args.ratios!r}") from exc
    if not ratios:
        raise _ConfigError("ratio list must be non-empty")
    grid = [(a, b) for a in ratios for b in ratios]
    seed = _resolve_seed(args.seed)
    workers = resolve_workers(args.workers)
    config = {
        "command": "experiment-3d",
        "ratios": ratios,
        "samples": args.samples,
        "seed": seed,
        "workers": workers,
        "format": args.format,
        "output": args.output,
    }
    result = experiment_3d_1sparse(grid, args.samples, seed, workers=workers)
    if args.format == "csv":
        rows = [
            {
                "r2": e["ratios"][0],
                "r3": e["ratios"][1],
                "estimate": e["estimate"],
                "ci_low": e["ci_low"],
                "ci_high": e["ci_high"],
                "rank": e["rank"],
            }
            for e in result["entries"]
        ]
        _emit_csv(config, EXPERIMENT_COLUMNS, rows, args.output)
    else:
        _emit_json(config, _json_safe(result), args.output)
    return 0


def _cmd_oracle(args) -> int:
    seed = _resolve_seed(args.seed)
    config = {"command": "oracle", "trials": args.trials, "seed": seed, "output": args.output}
    checks = run_battery(args.trials, seed)
    for c in checks:
        status = "ok" if c.ok else "VIOLATION"
        print(f"{status:9s} {c.name}: max_deviation={c.max_deviation:.3e} tolerance={c.tolerance:.1e}")
    if args.output:
        _emit_json(config, [c.to_obj() for c in checks], args.output)
    return 0 if all(c.ok for c in checks) else 1


_COMMANDS = {
    "compliance": _cmd_compliance,
    "optimal-weights": _cmd_optimal_weights,
    "sweep-levels": _cmd_sweep_levels,
    "mc-volume": _cmd_mc_volume,
    "experiment-3d": _cmd_experiment_3d,
    "oracle": _cmd_oracle,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return _COMMANDS[args.command](args)
    except _ConfigError as exc:
        sys.stderr.write(json.dumps({"error": "config", "detail": str(exc)}) + "\n")
        return 2
    except ValueError as exc:
        sys.stderr.write(json.dumps({"error": "config", "detail": str(exc)}) + "\n")
        return 2
    except NumericalError as exc:
        sys.stderr.write(json.dumps({"error": "numeric", "detail": str(exc)}) + "\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
