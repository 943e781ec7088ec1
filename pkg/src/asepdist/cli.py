"""Command-line front door.

Runs the exact evaluator, the simulators, the identity-verification suite,
threeway comparisons, and limit-law tabulation.  Output is data-only
(JSON to stdout, optional CSV/JSON files under --out); every output file
is paired with a RunManifest sidecar for reproducibility.

Exit codes: 0 ok, 1 numerical disagreement, 2 usage/parameter error,
3 backend failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import math
import os
import sys
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .exactdist import NumericsConfig, prob_gt_first, prob_leq, verify_identities
from .limitdist import (crossover_cdf, crossover_table, f2_cdf, f2_table,
                        theorem1_tail, theorem3_map)
from .params import make_params
from .quadrature import SUPPORTED_BITS
from .sim import ctmc_oracle, empirical_scaled_cdf, estimate_prob

EXIT_OK = 0
EXIT_DISAGREE = 1
EXIT_USAGE = 2
EXIT_BACKEND = 3


def _fmt(x: float) -> str:
    """17 significant digits, lowercase e-notation (CSV schema v1)."""
    return f"{x:.16e}"


@dataclass(frozen=True)
class RunManifest:
    """Reproducibility metadata emitted alongside every output file.

    Two runs with identical manifests (duration aside) produce
    bit-identical serial outputs.
    """

    command_line: list[str]
    config_hash: str
    seed: int | None
    precision_bits: int
    node_counts: dict
    artifact_version: str
    duration_s: float

    def to_json(self) -> str:
        return json.dumps(dataclasses.asdict(self), indent=2, sort_keys=True)


def _config_hash(effective: dict) -> str:
    blob = json.dumps(effective, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()


def _write_output(args, stem: str, csv_lines: list[str], payload: dict,
                  manifest: RunManifest) -> None:
    """Emit JSON to stdout and, when --out is set, a CSV or JSON file with
    its manifest sidecar."""
    print(json.dumps(payload, indent=2, default=str))
    if args.out is None:
        return
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    if args.format == "csv":
        path = out_dir / f"{stem}.csv"
        path.write_text("\n".join(csv_lines) + "\n")
    else:
        path = out_dir / f"{stem}.json"
        path.write_text(json.dumps(payload, indent=2, sort_keys=True,
                                   default=str) + "\n")
    sidecar = out_dir / f"{stem}.manifest.json"
    sidecar.write_text(manifest.to_json() + "\n")


def _manifest(args, effective: dict, node_counts: dict, started: float,
              seed: int | None = None) -> RunManifest:
    return RunManifest(command_line=sys.argv[1:],
                       config_hash=_config_hash(effective),
                       seed=seed,
                       precision_bits=effective.get("bits") or 53,
                       node_counts=node_counts,
                       artifact_version=__version__,
                       duration_s=time.time() - started)


def _numerics(args) -> NumericsConfig:
    kw = {}
    if getattr(args, "nodes", None):
        kw["n_eta"] = args.nodes
    if args.bits:
        kw["precision_bits"] = args.bits
    return NumericsConfig(**kw)


def _formula_time(args) -> tuple[float, float]:
    """(formula t, physical t) respecting --wall-time."""
    params = make_params(args.p)
    if getattr(args, "wall_time", False):
        return params.gamma * args.t, args.t
    return args.t, args.t / params.gamma if params.gamma > 0 else math.inf


def _parse_sweep(text: str) -> np.ndarray:
    try:
        s0, s1, ds = (float(v) for v in text.split(":"))
    except ValueError:
        raise ValueError(f"--sweep expects s0:s1:ds, got {text!r}")
    if ds <= 0 or s1 < s0:
        raise ValueError(f"--sweep needs s0 <= s1 and ds > 0, got {text!r}")
    n = int(round((s1 - s0) / ds))
    return s0 + ds * np.arange(n + 1)


def _parse_grid(text: str) -> np.ndarray:
    return np.array([float(v) for v in text.split(",")])


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_exact(args) -> int:
    started = time.time()
    params = make_params(args.p)
    t, _ = _formula_time(args)
    point = prob_leq(params, args.m, args.x, t, _numerics(args))
    payload = {"m": point.m, "x": point.x, "t": point.t,
               "prob": point.prob, "err_est": point.err_est,
               "n_eta": point.n_eta, "n_lambda": point.n_lambda,
               "bits": point.bits}
    csv = ["s,value,err_est",
           f"{_fmt(float(args.x))},{_fmt(point.prob)},{_fmt(point.err_est)}"]
    eff = {"cmd": "exact", "p": args.p, "m": args.m, "x": args.x, "t": t,
           "nodes": getattr(args, "nodes", None), "bits": args.bits}
    man = _manifest(args, eff, {"n_eta": point.n_eta,
                                "n_lambda": point.n_lambda}, started)
    _write_output(args, "exact", csv, payload, man)
    return EXIT_OK


def cmd_simulate(args) -> int:
    started = time.time()
    params = make_params(args.p)
    t, _ = _formula_time(args)
    est = estimate_prob(params, args.m, args.x, t, args.trials,
                        seed=args.seed, n_sites=args.n_sites)
    payload = dataclasses.asdict(est)
    payload.update({"m": args.m, "x": args.x, "t": t})
    csv = ["s,value,err_est",
           f"{_fmt(float(args.x))},{_fmt(est.prob)},{_fmt(est.stderr)}"]
    eff = {"cmd": "simulate", "p": args.p, "m": args.m, "x": args.x, "t": t,
           "trials": args.trials, "seed": args.seed, "n_sites": est.n_sites}
    man = _manifest(args, eff, {"n_sites": est.n_sites}, started,
                    seed=args.seed)
    _write_output(args, "simulate", csv, payload, man)
    return EXIT_OK


def cmd_oracle(args) -> int:
    started = time.time()
    params = make_params(args.p)
    _, t_phys = _formula_time(args)
    res = ctmc_oracle(params, args.m, t_phys, n_sites=args.n_sites,
                      jump_cap=args.jump_cap)
    lo, hi = res.cdf_bounds(args.x)
    payload = {"m": args.m, "x": args.x, "t_phys": t_phys,
               "prob": res.cdf(args.x), "cdf_lower": lo, "cdf_upper": hi,
               "truncation_bound": res.truncation_bound,
               "bracket_gap": res.bracket_gap,
               "error_bound": res.error_bound,
               "n_sites": res.n_sites, "max_states": res.max_states}
    csv = ["s,value,err_est",
           f"{_fmt(float(args.x))},{_fmt(res.cdf(args.x))},"
           f"{_fmt(res.error_bound)}"]
    eff = {"cmd": "oracle", "p": args.p, "m": args.m, "x": args.x,
           "t_phys": t_phys, "jump_cap": args.jump_cap,
           "n_sites": res.n_sites}
    man = _manifest(args, eff, {"n_sites": res.n_sites,
                                "max_states": res.max_states}, started)
    _write_output(args, "oracle", csv, payload, man)
    return EXIT_OK


def cmd_compare(args) -> int:
    """Three-way check: exact vs Monte Carlo vs CTMC oracle."""
    started = time.time()
    params = make_params(args.p)
    t, t_phys = _formula_time(args)
    point = prob_leq(params, args.m, args.x, t, _numerics(args))
    est = estimate_prob(params, args.m, args.x, t, args.trials,
                        seed=args.seed)
    rows = {"exact": {"prob": point.prob, "err_est": point.err_est},
            "monte_carlo": {"prob": est.prob, "stderr": est.stderr,
                            "n_trials": est.n_trials}}
    z_mc = abs(point.prob - est.prob) / max(est.stderr, 1e-300)
    checks = {"exact_vs_mc_z": z_mc}
    ok = z_mc <= 3.0
    oracle_feasible = args.m + 10 <= 14 and t_phys * (args.m + 10) <= 25
    if oracle_feasible:
        res = ctmc_oracle(params, args.m, t_phys)
        rows["oracle"] = {"prob": res.cdf(args.x),
                          "error_bound": res.error_bound}
        d = abs(point.prob - res.cdf(args.x))
        checks["exact_vs_oracle_diff"] = d
        ok = ok and d <= res.error_bound + 1e-6
        z_o = abs(est.prob - res.cdf(args.x)) / max(est.stderr, 1e-300)
        checks["mc_vs_oracle_z"] = z_o
        ok = ok and z_o <= 3.0
    payload = {"m": args.m, "x": args.x, "t": t, "results": rows,
               "checks": {k: float(v) for k, v in checks.items()},
               "agree": bool(ok)}
    csv = ["s,value,err_est",
           f"{_fmt(float(args.x))},{_fmt(point.prob)},{_fmt(point.err_est)}"]
    eff = {"cmd": "compare", "p": args.p, "m": args.m, "x": args.x, "t": t,
           "trials": args.trials, "seed": args.seed, "bits": args.bits}
    man = _manifest(args, eff, {"n_eta": point.n_eta}, started,
                    seed=args.seed)
    _write_output(args, "compare", csv, payload, man)
    return EXIT_OK if ok else EXIT_DISAGREE


def cmd_verify(args) -> int:
    """Identity suite (trace, product, resolvent, telescoping, kernel
    equivalence) at three parameter sets."""
    started = time.time()
    ps = args.p if args.p else [0.1, 0.3, 0.45]
    report = {}
    all_ok = True
    for p in ps:
        params = make_params(p)
        checks = verify_identities(params)
        report[str(p)] = {c.name: {"error": c.diff, "tol": c.tol,
                                   "pass": c.passed, "detail": c.detail}
                          for c in checks}
        all_ok = all_ok and all(c.passed for c in checks)
    payload = {"parameter_sets": ps, "checks": report, "pass": all_ok}
    eff = {"cmd": "verify", "p": ps}
    man = _manifest(args, eff, {}, started)
    _write_output(args, "verify", [], payload, man)
    return EXIT_OK if all_ok else EXIT_DISAGREE


def _limit_rows(args) -> tuple[list, dict, dict]:
    grid = _parse_sweep(args.sweep)
    if args.law == "f2":
        table = f2_table(grid)
        rows = [(s, v, e) for s, v, e in
                zip(table.s, table.value, table.err_est)]
        nodes = {"n_nodes": 80, "interval_length": 16}
        eff = {"law": "f2", "sweep": args.sweep}
    elif args.law == "crossover":
        params = make_params(args.p)
        table = crossover_table(params, args.m, grid)
        rows = [(s, v, e) for s, v, e in
                zip(table.s, table.value, table.err_est)]
        nodes = {"n_nodes": 80, "n_lambda": 64}
        eff = {"law": "crossover", "p": args.p, "m": args.m,
               "sweep": args.sweep}
    else:  # thm1: sweep is over formula time t at fixed (m, x)
        params = make_params(args.p)
        rows = [(t, theorem1_tail(params, args.m, args.x, t), 0.0)
                for t in grid]
        nodes = {}
        eff = {"law": "thm1", "p": args.p, "m": args.m, "x": args.x,
               "sweep": args.sweep}
    return rows, nodes, eff


def cmd_limit(args) -> int:
    started = time.time()
    rows, nodes, eff = _limit_rows(args)
    header = "t,value" if args.law == "thm1" else "s,value,err_est"
    if args.law == "thm1":
        csv = [header] + [f"{_fmt(s)},{_fmt(v)}" for s, v, _ in rows]
    else:
        csv = [header] + [f"{_fmt(s)},{_fmt(v)},{_fmt(e)}"
                          for s, v, e in rows]
    payload = {"law": args.law,
               "rows": [{"s": s, "value": v, "err_est": e}
                        for s, v, e in rows]}
    eff["cmd"] = "limit"
    man = _manifest(args, eff, nodes, started)
    _write_output(args, f"limit_{args.law}", csv, payload, man)
    return EXIT_OK


def cmd_tabulate(args) -> int:
    """Like `limit`, but file output is the point: requires --out."""
    if args.out is None:
        print("tabulate requires --out", file=sys.stderr)
        return EXIT_USAGE
    args.format = "csv"
    return cmd_limit(args)


def cmd_scaled_cdf(args) -> int:
    started = time.time()
    params = make_params(args.p)
    grid = _parse_grid(args.s_grid)
    vals, errs, meta = empirical_scaled_cdf(params, args.sigma, args.t, grid,
                                            args.trials, seed=args.seed)
    csv = ["s,value,err_est"] + [f"{_fmt(s)},{_fmt(v)},{_fmt(e)}"
                                 for s, v, e in zip(grid, vals, errs)]
    payload = {"sigma": args.sigma, "t": args.t, "meta": meta,
               "rows": [{"s": float(s), "value": float(v), "err_est": float(e)}
                        for s, v, e in zip(grid, vals, errs)]}
    eff = {"cmd": "scaled-cdf", "p": args.p, "sigma": args.sigma,
           "t": args.t, "trials": args.trials, "seed": args.seed,
           "s_grid": args.s_grid}
    man = _manifest(args, eff, {"n_sites": meta["n_sites"]}, started,
                    seed=args.seed)
    _write_output(args, "scaled_cdf", csv, payload, man)
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument plumbing
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(
        prog="asepdist",
        description="Distribution of the m-th leftmost particle in ASEP "
                    "with step initial condition: exact contour formula, "
                    "simulation, and limit laws.")
    top.add_argument("--config", type=str, default=None,
                     help="JSON config file; CLI flags take precedence")
    top.add_argument("--out", type=str, default=None,
                     help="output directory for CSV/JSON files + manifests")
    top.add_argument("--format", choices=["csv", "json"], default="csv")
    top.add_argument("--bits", type=int, choices=SUPPORTED_BITS, default=None,
                     help="working precision of the exact evaluator")
    top.add_argument("--threads", type=int, default=None,
                     help="cap simulator parallelism (also: ASEP_THREADS)")
    sub = top.add_subparsers(dest="command", required=True)

    def add(name, fn, **kw):
        sp = sub.add_parser(name, **kw)
        sp.set_defaults(func=fn)
        return sp

    sp = add("exact", cmd_exact, help="P(x_m(t/gamma) <= x) by the exact "
                                      "Fredholm-determinant formula")
    sp.add_argument("--p", type=float, required=True)
    sp.add_argument("--m", type=int, required=True)
    sp.add_argument("--x", type=int, required=True)
    sp.add_argument("--t", type=float, required=True)
    sp.add_argument("--wall-time", action="store_true",
                    help="interpret --t as physical time T (t = gamma T)")
    sp.add_argument("--nodes", type=int, default=None)

    sp = add("simulate", cmd_simulate, help="Monte Carlo estimate")
    sp.add_argument("--p", type=float, required=True)
    sp.add_argument("--m", type=int, required=True)
    sp.add_argument("--x", type=int, required=True)
    sp.add_argument("--t", type=float, required=True)
    sp.add_argument("--trials", type=int, required=True)
    sp.add_argument("--seed", type=int, default=None)
    sp.add_argument("--n-sites", type=int, default=None)
    sp.add_argument("--wall-time", action="store_true")

    sp = add("oracle", cmd_oracle, help="small-system CTMC oracle")
    sp.add_argument("--p", type=float, required=True)
    sp.add_argument("--m", type=int, required=True)
    sp.add_argument("--x", type=int, required=True)
    sp.add_argument("--t", type=float, required=True)
    sp.add_argument("--jump-cap", type=int, default=60)
    sp.add_argument("--n-sites", type=int, default=None)
    sp.add_argument("--wall-time", action="store_true")

    sp = add("compare", cmd_compare, help="exact vs MC vs oracle report")
    sp.add_argument("--p", type=float, required=True)
    sp.add_argument("--m", type=int, required=True)
    sp.add_argument("--x", type=int, required=True)
    sp.add_argument("--t", type=float, required=True)
    sp.add_argument("--trials", type=int, default=100_000)
    sp.add_argument("--seed", type=int, default=None)
    sp.add_argument("--wall-time", action="store_true")

    sp = add("verify", cmd_verify, help="kernel identity suite")
    sp.add_argument("--p", type=float, action="append", default=None)

    for name, fn in (("limit", cmd_limit), ("tabulate", cmd_tabulate)):
        sp = add(name, fn, help="evaluate a limit law on a grid")
        sp.add_argument("law", choices=["thm1", "crossover", "f2"])
        sp.add_argument("--sweep", type=str, required=True,
                        help="s0:s1:ds grid (t-grid for thm1)")
        sp.add_argument("--p", type=float, default=0.3)
        sp.add_argument("--m", type=int, default=1)
        sp.add_argument("--x", type=int, default=0)

    sp = add("scaled-cdf", cmd_scaled_cdf,
             help="Monte Carlo CDF of the t^{1/3}-rescaled position")
    sp.add_argument("--p", type=float, required=True)
    sp.add_argument("--sigma", type=float, required=True)
    sp.add_argument("--t", type=float, required=True)
    sp.add_argument("--trials", type=int, required=True)
    sp.add_argument("--s-grid", type=str, required=True,
                    help="comma-separated s values")
    sp.add_argument("--seed", type=int, default=None)
    return top


def _apply_config(args, parser) -> None:
    """Config precedence: CLI flag > JSON config > built-in default.
    Only fills arguments the user left at None/unset defaults."""
    if not args.config:
        return
    with open(args.config) as fh:
        cfg = json.load(fh)
    for key, value in cfg.items():
        attr = key.replace("-", "_")
        if not hasattr(args, attr):
            raise ValueError(f"unknown config key {key!r}")
        if getattr(args, attr) is None:
            setattr(args, attr, value)


def _cap_threads(args) -> None:
    cap = args.threads
    if cap is None and os.environ.get("ASEP_THREADS"):
        cap = int(os.environ["ASEP_THREADS"])
    if cap is not None:
        if cap < 1:
            raise ValueError("thread cap must be >= 1")
        import numba
        numba.set_num_threads(cap)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    try:
        _apply_config(args, parser)
        if hasattr(args, "seed") and args.seed is None:
            args.seed = 0
        _cap_threads(args)
    except (ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except ValueError as exc:
        print(f"parameter error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as exc:  # backend failure
        print(f"backend error ({type(exc).__name__}): {exc}", file=sys.stderr)
        return EXIT_BACKEND


if __name__ == "__main__":
    sys.exit(main())
