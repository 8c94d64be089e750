"""Command line front end: JSON config in, CSV tables out.

Usage: equistop <mode> --config <path> [--threads N] [--out DIR]
Modes: analytic, iterate, verify, compare, mc-check, capacity-diag.
All floats are emitted with 17 significant digits so re-running a config
byte-reproduces every output (including Monte Carlo, via rng_seed).
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import analytic
from .fixedpoint import (ConvergenceError, compare_equilibria, is_equilibrium,
                         iterate_to_equilibrium)
from .mc import SimConfig, capacity_diagnostic, estimate_hitting_value
from .model import (GridPolicy, Objective, PriorFamily, StateInterval,
                    build_grid)

MODES = ("analytic", "iterate", "verify", "compare", "mc-check", "capacity-diag")


class ConfigError(Exception):
    pass


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return f"{v:.17g}"
    return str(v)


def _write_csv(path: Path, header: list[str], rows) -> None:
    with open(path, "w") as f:
        f.write(",".join(header) + "\n")
        for row in rows:
            f.write(",".join(_fmt(v) for v in row) + "\n")


def _require(cfg: dict, *keys):
    node = cfg
    path = []
    for k in keys:
        path.append(k)
        if not isinstance(node, dict) or k not in node:
            raise ConfigError(f"missing config key: {'.'.join(path)}")
        node = node[k]
    return node


def _problem(cfg) -> analytic.PutGbmProblem:
    blk = _require(cfg, "problem")
    band = _require(cfg, "problem", "sigma_band")
    return analytic.PutGbmProblem(
        strike=_require(cfg, "problem", "strike"),
        discount=_require(cfg, "problem", "discount"),
        sigma_band=(band[0], band[1]),
        alpha=_require(cfg, "problem", "alpha"),
        rate_band=tuple(blk["rate_band"]) if "rate_band" in blk else None,
        drift_band=tuple(blk["drift_band"]) if "drift_band" in blk else None,
    )


def _engine_pieces(cfg):
    prob = _problem(cfg)
    n_points = _require(cfg, "grid", "n_points")
    trunc = cfg.get("grid", {}).get(
        "truncation", [prob.strike / 100.0, 10.0 * prob.strike])
    grid = build_grid(StateInterval(0.0), n_points, trunc)
    objective = Objective.put(prob.strike, prob.discount, prob.alpha)
    samples = cfg.get("priors", {}).get("samples", 17)
    priors = PriorFamily.gbm_volatility_band(
        prob.discount, prob.sigma_band[0], prob.sigma_band[1], samples)
    fp = cfg.get("fixed_point", {})
    opts = dict(n_nodes=fp.get("n_nodes", 4000), tie_tol=fp.get("tie_tol"))
    return prob, grid, objective, priors, opts


def _seed_policy(cfg, grid, objective) -> GridPolicy:
    kind = _require(cfg, "seed_policy", "kind")
    if kind == "empty":
        return GridPolicy.empty(grid)
    if kind == "full":
        return GridPolicy.full(grid)
    if kind == "payoff-support":
        return GridPolicy(grid, objective.payoff_values(grid.points) > 0)
    if kind == "threshold":
        return GridPolicy.from_threshold(grid, _require(cfg, "seed_policy", "threshold"))
    if kind == "mask-file":
        path = _require(cfg, "seed_policy", "path")
        mask = _read_mask(path, grid)
        return GridPolicy(grid, mask)
    raise ConfigError(f"unknown seed_policy.kind: {kind}")


def _read_mask(path, grid) -> np.ndarray:
    rows = [line.strip().split(",") for line in open(path) if line.strip()]
    if len(rows) != len(grid):
        raise ConfigError(f"mask file {path} has {len(rows)} rows, grid has {len(grid)}")
    return np.array([r[1] == "1" for r in rows])


def _write_policy(path: Path, policy: GridPolicy) -> None:
    with open(path, "w") as f:
        for xv, m in zip(policy.grid.points, policy.mask):
            f.write(f"{xv:.17g},{1 if m else 0}\n")


def _sim_config(cfg) -> SimConfig:
    return SimConfig(
        n_paths=_require(cfg, "sim", "n_paths"),
        dt=_require(cfg, "sim", "dt"),
        horizon=_require(cfg, "sim", "horizon"),
        rng_seed=_require(cfg, "sim", "rng_seed"),
        scheme=cfg.get("sim", {}).get("scheme", "exact-gbm"),
    )


def run_analytic(cfg, out: Path) -> int:
    prob = _problem(cfg)
    e = analytic.exponents(prob)
    astar = analytic.a_star(prob)
    _write_csv(out / "analytic_summary.csv",
               ["mode", "a_star", "m1", "m2", "alpha"],
               [[prob.mode, astar, e.m1, e.m2, prob.alpha]])
    blk = cfg.get("analytic", {})
    K = prob.strike
    a_values = blk.get("a_values") or list(np.linspace(0.1 * K, K, 10))
    x_count = blk.get("x_count", 50)
    lam_rows = []
    cls_rows = []
    for a in a_values:
        for x in np.linspace(a, 5.0 * K, x_count):
            lam_rows.append([a, x, analytic.lambda_value(float(x), float(a), prob)])
        cls_rows.append([a, analytic.classify_policy(float(a), prob)])
    _write_csv(out / "lambda_table.csv", ["a", "x", "lambda"], lam_rows)
    _write_csv(out / "classification.csv", ["a", "classification"], cls_rows)
    return 0


def run_iterate(cfg, out: Path) -> int:
    _, grid, objective, priors, opts = _engine_pieces(cfg)
    seed = _seed_policy(cfg, grid, objective)
    max_iter = cfg.get("fixed_point", {}).get("max_iter")
    try:
        trace = iterate_to_equilibrium(seed, objective, priors,
                                       max_iter=max_iter, **opts)
    except ConvergenceError as exc:
        trace = exc.trace
        _write_trace(out / "trace_partial.csv", trace)
        print(f"non-convergence: {exc}; partial trace at {out / 'trace_partial.csv'}",
              file=sys.stderr)
        return 2
    _write_trace(out / "trace.csv", trace)
    _write_policy(out / "final_policy.csv", trace.final)
    return 0


def _write_trace(path: Path, trace) -> None:
    rows = []
    for step, pol in enumerate(trace.policies):
        added = trace.added_points[step - 1] if step > 0 else 0
        rows.append([step, added, pol.threshold()])
    _write_csv(path, ["step", "added_points", "threshold_estimate"], rows)


def run_verify(cfg, out: Path) -> int:
    _, grid, objective, priors, opts = _engine_pieces(cfg)
    thr = _require(cfg, "verify", "threshold")
    policy = GridPolicy.from_threshold(grid, thr)
    chk = is_equilibrium(policy, objective, priors, **opts)
    _write_csv(out / "verdict.csv", ["threshold", "is_equilibrium"],
               [[thr, chk.is_equilibrium]])
    wit_rows = ([ [int(i), grid.points[i], "S-outside-R"] for i in chk.added_indices]
                + [[int(i), grid.points[i], "R-outside-S-or-I"] for i in chk.dropped_indices])
    _write_csv(out / "witnesses.csv", ["index", "x", "kind"], wit_rows)
    return 0


def run_compare(cfg, out: Path) -> int:
    _, grid, objective, priors, opts = _engine_pieces(cfg)
    ta = _require(cfg, "compare", "threshold_a")
    tb = _require(cfg, "compare", "threshold_b")
    pa = GridPolicy.from_threshold(grid, ta)
    pb = GridPolicy.from_threshold(grid, tb)
    res = compare_equilibria(pa, pb, objective, priors, **opts)
    _write_csv(out / "compare_summary.csv", ["threshold_a", "threshold_b", "verdict"],
               [[ta, tb, res.verdict]])
    rows = [[x, va, vb, gap] for x, va, vb, gap in
            zip(grid.points, res.value_a, res.value_b, res.gaps)]
    _write_csv(out / "value_gaps.csv", ["x", "value_a", "value_b", "gap"], rows)
    return 0


def run_mc_check(cfg, out: Path) -> int:
    prob = _problem(cfg)
    _, grid, objective, priors, _ = _engine_pieces(cfg)
    sim = _sim_config(cfg)
    probes = _require(cfg, "mc_probes")
    rows = []
    for x, a, sigma in probes:
        policy = GridPolicy.from_threshold(grid, a)
        single = PriorFamily.gbm_volatility_band(prob.discount, sigma, sigma, 1)
        est = estimate_hitting_value(float(x), policy, np.array([sigma]),
                                     objective, sim, single)
        exact = ((prob.strike - a)
                 * analytic.discounted_hitting_factor(float(x), float(a),
                                                      prob.discount, float(sigma)))
        z = (est.mean - exact) / est.std_error if est.std_error > 0 else float("nan")
        rows.append([x, a, sigma, exact, est.mean, est.std_error, z,
                     est.n_absorbed, est.n_censored])
    _write_csv(out / "mc_check.csv",
               ["x", "a", "sigma", "analytic", "estimate", "std_error",
                "z_score", "n_absorbed", "n_censored"], rows)
    return 0


def run_capacity(cfg, out: Path) -> int:
    prob = _problem(cfg)
    _, grid, objective, priors, _ = _engine_pieces(cfg)
    sim = _sim_config(cfg)
    blk = _require(cfg, "capacity")
    eps = _require(cfg, "capacity", "epsilon")
    astar = analytic.a_star(prob)
    levels = blk.get("levels", 10)
    thresholds = blk.get("thresholds") or [astar - 1.0 / n for n in range(1, levels + 1)]
    start = blk.get("start", astar + 0.5)
    policies = [GridPolicy.from_threshold(grid, t) for t in thresholds]
    table = capacity_diagnostic(float(start), policies, priors, sim, eps)
    rows = [[int(n), thr, tf, sf] for n, thr, tf, sf in
            zip(table.levels, thresholds, table.time_freq, table.state_freq)]
    _write_csv(out / "capacity.csv",
               ["n", "threshold", "time_exceed_freq", "state_exceed_freq"], rows)
    return 0


RUNNERS = {
    "analytic": run_analytic,
    "iterate": run_iterate,
    "verify": run_verify,
    "compare": run_compare,
    "mc-check": run_mc_check,
    "capacity-diag": run_capacity,
}


def _set_threads(n) -> None:
    if n is None:
        n = os.environ.get("EQUISTOP_THREADS")
    if n is None:
        return
    import numba
    numba.set_num_threads(max(1, int(n)))


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="equistop", description=__doc__)
    parser.add_argument("mode", choices=MODES)
    parser.add_argument("--config", required=True)
    parser.add_argument("--threads", type=int, default=None)
    parser.add_argument("--out", default=".")
    args = parser.parse_args(argv)

    try:
        with open(args.config) as f:
            cfg = json.load(f)
    except (OSError, json.JSONDecodeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1

    _set_threads(args.threads)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    try:
        return RUNNERS[args.mode](cfg, out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, KeyError, TypeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except ConvergenceError as exc:
        print(f"non-convergence: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
