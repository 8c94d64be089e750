"""Monte Carlo cross-checks: discounted hitting payoffs per prior, empirical
maxmin over the parameter grid, and capacity-convergence diagnostics for
nested policy sequences.

Paths are simulated with a per-path counter-based RNG (seed xor path index),
so results are bit-reproducible and independent of thread count, and common
random numbers across parameters come for free.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from numba import njit, prange

from .model import GridPolicy, Objective, PriorFamily, decompose_complement

_U64 = np.uint64
_GAMMA = _U64(0x9E3779B97F4A7C15)
_NEG_INF = -1.0e308
_POS_INF = 1.0e308
# discrete-monitoring barrier shift constant (Broadie-Glasserman-Kou)
BARRIER_SHIFT_BETA = 0.5826


@dataclass(frozen=True)
class SimConfig:
    n_paths: int
    dt: float
    horizon: float
    rng_seed: int
    scheme: str = "exact-gbm"

    def __post_init__(self):
        if self.n_paths < 100:
            raise ValueError("n_paths must be at least 100")
        if not 0 < self.dt <= self.horizon:
            raise ValueError("need 0 < dt <= horizon")
        if self.scheme not in ("exact-gbm", "euler"):
            raise ValueError("scheme must be 'exact-gbm' or 'euler'")

    @property
    def n_steps(self) -> int:
        return int(round(self.horizon / self.dt))


@dataclass(frozen=True)
class HittingEstimate:
    mean: float
    std_error: float
    n_absorbed: int
    n_censored: int

    def __post_init__(self):
        if self.std_error < 0:
            raise ValueError("std_error must be nonnegative")


@dataclass(frozen=True)
class MaxminEstimate:
    inf_estimate: HittingEstimate
    sup_estimate: HittingEstimate
    j_estimate: float
    j_std_error: float
    argmin_theta: np.ndarray
    argmax_theta: np.ndarray


@dataclass(frozen=True)
class CapacityTable:
    """Per-level supremum-over-parameters exceedance frequencies."""

    levels: np.ndarray
    time_freq: np.ndarray    # sup_theta P(|rho_n - rho_0| >= eps)
    state_freq: np.ndarray   # sup_theta P(|X_{rho_n} - X_{rho_0}| 1{rho_n < inf} >= eps)
    epsilon: float
    theta_grid: np.ndarray


@njit(inline="always")
def _mix64(z):
    z = (z ^ (z >> _U64(30))) * _U64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> _U64(27))) * _U64(0x94D049BB133111EB)
    return z ^ (z >> _U64(31))


@njit(cache=True, parallel=True)
def _sim_exact_gbm(log_x0, mu, sig, lower_log, upper_log, dt, n_steps, n_paths, seed):
    times = np.full(n_paths, np.inf)
    hit_logs = np.zeros(n_paths)
    sdt = math.sqrt(dt)
    for i in prange(n_paths):
        s = _mix64(_U64(seed) + _U64(i) * _GAMMA)
        lx = log_x0
        have_spare = False
        spare = 0.0
        for k in range(n_steps):
            if have_spare:
                z = spare
                have_spare = False
            else:
                s += _GAMMA
                u1 = (_mix64(s) >> _U64(11)) * 1.1102230246251565e-16 + 5.551115123125783e-17
                s += _GAMMA
                u2 = (_mix64(s) >> _U64(11)) * 1.1102230246251565e-16
                rad = math.sqrt(-2.0 * math.log(u1))
                ang = 6.283185307179586 * u2
                z = rad * math.cos(ang)
                spare = rad * math.sin(ang)
                have_spare = True
            lx += mu * dt + sig * sdt * z
            if lx <= lower_log or lx >= upper_log:
                times[i] = (k + 1) * dt
                hit_logs[i] = lx
                break
    return times, hit_logs


@njit(cache=True, parallel=True)
def _sim_exact_gbm_nested(log_x0, mu, sig, lower_logs, upper_logs, dt, n_steps,
                          n_paths, seed):
    n_pol = lower_logs.shape[0]
    times = np.full((n_paths, n_pol), np.inf)
    hit_logs = np.zeros((n_paths, n_pol))
    sdt = math.sqrt(dt)
    for i in prange(n_paths):
        s = _mix64(_U64(seed) + _U64(i) * _GAMMA)
        lx = log_x0
        have_spare = False
        spare = 0.0
        nxt = n_pol - 1  # largest policy is entered first
        for k in range(n_steps):
            if have_spare:
                z = spare
                have_spare = False
            else:
                s += _GAMMA
                u1 = (_mix64(s) >> _U64(11)) * 1.1102230246251565e-16 + 5.551115123125783e-17
                s += _GAMMA
                u2 = (_mix64(s) >> _U64(11)) * 1.1102230246251565e-16
                rad = math.sqrt(-2.0 * math.log(u1))
                ang = 6.283185307179586 * u2
                z = rad * math.cos(ang)
                spare = rad * math.sin(ang)
                have_spare = True
            lx += mu * dt + sig * sdt * z
            while nxt >= 0 and (lx <= lower_logs[nxt] or lx >= upper_logs[nxt]):
                times[i, nxt] = (k + 1) * dt
                hit_logs[i, nxt] = lx
                nxt -= 1
            if nxt < 0:
                break
    return times, hit_logs


def _component_barriers(x: float, policy: GridPolicy):
    """Bracketing stopping states around x; raises if x lies inside the policy."""
    pts = policy.grid.points
    decomp = decompose_complement(policy)
    for comp in decomp.components:
        p = float(pts[comp.left_index]) if comp.left_index is not None else None
        q = float(pts[comp.right_index]) if comp.right_index is not None else None
        if (p is None or x > p) and (q is None or x < q):
            return p, q
    raise ValueError(f"start state {x} lies inside the stopping policy")


def _gbm_params(theta, priors: PriorFamily, objective: Objective):
    th = np.asarray(theta, dtype=float)
    b, sig = priors.coefficients(th, np.array([1.0]))
    b_coef, s_coef = float(np.asarray(b)[0]), float(np.asarray(sig)[0])
    r = priors.discount_for(th, objective.discount)
    return b_coef - 0.5 * s_coef**2, s_coef, r


def estimate_hitting_value(x: float, policy: GridPolicy, theta, objective: Objective,
                           cfg: SimConfig, priors: PriorFamily) -> HittingEstimate:
    """Simulated discounted payoff at the first entry into the policy set.

    Censored paths (no hit before the horizon) contribute zero.
    """
    p, q = _component_barriers(x, policy)
    if cfg.scheme == "exact-gbm":
        if not priors.kind.startswith("gbm"):
            raise ValueError("exact-gbm scheme requires a GBM prior family")
        mu, sig, r = _gbm_params(theta, priors, objective)
        lower = math.log(p) if p is not None else _NEG_INF
        upper = math.log(q) if q is not None else _POS_INF
        times, hit_logs = _sim_exact_gbm(math.log(x), mu, sig, lower, upper,
                                         cfg.dt, cfg.n_steps, cfg.n_paths,
                                         cfg.rng_seed)
        hit = np.isfinite(times)
        states = np.exp(hit_logs[hit])
    else:
        times, states_all = _sim_euler(x, theta, priors, objective, cfg, p, q)
        hit = np.isfinite(times)
        states = states_all[hit]
        r = priors.discount_for(np.asarray(theta, dtype=float), objective.discount)
    payoffs = np.zeros(cfg.n_paths)
    payoffs[hit] = np.exp(-r * times[hit]) * objective.payoff_values(states)
    mean = float(payoffs.mean())
    se = float(payoffs.std(ddof=1) / math.sqrt(cfg.n_paths))
    return HittingEstimate(mean, se, int(hit.sum()), int(cfg.n_paths - hit.sum()))


def _sim_euler(x, theta, priors, objective, cfg: SimConfig, p, q):
    """Vectorized Euler stepping for general coefficient families."""
    th = np.asarray(theta, dtype=float)
    rng = np.random.Generator(np.random.Philox(cfg.rng_seed))
    n = cfg.n_paths
    states = np.full(n, float(x))
    times = np.full(n, np.inf)
    hit_states = np.zeros(n)
    alive = np.ones(n, dtype=bool)
    sdt = math.sqrt(cfg.dt)
    lo = p if p is not None else -np.inf
    hi = q if q is not None else np.inf
    for k in range(cfg.n_steps):
        z = rng.standard_normal(n)
        if not alive.any():
            continue  # keep drawing so the stream layout is path-count invariant
        b, sig = priors.coefficients(th, states[alive])
        states[alive] = states[alive] + np.asarray(b) * cfg.dt + np.asarray(sig) * sdt * z[alive]
        crossed = alive.copy()
        crossed[alive] = (states[alive] <= lo) | (states[alive] >= hi)
        if crossed.any():
            times[crossed] = (k + 1) * cfg.dt
            hit_states[crossed] = states[crossed]
            alive &= ~crossed
    return times, hit_states


def empirical_maxmin(x: float, policy: GridPolicy, priors: PriorFamily,
                     objective: Objective, cfg: SimConfig) -> MaxminEstimate:
    """Extremal hitting-value estimates over the parameter grid, common random
    numbers shared across parameters, and their ambiguity-weighted combination."""
    grid = priors.theta_grid()
    if len(grid) == 0:
        raise ValueError("prior parameter grid is empty")
    estimates = [estimate_hitting_value(x, policy, th, objective, cfg, priors)
                 for th in grid]
    means = np.array([e.mean for e in estimates])
    i_min = int(np.argmin(means))
    i_max = int(np.argmax(means))
    a = objective.alpha
    j = a * means[i_min] + (1.0 - a) * means[i_max]
    j_se = math.sqrt((a * estimates[i_min].std_error) ** 2
                     + ((1.0 - a) * estimates[i_max].std_error) ** 2)
    return MaxminEstimate(estimates[i_min], estimates[i_max], float(j), j_se,
                          grid[i_min], grid[i_max])


def capacity_diagnostic(x: float, policy_sequence: Sequence[GridPolicy],
                        priors: PriorFamily, cfg: SimConfig,
                        epsilon: float) -> CapacityTable:
    """Exceedance frequencies of hitting times/states of a nondecreasing policy
    sequence against its union (last element), per path and parameter.

    Along each trajectory the hitting times are nonincreasing in the sequence
    index by construction; this is asserted exactly.
    """
    if len(policy_sequence) < 2:
        raise ValueError("need at least two policies")
    for a, b in zip(policy_sequence, policy_sequence[1:]):
        if not a.is_subset_of(b):
            raise ValueError("policy sequence must be nondecreasing")
    if cfg.scheme != "exact-gbm" or not priors.kind.startswith("gbm"):
        raise ValueError("capacity diagnostic supports the exact-gbm scheme only")
    barriers = [_component_barriers(x, pol) for pol in policy_sequence]
    lower_logs = np.array([math.log(p) if p is not None else _NEG_INF
                           for p, _ in barriers])
    upper_logs = np.array([math.log(q) if q is not None else _POS_INF
                           for _, q in barriers])
    grid = priors.theta_grid()
    n_pol = len(policy_sequence)
    time_freq = np.zeros(n_pol)
    state_freq = np.zeros(n_pol)
    for th in grid:
        b, sig = priors.coefficients(th, np.array([1.0]))
        s_coef = float(np.asarray(sig)[0])
        mu = float(np.asarray(b)[0]) - 0.5 * s_coef**2
        times, hit_logs = _sim_exact_gbm_nested(
            math.log(x), mu, s_coef, lower_logs, upper_logs,
            cfg.dt, cfg.n_steps, cfg.n_paths, cfg.rng_seed)
        # censor unabsorbed paths at the horizon: their hitting time is only
        # known to exceed it, so time differences are measured against that cap
        t_cap = np.where(np.isinf(times), cfg.horizon, times)
        if np.any(np.diff(t_cap, axis=1) > 0):
            raise AssertionError("pathwise hitting-time monotonicity violated")
        log_cap = np.clip(hit_logs, -700.0, 700.0)
        t0 = t_cap[:, -1]
        s0 = np.exp(log_cap[:, -1])
        for n in range(n_pol):
            dt_n = np.abs(t_cap[:, n] - t0)
            time_freq[n] = max(time_freq[n], float(np.mean(dt_n >= epsilon)))
            finite_n = np.isfinite(times[:, n])
            ds = np.where(finite_n, np.abs(np.exp(log_cap[:, n]) - s0), 0.0)
            state_freq[n] = max(state_freq[n], float(np.mean(ds >= epsilon)))
    return CapacityTable(np.arange(1, n_pol + 1), time_freq, state_freq,
                         epsilon, grid)
