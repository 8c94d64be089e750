"""Numerical evaluation of the ambiguity-weighted policy value J(x, R).

Each connected component of the complement of R yields a linear two-point
boundary-value problem per sampled prior (drift b u' + 0.5 sigma^2 u'' - r u = 0),
solved by second-order central finite differences on a uniform mesh
(logarithmic coordinate on positive domains) with tridiagonal elimination.
Far-field ends use a discrete absorbing boundary row that removes the growing
mode of the stencil, so the truncation radius contributes no leading-order error.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.linalg import solve_banded

from .model import (ComponentDecomposition, GridPolicy, Objective, PriorFamily,
                    decompose_complement)

log = logging.getLogger(__name__)

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


class SingularSystemError(RuntimeError):
    pass


@dataclass(frozen=True)
class ExitValueProblem:
    """Exit-value problem on one component (p, q) under one prior.

    ``left_value`` / ``right_value`` of None mark a far-field end: instead of a
    Dirichlet datum, the decaying-mode condition of the discrete operator is
    imposed there.
    """

    p: float
    q: float
    left_value: Optional[float]
    right_value: Optional[float]
    drift: Callable[[np.ndarray], np.ndarray]
    diffusion: Callable[[np.ndarray], np.ndarray]
    discount: float

    def __post_init__(self):
        if not self.p < self.q:
            raise ValueError("need p < q")
        if self.discount <= 0:
            raise ValueError("discount must be positive")
        for v in (self.left_value, self.right_value):
            if v is not None and not math.isfinite(v):
                raise ValueError("boundary values must be finite")


@dataclass(frozen=True)
class ExitSolution:
    nodes: np.ndarray          # state-space node positions
    values: np.ndarray
    log_mesh: bool

    def values_at(self, xs) -> np.ndarray:
        # cubic interpolation keeps the node-to-probe error below the
        # second-order truncation error of the solve itself
        xs = np.asarray(xs, dtype=float)
        if self.log_mesh:
            spline = CubicSpline(np.log(self.nodes), self.values)
            return spline(np.log(xs))
        return CubicSpline(self.nodes, self.values)(xs)


@dataclass(frozen=True)
class ValueProfile:
    """Per-grid-point inf/sup prior values and their alpha-combination."""

    inf_values: np.ndarray
    sup_values: np.ndarray
    j_values: np.ndarray
    argmin_theta: np.ndarray   # (n_points, dim); nan rows on policy points
    argmax_theta: np.ndarray


def _decaying_root(A: float, B: float, r: float, h: float, direction: int) -> float:
    """Root of the FD characteristic polynomial selecting the mode that decays
    toward the far-field end (direction +1: right end, -1: left end)."""
    c2 = A / h**2 + B / (2.0 * h)
    c1 = -(2.0 * A / h**2 + r)
    c0 = A / h**2 - B / (2.0 * h)
    disc = c1 * c1 - 4.0 * c2 * c0
    if disc < 0 or c2 == 0:
        raise SingularSystemError("far-field characteristic roots not real")
    sq = math.sqrt(disc)
    r1 = (-c1 + sq) / (2.0 * c2)
    r2 = (-c1 - sq) / (2.0 * c2)
    lo, hi = (r2, r1) if r1 >= r2 else (r1, r2)
    # roots straddle 1 since the polynomial at 1 equals -r < 0
    return lo if direction > 0 else hi


def solve_exit_value(problem: ExitValueProblem, n_nodes: int) -> ExitSolution:
    """Finite-difference solve of the exit-value boundary problem."""
    if n_nodes < 3:
        raise ValueError("n_nodes must be at least 3")
    use_log = problem.p > 0.0
    if use_log:
        mesh = np.linspace(math.log(problem.p), math.log(problem.q), n_nodes)
        y = np.exp(mesh)
        b, sig = problem.drift(y), problem.diffusion(y)
        sig = np.asarray(sig, dtype=float)
        if np.any(sig <= 0):
            raise ValueError("diffusion coefficient must be positive on [p, q]")
        A = 0.5 * (sig / y) ** 2
        B = np.asarray(b, dtype=float) / y - 0.5 * (sig / y) ** 2
    else:
        mesh = np.linspace(problem.p, problem.q, n_nodes)
        y = mesh
        b, sig = problem.drift(y), problem.diffusion(y)
        sig = np.asarray(sig, dtype=float)
        if np.any(sig <= 0):
            raise ValueError("diffusion coefficient must be positive on [p, q]")
        A = 0.5 * sig**2
        B = np.asarray(b, dtype=float)
    h = mesh[1] - mesh[0]
    r = problem.discount

    ab = np.zeros((3, n_nodes))
    rhs = np.zeros(n_nodes)
    ab[0, 2:] = A[1:-1] / h**2 + B[1:-1] / (2.0 * h)
    ab[1, 1:-1] = -2.0 * A[1:-1] / h**2 - r
    ab[2, :-2] = A[1:-1] / h**2 - B[1:-1] / (2.0 * h)

    if problem.left_value is not None:
        ab[1, 0] = 1.0
        rhs[0] = problem.left_value
    else:
        kap = _decaying_root(A[0], B[0], r, h, direction=-1)
        ab[1, 0] = kap
        ab[0, 1] = -1.0
    if problem.right_value is not None:
        ab[1, -1] = 1.0
        rhs[-1] = problem.right_value
    else:
        kap = _decaying_root(A[-1], B[-1], r, h, direction=+1)
        ab[1, -1] = 1.0
        ab[2, -2] = -kap

    try:
        u = solve_banded((1, 1), ab, rhs)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - r>0, sigma>0 rules this out
        raise SingularSystemError(
            f"singular exit-value system on ({problem.p}, {problem.q}): {exc}") from exc
    if not np.all(np.isfinite(u)):
        raise SingularSystemError(
            f"non-finite exit values on ({problem.p}, {problem.q})")
    return ExitSolution(y, u, use_log)


def default_tie_tol(objective: Objective) -> float:
    scale = objective.strike if objective.put_mode else 1.0
    return 1e-7 * max(1.0, scale)


class _ComponentSolver:
    """Per-theta exit-value solves on one component, cached by parameter."""

    def __init__(self, p, q, left_value, right_value, objective, priors, n_nodes, xs):
        self.p, self.q = p, q
        self.left_value, self.right_value = left_value, right_value
        self.objective = objective
        self.priors = priors
        self.n_nodes = n_nodes
        self.xs = xs
        self._cache: dict[tuple, np.ndarray] = {}

    def values(self, theta: np.ndarray) -> np.ndarray:
        key = tuple(np.asarray(theta, dtype=float))
        out = self._cache.get(key)
        if out is None:
            th = np.asarray(theta, dtype=float)
            prob = ExitValueProblem(
                self.p, self.q, self.left_value, self.right_value,
                drift=lambda y: self.priors.coefficients(th, y)[0],
                diffusion=lambda y: self.priors.coefficients(th, y)[1],
                discount=self.priors.discount_for(th, self.objective.discount),
            )
            out = solve_exit_value(prob, self.n_nodes).values_at(self.xs)
            self._cache[key] = out
        return out


def _golden_refine(solver: _ComponentSolver, theta_grid: np.ndarray,
                   incumbent: int, sign: float, rel_tol: float = 1e-6):
    """Enrich the candidate set near the incumbent parameter by golden-section
    search per dimension on the aggregate component value (sign=+1 minimizes)."""
    base = theta_grid[incumbent].copy()
    n_axes = theta_grid.shape[1]
    probes = []
    for d in range(n_axes):
        axis_vals = np.unique(theta_grid[:, d])
        pos = np.searchsorted(axis_vals, base[d])
        lo = axis_vals[max(pos - 1, 0)]
        hi = axis_vals[min(pos + 1, len(axis_vals) - 1)]
        if hi - lo <= rel_tol * max(1.0, abs(base[d])):
            continue

        def agg(v):
            th = base.copy()
            th[d] = v
            probes.append(th.copy())
            return sign * float(np.sum(solver.values(th)))

        a, b = lo, hi
        c = b - GOLDEN * (b - a)
        e = a + GOLDEN * (b - a)
        fc, fe = agg(c), agg(e)
        while b - a > rel_tol * max(1.0, abs(base[d])):
            if fc < fe:
                b, e, fe = e, c, fc
                c = b - GOLDEN * (b - a)
                fc = agg(c)
            else:
                a, c, fc = c, e, fe
                e = a + GOLDEN * (b - a)
                fe = agg(e)
        base[d] = 0.5 * (a + b)
    return probes


def alpha_maxmin_value(policy: GridPolicy, objective: Objective, priors: PriorFamily,
                       n_nodes: int = 4000, refine: bool = True,
                       component_cache: Optional[dict] = None) -> ValueProfile:
    """J(x, R) over the grid: payoff on R, exit-value inf/sup aggregation elsewhere."""
    pts = policy.grid.points
    n = len(pts)
    theta_grid = priors.theta_grid()
    if len(theta_grid) == 0:
        raise ValueError("prior parameter grid is empty")
    dim = theta_grid.shape[1]

    g = objective.payoff_values(pts)
    inf_v = g.copy()
    sup_v = g.copy()
    j_v = g.copy()
    argmin = np.full((n, dim), np.nan)
    argmax = np.full((n, dim), np.nan)

    decomp = decompose_complement(policy)
    for comp in decomp.components:
        sl = slice(comp.start, comp.stop)
        xs = pts[sl]
        if comp.left_index is None and comp.right_index is None and objective.put_mode:
            # policy is empty: the state never stops, discounted payoff vanishes
            inf_v[sl] = sup_v[sl] = j_v[sl] = 0.0
            argmin[sl] = theta_grid[0]
            argmax[sl] = theta_grid[0]
            continue
        p = pts[comp.left_index] if comp.left_index is not None else pts[0]
        q = pts[comp.right_index] if comp.right_index is not None else pts[-1]
        if comp.left_index is not None:
            left_value = float(g[comp.left_index])
        elif objective.put_mode:
            left_value = None
        else:
            log.warning("component reaches the lower truncation boundary; "
                        "using payoff(%g) as exit datum", p)
            left_value = float(objective.payoff_values(p))
        if comp.right_index is not None:
            right_value = float(g[comp.right_index])
        elif objective.put_mode:
            right_value = None
        else:
            log.warning("component reaches the upper truncation boundary; "
                        "using payoff(%g) as exit datum", q)
            right_value = float(objective.payoff_values(q))

        cache_key = (comp.left_index, comp.right_index)
        if component_cache is not None and cache_key in component_cache:
            c_inf, c_sup, c_amin, c_amax = component_cache[cache_key]
        else:
            solver = _ComponentSolver(p, q, left_value, right_value,
                                      objective, priors, n_nodes, xs)
            mat = np.stack([solver.values(th) for th in theta_grid])
            thetas = list(theta_grid)
            if refine and len(theta_grid) > 1:
                imin = int(np.argmin(np.sum(mat, axis=1)))
                imax = int(np.argmax(np.sum(mat, axis=1)))
                extra = (_golden_refine(solver, theta_grid, imin, +1.0)
                         + _golden_refine(solver, theta_grid, imax, -1.0))
                if extra:
                    mat = np.vstack([mat] + [solver.values(th)[None, :] for th in extra])
                    thetas = thetas + extra
            th_arr = np.asarray(thetas)
            kmin = np.argmin(mat, axis=0)
            kmax = np.argmax(mat, axis=0)
            idx = np.arange(mat.shape[1])
            c_inf = mat[kmin, idx]
            c_sup = mat[kmax, idx]
            c_amin = th_arr[kmin]
            c_amax = th_arr[kmax]
            if component_cache is not None:
                component_cache[cache_key] = (c_inf, c_sup, c_amin, c_amax)
        inf_v[sl] = c_inf
        sup_v[sl] = c_sup
        argmin[sl] = c_amin
        argmax[sl] = c_amax
        j_v[sl] = objective.alpha * c_inf + (1.0 - objective.alpha) * c_sup

    return ValueProfile(inf_v, sup_v, j_v, argmin, argmax)


def split_regions(profile: ValueProfile, policy: GridPolicy, objective: Objective,
                  tie_tol: Optional[float] = None):
    """Partition the grid into stop / indifference / continuation masks."""
    if tie_tol is None:
        tie_tol = default_tie_tol(objective)
    g = objective.payoff_values(policy.grid.points)
    d = g - profile.j_values
    s_mask = d > tie_tol
    i_mask = np.abs(d) <= tie_tol
    c_mask = -d > tie_tol
    return s_mask, i_mask, c_mask
