"""Monotone operator on stopping policies, fixed-point iteration, and
equilibrium verification / comparison."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from .model import (GridPolicy, Objective, PriorFamily, StateInterval,
                    build_grid)
from .value import alpha_maxmin_value, default_tie_tol, split_regions


class ConvergenceError(RuntimeError):
    """Iteration exhausted max_iter; carries the partial trace."""

    def __init__(self, message: str, trace: "IterationTrace"):
        super().__init__(message)
        self.trace = trace


@dataclass
class IterationTrace:
    policies: list[GridPolicy]
    added_points: list[int]
    converged: bool

    @property
    def n_steps(self) -> int:
        return len(self.policies) - 1

    @property
    def final(self) -> GridPolicy:
        return self.policies[-1]


@dataclass(frozen=True)
class EquilibriumCheck:
    is_equilibrium: bool
    added_indices: np.ndarray    # points in S \ R
    dropped_indices: np.ndarray  # points in R \ (S u I); empty by construction
    image: GridPolicy


@dataclass(frozen=True)
class ComparisonResult:
    verdict: str                 # a-dominates | b-dominates | equal | incomparable
    value_a: np.ndarray
    value_b: np.ndarray
    gaps: np.ndarray             # value_a - value_b per grid point


def _apply_theta(policy: GridPolicy, objective: Objective, priors: PriorFamily,
                 n_nodes: int, tie_tol: Optional[float], refine: bool,
                 component_cache: Optional[dict]):
    profile = alpha_maxmin_value(policy, objective, priors, n_nodes=n_nodes,
                                 refine=refine, component_cache=component_cache)
    s_mask, i_mask, _ = split_regions(profile, policy, objective, tie_tol)
    new_mask = s_mask | (i_mask & policy.mask)
    return GridPolicy(policy.grid, new_mask), s_mask, i_mask


def theta(policy: GridPolicy, objective: Objective, priors: PriorFamily,
          n_nodes: int = 4000, tie_tol: Optional[float] = None,
          refine: bool = True) -> GridPolicy:
    """One application of the stopping-policy operator: S_R union (I_R intersect R)."""
    new_policy, _, _ = _apply_theta(policy, objective, priors, n_nodes, tie_tol,
                                    refine, None)
    assert policy.is_subset_of(new_policy), "operator must not shrink the policy"
    return new_policy


def iterate_to_equilibrium(seed: GridPolicy, objective: Objective, priors: PriorFamily,
                           max_iter: Optional[int] = None, n_nodes: int = 4000,
                           tie_tol: Optional[float] = None,
                           refine: bool = True) -> IterationTrace:
    """Apply the operator until the policy mask stops changing.

    Monotone growth bounds the step count by the number of grid points.
    """
    if max_iter is None:
        max_iter = len(seed.grid) + 1
    if max_iter < 1:
        raise ValueError("max_iter must be at least 1")
    cache: dict = {}
    trace = IterationTrace([seed], [], converged=False)
    current = seed
    for _ in range(max_iter):
        nxt, _, _ = _apply_theta(current, objective, priors, n_nodes, tie_tol,
                                 refine, cache)
        assert current.is_subset_of(nxt)
        # cache keys are component endpoint indices, so untouched components
        # are reused and only components changed by new points are re-solved
        added = int(np.sum(nxt.mask & ~current.mask))
        trace.policies.append(nxt)
        trace.added_points.append(added)
        if added == 0:
            trace.converged = True
            return trace
        current = nxt
    raise ConvergenceError(
        f"no fixed point after {max_iter} operator applications "
        "(tie tolerance may be unstable)", trace)


def is_equilibrium(policy: GridPolicy, objective: Objective, priors: PriorFamily,
                   n_nodes: int = 4000, tie_tol: Optional[float] = None,
                   refine: bool = True) -> EquilibriumCheck:
    """Whether the operator fixes the policy, with violating points as witnesses."""
    image, s_mask, i_mask = _apply_theta(policy, objective, priors, n_nodes,
                                         tie_tol, refine, None)
    added = np.flatnonzero(s_mask & ~policy.mask)
    dropped = np.flatnonzero(policy.mask & ~(s_mask | i_mask))
    ok = bool(np.array_equal(image.mask, policy.mask))
    return EquilibriumCheck(ok, added, dropped, image)


def policy_values(policy: GridPolicy, objective: Objective, priors: PriorFamily,
                  n_nodes: int = 4000, refine: bool = True) -> np.ndarray:
    """V(x, R) = max(payoff, J) on the grid."""
    profile = alpha_maxmin_value(policy, objective, priors, n_nodes=n_nodes,
                                 refine=refine)
    g = objective.payoff_values(policy.grid.points)
    return np.maximum(g, profile.j_values)


def compare_equilibria(policy_a: GridPolicy, policy_b: GridPolicy,
                       objective: Objective, priors: PriorFamily,
                       n_nodes: int = 4000, tie_tol: Optional[float] = None,
                       refine: bool = True) -> ComparisonResult:
    """Pointwise dominance of two equilibrium policies in V."""
    if tie_tol is None:
        tie_tol = default_tie_tol(objective)
    for name, pol in (("a", policy_a), ("b", policy_b)):
        chk = is_equilibrium(pol, objective, priors, n_nodes, tie_tol, refine)
        if not chk.is_equilibrium:
            raise ValueError(f"policy_{name} is not an equilibrium "
                             f"({len(chk.added_indices)} stop-region violations)")
    va = policy_values(policy_a, objective, priors, n_nodes, refine)
    vb = policy_values(policy_b, objective, priors, n_nodes, refine)
    gaps = va - vb
    a_ge = bool(np.all(gaps >= -tie_tol))
    b_ge = bool(np.all(gaps <= tie_tol))
    if a_ge and b_ge:
        verdict = "equal"
    elif a_ge:
        verdict = "a-dominates"
    elif b_ge:
        verdict = "b-dominates"
    else:
        verdict = "incomparable"
    return ComparisonResult(verdict, va, vb, gaps)


class EquilibriumSolver(BaseEstimator):
    """Estimator-style front end: fit() runs the fixed-point iteration for the
    put/GBM volatility-band problem, predict() maps states to stop decisions.
    """

    def __init__(self, strike=10.0, discount=0.05, alpha=0.5,
                 sigma_low=0.2, sigma_high=0.4,
                 n_points=2000, truncation=None, theta_samples=17,
                 seed_policy="empty", seed_threshold=None,
                 n_nodes=4000, tie_tol=None, max_iter=None, refine=True):
        self.strike = strike
        self.discount = discount
        self.alpha = alpha
        self.sigma_low = sigma_low
        self.sigma_high = sigma_high
        self.n_points = n_points
        self.truncation = truncation
        self.theta_samples = theta_samples
        self.seed_policy = seed_policy
        self.seed_threshold = seed_threshold
        self.n_nodes = n_nodes
        self.tie_tol = tie_tol
        self.max_iter = max_iter
        self.refine = refine

    def _build(self):
        trunc = self.truncation
        if trunc is None:
            trunc = (self.strike / 100.0, 10.0 * self.strike)
        grid = build_grid(StateInterval(0.0), self.n_points, trunc)
        objective = Objective.put(self.strike, self.discount, self.alpha)
        priors = PriorFamily.gbm_volatility_band(
            self.discount, self.sigma_low, self.sigma_high, self.theta_samples)
        return grid, objective, priors

    def _seed(self, grid, objective):
        kind = self.seed_policy
        if kind == "empty":
            return GridPolicy.empty(grid)
        if kind == "full":
            return GridPolicy.full(grid)
        if kind == "payoff-support":
            return GridPolicy(grid, objective.payoff_values(grid.points) > 0)
        if kind == "threshold":
            if self.seed_threshold is None:
                raise ValueError("seed_policy='threshold' requires seed_threshold")
            return GridPolicy.from_threshold(grid, self.seed_threshold)
        raise ValueError(f"unknown seed_policy {kind!r}")

    def fit(self, X=None, y=None):
        grid, objective, priors = self._build()
        seed = self._seed(grid, objective)
        trace = iterate_to_equilibrium(seed, objective, priors,
                                       max_iter=self.max_iter,
                                       n_nodes=self.n_nodes,
                                       tie_tol=self.tie_tol,
                                       refine=self.refine)
        self.grid_ = grid
        self.objective_ = objective
        self.priors_ = priors
        self.trace_ = trace
        self.policy_ = trace.final
        self.threshold_ = trace.final.threshold()
        self.n_iter_ = trace.n_steps
        return self

    def predict(self, X):
        """True where the fitted policy says stop (nearest grid point lookup)."""
        check_is_fitted(self, "policy_")
        X = check_array(X, ensure_2d=False, dtype=float)
        pts = self.grid_.points
        idx = np.clip(np.round((X - pts[0]) / self.grid_.spacing).astype(int),
                      0, len(pts) - 1)
        return self.policy_.mask[idx]

    def decision_function(self, X):
        """Payoff minus continuation value, interpolated; positive favors stopping."""
        check_is_fitted(self, "policy_")
        X = check_array(X, ensure_2d=False, dtype=float)
        profile = alpha_maxmin_value(self.policy_, self.objective_, self.priors_,
                                     n_nodes=self.n_nodes, refine=self.refine)
        g = self.objective_.payoff_values(self.grid_.points)
        return np.interp(X, self.grid_.points, g - profile.j_values)
