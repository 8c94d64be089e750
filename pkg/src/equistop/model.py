"""Shared domain types: state space, prior families, objective, grid and policies."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

PRIOR_KINDS = (
    "gbm-vol-band",
    "gbm-vol-and-rate-band",
    "gbm-vol-and-drift-band",
    "general-parametric",
)


@dataclass(frozen=True)
class StateInterval:
    """Open interval (lo, hi) of admissible states; hi may be +inf."""

    lo: float
    hi: float = math.inf

    def __post_init__(self):
        if not self.lo < self.hi:
            raise ValueError(f"need lo < hi, got ({self.lo}, {self.hi})")

    @property
    def unbounded(self) -> bool:
        return math.isinf(self.hi) or math.isinf(self.lo)


@dataclass(frozen=True)
class PriorFamily:
    """Finitely parameterized family theta -> (drift, diffusion) of diffusion coefficients.

    ``coeff_eval(theta, y)`` must accept vector ``y`` and return (b, sigma) arrays.
    ``discount_eval``, when set, lets a parameter carry its own discount rate
    (rate-uncertainty mode); otherwise the objective's rate is used everywhere.
    """

    kind: str
    param_box: tuple[tuple[float, float], ...]
    coeff_eval: Callable[[np.ndarray, np.ndarray], tuple[np.ndarray, np.ndarray]]
    param_grid_counts: tuple[int, ...]
    discount_eval: Optional[Callable[[np.ndarray], float]] = None

    def __post_init__(self):
        if self.kind not in PRIOR_KINDS:
            raise ValueError(f"unknown prior kind {self.kind!r}")
        if len(self.param_box) != len(self.param_grid_counts):
            raise ValueError("param_box and param_grid_counts length mismatch")
        for lo, hi in self.param_box:
            if not lo <= hi:
                raise ValueError(f"parameter box [{lo}, {hi}] has low > high")
        for n in self.param_grid_counts:
            if n < 1:
                raise ValueError("param_grid_counts entries must be >= 1")

    @property
    def dim(self) -> int:
        return len(self.param_box)

    def theta_grid(self) -> np.ndarray:
        """Cartesian product of per-dimension uniform grids, shape (n_thetas, dim)."""
        axes = []
        for (lo, hi), n in zip(self.param_box, self.param_grid_counts):
            axes.append(np.linspace(lo, hi, n) if n > 1 else np.array([0.5 * (lo + hi)]))
        return np.array(list(itertools.product(*axes)))

    def coefficients(self, theta: np.ndarray, y: np.ndarray):
        return self.coeff_eval(np.asarray(theta, dtype=float), np.asarray(y, dtype=float))

    def discount_for(self, theta: np.ndarray, base: float) -> float:
        if self.discount_eval is None:
            return base
        return float(self.discount_eval(np.asarray(theta, dtype=float)))

    # ---- factories -------------------------------------------------------

    @classmethod
    def gbm_volatility_band(cls, discount: float, sigma_low: float, sigma_high: float,
                            samples: int = 17) -> "PriorFamily":
        if not 0 < sigma_low <= sigma_high:
            raise ValueError("need 0 < sigma_low <= sigma_high")

        def coeff(theta, y):
            return discount * y, theta[0] * y

        return cls("gbm-vol-band", ((sigma_low, sigma_high),), coeff, (samples,))

    @classmethod
    def gbm_volatility_rate_band(cls, sigma_band: tuple[float, float],
                                 rate_band: tuple[float, float],
                                 samples: tuple[int, int] = (17, 5)) -> "PriorFamily":
        if not 0 < sigma_band[0] <= sigma_band[1]:
            raise ValueError("need 0 < sigma_low <= sigma_high")
        if not 0 < rate_band[0] <= rate_band[1]:
            raise ValueError("need 0 < rate_low <= rate_high")

        def coeff(theta, y):
            # risk-neutral drift equals the parameter's own rate
            return theta[1] * y, theta[0] * y

        return cls("gbm-vol-and-rate-band", (tuple(sigma_band), tuple(rate_band)),
                   coeff, tuple(samples), discount_eval=lambda th: th[1])

    @classmethod
    def gbm_volatility_drift_band(cls, sigma_band: tuple[float, float],
                                  drift_band: tuple[float, float],
                                  samples: tuple[int, int] = (17, 5)) -> "PriorFamily":
        if not 0 < sigma_band[0] <= sigma_band[1]:
            raise ValueError("need 0 < sigma_low <= sigma_high")
        if not 0 < drift_band[0] <= drift_band[1]:
            raise ValueError("need 0 < drift_low <= drift_high")

        def coeff(theta, y):
            return theta[1] * y, theta[0] * y

        return cls("gbm-vol-and-drift-band", (tuple(sigma_band), tuple(drift_band)),
                   coeff, tuple(samples))

    @classmethod
    def parametric(cls, coeff_eval, param_box, samples) -> "PriorFamily":
        return cls("general-parametric", tuple(tuple(b) for b in param_box),
                   coeff_eval, tuple(samples))


@dataclass(frozen=True)
class Objective:
    """Discounted stopping objective with ambiguity-aversion weight alpha."""

    discount: float
    alpha: float
    payoff: Callable[[np.ndarray], np.ndarray]
    strike: Optional[float] = None

    def __post_init__(self):
        if self.discount <= 0:
            raise ValueError("discount must be positive")
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError("alpha must lie in [0, 1]")
        if self.strike is not None and self.strike <= 0:
            raise ValueError("strike must be positive")

    @property
    def put_mode(self) -> bool:
        return self.strike is not None

    def payoff_values(self, y) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        return np.asarray(self.payoff(y), dtype=float)

    @classmethod
    def put(cls, strike: float, discount: float, alpha: float) -> "Objective":
        return cls(discount, alpha, lambda y: np.maximum(strike - y, 0.0), strike)


@dataclass(frozen=True)
class StateGrid:
    """Uniform grid of states strictly inside the interval."""

    points: np.ndarray
    spacing: float

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        object.__setattr__(self, "points", pts)
        if len(pts) < 3:
            raise ValueError("grid needs at least 3 points")
        d = np.diff(pts)
        if np.any(d <= 0):
            raise ValueError("grid points must be strictly increasing")
        if np.max(np.abs(d - self.spacing)) > 1e-12 * max(1.0, abs(self.spacing)):
            raise ValueError("grid is not uniform to tolerance")

    def __len__(self) -> int:
        return len(self.points)


@dataclass(frozen=True)
class GridPolicy:
    """Stopping policy: boolean mask over the grid, closed-set semantics."""

    grid: StateGrid
    mask: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.mask, dtype=bool)
        object.__setattr__(self, "mask", m)
        if len(m) != len(self.grid):
            raise ValueError("mask length must equal number of grid points")

    @classmethod
    def from_threshold(cls, grid: StateGrid, threshold: float) -> "GridPolicy":
        return cls(grid, grid.points <= threshold)

    @classmethod
    def empty(cls, grid: StateGrid) -> "GridPolicy":
        return cls(grid, np.zeros(len(grid), dtype=bool))

    @classmethod
    def full(cls, grid: StateGrid) -> "GridPolicy":
        return cls(grid, np.ones(len(grid), dtype=bool))

    def threshold(self) -> float:
        """Largest state in the policy; nan if the policy is empty."""
        if not self.mask.any():
            return math.nan
        return float(self.grid.points[np.flatnonzero(self.mask)[-1]])

    def is_subset_of(self, other: "GridPolicy") -> bool:
        return bool(np.all(~self.mask | other.mask))


@dataclass(frozen=True)
class Component:
    """Maximal run of non-policy grid points, bracketed by policy points or boundaries.

    ``left_index``/``right_index`` are indices of the bracketing policy points
    (None means the domain boundary); ``start``/``stop`` delimit the run,
    stop exclusive.
    """

    left_index: Optional[int]
    right_index: Optional[int]
    start: int
    stop: int


@dataclass(frozen=True)
class ComponentDecomposition:
    components: tuple[Component, ...]
    n_points: int

    def reassemble_mask(self) -> np.ndarray:
        mask = np.ones(self.n_points, dtype=bool)
        for c in self.components:
            mask[c.start:c.stop] = False
        return mask


def build_grid(interval: StateInterval, n_points: int,
               truncation: Optional[Sequence[float]] = None) -> StateGrid:
    """Uniform grid over the (possibly truncated) interval."""
    if n_points < 3:
        raise ValueError("n_points must be at least 3")
    if truncation is None:
        if interval.unbounded:
            raise ValueError("unbounded interval requires an explicit truncation pair")
        # inset by one step so all points are strictly inside the open interval
        inner = np.linspace(interval.lo, interval.hi, n_points + 2)[1:-1]
        return StateGrid(inner, float(inner[1] - inner[0]))
    lo, hi = float(truncation[0]), float(truncation[1])
    if not (math.isfinite(lo) and math.isfinite(hi)):
        raise ValueError("truncation must be finite")
    if not (interval.lo < lo < hi < interval.hi):
        raise ValueError("truncation pair must lie strictly inside the interval")
    pts = np.linspace(lo, hi, n_points)
    return StateGrid(pts, float(pts[1] - pts[0]))


def decompose_complement(policy: GridPolicy) -> ComponentDecomposition:
    """All maximal runs of non-policy points with their bracketing endpoints."""
    mask = policy.mask
    n = len(mask)
    comps = []
    i = 0
    while i < n:
        if mask[i]:
            i += 1
            continue
        j = i
        while j < n and not mask[j]:
            j += 1
        left = i - 1 if i > 0 else None
        right = j if j < n else None
        comps.append(Component(left, right, i, j))
        i = j
    return ComponentDecomposition(tuple(comps), n)
