"""Monte Carlo estimators: reproducibility, closed-form consistency, capacity."""
import math

import numpy as np
import pytest

import equistop as eq
from equistop.mc import BARRIER_SHIFT_BETA
from conftest import ALPHA, A_STAR, DISCOUNT, SIGMA_BAND, STRIKE


def _bias_bound(exact, a, sigma, dt, m):
    """Documented discrete-monitoring bias allowance for a put barrier estimate."""
    return (m + a / (STRIKE - a)) * BARRIER_SHIFT_BETA * sigma * math.sqrt(dt) * exact


def _single_sigma(sigma):
    return eq.PriorFamily.gbm_volatility_band(DISCOUNT, sigma, sigma, 1)


class TestSimConfig:
    def test_validation(self):
        with pytest.raises(ValueError):
            eq.SimConfig(n_paths=10, dt=1e-3, horizon=1.0, rng_seed=1)
        with pytest.raises(ValueError):
            eq.SimConfig(n_paths=1000, dt=2.0, horizon=1.0, rng_seed=1)
        with pytest.raises(ValueError):
            eq.SimConfig(n_paths=1000, dt=1e-3, horizon=1.0, rng_seed=1,
                         scheme="milstein")

    def test_n_steps(self):
        cfg = eq.SimConfig(n_paths=1000, dt=0.25, horizon=10.0, rng_seed=1)
        assert cfg.n_steps == 40


class TestEstimateHittingValue:
    CFG = eq.SimConfig(n_paths=20000, dt=1e-3, horizon=100.0, rng_seed=20240817)

    def test_matches_closed_form(self, grid, objective):
        sigma = 0.4
        pol = eq.GridPolicy.from_threshold(grid, 6.0)
        a = pol.threshold()
        x = 6.3
        est = eq.estimate_hitting_value(x, pol, np.array([sigma]), objective,
                                        self.CFG, _single_sigma(sigma))
        exact = (STRIKE - a) * eq.discounted_hitting_factor(x, a, DISCOUNT, sigma)
        m = 2 * DISCOUNT / sigma ** 2
        tol = 3 * est.std_error + _bias_bound(exact, a, sigma, self.CFG.dt, m)
        assert abs(est.mean - exact) <= tol
        assert est.n_absorbed + est.n_censored == self.CFG.n_paths

    def test_bit_reproducible(self, grid, objective):
        pol = eq.GridPolicy.from_threshold(grid, 6.0)
        cfg = eq.SimConfig(n_paths=5000, dt=1e-3, horizon=20.0, rng_seed=7)
        runs = [eq.estimate_hitting_value(7.0, pol, np.array([0.3]), objective,
                                          cfg, _single_sigma(0.3))
                for _ in range(2)]
        assert runs[0].mean == runs[1].mean
        assert runs[0].std_error == runs[1].std_error
        other = eq.SimConfig(n_paths=5000, dt=1e-3, horizon=20.0, rng_seed=8)
        alt = eq.estimate_hitting_value(7.0, pol, np.array([0.3]), objective,
                                        other, _single_sigma(0.3))
        assert alt.mean != runs[0].mean

    def test_zero_payoff_gives_zero_mean(self, grid):
        obj = eq.Objective(DISCOUNT, ALPHA, lambda y: np.zeros_like(y))
        pol = eq.GridPolicy.from_threshold(grid, 6.0)
        cfg = eq.SimConfig(n_paths=1000, dt=1e-2, horizon=5.0, rng_seed=3)
        est = eq.estimate_hitting_value(7.0, pol, np.array([0.3]), obj,
                                        cfg, _single_sigma(0.3))
        assert est.mean == 0.0
        assert est.std_error == 0.0

    def test_barrier_just_below_start_hits_immediately(self, objective):
        fine = eq.build_grid(eq.StateInterval(0.0), 1001, (5.0, 7.0))
        pol = eq.GridPolicy.from_threshold(fine, 5.994)
        a = pol.threshold()
        cfg = eq.SimConfig(n_paths=1000, dt=1e-5, horizon=1.0, rng_seed=11)
        est = eq.estimate_hitting_value(6.0, pol, np.array([0.3]), objective,
                                        cfg, _single_sigma(0.3))
        assert est.mean == pytest.approx(STRIKE - a, rel=0.02)

    def test_rejects_start_inside_policy(self, grid, objective):
        pol = eq.GridPolicy.from_threshold(grid, 6.0)
        cfg = eq.SimConfig(n_paths=1000, dt=1e-3, horizon=1.0, rng_seed=1)
        with pytest.raises(ValueError):
            eq.estimate_hitting_value(3.0, pol, np.array([0.3]), objective,
                                      cfg, _single_sigma(0.3))

    def test_euler_scheme_consistent(self, grid, objective):
        sigma = 0.35
        pol = eq.GridPolicy.from_threshold(grid, 6.0)
        a = pol.threshold()
        cfg = eq.SimConfig(n_paths=2000, dt=1e-3, horizon=60.0, rng_seed=5,
                           scheme="euler")
        est = eq.estimate_hitting_value(6.5, pol, np.array([sigma]), objective,
                                        cfg, _single_sigma(sigma))
        exact = (STRIKE - a) * eq.discounted_hitting_factor(6.5, a, DISCOUNT, sigma)
        m = 2 * DISCOUNT / sigma ** 2
        tol = 4 * est.std_error + _bias_bound(exact, a, sigma, cfg.dt, m)
        assert abs(est.mean - exact) <= tol


class TestEmpiricalMaxmin:
    CFG = eq.SimConfig(n_paths=10000, dt=1e-3, horizon=100.0, rng_seed=99)

    def test_extremes_and_combination(self, grid, objective, problem):
        priors = eq.PriorFamily.gbm_volatility_band(DISCOUNT, *SIGMA_BAND, 3)
        pol = eq.GridPolicy.from_threshold(grid, 6.0)
        a = pol.threshold()
        x = 6.5
        mm = eq.empirical_maxmin(x, pol, priors, objective, self.CFG)
        assert mm.argmin_theta[0] == pytest.approx(SIGMA_BAND[0])
        assert mm.argmax_theta[0] == pytest.approx(SIGMA_BAND[1])
        exact = eq.lambda_value(x, a, eq.PutGbmProblem(STRIKE, DISCOUNT,
                                                       SIGMA_BAND, ALPHA))
        bias = max(_bias_bound(exact, a, s, self.CFG.dt, 2 * DISCOUNT / s ** 2)
                   for s in SIGMA_BAND)
        assert abs(mm.j_estimate - exact) <= 3 * mm.j_std_error + bias

    def test_alpha_one_is_pure_inf(self, grid):
        obj = eq.Objective.put(STRIKE, DISCOUNT, 1.0)
        priors = eq.PriorFamily.gbm_volatility_band(DISCOUNT, *SIGMA_BAND, 3)
        pol = eq.GridPolicy.from_threshold(grid, 6.0)
        cfg = eq.SimConfig(n_paths=2000, dt=1e-3, horizon=30.0, rng_seed=4)
        mm = eq.empirical_maxmin(6.5, pol, priors, obj, cfg)
        assert mm.j_estimate == mm.inf_estimate.mean


class TestCapacityDiagnostic:
    def _nested(self, grid, n=6):
        return [eq.GridPolicy.from_threshold(grid, A_STAR - 1.0 / k)
                for k in range(1, n + 1)]

    def test_frequencies_trend_down(self, grid):
        priors = eq.PriorFamily.gbm_volatility_band(DISCOUNT, *SIGMA_BAND, 3)
        cfg = eq.SimConfig(n_paths=4000, dt=2e-3, horizon=60.0, rng_seed=5)
        table = eq.capacity_diagnostic(6.5, self._nested(grid), priors, cfg, 0.05)
        assert table.time_freq[-1] <= table.time_freq[0]
        assert table.state_freq[-1] <= table.state_freq[0]
        assert np.all(table.time_freq >= 0) and np.all(table.time_freq <= 1)

    def test_epsilon_beyond_horizon_all_zero(self, grid):
        priors = eq.PriorFamily.gbm_volatility_band(DISCOUNT, *SIGMA_BAND, 2)
        cfg = eq.SimConfig(n_paths=500, dt=1e-2, horizon=5.0, rng_seed=5)
        table = eq.capacity_diagnostic(6.5, self._nested(grid, 3), priors, cfg,
                                       epsilon=1e6)
        assert np.all(table.time_freq == 0.0)
        assert np.all(table.state_freq == 0.0)

    def test_constant_sequence_all_zero(self, grid):
        priors = eq.PriorFamily.gbm_volatility_band(DISCOUNT, *SIGMA_BAND, 2)
        pol = eq.GridPolicy.from_threshold(grid, 5.0)
        cfg = eq.SimConfig(n_paths=500, dt=1e-2, horizon=5.0, rng_seed=5)
        table = eq.capacity_diagnostic(6.5, [pol, pol, pol], priors, cfg, 0.05)
        assert np.all(table.time_freq == 0.0)
        assert np.all(table.state_freq == 0.0)

    def test_rejects_bad_sequences(self, grid):
        priors = eq.PriorFamily.gbm_volatility_band(DISCOUNT, *SIGMA_BAND, 2)
        cfg = eq.SimConfig(n_paths=500, dt=1e-2, horizon=5.0, rng_seed=5)
        big = eq.GridPolicy.from_threshold(grid, 6.0)
        small = eq.GridPolicy.from_threshold(grid, 5.0)
        with pytest.raises(ValueError):
            eq.capacity_diagnostic(6.5, [big, small], priors, cfg, 0.05)
        with pytest.raises(ValueError):
            eq.capacity_diagnostic(6.5, [big], priors, cfg, 0.05)
