"""Exit-value ODE solves and the ambiguity-weighted value profile."""
import numpy as np
import pytest

import equistop as eq
from equistop.value import default_tie_tol
from conftest import ALPHA, A_STAR, DISCOUNT, SIGMA_BAND, STRIKE


def _gbm_problem(p, q, left_value, right_value, sigma, discount=DISCOUNT):
    return eq.ExitValueProblem(
        p, q, left_value, right_value,
        drift=lambda y: discount * y,
        diffusion=lambda y: sigma * y,
        discount=discount,
    )


class TestSolveExitValue:
    def test_zero_boundary_data_gives_zero(self):
        prob = _gbm_problem(1.0, 5.0, 0.0, 0.0, 0.3)
        sol = eq.solve_exit_value(prob, 200)
        assert np.max(np.abs(sol.values)) < 1e-12

    def test_matches_hitting_factor_on_far_field_component(self):
        # component (a, far) with absorbing right end: u(x) = (K-a)(a/x)^{2r/s^2}
        a = 6.0
        for sigma in (0.2, 0.3, 0.4):
            prob = _gbm_problem(a, 10 * STRIKE, STRIKE - a, None, sigma)
            sol = eq.solve_exit_value(prob, 4000)
            xs = np.linspace(a * 1.05, 5 * STRIKE, 50)
            got = sol.values_at(xs)
            want = (STRIKE - a) * np.array(
                [eq.discounted_hitting_factor(x, a, DISCOUNT, sigma) for x in xs])
            rel = np.max(np.abs(got - want) / want)
            assert rel < 1e-4, f"sigma={sigma}: rel err {rel:.2e}"

    def test_second_order_convergence(self):
        a = 6.0
        xs = np.linspace(6.5, 40.0, 30)
        want = (STRIKE - a) * np.array(
            [eq.discounted_hitting_factor(x, a, DISCOUNT, 0.3) for x in xs])
        errs = []
        for n in (500, 1000, 2000, 4000):
            prob = _gbm_problem(a, 10 * STRIKE, STRIKE - a, None, 0.3)
            got = eq.solve_exit_value(prob, n).values_at(xs)
            errs.append(np.max(np.abs(got - want) / want))
        ratios = np.array(errs[:-1]) / np.array(errs[1:])
        assert np.all(ratios > 3.0), f"convergence ratios {ratios}"

    def test_heavier_discount_shrinks_values(self):
        xs = np.linspace(6.5, 40.0, 20)
        prev = None
        for r_mult in (1.0, 4.0, 16.0):
            r = DISCOUNT * r_mult
            prob = eq.ExitValueProblem(
                6.0, 10 * STRIKE, 4.0, None,
                drift=lambda y: DISCOUNT * y,
                diffusion=lambda y: 0.3 * y,
                discount=r,
            )
            vals = eq.solve_exit_value(prob, 1000).values_at(xs)
            if prev is not None:
                assert np.all(vals < prev)
            prev = vals

    def test_values_bounded_by_boundary_data(self):
        prob = _gbm_problem(2.0, 50.0, 5.0, 1.0, 0.25)
        sol = eq.solve_exit_value(prob, 800)
        assert np.all(sol.values >= -1e-8)
        assert np.all(sol.values <= 5.0 + 1e-8)

    def test_rejects_bad_inputs(self):
        with pytest.raises(ValueError):
            _gbm_problem(5.0, 2.0, 1.0, 0.0, 0.3)
        with pytest.raises(ValueError):
            eq.solve_exit_value(_gbm_problem(1.0, 2.0, 1.0, 0.0, 0.3), 2)
        bad = eq.ExitValueProblem(
            1.0, 2.0, 1.0, 0.0,
            drift=lambda y: 0.05 * y,
            diffusion=lambda y: 0.0 * y,
            discount=0.05,
        )
        with pytest.raises(ValueError):
            eq.solve_exit_value(bad, 100)


class TestAlphaMaxminValue:
    def test_full_policy_reproduces_payoff_exactly(self, grid, objective, priors):
        profile = eq.alpha_maxmin_value(eq.GridPolicy.full(grid), objective, priors,
                                        n_nodes=200)
        g = objective.payoff_values(grid.points)
        assert np.array_equal(profile.j_values, g)

    def test_payoff_on_policy_points_bit_exact(self, grid, objective, priors):
        pol = eq.GridPolicy.from_threshold(grid, 6.0)
        profile = eq.alpha_maxmin_value(pol, objective, priors, n_nodes=500)
        g = objective.payoff_values(grid.points)
        assert np.array_equal(profile.j_values[pol.mask], g[pol.mask])

    def test_empty_policy_put_mode_value_zero(self, grid, objective, priors):
        profile = eq.alpha_maxmin_value(eq.GridPolicy.empty(grid), objective, priors,
                                        n_nodes=200)
        assert np.all(profile.j_values == 0.0)

    def test_matches_lambda_oracle(self, objective, priors):
        grid = eq.build_grid(eq.StateInterval(0.0), 2000, (0.1, 100.0))
        prob = eq.PutGbmProblem(STRIKE, DISCOUNT, SIGMA_BAND, ALPHA)
        a = 6.0
        pol = eq.GridPolicy.from_threshold(grid, a)
        a_snap = pol.threshold()
        profile = eq.alpha_maxmin_value(pol, objective, priors, n_nodes=4000)
        sel = (grid.points > a_snap * 1.02) & (grid.points < 5 * STRIKE)
        want = np.array([eq.lambda_value(x, a_snap, prob)
                         for x in grid.points[sel]])
        rel = np.max(np.abs(profile.j_values[sel] - want) / want)
        assert rel < 1e-4, f"rel err vs closed form {rel:.2e}"

    def test_alpha_endpoints_select_pure_profiles(self, grid, priors):
        pol = eq.GridPolicy.from_threshold(grid, 6.0)
        for alpha, pick in ((1.0, "inf_values"), (0.0, "sup_values")):
            obj = eq.Objective.put(STRIKE, DISCOUNT, alpha)
            profile = eq.alpha_maxmin_value(pol, obj, priors, n_nodes=500)
            assert np.array_equal(profile.j_values, getattr(profile, pick))

    def test_profile_identities(self, grid, objective, priors):
        pol = eq.GridPolicy.from_threshold(grid, 6.0)
        profile = eq.alpha_maxmin_value(pol, objective, priors, n_nodes=500)
        assert np.all(profile.inf_values <= profile.sup_values + 1e-15)
        combo = ALPHA * profile.inf_values + (1 - ALPHA) * profile.sup_values
        assert np.array_equal(profile.j_values[~pol.mask], combo[~pol.mask])

    def test_extremes_attained_at_band_edges(self, grid, objective, priors):
        pol = eq.GridPolicy.from_threshold(grid, 6.0)
        profile = eq.alpha_maxmin_value(pol, objective, priors, n_nodes=500)
        interior = (~pol.mask) & (grid.points < 5 * STRIKE)
        assert np.allclose(profile.argmin_theta[interior, 0], SIGMA_BAND[0])
        assert np.allclose(profile.argmax_theta[interior, 0], SIGMA_BAND[1])

    def test_rejects_empty_prior_grid(self, grid, objective):
        class _NoThetas:
            def theta_grid(self):
                return np.empty((0, 1))

        pol = eq.GridPolicy.from_threshold(grid, 6.0)
        with pytest.raises(ValueError):
            eq.alpha_maxmin_value(pol, objective, _NoThetas(), n_nodes=200)


class TestSplitRegions:
    def _profile(self, grid, objective, priors, a):
        pol = eq.GridPolicy.from_threshold(grid, a)
        profile = eq.alpha_maxmin_value(pol, objective, priors, n_nodes=2000)
        return pol, profile

    def test_policy_points_are_indifferent(self, grid, objective, priors):
        pol, profile = self._profile(grid, objective, priors, 6.0)
        s, i, c = eq.split_regions(profile, pol, objective)
        assert np.all(i[pol.mask])

    def test_masks_partition_grid(self, grid, objective, priors):
        pol, profile = self._profile(grid, objective, priors, 6.0)
        s, i, c = eq.split_regions(profile, pol, objective)
        assert np.all(s.astype(int) + i.astype(int) + c.astype(int) == 1)

    def test_subcritical_threshold_has_stop_points_above(self, grid, objective, priors):
        pol, profile = self._profile(grid, objective, priors, 4.0)
        s, _, _ = eq.split_regions(profile, pol, objective)
        above = s & ~pol.mask
        assert above.any()
        assert grid.points[above].min() < 5.0  # stop demand appears just above a

    def test_supercritical_threshold_has_no_stop_points(self, grid, objective, priors):
        pol, profile = self._profile(grid, objective, priors, 8.0)
        s, _, _ = eq.split_regions(profile, pol, objective)
        assert not (s & ~pol.mask).any()

    def test_default_tie_tol_scale(self, objective):
        assert default_tie_tol(objective) == pytest.approx(1e-7 * STRIKE)
