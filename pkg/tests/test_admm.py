from dataclasses import replace

import numpy as np
import pytest

from gcrf.admm import (
    AdmmState,
    dual_update,
    fit_admm,
    lagrangian,
    lagrangian_gradients,
    lambda_theta_step,
    penalty_update,
    phi_step,
    residual,
)
from gcrf.core import ModelParams, SufficientStats, closed_form_mle, coupling, gradients, objective
from gcrf.evalkit import standard_suite
from gcrf.gd import SolverConfig, fit_gd

from conftest import central_difference, random_params, random_stats, rel_error


def random_state(rng, n, p, mu=None):
    params = random_params(rng, n, p)
    a = rng.standard_normal((n, n))
    b = rng.standard_normal((n, n))
    return AdmmState(
        params,
        coupling(params) + 0.3 * (a + a.T),
        0.5 * (b + b.T),
        float(rng.uniform(0.01, 20)) if mu is None else mu,
    )


class TestResidual:
    def test_feasible(self, rng):
        q = random_params(rng, 3, 2)
        assert np.abs(residual(q, coupling(q))).max() < 1e-15

    def test_scalar(self):
        np.testing.assert_allclose(residual(ModelParams([[1.0]], [[1.0]]), [[3.0]]), [[2.0]])

    def test_zero_theta(self, rng):
        phi = np.array([[1.0, 0.2], [0.2, 3.0]])
        np.testing.assert_array_equal(residual(ModelParams(np.eye(3) * 2, np.zeros((2, 3))), phi), phi)


class TestLagrangian:
    def test_equals_objective_when_feasible(self, rng):
        s = random_stats(rng, 3, 2)
        state = random_state(rng, 3, 2)
        state = replace(state, phi=coupling(state.params))
        assert lagrangian(s, state) == pytest.approx(objective(s, state.params), rel=1e-14, abs=1e-14)

    def test_scalar(self):
        s = SufficientStats([[1.0]], [[0.0]], [[1.0]])
        state = AdmmState(ModelParams([[1.0]], [[0.0]]), np.array([[2.0]]), np.array([[1.0]]), 2.0)
        assert lagrangian(s, state) == pytest.approx(9.0, abs=1e-14)

    def test_linear_in_dual(self, rng):
        s = random_stats(rng, 3, 2)
        state = random_state(rng, 3, 2)
        r = residual(state.params, state.phi)
        base = lagrangian(s, replace(state, dual=np.zeros((3, 3))))
        one = lagrangian(s, state)
        two = lagrangian(s, replace(state, dual=2 * state.dual))
        inner = np.sum(state.dual * r)
        assert one - base == pytest.approx(inner, abs=1e-10)
        assert two - base == pytest.approx(2 * inner, abs=1e-10)

    def test_gradients_match_finite_differences(self, rng):
        s = random_stats(rng, 4, 3)
        state = random_state(rng, 4, 3)
        q = state.params
        g_lam, g_theta = lagrangian_gradients(s, state)
        fd_lam = central_difference(
            lambda L: lagrangian(s, replace(state, params=ModelParams(L, q.theta))), q.lam)
        fd_theta = central_difference(
            lambda T: lagrangian(s, replace(state, params=ModelParams(q.lam, T))), q.theta)
        assert rel_error(fd_lam, g_lam) < 1e-6
        assert rel_error(fd_theta, g_theta) < 1e-6

    def test_uncoupled_gradients(self, rng):
        s = random_stats(rng, 3, 2)
        state = random_state(rng, 3, 2, mu=0.0)
        state = replace(state, dual=np.zeros((3, 3)))
        g_lam, g_theta = lagrangian_gradients(s, state)
        np.testing.assert_allclose(g_lam, -np.linalg.inv(state.params.lam) + s.s_yy, atol=1e-12)
        np.testing.assert_allclose(g_theta, 2 * s.s_yx.T, atol=1e-14)


class TestPhiStep:
    def test_scalar(self):
        s = SufficientStats([[1.0]], [[0.0]], [[1.0]])
        state = AdmmState(ModelParams([[1.0]], [[1.0]]), np.zeros((1, 1)), np.zeros((1, 1)), 1.0)
        np.testing.assert_allclose(phi_step(s, state), [[0.0]], atol=1e-15)

    def test_unpenalized_is_feasible(self, rng):
        state = replace(random_state(rng, 3, 2), dual=np.zeros((3, 3)))
        s = SufficientStats(np.eye(2), np.zeros((2, 3)), np.zeros((3, 3)))
        np.testing.assert_allclose(phi_step(s, state), coupling(state.params), atol=1e-14)

    def test_large_mu_limit(self, rng):
        s = random_stats(rng, 3, 2)
        state = random_state(rng, 3, 2, mu=1e6)
        assert np.abs(phi_step(s, state) - coupling(state.params)).max() < 1e-5

    def test_optimality(self, rng):
        for _ in range(20):
            s = random_stats(rng, 4, 3)
            state = random_state(rng, 4, 3)
            phi = phi_step(s, state)
            grad_phi = s.s_xx + state.dual + state.mu * residual(state.params, phi)
            assert np.abs(grad_phi).max() < 1e-10
            np.testing.assert_array_equal(phi, phi.T)


class TestLambdaThetaStep:
    def test_stationary_point_unchanged(self, scalar_stats):
        # at the optimum with dual = -Sxx and phi feasible, dL = df = 0
        opt = ModelParams([[1.0]], [[-1.0]])
        state = AdmmState(opt, coupling(opt), -scalar_stats.s_xx, 1.0)
        g_lam, g_theta = lagrangian_gradients(scalar_stats, state)
        assert np.abs(g_lam).max() == 0 and np.abs(g_theta).max() == 0
        assert lambda_theta_step(scalar_stats, state, SolverConfig()) is opt

    def test_decreases_lagrangian(self, rng):
        for _ in range(10):
            s = random_stats(rng, 3, 2)
            state = random_state(rng, 3, 2)
            new = lambda_theta_step(s, state, SolverConfig())
            new.validate()
            assert lagrangian(s, replace(state, params=new)) <= lagrangian(s, state)


class TestDualAndPenalty:
    def test_feasible_no_update(self, rng):
        state = random_state(rng, 3, 2)
        state = replace(state, phi=coupling(state.params))
        np.testing.assert_allclose(dual_update(state), state.dual, atol=1e-14)

    def test_scalar(self):
        state = AdmmState(ModelParams([[1.0]], [[0.0]]), np.array([[2.0]]), np.zeros((1, 1)), 0.5)
        np.testing.assert_allclose(dual_update(state), [[1.0]])

    def test_additive(self, rng):
        state = random_state(rng, 3, 2)
        r = residual(state.params, state.phi)
        twice = dual_update(replace(state, dual=dual_update(state)))
        np.testing.assert_allclose(twice, state.dual + 2 * state.mu * r, atol=1e-12)

    @pytest.mark.parametrize("mu,expected", [(0.01, 0.011), (19.0, 20.0), (20.0, 20.0)])
    def test_penalty_schedule(self, mu, expected):
        assert penalty_update(mu, SolverConfig()) == pytest.approx(expected, rel=1e-15)

    def test_penalty_monotone(self):
        cfg = SolverConfig()
        mu = cfg.mu0
        for _ in range(200):
            nxt = penalty_update(mu, cfg)
            assert mu <= nxt <= cfg.mu_max
            mu = nxt


class TestFitAdmm:
    def test_scalar_instance(self, scalar_stats):
        res = fit_admm(scalar_stats)
        assert res.converged
        np.testing.assert_allclose(res.params.lam, [[1.0]], atol=1e-5)
        np.testing.assert_allclose(res.params.theta, [[-1.0]], atol=1e-5)
        assert abs(res.trace[-1].objective - 1.0) < 1e-5
        assert res.trace[-1].primal_residual < 1e-6

    def test_zero_iterations(self, scalar_stats):
        res = fit_admm(scalar_stats, SolverConfig(max_iter=0))
        assert not res.converged and res.iterations == 0
        np.testing.assert_array_equal(res.params.lam, [[1.0]])

    def test_agrees_with_gd(self):
        stats = standard_suite([4])[0].stats()
        a, g = fit_admm(stats), fit_gd(stats)
        dist = np.sqrt(np.sum((a.params.lam - g.params.lam) ** 2)
                       + np.sum((a.params.theta - g.params.theta) ** 2))
        assert dist < 1e-4
        assert abs(a.trace[-1].objective - g.trace[-1].objective) < 1e-5

    def test_mu_trace_follows_recurrence(self):
        cfg = SolverConfig(max_iter=150, primal_tol=1e-30, dual_tol=1e-30)
        res = fit_admm(standard_suite([0])[0].stats(), cfg)
        mus = [r.mu for r in res.trace]
        assert mus[0] == cfg.mu0
        for prev, cur in zip(mus, mus[1:]):
            assert cur == penalty_update(prev, cfg)
        assert max(mus) == cfg.mu_max

    def test_stationary_at_termination(self):
        stats = standard_suite([2])[0].stats()
        res = fit_admm(stats)
        g_lam, g_theta = gradients(stats, res.params)
        assert np.sqrt(np.sum(g_lam**2) + np.sum(g_theta**2)) < 1e-4
        assert objective(stats, res.params) - objective(stats, closed_form_mle(stats)) < 1e-8

    def test_l1_extension(self):
        stats = standard_suite([0])[0].stats()
        res = fit_admm(stats, SolverConfig(l1_weight=0.3))
        sparse_gd = fit_gd(stats, SolverConfig(l1_weight=0.3))
        res.params.validate()
        assert np.count_nonzero(res.params.theta) < res.params.theta.size
        assert abs(res.trace[-1].objective - sparse_gd.trace[-1].objective) < 1e-4
