import math

import numpy as np
import pytest

from rsgbench import (InputError, NoiseModel, RngStream,
                      SmoothedFunctionHandle, SmoothingConfig,
                      ZerothOrderOracle, check_smoothing_bounds,
                      estimate_smoothed, gmu_estimator, make_quadratic,
                      second_moment_bound_check, smoothed_gradient,
                      smoothed_value)
from rsgbench.smoothing import gradient_gap_bound, value_gap_bound

from conftest import constant_problem, linear_problem


def handle_for(problem, mu, samples=10_000):
    return SmoothedFunctionHandle(problem,
                                  SmoothingConfig(mu=mu, n=problem.n),
                                  mc_samples=samples)


class TestGmuEstimator:
    def test_constant_function_gives_zero(self):
        u = np.array([0.3, -1.2, 0.5])
        np.testing.assert_array_equal(gmu_estimator(7.0, 7.0, u, 0.4),
                                      np.zeros(3))

    def test_linear_function_along_unit_direction(self):
        # f(x) = 2 x_1 at x = 0 with u = e_1, mu = 0.5: shifted value 1.
        u = np.array([1.0, 0.0, 0.0])
        np.testing.assert_allclose(gmu_estimator(1.0, 0.0, u, 0.5),
                                   [2.0, 0.0, 0.0], atol=1e-15)

    def test_quadratic_hand_example(self):
        # f(x) = ||x||^2/2 at x = e_1, u = e_2, mu = 0.2: the estimate is
        # (x.u + (mu/2)||u||^2) u = 0.1 e_2.
        u = np.array([0.0, 1.0])
        np.testing.assert_allclose(gmu_estimator(0.52, 0.5, u, 0.2),
                                   [0.0, 0.1], atol=1e-15)

    def test_nonpositive_mu_rejected(self):
        with pytest.raises(InputError):
            gmu_estimator(1.0, 0.0, np.ones(2), 0.0)


class TestSmoothedValue:
    def test_constant_is_exact(self, rng):
        handle = handle_for(constant_problem(3.5, 4), mu=0.7, samples=100)
        assert smoothed_value(handle, np.zeros(4), rng) == pytest.approx(
            3.5, abs=1e-12)

    def test_quadratic_trace_formula(self, quad2_rotated, rng):
        mu = 0.3
        handle = handle_for(quad2_rotated, mu, samples=100_000)
        x = np.array([0.4, -0.2])
        est = estimate_smoothed(handle, x, rng)
        target = quad2_rotated.value(x) + 0.5 * mu * mu * quad2_rotated.trace
        assert abs(est.value - target) <= 4.0 * est.value_se

    def test_sphere_at_origin(self, rng):
        q = make_quadratic([1.0, 1.0], rotate=False)
        handle = handle_for(q, mu=0.1, samples=200_000)
        est = estimate_smoothed(handle, np.zeros(2), rng)
        # mu^2 n / 2 * 1 = 0.01 for the unit quadratic in dimension 2.
        assert abs(est.value - 0.01) <= 4.0 * est.value_se


class TestSmoothedGradient:
    def test_constant_gives_zero_exactly(self, rng):
        handle = handle_for(constant_problem(2.0, 3), mu=0.5, samples=200)
        np.testing.assert_array_equal(
            smoothed_gradient(handle, np.zeros(3), rng), np.zeros(3))

    def test_quadratic_gradient_preserved(self, quad2_rotated, rng):
        handle = handle_for(quad2_rotated, mu=0.2, samples=100_000)
        x = np.array([0.8, 0.5])
        est = estimate_smoothed(handle, x, rng)
        gap = np.linalg.norm(est.gradient - quad2_rotated.grad(x))
        assert gap <= 4.0 * est.gradient_se

    def test_svm_self_consistency(self, svm10, rng):
        handle = handle_for(svm10, mu=0.05)
        x = 0.3 * rng.standard_normal(10)
        small = estimate_smoothed(handle, x, rng, samples=10_000)
        big = estimate_smoothed(handle, x, rng, samples=100_000)
        gap = np.linalg.norm(small.gradient - big.gradient)
        assert gap <= 4.0 * (small.gradient_se + big.gradient_se)


class TestApproximationBounds:
    def test_quadratic_margins(self, quad2_rotated, rng):
        handle = handle_for(quad2_rotated, mu=0.15)
        points = [rng.standard_normal(2) for _ in range(5)]
        report = check_smoothing_bounds(handle, points, rng, samples=50_000)
        assert report.all_ok
        # Smoothing preserves quadratic gradients, so the measured gap is
        # pure Monte Carlo noise.
        for check in report.checks:
            assert check.gradient_gap <= gradient_gap_bound(
                0.15, quad2_rotated.lipschitz_L, 2)

    def test_constant_gaps_are_zero(self, rng):
        handle = handle_for(constant_problem(1.0, 3), mu=0.4, samples=500)
        report = check_smoothing_bounds(handle, [np.zeros(3)], rng,
                                        samples=500)
        assert report.checks[0].value_gap == 0.0
        assert report.checks[0].gradient_gap == 0.0

    def test_svm_margins(self, svm10, rng):
        handle = handle_for(svm10, mu=0.01)
        points = [0.5 * rng.standard_normal(10) for _ in range(20)]
        report = check_smoothing_bounds(handle, points, rng, samples=20_000)
        assert report.all_ok

    def test_gradient_norm_chain_inequalities(self, svm10, rng):
        # ||grad f_mu||^2 <= 2 ||grad f||^2 + (mu^2/2) L^2 (n+3)^3 and the
        # reverse, with Monte Carlo allowance.
        mu, n, L = 0.02, 10, svm10.lipschitz_L
        handle = handle_for(svm10, mu)
        shift = 0.5 * mu * mu * L * L * (n + 3) ** 3
        for _ in range(5):
            x = 0.4 * rng.standard_normal(n)
            est = estimate_smoothed(handle, x, rng, samples=50_000)
            g_mu = float(est.gradient @ est.gradient)
            g = svm10.grad(x)
            g_true = float(g @ g)
            allowance = 4.0 * est.gradient_se * (
                2.0 * np.linalg.norm(est.gradient) + 4.0 * est.gradient_se)
            assert g_mu <= 2.0 * g_true + shift + allowance
            assert g_true <= 2.0 * g_mu + shift + 2.0 * allowance

    def test_closef_identity_on_quadratics(self, quad2_rotated):
        # For quadratics f_mu - f is a constant, so the centered gaps agree
        # exactly and sit well inside the +-mu^2 L n window.
        mu, L, n = 0.2, quad2_rotated.lipschitz_L, 2
        x = np.array([1.5, -0.3])
        lhs = ((quad2_rotated.smoothed_value_exact(x, mu)
                - quad2_rotated.smoothed_min_value(mu))
               - (quad2_rotated.value(x) - quad2_rotated.f_star))
        assert abs(lhs) <= mu * mu * L * n
        assert lhs == pytest.approx(0.0, abs=1e-12)

    def test_smoothed_lipschitz_never_exceeds_L(self, svm10, rng):
        # Empirical secant slopes of the smoothed gradient stay below L,
        # up to the Monte Carlo band.
        mu = 0.02
        handle = handle_for(svm10, mu)
        L = svm10.lipschitz_L
        for _ in range(5):
            a = 0.4 * rng.standard_normal(10)
            b = 0.4 * rng.standard_normal(10)
            ea = estimate_smoothed(handle, a, rng, samples=20_000)
            eb = estimate_smoothed(handle, b, rng, samples=20_000)
            dist = np.linalg.norm(a - b)
            slope = np.linalg.norm(ea.gradient - eb.gradient) / dist
            assert slope <= L + 4.0 * (ea.gradient_se + eb.gradient_se) / dist


class TestSecondMoment:
    def test_constant_lhs_zero(self, rng):
        handle = handle_for(constant_problem(5.0, 4), mu=0.3)
        check = second_moment_bound_check(handle, np.zeros(4), 0.0, 1000, rng)
        assert check.lhs == 0.0
        assert check.ok

    def test_sphere_within_band(self, rng):
        q = make_quadratic([1.0, 1.0], rotate=False)
        handle = handle_for(q, mu=0.1)
        x = np.array([1.0, 0.0])
        check = second_moment_bound_check(handle, x, 0.0, 100_000, rng)
        assert check.ok
        # rhs = (mu^2/2) L^2 (n+6)^3 + 2 (n+4) ||grad||^2 at n = 2.
        assert check.rhs == pytest.approx(0.005 * 512 + 12.0, rel=1e-12)

    def test_linear_concentrates_below_budget(self, rng):
        a = np.array([0.5, -1.0, 2.0])
        handle = handle_for(linear_problem(a), mu=0.5)
        check = second_moment_bound_check(handle, np.zeros(3), 0.0,
                                          100_000, rng)
        # For linear f the statistic is E[(a.u)^2 ||u||^2] = (n+2) ||a||^2,
        # below the 2 (n+4) ||a||^2 budget.
        target = 5.0 * float(a @ a)
        assert abs(check.lhs - target) <= 4.0 * check.lhs_se
        assert check.lhs <= 2.0 * 7.0 * float(a @ a)


class TestGmuUnbiasedness:
    def test_matches_smoothed_gradient(self, sphere10, rng):
        # Averaged two-point draws through the noisy oracle agree with the
        # direct Monte Carlo smoothed gradient within combined bands.
        mu = 0.1
        oracle = ZerothOrderOracle.for_smoothing(
            sphere10, NoiseModel("bounded_variance", 1.0), mu)
        x = 0.5 * np.ones(10)
        K = 60_000
        u = rng.standard_normal((K, 10))
        v1, v0 = oracle.query_pair_batch(x, mu * u, rng)
        draws = ((v1 - v0) / mu)[:, None] * u
        mean = draws.mean(axis=0)
        se = math.sqrt(draws.var(axis=0, ddof=1).sum() / K)

        handle = handle_for(sphere10, mu)
        est = estimate_smoothed(handle, x, rng, samples=60_000)
        gap = np.linalg.norm(mean - est.gradient)
        assert gap <= 4.0 * (se + est.gradient_se)
