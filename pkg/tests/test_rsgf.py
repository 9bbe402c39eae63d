import math

import numpy as np
import pytest

from rsgbench import (InputError, NoiseModel, RngStream, RsgfConfig,
                      SmoothedFunctionHandle, SmoothingConfig,
                      TerminationDistribution, ValidityError,
                      ZerothOrderOracle, choose_mu,
                      constant_plan_first_order, constant_plan_zeroth_order,
                      estimate_smoothed, fallback_D_f, gmu_estimator,
                      rsgf_expected_sq_gradnorm, rsgf_run,
                      termination_distribution_zeroth_order)

from conftest import linear_problem, radius_point


def zeroth_setup(L, sigma, N, n, D=1.0):
    plan = constant_plan_zeroth_order(L, D, sigma, N, n)
    dist = termination_distribution_zeroth_order(plan, L, n)
    return plan, dist


class TestChooseMu:
    def test_reference_value(self):
        assert choose_mu(1.0, 4, 2) == pytest.approx(0.0625, rel=1e-15)

    def test_homogeneous_in_scale(self):
        assert choose_mu(3.0, 7, 9) == pytest.approx(3.0 * choose_mu(1.0, 7, 9),
                                                     rel=1e-15)

    def test_quadrupling_N_halves_mu(self):
        assert choose_mu(1.0, 5, 4 * 25) == pytest.approx(
            0.5 * choose_mu(1.0, 5, 25), rel=1e-15)

    def test_invalid_inputs(self):
        with pytest.raises(InputError):
            choose_mu(0.0, 4, 2)

    def test_fallback_scale(self):
        assert fallback_D_f(2.0, 1.0) == pytest.approx(2.0, rel=1e-15)
        with pytest.raises(InputError):
            fallback_D_f(-1.0, 1.0)


class TestRsgfRun:
    def test_R_one_makes_no_calls(self, sphere10, rng):
        plan, _ = zeroth_setup(1.0, 0.0, 3, 10)
        dist = TerminationDistribution(probs=np.array([1.0, 0.0, 0.0]))
        config = RsgfConfig(mu=0.01, plan=plan, dist=dist, n=10)
        oracle = ZerothOrderOracle(sphere10, NoiseModel("none"))
        result = rsgf_run(oracle, radius_point(10, 2.0), config, rng)
        np.testing.assert_array_equal(result.x_out, radius_point(10, 2.0))
        assert result.oracle_calls == 0

    def test_call_accounting_two_per_step(self, sphere10):
        plan, dist = zeroth_setup(1.0, 1.0, 50, 10, D=2.0)
        config = RsgfConfig(mu=0.02, plan=plan, dist=dist, n=10)
        oracle = ZerothOrderOracle.for_smoothing(
            sphere10, NoiseModel("bounded_variance", 1.0), 0.02)
        result = rsgf_run(oracle, radius_point(10, 2.0), config, RngStream(2))
        assert result.oracle_calls == 2 * (result.R - 1)
        assert oracle.call_count == result.oracle_calls

    def test_expected_step_on_linear_objective(self, rng):
        # For f(x) = <a, x> the two-point estimate is (a.u) u, whose mean is
        # exactly a; the empirical mean over many draws lands within 4 SE.
        a = np.array([1.0, -2.0, 0.5, 0.0, 3.0])
        problem = linear_problem(a)
        oracle = ZerothOrderOracle(problem, NoiseModel("none"))
        mu = 0.05
        K = 100_000
        u = rng.standard_normal((K, 5))
        v1, v0 = oracle.query_pair_batch(np.zeros(5), mu * u, rng)
        draws = ((v1 - v0) / mu)[:, None] * u
        se = math.sqrt(draws.var(axis=0, ddof=1).sum() / K)
        assert np.linalg.norm(draws.mean(axis=0) - a) <= 4.0 * se

    def test_estimator_consistent_with_smoothed_gradient(self, svm10):
        # Averaging the G_mu draws an actual run would use at a frozen point
        # reproduces the Monte Carlo smoothed gradient.
        mu = 0.05
        x = 0.4 * np.ones(10)
        oracle = ZerothOrderOracle.for_smoothing(
            svm10, NoiseModel("bounded_variance", 0.5), mu)
        rng = RngStream(77)
        K = 40_000
        u = rng.standard_normal((K, 10))
        v1, v0 = oracle.query_pair_batch(x, mu * u, rng)
        draws = ((v1 - v0) / mu)[:, None] * u
        mean = draws.mean(axis=0)
        se = math.sqrt(draws.var(axis=0, ddof=1).sum() / K)

        handle = SmoothedFunctionHandle(svm10, SmoothingConfig(mu=mu, n=10))
        est = estimate_smoothed(handle, x, rng, samples=40_000)
        assert np.linalg.norm(mean - est.gradient) <= 4.0 * (
            se + est.gradient_se)

    def test_seed_determinism(self, sphere10):
        plan, dist = zeroth_setup(1.0, 1.0, 40, 10, D=2.0)
        config = RsgfConfig(mu=0.03, plan=plan, dist=dist, n=10)
        oracle = ZerothOrderOracle.for_smoothing(
            sphere10, NoiseModel("bounded_variance", 1.0), 0.03)
        x1 = radius_point(10, 2.0)
        a = rsgf_run(oracle, x1, config, RngStream(6, stream_id=1))
        b = rsgf_run(oracle, x1, config, RngStream(6, stream_id=1))
        assert a.R == b.R
        np.testing.assert_array_equal(a.x_out, b.x_out)

    def test_plan_outside_regime_rejected(self):
        plan = constant_plan_first_order(1.0, 1.0, 0.0, 4)  # gamma = 1
        dist = TerminationDistribution(probs=np.full(4, 0.25))
        with pytest.raises(ValidityError):
            RsgfConfig(mu=0.1, plan=plan, dist=dist, n=10)

    def test_independent_xi_mode_runs(self, sphere10):
        plan, dist = zeroth_setup(1.0, 1.0, 20, 10, D=2.0)
        config = RsgfConfig(mu=0.03, plan=plan, dist=dist, n=10,
                            shared_xi=False)
        oracle = ZerothOrderOracle.for_smoothing(
            sphere10, NoiseModel("bounded_variance", 1.0), 0.03)
        result = rsgf_run(oracle, radius_point(10, 2.0), config, RngStream(3))
        assert result.oracle_calls == 2 * (result.R - 1)


class TestExpectedGradNorm:
    def test_single_iteration_noiseless(self, sphere10, rng):
        plan, dist = zeroth_setup(1.0, 0.0, 1, 10)
        config = RsgfConfig(mu=0.01, plan=plan, dist=dist, n=10)
        x1 = radius_point(10, 2.0)
        est = rsgf_expected_sq_gradnorm(sphere10, NoiseModel("none"), config,
                                        x1, 50, rng)
        g = sphere10.grad(x1)
        assert est.mean == pytest.approx(float(g @ g), abs=1e-12)
