import numpy as np
import pytest

from rsgbench import (DivergenceError, FirstOrderOracle, InputError,
                      NoiseModel, RngStream, TerminationDistribution,
                      compute_BN, compute_Df, constant_plan_first_order,
                      make_quadratic, markov_deviation,
                      min_gradnorm_diagnostic, rsg_expected_sq_gradnorm,
                      rsg_run, termination_distribution_first_order)
from rsgbench.stepsize import StepsizePlan

from conftest import radius_point


def forced_R(N: int, R: int) -> TerminationDistribution:
    probs = np.zeros(N)
    probs[R - 1] = 1.0
    return TerminationDistribution(probs=probs)


class TestRsgRun:
    def test_exact_step_reaches_minimum(self, rng):
        # gamma = 1/L on a unit quadratic jumps to the optimum in one step.
        q = make_quadratic(np.ones(3), rotate=False)
        plan = constant_plan_first_order(1.0, 1.0, 0.0, 2)
        oracle = FirstOrderOracle(q, NoiseModel("none"))
        result = rsg_run(oracle, np.array([2.0, -1.0, 0.5]), plan,
                         forced_R(2, 2), rng)
        np.testing.assert_allclose(result.x_out, 0.0, atol=1e-15)
        assert result.R == 2 and result.oracle_calls == 1

    def test_R_equal_one_returns_initial_point(self, sphere10, rng):
        plan = constant_plan_first_order(1.0, 1.0, 0.0, 5)
        oracle = FirstOrderOracle(sphere10, NoiseModel("none"))
        x1 = radius_point(10, 2.0)
        result = rsg_run(oracle, x1, plan, forced_R(5, 1), rng)
        np.testing.assert_array_equal(result.x_out, x1)
        assert result.oracle_calls == 0

    def test_two_point_output_distribution(self):
        # Deterministic scalar recursion x1 = 1, gamma = 0.5: the trajectory
        # is (1, 0.5) and the output takes either value with probability 1/2.
        q = make_quadratic([1.0], rotate=False)
        plan = StepsizePlan(kind="constant", gammas=np.full(2, 0.5), L=1.0,
                            d_tilde=1.0, sigma=0.0, num_iterations=2)
        dist = termination_distribution_first_order(plan, 1.0)
        oracle = FirstOrderOracle(q, NoiseModel("none"))
        rng = RngStream(31)
        outs = np.array([rsg_run(oracle, np.array([1.0]), plan, dist,
                                 rng.derive(i)).x_out[0]
                         for i in range(2000)])
        assert set(np.unique(outs)) == {0.5, 1.0}
        assert abs(np.mean(outs == 1.0) - 0.5) <= 4.0 * np.sqrt(0.25 / 2000)

    def test_update_exactness_bitwise(self, sphere10):
        # On the noiseless path the recorded trajectory satisfies
        # x_{k+1} = x_k - gamma_k grad(x_k) bit for bit.
        oracle = FirstOrderOracle(sphere10, NoiseModel("none"))
        plan = StepsizePlan(kind="constant", gammas=np.full(6, 0.3), L=1.0,
                            d_tilde=1.0, sigma=0.0, num_iterations=6)
        dist = forced_R(6, 6)
        result = rsg_run(oracle, radius_point(10, 2.0), plan, dist,
                         RngStream(1), retain_trajectory=True)
        traj = result.trajectory
        assert traj.shape == (6, 10)
        for k in range(5):
            expected = traj[k] - 0.3 * sphere10.grad(traj[k])
            np.testing.assert_array_equal(traj[k + 1], expected)
        np.testing.assert_array_equal(result.x_out, traj[-1])

    def test_output_membership(self, sphere10):
        plan = constant_plan_first_order(1.0, 2.0, 1.0, 12)
        dist = termination_distribution_first_order(plan, 1.0)
        oracle = FirstOrderOracle(sphere10, NoiseModel("bounded_variance", 1.0))
        result = rsg_run(oracle, radius_point(10, 2.0), plan, dist,
                         RngStream(8), retain_trajectory=True)
        assert any(np.array_equal(result.x_out, row)
                   for row in result.trajectory)

    def test_seed_determinism(self, sphere10):
        plan = constant_plan_first_order(1.0, 2.0, 1.0, 30)
        dist = termination_distribution_first_order(plan, 1.0)
        oracle = FirstOrderOracle(sphere10, NoiseModel("bounded_variance", 1.0))
        x1 = radius_point(10, 2.0)
        a = rsg_run(oracle, x1, plan, dist, RngStream(4, stream_id=9))
        b = rsg_run(oracle, x1, plan, dist, RngStream(4, stream_id=9))
        assert a.R == b.R
        np.testing.assert_array_equal(a.x_out, b.x_out)

    def test_plan_dist_length_mismatch(self, sphere10, rng):
        plan = constant_plan_first_order(1.0, 1.0, 0.0, 4)
        oracle = FirstOrderOracle(sphere10, NoiseModel("none"))
        with pytest.raises(InputError):
            rsg_run(oracle, radius_point(10, 1.0), plan, forced_R(5, 1), rng)

    def test_divergence_detected(self, rng):
        # A stepsize far outside the stable range doubles the iterate until
        # it overflows; the run must abort with a diagnostic.
        q = make_quadratic([1.0], rotate=False)
        plan = StepsizePlan(kind="custom", gammas=np.full(400, 3.0),
                            L=1.0, d_tilde=1.0, sigma=0.0, num_iterations=400)
        dist = forced_R(400, 400)
        oracle = FirstOrderOracle(q, NoiseModel("none"))
        with pytest.raises(DivergenceError):
            rsg_run(oracle, np.array([1e300]), plan, dist, rng)


class TestExpectedGradNorm:
    def test_single_iteration_is_initial_gradient(self, sphere10, rng):
        plan = constant_plan_first_order(1.0, 1.0, 0.0, 1)
        dist = termination_distribution_first_order(plan, 1.0)
        x1 = radius_point(10, 2.0)
        est = rsg_expected_sq_gradnorm(sphere10, NoiseModel("none"), plan,
                                       dist, x1, 100, rng)
        g = sphere10.grad(x1)
        assert est.mean == pytest.approx(float(g @ g), abs=1e-12)
        assert est.se == 0.0

    def test_markov_tail_bound(self, sphere10):
        # Single-run deviation check: the frequency of
        # ||grad f(x_R)||^2 >= lambda L B_N stays below 1/lambda plus the
        # binomial band, for lambda in {2, 4}.
        sigma, N, M = 1.0, 20, 2000
        x1 = radius_point(10, 2.0)
        D_f = compute_Df(sphere10.value(x1), sphere10.f_star,
                         sphere10.lipschitz_L)
        plan = constant_plan_first_order(1.0, D_f, sigma, N)
        dist = termination_distribution_first_order(plan, 1.0)
        oracle = FirstOrderOracle(sphere10, NoiseModel("bounded_variance",
                                                       sigma))
        rng = RngStream(606)
        values = np.empty(M)
        for i in range(M):
            out = rsg_run(oracle, x1, plan, dist, rng.derive(i)).x_out
            g = sphere10.grad(out)
            values[i] = float(g @ g)
        B_N = compute_BN(1.0, D_f, D_f, sigma, N)
        slack = 4.0 * np.sqrt(0.25 / M)
        for lam in (2.0, 4.0):
            dev = markov_deviation(1.0, B_N, lam)
            freq = float(np.mean(values >= dev.threshold))
            assert freq <= dev.prob_bound + slack


class TestMinGradnormDiagnostic:
    def test_single_point(self, sphere10):
        idx, val = min_gradnorm_diagnostic(
            radius_point(10, 2.0)[None, :], sphere10)
        assert idx == 1
        assert val == pytest.approx(2.0, rel=1e-12)

    def test_monotone_descent_selects_last(self, sphere10, rng):
        plan = StepsizePlan(kind="constant", gammas=np.full(8, 0.5), L=1.0,
                            d_tilde=1.0, sigma=0.0, num_iterations=8)
        oracle = FirstOrderOracle(sphere10, NoiseModel("none"))
        result = rsg_run(oracle, radius_point(10, 2.0), plan, forced_R(8, 8),
                         rng, retain_trajectory=True)
        idx, _ = min_gradnorm_diagnostic(result.trajectory, sphere10)
        assert idx == 8

    def test_matches_bruteforce_scan(self, sphere10, rng):
        points = rng.standard_normal((5, 10))
        idx, val = min_gradnorm_diagnostic(points, sphere10)
        norms = [float(np.linalg.norm(sphere10.grad(p))) for p in points]
        assert idx == int(np.argmin(norms)) + 1
        assert val == pytest.approx(min(norms), rel=1e-12)

    def test_empty_trajectory_rejected(self, sphere10):
        with pytest.raises(InputError):
            min_gradnorm_diagnostic(np.empty((0, 10)), sphere10)
