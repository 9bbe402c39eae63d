import math

import numpy as np
import pytest

from rsgbench import (InputError, RngStream, make_least_squares,
                      make_quadratic, make_sigmoid_svm,
                      population_gradient_ls, sample_loss_ls, sample_loss_svm,
                      validate_smoothness)

from conftest import linear_problem, radius_point


class TestQuadratic:
    def test_unit_spectrum_is_half_norm_squared(self, rng):
        q = make_quadratic([1.0, 1.0], rng, rotate=True)
        x = np.array([3.0, 4.0])
        assert q.lipschitz_L == 1.0
        assert q.value(x) == pytest.approx(12.5, abs=1e-12)

    def test_spectrum_trace_and_smoothing_offset(self, quad2_rotated):
        q = quad2_rotated
        assert q.lipschitz_L == 4.0
        assert q.trace == pytest.approx(5.0, abs=1e-12)
        mu = 0.3
        x = np.zeros(2)
        assert (q.smoothed_value_exact(x, mu) - q.value(x)
                == pytest.approx(2.5 * mu * mu, abs=1e-12))

    def test_unrotated_zero_linear_part_has_minimum_at_origin(self):
        q = make_quadratic([2.0, 1.0], rotate=False)
        assert q.f_star == 0.0
        np.testing.assert_array_equal(q.x_star, np.zeros(2))

    def test_rotation_preserves_spectrum(self, rng):
        q = make_quadratic([5.0, 2.0, 1.0], rng, rotate=True)
        eig = np.sort(np.linalg.eigvalsh(q.A))
        np.testing.assert_allclose(eig, [1.0, 2.0, 5.0], atol=1e-10)

    def test_batch_maps_agree_with_pointwise(self, quad2_rotated, rng):
        xs = rng.standard_normal((32, 2))
        np.testing.assert_allclose(
            quad2_rotated.value_batch(xs),
            [quad2_rotated.value(x) for x in xs], rtol=1e-12)
        np.testing.assert_allclose(
            quad2_rotated.grad_batch(xs),
            [quad2_rotated.grad(x) for x in xs], rtol=1e-12)

    def test_negative_eigenvalue_rejected(self, rng):
        with pytest.raises(InputError):
            make_quadratic([1.0, -0.5], rng)


class TestLeastSquares:
    def test_population_gradient_vanishes_at_truth(self, least_squares10):
        g = population_gradient_ls(least_squares10, least_squares10.x_bar)
        np.testing.assert_allclose(g, 0.0, atol=1e-14)

    def test_value_at_truth_is_pure_noise(self, least_squares10):
        assert least_squares10.value(least_squares10.x_bar) == pytest.approx(
            0.1 ** 2, abs=1e-14)

    def test_sample_gradient_is_unbiased(self, least_squares10, rng):
        x = radius_point(10, 1.5)
        draws = np.array([sample_loss_ls(least_squares10, x, rng)[1]
                          for _ in range(100_000)])
        mean = draws.mean(axis=0)
        se = np.sqrt(draws.var(axis=0, ddof=1).sum() / draws.shape[0])
        target = population_gradient_ls(least_squares10, x)
        assert np.linalg.norm(mean - target) <= 4.0 * se

    def test_sample_value_is_unbiased(self, least_squares10, rng):
        x = radius_point(10, 0.7)
        vals = np.array([sample_loss_ls(least_squares10, x, rng)[0]
                         for _ in range(100_000)])
        se = math.sqrt(vals.var(ddof=1) / vals.size)
        assert abs(vals.mean() - least_squares10.value(x)) <= 4.0 * se

    def test_lipschitz_is_twice_top_eigenvalue(self, least_squares10):
        lam_max = float(np.max(np.linalg.eigvalsh(
            least_squares10.second_moment)))
        assert least_squares10.lipschitz_L == pytest.approx(2.0 * lam_max,
                                                            rel=1e-12)


class TestSigmoidSvm:
    def test_value_at_origin_is_one_plus_reg(self, svm10):
        assert svm10.value(np.zeros(10)) == pytest.approx(1.0, abs=1e-12)

    def test_sample_at_origin(self, svm10, rng):
        val, grad = sample_loss_svm(svm10, np.zeros(10), rng)
        assert val == pytest.approx(1.0, abs=1e-12)
        # tanh'(0) = 1, so the sampled gradient is -v u exactly.
        assert set(np.round(np.abs(grad[np.nonzero(grad)]), 12)) <= {1.0}

    def test_sampling_matches_enumerated_population(self, svm10, rng):
        x = 0.4 * rng.standard_normal(10)
        vals = np.array([sample_loss_svm(svm10, x, rng)[0]
                         for _ in range(100_000)])
        se = math.sqrt(vals.var(ddof=1) / vals.size)
        assert abs(vals.mean() - svm10.value(x)) <= 4.0 * se

    def test_gradient_sampling_matches_population(self, svm10, rng):
        x = 0.4 * rng.standard_normal(10)
        draws = np.array([sample_loss_svm(svm10, x, rng)[1]
                          for _ in range(50_000)])
        mean = draws.mean(axis=0)
        se = np.sqrt(draws.var(axis=0, ddof=1).sum() / draws.shape[0])
        assert np.linalg.norm(mean - svm10.grad(x)) <= 4.0 * se

    def test_enumeration_dimension_cap(self, rng):
        with pytest.raises(InputError):
            make_sigmoid_svm(17, rng)

    def test_objective_is_nonnegative(self, svm10, rng):
        for _ in range(100):
            assert svm10.value(2.0 * rng.standard_normal(10)) >= 0.0


class TestSmoothnessValidation:
    def test_quadratic_upper_bound_tight_along_top_eigenvector(self):
        q = make_quadratic([3.0, 1.0], rotate=False)
        # Points on the top eigenvector achieve the descent-lemma bound
        # with equality.
        x = np.array([1.0, 0.0])
        y = np.array([2.5, 0.0])
        gap = q.value(y) - q.value(x) - float(q.grad(x) @ (y - x))
        assert gap == pytest.approx(0.5 * q.lipschitz_L
                                    * float((y - x) @ (y - x)), abs=1e-12)

    def test_linear_problem_margins(self, rng):
        report = validate_smoothness(linear_problem([2.0, -1.0]), 200, rng)
        assert report.ok()

    def test_all_benchmarks_pass_thousand_pairs(self, sphere10,
                                                least_squares10, svm10, rng):
        for problem in (sphere10, least_squares10, svm10):
            report = validate_smoothness(problem, 1000, rng)
            assert report.ok(), (problem.name, report)

    def test_convex_inequalities_checked_for_convex_problems(
            self, least_squares10, rng):
        report = validate_smoothness(least_squares10, 100, rng)
        assert report.convex_lower_margin is not None
        assert report.convex_cocoercivity_margin is not None
