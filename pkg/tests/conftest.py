"""Shared fixtures and helpers for the test suite."""

from __future__ import annotations

import math

import numpy as np
import pytest

from rsgbench import (NoiseModel, ProblemSpec, RngStream, make_least_squares,
                      make_quadratic, make_sigmoid_svm)


@pytest.fixture
def rng():
    return RngStream(20240811)


@pytest.fixture
def sphere10():
    """f(x) = ||x||^2 / 2 in dimension 10; L = 1, f* = 0 at the origin."""
    return make_quadratic(np.ones(10), rotate=False)


@pytest.fixture
def quad2_rotated():
    return make_quadratic([4.0, 1.0], RngStream(5), rotate=True)


@pytest.fixture
def least_squares10():
    return make_least_squares(10, sparsity=0.05, noise_sd=0.1)


@pytest.fixture
def svm10():
    return make_sigmoid_svm(10, RngStream(11))


def linear_problem(a, L: float = 1.0, convex: bool = True) -> ProblemSpec:
    """f(x) = <a, x>; the gradient is constant, so any positive L is valid."""
    a = np.asarray(a, dtype=np.float64)

    return ProblemSpec(
        name="linear", n=a.size, lipschitz_L=L,
        value=lambda x: float(a @ x),
        grad=lambda x: a.copy(),
        value_batch=lambda xs: xs @ a,
        grad_batch=lambda xs: np.broadcast_to(a, xs.shape).copy(),
        is_convex=convex)


def constant_problem(c: float, n: int) -> ProblemSpec:
    return ProblemSpec(
        name="constant", n=n, lipschitz_L=1.0,
        value=lambda x: float(c),
        grad=lambda x: np.zeros(n),
        value_batch=lambda xs: np.full(xs.shape[0], float(c)),
        grad_batch=lambda xs: np.zeros_like(xs),
        f_star=float(c), is_convex=True)


def radius_point(n: int, radius: float) -> np.ndarray:
    return radius * np.ones(n) / math.sqrt(n)
