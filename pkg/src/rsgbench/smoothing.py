"""Gaussian smoothing machinery.

The smoothed function is the Gaussian convolution f_mu(x) = E_u[f(x + mu u)]
with u standard normal.  This module provides Monte Carlo estimators for
f_mu and its gradient, the two-point estimator used by the gradient-free
method, and numerical checks of the approximation bounds

    |f_mu(x) - f(x)|          <= mu^2 L n / 2,
    ||grad f_mu(x) - grad f(x)|| <= (mu / 2) L (n + 3)^{3/2},
    (1/mu^2) E[(f(x+mu u) - f(x))^2 ||u||^2]
        <= (mu^2 / 2) L^2 (n + 6)^3 + 2 (n + 4) ||grad f(x)||^2,

each verified up to an explicit 4-standard-error Monte Carlo allowance.

Monte Carlo loops draw in fixed-size chunks and accumulate in a fixed
order, so estimates are reproducible for a given stream regardless of how
the work could be scheduled.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InputError
from .problems import ProblemSpec
from .rng import RngStream

_CHUNK = 4096

DEFAULT_POINT_SAMPLES = 10_000
DEFAULT_CHECK_SAMPLES = 100_000


@dataclass(frozen=True)
class SmoothingConfig:
    """Smoothing parameter and ambient dimension."""

    mu: float
    n: int

    def __post_init__(self):
        if not self.mu > 0:
            raise InputError(f"mu must be positive, got {self.mu}")
        if self.n < 1:
            raise InputError(f"n must be >= 1, got {self.n}")


@dataclass
class SmoothedFunctionHandle:
    """A problem paired with a smoothing configuration and a sample budget."""

    base: ProblemSpec
    config: SmoothingConfig
    mc_samples: int = DEFAULT_POINT_SAMPLES

    def __post_init__(self):
        if self.mc_samples < 1:
            raise InputError("mc_samples must be >= 1")
        if self.base.n != self.config.n:
            raise InputError("problem and smoothing config disagree on n")


def gmu_estimator(F_value_at_shifted: float, F_value_at_base: float,
                  u: np.ndarray, mu: float) -> np.ndarray:
    """Two-point gradient estimate ((F(x + mu u) - F(x)) / mu) u."""
    if not mu > 0:
        raise InputError(f"mu must be positive, got {mu}")
    u = np.asarray(u, dtype=np.float64)
    return ((F_value_at_shifted - F_value_at_base) / mu) * u


@dataclass
class SmoothingEstimate:
    """Joint Monte Carlo estimates at one point, with standard errors."""

    samples: int
    value: float
    value_se: float
    gradient: np.ndarray
    gradient_se: float        # sqrt(trace of the mean's covariance)
    second_moment: float      # (1/mu^2) E[(f(x+mu u) - f(x))^2 ||u||^2]
    second_moment_se: float


def estimate_smoothed(handle: SmoothedFunctionHandle, x: np.ndarray,
                      rng: RngStream, samples: int | None = None
                      ) -> SmoothingEstimate:
    """One Monte Carlo pass producing the smoothed value, smoothed gradient
    and the two-point second moment from the same draws."""
    problem = handle.base
    x = problem.check_point(x)
    mu = handle.config.mu
    n = handle.config.n
    m = handle.mc_samples if samples is None else int(samples)
    if m < 1:
        raise InputError("samples must be >= 1")

    fx = float(problem.value(x))
    val_sum = 0.0
    val_sq = 0.0
    grad_sum = np.zeros(n)
    grad_sq = np.zeros(n)
    sm_sum = 0.0
    sm_sq = 0.0

    done = 0
    while done < m:
        c = min(_CHUNK, m - done)
        u = rng.standard_normal((c, n))
        shifted = problem.values_at(x[None, :] + mu * u)
        diff = (shifted - fx) / mu
        val_sum += float(np.sum(shifted))
        val_sq += float(np.sum(shifted * shifted))
        g = diff[:, None] * u
        grad_sum += g.sum(axis=0)
        grad_sq += np.sum(g * g, axis=0)
        sm = diff * diff * np.einsum("ij,ij->i", u, u)
        sm_sum += float(np.sum(sm))
        sm_sq += float(np.sum(sm * sm))
        done += c

    denom = max(m - 1, 1)

    def _se(total, total_sq):
        var = max((total_sq - total * total / m) / denom, 0.0)
        return math.sqrt(var / m)

    grad_mean = grad_sum / m
    grad_var = np.maximum((grad_sq - grad_sum * grad_sum / m) / denom, 0.0)
    return SmoothingEstimate(
        samples=m,
        value=val_sum / m,
        value_se=_se(val_sum, val_sq),
        gradient=grad_mean,
        gradient_se=math.sqrt(float(np.sum(grad_var)) / m),
        second_moment=sm_sum / m,
        second_moment_se=_se(sm_sum, sm_sq),
    )


def smoothed_value(handle: SmoothedFunctionHandle, x: np.ndarray,
                   rng: RngStream) -> float:
    """Monte Carlo estimate of f_mu(x), unbiased."""
    return estimate_smoothed(handle, x, rng).value


def smoothed_gradient(handle: SmoothedFunctionHandle, x: np.ndarray,
                      rng: RngStream) -> np.ndarray:
    """Monte Carlo estimate of grad f_mu(x), unbiased."""
    return estimate_smoothed(handle, x, rng).gradient


def value_gap_bound(mu: float, L: float, n: int) -> float:
    """Upper bound on |f_mu(x) - f(x)|."""
    return 0.5 * mu * mu * L * n


def gradient_gap_bound(mu: float, L: float, n: int) -> float:
    """Upper bound on ||grad f_mu(x) - grad f(x)||."""
    return 0.5 * mu * L * (n + 3) ** 1.5


def second_moment_bound(mu: float, L: float, n: int,
                        grad_norm_sq: float, sigma: float = 0.0) -> float:
    """Upper bound on the two-point second moment; a positive sigma adds the
    2 (n + 4) sigma^2 allowance charged for oracle noise."""
    return (0.5 * mu * mu * L * L * (n + 6) ** 3
            + 2.0 * (n + 4) * (grad_norm_sq + sigma * sigma))


@dataclass
class PointBoundCheck:
    """Margins at one test point; nonnegative margins mean the bound holds
    within the Monte Carlo allowance."""

    point_index: int
    value_gap: float
    value_margin: float
    gradient_gap: float
    gradient_margin: float


@dataclass
class SmoothingBoundsReport:
    mu: float
    samples: int
    checks: list[PointBoundCheck]

    @property
    def all_ok(self) -> bool:
        return all(c.value_margin >= 0 and c.gradient_margin >= 0
                   for c in self.checks)

    @property
    def min_margin(self) -> float:
        return min(min(c.value_margin, c.gradient_margin)
                   for c in self.checks)


def check_smoothing_bounds(handle: SmoothedFunctionHandle, test_points,
                           rng: RngStream,
                           samples: int = DEFAULT_CHECK_SAMPLES
                           ) -> SmoothingBoundsReport:
    """Verify the value- and gradient-gap bounds at each test point, with a
    4-standard-error Monte Carlo allowance on each side."""
    grad = handle.base.require_grad()
    L = handle.base.lipschitz_L
    mu = handle.config.mu
    n = handle.config.n
    checks = []
    for i, x in enumerate(test_points):
        x = handle.base.check_point(np.asarray(x, dtype=np.float64))
        est = estimate_smoothed(handle, x, rng, samples)
        value_gap = abs(est.value - handle.base.value(x))
        value_margin = value_gap_bound(mu, L, n) + 4.0 * est.value_se - value_gap
        grad_gap = float(np.linalg.norm(est.gradient - grad(x)))
        grad_margin = (gradient_gap_bound(mu, L, n)
                       + 4.0 * est.gradient_se - grad_gap)
        checks.append(PointBoundCheck(
            point_index=i, value_gap=value_gap, value_margin=value_margin,
            gradient_gap=grad_gap, gradient_margin=grad_margin))
    return SmoothingBoundsReport(mu=mu, samples=samples, checks=checks)


@dataclass
class SecondMomentCheck:
    lhs: float
    lhs_se: float
    rhs: float

    @property
    def ok(self) -> bool:
        return self.lhs <= self.rhs + 4.0 * self.lhs_se


def second_moment_bound_check(handle: SmoothedFunctionHandle, x: np.ndarray,
                              sigma: float, samples: int,
                              rng: RngStream) -> SecondMomentCheck:
    """Empirical two-point second moment against its closed-form bound."""
    grad = handle.base.require_grad()
    x = handle.base.check_point(np.asarray(x, dtype=np.float64))
    est = estimate_smoothed(handle, x, rng, samples)
    g = np.asarray(grad(x), dtype=np.float64)
    rhs = second_moment_bound(handle.config.mu, handle.base.lipschitz_L,
                              handle.config.n, float(g @ g), sigma)
    return SecondMomentCheck(lhs=est.second_moment,
                             lhs_se=est.second_moment_se, rhs=rhs)
