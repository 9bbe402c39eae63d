"""Stochastic first- and zeroth-order oracles.

The first-order oracle returns the true gradient plus isotropic Gaussian
noise with total variance sigma^2 (componentwise sigma^2 / n), which attains
the bounded-variance assumption with equality and keeps the statistical
bound tests sharp.  The light-tail variant shrinks the Gaussian by a
dimension-dependent factor so the exponential-moment condition
E[exp(||noise||^2 / sigma^2)] <= e holds with equality while the variance
stays within sigma^2.

The zeroth-order oracle returns the true value plus scalar Gaussian noise.
Its standard deviation defaults to sigma * mu / sqrt(2 (n + 4)), which keeps
the excess variance of the two-point gradient estimator inside the sigma^2
budget that the convergence bounds charge for noise.  The two per-iteration
evaluations of the gradient-free method share one noise realization by
default (one draw per iteration applied to both queries); a flag switches
to independent draws.

Oracles are immutable in configuration; the call counter is the only
mutable state and is lock-protected so an oracle may be shared across
workers, each holding its own RngStream.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass

import numpy as np

from .errors import CapabilityError, DegenerateInputError, InputError
from .problems import ProblemSpec
from .rng import RngStream

NOISE_KINDS = ("none", "bounded_variance", "light_tail")


@dataclass(frozen=True)
class NoiseModel:
    """Noise family and scale for an oracle."""

    kind: str
    sigma: float = 0.0

    def __post_init__(self):
        if self.kind not in NOISE_KINDS:
            raise InputError(f"unknown noise kind {self.kind!r}")
        if self.sigma < 0:
            raise InputError("sigma must be nonnegative")
        if self.kind == "none" and self.sigma != 0.0:
            raise InputError("kind 'none' requires sigma = 0")

    @staticmethod
    def for_sigma(sigma: float, kind: str = "bounded_variance") -> "NoiseModel":
        """Convenience constructor: sigma = 0 collapses to the exact oracle."""
        if sigma == 0.0:
            return NoiseModel("none", 0.0)
        return NoiseModel(kind, sigma)


def light_tail_scale(n: int) -> float:
    """Variance shrink factor c^2 such that a Gaussian with total variance
    c^2 sigma^2 satisfies E[exp(||noise||^2 / sigma^2)] = e exactly."""
    return 0.5 * n * (1.0 - math.exp(-2.0 / n))


class _Accounting:
    """Lock-protected query counter."""

    def __init__(self):
        self._lock = threading.Lock()
        self._count = 0

    def add(self, k: int) -> None:
        with self._lock:
            self._count += k

    def reset(self) -> None:
        with self._lock:
            self._count = 0

    @property
    def value(self) -> int:
        with self._lock:
            return self._count


class FirstOrderOracle:
    """Unbiased noisy-gradient source with bounded variance."""

    def __init__(self, problem: ProblemSpec, noise: NoiseModel):
        if problem.grad is None:
            raise CapabilityError(
                "a first-order oracle needs a problem with a gradient map")
        self.problem = problem
        self.noise = noise
        self._accounting = _Accounting()
        self._noise_sd = self._componentwise_sd()

    def _componentwise_sd(self) -> float:
        if self.noise.kind == "none" or self.noise.sigma == 0.0:
            return 0.0
        total_var = self.noise.sigma ** 2
        if self.noise.kind == "light_tail":
            total_var *= light_tail_scale(self.problem.n)
        return math.sqrt(total_var / self.problem.n)

    @property
    def call_count(self) -> int:
        return self._accounting.value

    def reset_accounting(self) -> None:
        self._accounting.reset()

    def query_gradient(self, x: np.ndarray, rng: RngStream) -> np.ndarray:
        """One noisy gradient draw; increments the call counter by one."""
        x = self.problem.check_point(x)
        g = np.asarray(self.problem.grad(x), dtype=np.float64)
        if self._noise_sd > 0.0:
            g = g + self._noise_sd * rng.standard_normal(self.problem.n)
        self._accounting.add(1)
        return g

    def query_gradient_batch(self, x: np.ndarray, count: int,
                             rng: RngStream) -> np.ndarray:
        """``count`` draws at a fixed point as a (count, n) array.

        Equivalent to ``count`` sequential queries on the same stream and
        accounted as such.
        """
        x = self.problem.check_point(x)
        g = np.asarray(self.problem.grad(x), dtype=np.float64)
        draws = np.broadcast_to(g, (count, self.problem.n)).copy()
        if self._noise_sd > 0.0:
            draws += self._noise_sd * rng.standard_normal((count, self.problem.n))
        self._accounting.add(count)
        return draws


def default_value_noise_sd(sigma: float, mu: float, n: int) -> float:
    """Value-noise scale that keeps the two-point estimator's excess variance
    within the sigma^2 budget used in the zeroth-order bounds."""
    return sigma * mu / math.sqrt(2.0 * (n + 4))


class ZerothOrderOracle:
    """Unbiased noisy function-value source."""

    def __init__(self, problem: ProblemSpec, noise: NoiseModel,
                 value_noise_sd: float | None = None):
        self.problem = problem
        self.noise = noise
        if noise.sigma == 0.0:
            value_noise_sd = 0.0
        elif value_noise_sd is None:
            raise InputError(
                "a noisy zeroth-order oracle needs value_noise_sd; "
                "use ZerothOrderOracle.for_smoothing for the default scale")
        if value_noise_sd < 0:
            raise InputError("value_noise_sd must be nonnegative")
        self.value_noise_sd = float(value_noise_sd)
        self._accounting = _Accounting()

    @classmethod
    def for_smoothing(cls, problem: ProblemSpec, noise: NoiseModel,
                      mu: float) -> "ZerothOrderOracle":
        """Oracle with the default value-noise scale tied to the smoothing
        parameter of the run that will consume it."""
        sd = default_value_noise_sd(noise.sigma, mu, problem.n)
        return cls(problem, noise, value_noise_sd=sd)

    @property
    def call_count(self) -> int:
        return self._accounting.value

    def reset_accounting(self) -> None:
        self._accounting.reset()

    def query_value(self, x: np.ndarray, rng: RngStream) -> float:
        """One noisy value draw; increments the call counter by one."""
        x = self.problem.check_point(x)
        v = float(self.problem.value(x))
        if self.value_noise_sd > 0.0:
            v += self.value_noise_sd * float(rng.standard_normal())
        self._accounting.add(1)
        return v

    def query_pair(self, x_shifted: np.ndarray, x_base: np.ndarray,
                   rng: RngStream, shared_xi: bool = True) -> tuple[float, float]:
        """The two evaluations behind one two-point gradient estimate.

        Counts as two oracle calls.  With ``shared_xi`` both evaluations see
        the same noise realization; otherwise each draws its own.
        """
        x_shifted = self.problem.check_point(x_shifted)
        x_base = self.problem.check_point(x_base)
        v1 = float(self.problem.value(x_shifted))
        v0 = float(self.problem.value(x_base))
        if self.value_noise_sd > 0.0:
            theta = self.value_noise_sd * float(rng.standard_normal())
            if shared_xi:
                v1 += theta
                v0 += theta
            else:
                v1 += theta
                v0 += self.value_noise_sd * float(rng.standard_normal())
        self._accounting.add(2)
        return v1, v0

    def query_pair_batch(self, x_base: np.ndarray, shifts: np.ndarray,
                         rng: RngStream, shared_xi: bool = True
                         ) -> tuple[np.ndarray, np.ndarray]:
        """Vectorized pairs at a fixed base point: shifts is (T, n) and the
        result is (values at base + shift, values at base), each (T,).
        Counts as 2 T calls."""
        x_base = self.problem.check_point(x_base)
        T = shifts.shape[0]
        v1 = self.problem.values_at(x_base[None, :] + shifts)
        v0 = np.full(T, float(self.problem.value(x_base)))
        if self.value_noise_sd > 0.0:
            theta = self.value_noise_sd * rng.standard_normal(T)
            if shared_xi:
                v1 = v1 + theta
                v0 = v0 + theta
            else:
                v1 = v1 + theta
                v0 = v0 + self.value_noise_sd * rng.standard_normal(T)
        self._accounting.add(2 * T)
        return v1, v0


def reset_accounting(oracle) -> None:
    """Zero the oracle's call counter."""
    oracle.reset_accounting()


def estimate_parameters(oracle: FirstOrderOracle, trial_points,
                        draws_per_point: int, rng: RngStream
                        ) -> tuple[float, float]:
    """Sample-based estimates (L_hat, sigma_hat) from gradient draws at a
    few trial points.

    L_hat is the largest pairwise secant slope of the averaged gradients;
    sigma_hat is the pooled standard deviation of the draws around their
    per-point means.
    """
    points = [np.asarray(p, dtype=np.float64) for p in trial_points]
    if len(points) < 2:
        raise InputError("need at least 2 trial points")
    if draws_per_point < 2:
        raise InputError("need at least 2 draws per point")
    for i in range(len(points)):
        for j in range(i + 1, len(points)):
            if np.array_equal(points[i], points[j]):
                raise DegenerateInputError(
                    f"trial points {i} and {j} coincide")

    means = []
    pooled_sq = 0.0
    for p in points:
        draws = oracle.query_gradient_batch(p, draws_per_point, rng)
        mean = draws.mean(axis=0)
        means.append(mean)
        pooled_sq += float(np.sum((draws - mean) ** 2))

    L_hat = 0.0
    for i in range(len(points)):
        for j in range(i + 1, len(points)):
            slope = (np.linalg.norm(means[i] - means[j])
                     / np.linalg.norm(points[i] - points[j]))
            L_hat = max(L_hat, float(slope))
    dof = len(points) * (draws_per_point - 1)
    sigma_hat = math.sqrt(pooled_sq / dof)
    return L_hat, sigma_hat
