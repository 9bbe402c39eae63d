"""Benchmark objectives with known smoothness constants.

Three families are provided:

* random-rotation quadratics, where L, the optimum and the Gaussian-smoothed
  function are all available in closed form;
* a synthetic convex least-squares regression over sparse-uniform features,
  whose population objective is an explicit quadratic;
* a nonconvex sigmoid-loss SVM over sparse binary features, whose population
  objective is computed by exact enumeration of the feature support (so the
  dimension is capped) and whose Lipschitz constant is certified numerically.

All data are generated on the fly from seeded streams; there are no dataset
files, and a fresh sample is drawn per oracle query.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import CapabilityError, DimensionMismatchError, InputError
from .rng import RngStream

# Peak of |d^2/dm^2 (1 - tanh m)| = 2|t|(1 - t^2) at t = 1/sqrt(3).
_SIGMOID_CURVATURE_PEAK = 4.0 / (3.0 * np.sqrt(3.0))

# Exact enumeration of {0,1}^n feature patterns is used for the SVM
# population objective; beyond this dimension the enumeration is too large.
SVM_MAX_EXACT_DIM = 16


@dataclass(kw_only=True)
class ProblemSpec:
    """An L-smooth objective used as ground truth by oracles and tests.

    ``value`` maps a point in R^n to a scalar; ``grad`` is optional (value-only
    problems are legal but cannot serve first-order oracles).  ``value_batch``
    and ``grad_batch``, when present, evaluate a whole (m, n) array of points
    at once and are used by Monte Carlo loops for speed only; they must agree
    with the pointwise maps.
    """

    name: str
    n: int
    lipschitz_L: float
    value: Callable[[np.ndarray], float]
    grad: Callable[[np.ndarray], np.ndarray] | None = None
    value_batch: Callable[[np.ndarray], np.ndarray] | None = None
    grad_batch: Callable[[np.ndarray], np.ndarray] | None = None
    f_star: float | None = None
    x_star: np.ndarray | None = None
    is_convex: bool = False

    def __post_init__(self):
        if self.n < 1:
            raise InputError(f"dimension must be >= 1, got {self.n}")
        if not self.lipschitz_L > 0:
            raise InputError(f"lipschitz_L must be > 0, got {self.lipschitz_L}")

    @property
    def has_grad(self) -> bool:
        return self.grad is not None

    def check_point(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.shape != (self.n,):
            raise DimensionMismatchError(
                f"point has shape {x.shape}, expected ({self.n},)")
        return x

    def require_grad(self) -> Callable[[np.ndarray], np.ndarray]:
        if self.grad is None:
            raise CapabilityError(f"problem {self.name!r} has no gradient map")
        return self.grad

    def values_at(self, points: np.ndarray) -> np.ndarray:
        """Evaluate a (m, n) array of points, via the batch map if present."""
        points = np.asarray(points, dtype=np.float64)
        if self.value_batch is not None:
            return np.asarray(self.value_batch(points), dtype=np.float64)
        return np.array([self.value(p) for p in points], dtype=np.float64)


@dataclass(kw_only=True)
class QuadraticProblem(ProblemSpec):
    """f(x) = 0.5 x'Ax + b'x + c with A symmetric PSD of known spectrum."""

    A: np.ndarray
    b: np.ndarray
    c: float
    spectrum: np.ndarray

    @property
    def trace(self) -> float:
        return float(np.sum(self.spectrum))

    def smoothed_value_exact(self, x: np.ndarray, mu: float) -> float:
        """Gaussian-smoothed value in closed form: f(x) + mu^2 * trace(A) / 2."""
        return self.value(x) + 0.5 * mu * mu * self.trace

    def smoothed_min_value(self, mu: float) -> float:
        """Minimum of the smoothed function (gradients are preserved, so the
        minimizer is unchanged and the offset is the trace term)."""
        if self.f_star is None:
            raise CapabilityError("smoothed minimum needs a positive-definite A")
        return self.f_star + 0.5 * mu * mu * self.trace


def make_quadratic(spectrum, rng: RngStream | None = None, *,
                   b: np.ndarray | None = None, c: float = 0.0,
                   rotate: bool = True, name: str = "quadratic") -> QuadraticProblem:
    """Build a quadratic with exactly the given eigenvalues.

    With ``rotate`` the eigenbasis is a seeded random rotation; otherwise A is
    the plain diagonal matrix.  L is the largest eigenvalue; the optimum is
    available whenever A is positive definite.
    """
    spectrum = np.asarray(spectrum, dtype=np.float64)
    if spectrum.ndim != 1 or spectrum.size < 1:
        raise InputError("spectrum must be a nonempty 1-d sequence")
    if np.any(spectrum < 0):
        raise InputError("spectrum must be nonnegative for a convex quadratic")
    n = spectrum.size
    if rotate:
        if rng is None:
            raise InputError("a rng is required for a rotated quadratic")
        m = rng.standard_normal((n, n))
        q, r = np.linalg.qr(m)
        q = q * np.sign(np.diag(r))  # fix signs so the rotation is unique
        A = (q * spectrum) @ q.T
        A = 0.5 * (A + A.T)
    else:
        A = np.diag(spectrum)
    b = np.zeros(n) if b is None else np.asarray(b, dtype=np.float64)
    if b.shape != (n,):
        raise InputError(f"b has shape {b.shape}, expected ({n},)")

    L = float(np.max(spectrum)) if spectrum.size else 0.0
    if L <= 0:
        raise InputError("at least one eigenvalue must be positive")

    def value(x):
        return float(0.5 * x @ (A @ x) + b @ x + c)

    def grad(x):
        return A @ x + b

    def value_batch(xs):
        return 0.5 * np.einsum("ij,ij->i", xs @ A, xs) + xs @ b + c

    def grad_batch(xs):
        return xs @ A.T + b

    x_star = None
    f_star = None
    if np.min(spectrum) > 0:
        x_star = np.linalg.solve(A, -b)
        f_star = float(c - 0.5 * b @ np.linalg.solve(A, b))

    return QuadraticProblem(
        name=name, n=n, lipschitz_L=L, value=value, grad=grad,
        value_batch=value_batch, grad_batch=grad_batch,
        f_star=f_star, x_star=x_star, is_convex=True,
        A=A, b=b, c=float(c), spectrum=np.sort(spectrum)[::-1].copy(),
    )


@dataclass(kw_only=True)
class LeastSquaresProblem(ProblemSpec):
    """Population least squares over sparse-uniform features.

    Features are u_i = B_i * U_i with B_i ~ Bernoulli(sparsity) and
    U_i ~ Uniform[0, 1], all independent; labels are v = <x_bar, u> + noise.
    The population objective is the explicit quadratic
    (x - x_bar)' M (x - x_bar) + noise_sd^2 with M = E[u u'].
    """

    x_bar: np.ndarray
    sparsity: float
    noise_sd: float
    second_moment: np.ndarray

    def sample(self, x: np.ndarray, rng: RngStream) -> tuple[float, np.ndarray]:
        """One (value, gradient) draw from a fresh data point; unbiased for
        the population value and gradient."""
        x = self.check_point(x)
        gen = rng.generator
        u = (gen.random(self.n) < self.sparsity) * gen.random(self.n)
        v = float(self.x_bar @ u) + self.noise_sd * float(gen.standard_normal())
        resid = float(x @ u) - v
        return resid * resid, 2.0 * resid * u


def make_least_squares(n: int, *, sparsity: float = 0.05, noise_sd: float = 0.1,
                       x_bar: np.ndarray | None = None,
                       name: str = "least-squares") -> LeastSquaresProblem:
    """Convex least-squares instance with closed-form population quantities."""
    if n < 1:
        raise InputError("n must be >= 1")
    if not 0 < sparsity <= 1:
        raise InputError("sparsity must lie in (0, 1]")
    if noise_sd < 0:
        raise InputError("noise_sd must be nonnegative")
    if x_bar is None:
        x_bar = np.ones(n) / np.sqrt(n)
    else:
        x_bar = np.asarray(x_bar, dtype=np.float64)
        if x_bar.shape != (n,):
            raise InputError(f"x_bar has shape {x_bar.shape}, expected ({n},)")

    # Second moment of the feature vector: E[u_i^2] = s/3 on the diagonal,
    # E[u_i u_j] = s^2/4 off it.
    diag = sparsity / 3.0 - sparsity * sparsity / 4.0
    off = sparsity * sparsity / 4.0
    M = np.full((n, n), off) + np.eye(n) * diag
    lam_max = diag + n * off
    L = 2.0 * lam_max
    f_star = noise_sd * noise_sd

    def value(x):
        d = x - x_bar
        return float(d @ (M @ d)) + f_star

    def grad(x):
        return 2.0 * (M @ (x - x_bar))

    def value_batch(xs):
        d = xs - x_bar
        return np.einsum("ij,ij->i", d @ M, d) + f_star

    def grad_batch(xs):
        return 2.0 * ((xs - x_bar) @ M.T)

    return LeastSquaresProblem(
        name=name, n=n, lipschitz_L=L, value=value, grad=grad,
        value_batch=value_batch, grad_batch=grad_batch,
        f_star=f_star, x_star=x_bar.copy(), is_convex=True,
        x_bar=x_bar, sparsity=float(sparsity), noise_sd=float(noise_sd),
        second_moment=M,
    )


@dataclass(kw_only=True)
class SigmoidSvmProblem(ProblemSpec):
    """Nonconvex SVM with sigmoid loss 1 - tanh(v <x, u>) plus an L2 term.

    Features u live in {0, 1}^n with iid Bernoulli(sparsity) components,
    labels are v = sign(<x_ref, u>) (sign(0) := +1).  The population value
    and gradient are computed by exact enumeration of the 2^n patterns; the
    Lipschitz constant is a sampled-Hessian bound with a 1.5 safety factor.
    """

    x_ref: np.ndarray
    reg_weight: float
    sparsity: float
    patterns: np.ndarray = field(repr=False)       # (2^n, n) binary matrix
    pattern_probs: np.ndarray = field(repr=False)  # (2^n,) probabilities
    labels: np.ndarray = field(repr=False)         # (2^n,) in {-1, +1}

    def sample(self, x: np.ndarray, rng: RngStream) -> tuple[float, np.ndarray]:
        """One (value, gradient) draw from a fresh (u, v) pair."""
        x = self.check_point(x)
        gen = rng.generator
        u = (gen.random(self.n) < self.sparsity).astype(np.float64)
        v = 1.0 if self.x_ref @ u >= 0 else -1.0
        m = v * float(x @ u)
        t = np.tanh(m)
        val = 1.0 - t + self.reg_weight * float(x @ x)
        g = -v * (1.0 - t * t) * u + 2.0 * self.reg_weight * x
        return val, g

    def hessian(self, x: np.ndarray) -> np.ndarray:
        """Exact population Hessian at x."""
        x = self.check_point(x)
        m = self.labels * (self.patterns @ x)
        t = np.tanh(m)
        w = self.pattern_probs * 2.0 * t * (1.0 - t * t)
        H = (self.patterns * w[:, None]).T @ self.patterns
        return H + 2.0 * self.reg_weight * np.eye(self.n)


def make_sigmoid_svm(n: int, rng: RngStream, *, reg_weight: float = 0.01,
                     sparsity: float = 0.05, hessian_samples: int = 64,
                     name: str = "sigmoid-svm") -> SigmoidSvmProblem:
    """Nonconvex sigmoid-SVM instance with enumerated population objective."""
    if n < 1:
        raise InputError("n must be >= 1")
    if n > SVM_MAX_EXACT_DIM:
        raise InputError(
            f"exact enumeration supports n <= {SVM_MAX_EXACT_DIM}, got {n}")
    if reg_weight <= 0:
        raise InputError("reg_weight must be positive")
    if not 0 < sparsity <= 1:
        raise InputError("sparsity must lie in (0, 1]")

    # Signed reference separator so both labels occur.
    x_ref = rng.generator.uniform(-1.0, 1.0, size=n)

    count = 1 << n
    patterns = ((np.arange(count)[:, None] >> np.arange(n)) & 1).astype(np.float64)
    sizes = patterns.sum(axis=1)
    probs = sparsity ** sizes * (1.0 - sparsity) ** (n - sizes)
    labels = np.where(patterns @ x_ref >= 0, 1.0, -1.0)

    def value(x):
        m = labels * (patterns @ x)
        return float(probs @ (1.0 - np.tanh(m))) + reg_weight * float(x @ x)

    def grad(x):
        m = labels * (patterns @ x)
        t = np.tanh(m)
        w = probs * labels * (1.0 - t * t)
        return -(patterns.T @ w) + 2.0 * reg_weight * x

    def value_batch(xs):
        m = labels[None, :] * (xs @ patterns.T)
        return (1.0 - np.tanh(m)) @ probs + reg_weight * np.einsum(
            "ij,ij->i", xs, xs)

    def grad_batch(xs):
        m = labels[None, :] * (xs @ patterns.T)
        t = np.tanh(m)
        w = (1.0 - t * t) * (probs * labels)[None, :]
        return -(w @ patterns) + 2.0 * reg_weight * xs

    problem = SigmoidSvmProblem(
        name=name, n=n, lipschitz_L=1.0, value=value, grad=grad,
        value_batch=value_batch, grad_batch=grad_batch,
        f_star=None, x_star=None, is_convex=False,
        x_ref=x_ref, reg_weight=float(reg_weight), sparsity=float(sparsity),
        patterns=patterns, pattern_probs=probs, labels=labels,
    )

    # Certify L numerically: the curvature peaks at margins near
    # atanh(1/sqrt(3)), so the probe points sweep radii from small to large.
    probe_rng = rng.derive(1)
    worst = 2.0 * reg_weight
    for i in range(hessian_samples):
        radius = 0.05 * (1.6 ** (i % 16))
        direction = probe_rng.standard_normal(n)
        direction /= np.linalg.norm(direction)
        H = problem.hessian(radius * direction)
        worst = max(worst, float(np.max(np.abs(np.linalg.eigvalsh(H)))))
    problem.lipschitz_L = 1.5 * worst
    return problem


# Per-sample oracle realizations, exposed as free functions as well as
# methods so the call sites read uniformly.

def population_gradient_ls(problem: LeastSquaresProblem, x: np.ndarray) -> np.ndarray:
    """Closed-form population gradient 2 M (x - x_bar)."""
    return problem.grad(problem.check_point(x))


def sample_loss_ls(problem: LeastSquaresProblem, x: np.ndarray,
                   rng: RngStream) -> tuple[float, np.ndarray]:
    return problem.sample(x, rng)


def sample_loss_svm(problem: SigmoidSvmProblem, x: np.ndarray,
                    rng: RngStream) -> tuple[float, np.ndarray]:
    return problem.sample(x, rng)


@dataclass
class SmoothnessReport:
    """Worst-case margins from random-pair smoothness checks.

    Each margin is (bound side) - (quantity it must dominate); the property
    holds on the sampled pairs iff the margin is >= -tolerance.
    """

    pairs: int
    upper_margin: float            # quadratic upper bound, both signs
    secant_margin: float           # L ||y - x|| - ||grad(y) - grad(x)||
    convex_lower_margin: float | None = None
    convex_cocoercivity_margin: float | None = None

    def ok(self, tolerance: float = 1e-9) -> bool:
        margins = [self.upper_margin, self.secant_margin,
                   self.convex_lower_margin, self.convex_cocoercivity_margin]
        return all(m >= -tolerance for m in margins if m is not None)


def validate_smoothness(problem: ProblemSpec, pairs: int, rng: RngStream,
                        point_scale: float = 2.0) -> SmoothnessReport:
    """Check the descent-lemma inequality (and, for convex problems, the
    lower-bound and cocoercivity inequalities) on random point pairs."""
    grad = problem.require_grad()
    L = problem.lipschitz_L
    upper = np.inf
    secant = np.inf
    lower = np.inf if problem.is_convex else None
    coco = np.inf if problem.is_convex else None
    for _ in range(pairs):
        x = point_scale * rng.standard_normal(problem.n)
        y = point_scale * rng.standard_normal(problem.n)
        gx, gy = grad(x), grad(y)
        gap = problem.value(y) - problem.value(x) - float(gx @ (y - x))
        sq = float((y - x) @ (y - x))
        upper = min(upper, 0.5 * L * sq - abs(gap))
        dg = float(np.linalg.norm(gy - gx))
        secant = min(secant, L * float(np.linalg.norm(y - x)) - dg)
        if problem.is_convex:
            lower = min(lower, gap - dg * dg / (2.0 * L))
            coco = min(coco, float((gy - gx) @ (y - x)) - dg * dg / L)
    return SmoothnessReport(pairs=pairs, upper_margin=upper,
                            secant_margin=secant, convex_lower_margin=lower,
                            convex_cocoercivity_margin=coco)
