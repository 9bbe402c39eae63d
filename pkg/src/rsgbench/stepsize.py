"""Stepsize policies and the random-termination distribution they induce.

A plan is a finite sequence {gamma_k}, k = 1..N.  The randomized methods
stop at a random index R drawn from a probability mass built from the plan:
weights 2 gamma_k - L gamma_k^2 in the first-order regime (which needs
gamma_k < 2 / L) and gamma_k - 2 L (n + 4) gamma_k^2 in the zeroth-order
regime (which needs gamma_k < 1 / (2 (n + 4) L)).  Constant plans always
induce the exact uniform distribution.

All objects here are immutable after construction and safe to share.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InputError, ValidityError
from .rng import RngStream

PLAN_KINDS = ("constant", "increasing", "decreasing", "custom")


@dataclass(frozen=True)
class StepsizePlan:
    """A stepsize sequence plus the parameters that produced it."""

    kind: str
    gammas: np.ndarray
    L: float
    d_tilde: float
    sigma: float
    num_iterations: int
    dim: int | None = None   # set for zeroth-order plans

    def __post_init__(self):
        if self.kind not in PLAN_KINDS:
            raise InputError(f"unknown plan kind {self.kind!r}")
        gammas = np.asarray(self.gammas, dtype=np.float64)
        object.__setattr__(self, "gammas", gammas)
        if gammas.ndim != 1 or gammas.size < 1:
            raise InputError("gammas must be a nonempty 1-d sequence")
        if gammas.size != self.num_iterations:
            raise InputError("gammas length disagrees with num_iterations")
        if np.any(gammas <= 0):
            raise InputError("all stepsizes must be positive")


def _check_params(L: float, D_tilde: float, sigma: float, N: int) -> None:
    if not L > 0:
        raise InputError(f"L must be positive, got {L}")
    if not D_tilde > 0:
        raise InputError(f"D_tilde must be positive, got {D_tilde}")
    if sigma < 0:
        raise InputError(f"sigma must be nonnegative, got {sigma}")
    if N < 1:
        raise InputError(f"N must be >= 1, got {N}")


def _noise_cap(D_tilde: float, sigma: float, scale: float) -> float:
    """D_tilde / (sigma * scale) with the sigma = 0 case read as +inf."""
    if sigma == 0.0:
        return math.inf
    return D_tilde / (sigma * scale)


def constant_plan_first_order(L: float, D_tilde: float, sigma: float,
                              N: int) -> StepsizePlan:
    """gamma_k = min{1 / L, D_tilde / (sigma sqrt(N))} for every k."""
    _check_params(L, D_tilde, sigma, N)
    gamma = min(1.0 / L, _noise_cap(D_tilde, sigma, math.sqrt(N)))
    return StepsizePlan(kind="constant", gammas=np.full(N, gamma), L=L,
                        d_tilde=D_tilde, sigma=sigma, num_iterations=N)


def increasing_plan(L: float, D_tilde: float, sigma: float,
                    N: int) -> StepsizePlan:
    """gamma_k = min{1 / L, D_tilde sqrt(k) / (sigma N)}."""
    _check_params(L, D_tilde, sigma, N)
    k = np.arange(1, N + 1, dtype=np.float64)
    if sigma == 0.0:
        gammas = np.full(N, 1.0 / L)
    else:
        gammas = np.minimum(1.0 / L, D_tilde * np.sqrt(k) / (sigma * N))
    return StepsizePlan(kind="increasing", gammas=gammas, L=L,
                        d_tilde=D_tilde, sigma=sigma, num_iterations=N)


def decreasing_plan(L: float, D_tilde: float, sigma: float,
                    N: int) -> StepsizePlan:
    """gamma_k = min{1 / L, D_tilde / (sigma (k N)^{1/4})}."""
    _check_params(L, D_tilde, sigma, N)
    k = np.arange(1, N + 1, dtype=np.float64)
    if sigma == 0.0:
        gammas = np.full(N, 1.0 / L)
    else:
        gammas = np.minimum(1.0 / L, D_tilde / (sigma * (k * N) ** 0.25))
    return StepsizePlan(kind="decreasing", gammas=gammas, L=L,
                        d_tilde=D_tilde, sigma=sigma, num_iterations=N)


def constant_plan_zeroth_order(L: float, D_tilde: float, sigma: float,
                               N: int, n: int) -> StepsizePlan:
    """gamma_k = (1 / sqrt(n+4)) min{1 / (4 L sqrt(n+4)), D_tilde / (sigma sqrt(N))}.

    Always strictly inside the zeroth-order regime gamma < 1 / (2 (n+4) L).
    """
    _check_params(L, D_tilde, sigma, N)
    if n < 1:
        raise InputError(f"n must be >= 1, got {n}")
    root = math.sqrt(n + 4)
    gamma = (1.0 / root) * min(1.0 / (4.0 * L * root),
                               _noise_cap(D_tilde, sigma, math.sqrt(N)))
    return StepsizePlan(kind="constant", gammas=np.full(N, gamma), L=L,
                        d_tilde=D_tilde, sigma=sigma, num_iterations=N, dim=n)


@dataclass(frozen=True)
class TerminationDistribution:
    """Probability mass P_R over iteration indices 1..N, with its CDF."""

    probs: np.ndarray
    cdf: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        probs = np.asarray(self.probs, dtype=np.float64)
        object.__setattr__(self, "probs", probs)
        if probs.ndim != 1 or probs.size < 1:
            raise InputError("probs must be a nonempty 1-d sequence")
        if np.any(probs < 0):
            raise InputError("probabilities must be nonnegative")
        if abs(float(np.sum(probs)) - 1.0) > 1e-12:
            raise InputError("probabilities must sum to 1 within 1e-12")
        cdf = self.cdf
        if cdf is None:
            cdf = np.cumsum(probs)
            cdf[-1] = 1.0
        else:
            cdf = np.asarray(cdf, dtype=np.float64)
        object.__setattr__(self, "cdf", cdf)

    @property
    def num_iterations(self) -> int:
        return self.probs.size


def _weights_to_distribution(weights: np.ndarray) -> TerminationDistribution:
    total = float(np.sum(weights))
    probs = weights / total
    probs = probs / float(np.sum(probs))  # renormalize away rounding residue
    return TerminationDistribution(probs=probs)


def termination_distribution_first_order(plan: StepsizePlan,
                                         L: float) -> TerminationDistribution:
    """P_R(k) proportional to 2 gamma_k - L gamma_k^2; needs gamma_k < 2/L."""
    gammas = plan.gammas
    bad = np.nonzero(gammas >= 2.0 / L)[0]
    if bad.size:
        k = int(bad[0]) + 1
        raise ValidityError(
            f"gamma_{k} = {gammas[bad[0]]} violates the first-order "
            f"requirement gamma < 2/L = {2.0 / L}")
    return _weights_to_distribution(2.0 * gammas - L * gammas * gammas)


def termination_distribution_zeroth_order(plan: StepsizePlan, L: float,
                                          n: int) -> TerminationDistribution:
    """P_R(k) proportional to gamma_k - 2 L (n+4) gamma_k^2; needs
    gamma_k < 1 / (2 (n+4) L)."""
    gammas = plan.gammas
    cap = 1.0 / (2.0 * (n + 4) * L)
    bad = np.nonzero(gammas >= cap)[0]
    if bad.size:
        k = int(bad[0]) + 1
        raise ValidityError(
            f"gamma_{k} = {gammas[bad[0]]} violates the zeroth-order "
            f"requirement gamma < 1/(2(n+4)L) = {cap}")
    return _weights_to_distribution(gammas - 2.0 * L * (n + 4) * gammas * gammas)


def sample_R(dist: TerminationDistribution, rng: RngStream) -> int:
    """Draw R in {1, ..., N} by inverse CDF from a single uniform draw.

    A draw landing exactly on a CDF boundary resolves to the lower index.
    """
    u = rng.uniform()
    idx = int(np.searchsorted(dist.cdf, u, side="left"))
    return min(idx, dist.num_iterations - 1) + 1
