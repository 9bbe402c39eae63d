"""Closed-form evaluators for the theoretical quantities.

Everything here is a pure function of its arguments.  Conventions:

* ``compute_BN`` returns the quantity that bounds (1/L) E[||grad f(x_R)||^2]
  under the constant stepsize policy; verifiers therefore compare the raw
  expectation E[||grad f(x_R)||^2] against L * B_N, and reports state this
  explicitly.
* Probability bounds can exceed 1 for small lambda; they are clamped and
  flagged vacuous rather than reported raw, so empirical comparisons stay
  meaningful.
* D~ enters exactly as supplied.  The optimal choice is D~ = D_f (or D_X),
  but the scale constants are rarely known in practice and every formula
  accepts a suboptimal surrogate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InputError, ValidityError
from .oracles import light_tail_scale
from .rng import RngStream
from .stats import FrequencyEstimate


def compute_Df(f_x1: float, f_star: float, L: float) -> float:
    """Scale constant [2 (f(x1) - f*) / L]^{1/2}."""
    if not L > 0:
        raise InputError(f"L must be positive, got {L}")
    if f_x1 < f_star:
        raise InputError(
            f"f(x1) = {f_x1} is below the claimed optimal value {f_star}")
    return math.sqrt(2.0 * (f_x1 - f_star) / L)


def compute_DX(x1: np.ndarray, x_star: np.ndarray) -> float:
    """Scale constant ||x1 - x*|| for the convex bounds."""
    return float(np.linalg.norm(np.asarray(x1) - np.asarray(x_star)))


def _check_common(L: float, D: float, D_tilde: float, sigma: float,
                  N: int) -> None:
    if not (L > 0 and D > 0 and D_tilde > 0):
        raise InputError("L and the scale constants must be positive")
    if sigma < 0:
        raise InputError("sigma must be nonnegative")
    if N < 1:
        raise InputError(f"N must be >= 1, got {N}")


def compute_BN(L: float, D_f: float, D_tilde: float, sigma: float,
               N: int) -> float:
    """B_N = L D_f^2 / N + (D~ + D_f^2 / D~) sigma / sqrt(N); bounds
    (1/L) E[||grad f(x_R)||^2] under the constant first-order policy."""
    _check_common(L, D_f, D_tilde, sigma, N)
    return (L * D_f * D_f / N
            + (D_tilde + D_f * D_f / D_tilde) * sigma / math.sqrt(N))


def convex_expectation_bound(L: float, D_X: float, D_tilde: float,
                             sigma: float, N: int) -> float:
    """Bound on E[f(x_R) - f*] for convex problems, constant policy."""
    _check_common(L, D_X, D_tilde, sigma, N)
    return (L * D_X * D_X / N
            + (D_tilde + D_X * D_X / D_tilde) * sigma / math.sqrt(N))


def compute_BN_bar(L: float, D_f: float, D_tilde: float, sigma: float,
                   N: int, n: int) -> float:
    """B~_N = 12 (n+4) L D_f^2 / N + 4 sigma sqrt(n+4) (D~ + D_f^2/D~) / sqrt(N);
    the zeroth-order analogue of B_N."""
    _check_common(L, D_f, D_tilde, sigma, N)
    if n < 1:
        raise InputError(f"n must be >= 1, got {n}")
    return (12.0 * (n + 4) * L * D_f * D_f / N
            + 4.0 * sigma * math.sqrt(n + 4)
            * (D_tilde + D_f * D_f / D_tilde) / math.sqrt(N))


def zeroth_convex_expectation_bound(L: float, D_X: float, D_tilde: float,
                                    sigma: float, N: int, n: int) -> float:
    """Bound on E[f(x_R) - f*] for convex problems, zeroth-order constant
    policy with mu <= D_X / sqrt(n+4)."""
    _check_common(L, D_X, D_tilde, sigma, N)
    if n < 1:
        raise InputError(f"n must be >= 1, got {n}")
    return (5.0 * L * (n + 4) * D_X * D_X / N
            + 2.0 * sigma * math.sqrt(n + 4)
            * (D_tilde + D_X * D_X / D_tilde) / math.sqrt(N))


def compute_DN(L: float, B_bar_N: float, sigma: float, D_f: float,
               N: int, n: int) -> float:
    """Second-moment budget of one two-point draw at a candidate:
    D_N = 2 (n+4) [L B~_N + sigma^2 + L^2 D_f^2 / (2 N)]."""
    if not (L > 0 and D_f > 0):
        raise InputError("L and D_f must be positive")
    if B_bar_N < 0 or sigma < 0:
        raise InputError("B~_N and sigma must be nonnegative")
    if N < 1 or n < 1:
        raise InputError("N and n must be >= 1")
    return 2.0 * (n + 4) * (L * B_bar_N + sigma * sigma
                            + L * L * D_f * D_f / (2.0 * N))


# -- general-plan expectation bounds (any stepsize sequence) ----------------

def plan_bound_gradnorm(gammas, L: float, D_f: float, sigma: float) -> float:
    """Bound on E[||grad f(x_R)||^2] for an arbitrary first-order plan:
    L (D_f^2 + sigma^2 sum gamma^2) / sum(2 gamma - L gamma^2)."""
    gammas = np.asarray(gammas, dtype=np.float64)
    if np.any(gammas >= 2.0 / L):
        raise ValidityError("every stepsize must satisfy gamma < 2/L")
    denom = float(np.sum(2.0 * gammas - L * gammas * gammas))
    return L * (D_f * D_f + sigma * sigma * float(np.sum(gammas ** 2))) / denom


def plan_bound_fgap(gammas, L: float, D_X: float, sigma: float) -> float:
    """Convex analogue of :func:`plan_bound_gradnorm`, bounding
    E[f(x_R) - f*]."""
    gammas = np.asarray(gammas, dtype=np.float64)
    if np.any(gammas >= 2.0 / L):
        raise ValidityError("every stepsize must satisfy gamma < 2/L")
    denom = float(np.sum(2.0 * gammas - L * gammas * gammas))
    return (D_X * D_X + sigma * sigma * float(np.sum(gammas ** 2))) / denom


def zeroth_plan_bound_gradnorm(gammas, L: float, D_f: float, sigma: float,
                               mu: float, n: int) -> float:
    """Bound on E[||grad f(x_R)||^2] for an arbitrary zeroth-order plan."""
    gammas = np.asarray(gammas, dtype=np.float64)
    cap = 1.0 / (2.0 * (n + 4) * L)
    if np.any(gammas >= cap):
        raise ValidityError("every stepsize must satisfy gamma < 1/(2(n+4)L)")
    denom = float(np.sum(gammas - 2.0 * L * (n + 4) * gammas * gammas))
    mid = 1.0 + L * (n + 4) ** 2 * float(
        np.sum(gammas / 4.0 + L * gammas * gammas))
    numer = (D_f * D_f + 2.0 * mu * mu * (n + 4) * mid
             + 2.0 * (n + 4) * sigma * sigma * float(np.sum(gammas ** 2)))
    return L * numer / denom


def zeroth_plan_bound_fgap(gammas, L: float, D_X: float, sigma: float,
                           mu: float, n: int) -> float:
    """Convex analogue of :func:`zeroth_plan_bound_gradnorm`."""
    gammas = np.asarray(gammas, dtype=np.float64)
    cap = 1.0 / (2.0 * (n + 4) * L)
    if np.any(gammas >= cap):
        raise ValidityError("every stepsize must satisfy gamma < 1/(2(n+4)L)")
    denom = float(np.sum(gammas - 2.0 * (n + 4) * L * gammas * gammas))
    numer = (D_X * D_X
             + 2.0 * mu * mu * L * (n + 4) * float(
                 np.sum(gammas + L * (n + 4) ** 2 * gammas * gammas))
             + 2.0 * (n + 4) * sigma * sigma * float(np.sum(gammas ** 2)))
    return numer / (2.0 * denom)


# -- deviation thresholds ----------------------------------------------------

@dataclass(frozen=True)
class DeviationBound:
    """A tail threshold paired with the probability bound it carries."""

    name: str
    lam: float
    threshold: float
    prob_bound: float
    vacuous: bool

    @staticmethod
    def make(name: str, lam: float, threshold: float,
             raw_prob: float) -> "DeviationBound":
        return DeviationBound(name=name, lam=lam, threshold=threshold,
                              prob_bound=min(raw_prob, 1.0),
                              vacuous=raw_prob >= 1.0)


def markov_deviation(L: float, B_N: float, lam: float,
                     name: str = "single-run-markov") -> DeviationBound:
    """P{||grad f(x_R)||^2 >= lambda L B_N} <= 1 / lambda."""
    if not lam > 0:
        raise InputError(f"lambda must be positive, got {lam}")
    return DeviationBound.make(name, lam, lam * L * B_N, 1.0 / lam)


def deviation_threshold_2rsg(L: float, B_N: float, sigma: float, T: int,
                             S: int, lam: float) -> DeviationBound:
    """Two-phase first-order tail:
    P{||grad f(x*)||^2 >= 2 (4 L B_N + 3 lambda sigma^2 / T)}
        <= (S+1)/lambda + 2^{-S}."""
    if not lam > 0:
        raise InputError(f"lambda must be positive, got {lam}")
    if T < 1 or S < 1:
        raise InputError("T and S must be >= 1")
    threshold = 2.0 * (4.0 * L * B_N + 3.0 * lam * sigma * sigma / T)
    raw = (S + 1) / lam + 2.0 ** (-S)
    return DeviationBound.make("two-phase-first-order", lam, threshold, raw)


def deviation_threshold_2rsg_light_tail(L: float, B_N: float, sigma: float,
                                        T: int, S: int,
                                        lam: float) -> DeviationBound:
    """Light-tail variant:
    P{||grad f(x*)||^2 >= 4 [2 L B_N + 3 (1+lambda)^2 sigma^2 / T]}
        <= (S+1) exp(-lambda^2/3) + 2^{-S}."""
    if not lam > 0:
        raise InputError(f"lambda must be positive, got {lam}")
    if T < 1 or S < 1:
        raise InputError("T and S must be >= 1")
    threshold = 4.0 * (2.0 * L * B_N
                       + 3.0 * (1.0 + lam) ** 2 * sigma * sigma / T)
    raw = (S + 1) * math.exp(-lam * lam / 3.0) + 2.0 ** (-S)
    return DeviationBound.make("two-phase-light-tail", lam, threshold, raw)


def deviation_threshold_2rsgf(L: float, B_bar_N: float, D_f: float,
                              sigma: float, N: int, T: int, S: int, n: int,
                              lam: float) -> DeviationBound:
    """Two-phase zeroth-order tail:
    P{||grad f(x*)||^2 >= 8 L B~_N + 3 (n+4) L^2 D_f^2 / (2N)
        + (24 (n+4) lambda / T) [L B~_N + (n+4) L^2 D_f^2 / N + sigma^2]}
        <= (S+1)/lambda + 2^{-S}."""
    if not lam > 0:
        raise InputError(f"lambda must be positive, got {lam}")
    if T < 1 or S < 1 or N < 1 or n < 1:
        raise InputError("T, S, N and n must be >= 1")
    base = (8.0 * L * B_bar_N
            + 3.0 * (n + 4) * L * L * D_f * D_f / (2.0 * N))
    spread = (24.0 * (n + 4) * lam / T) * (
        L * B_bar_N + (n + 4) * L * L * D_f * D_f / N + sigma * sigma)
    raw = (S + 1) / lam + 2.0 ** (-S)
    return DeviationBound.make("two-phase-zeroth-order", lam,
                               base + spread, raw)


def budget_totals(S: int, N: int, T: int, order: str) -> int:
    """Total oracle budget: S (N + T) first-order calls or 2 S (N + T)
    zeroth-order calls."""
    if S < 1 or N < 1 or T < 1:
        raise InputError("S, N and T must be >= 1")
    if order == "first":
        return S * (N + T)
    if order == "zeroth":
        return 2 * S * (N + T)
    raise InputError(f"unknown order {order!r}")


# -- martingale deviation lemma ----------------------------------------------

@dataclass
class MartingalePartCheck:
    empirical: float
    bound: float
    slack: float
    vacuous: bool

    @property
    def ok(self) -> bool:
        return self.empirical <= self.bound + self.slack


@dataclass
class MartingaleCheckReport:
    lam: float
    samples: int
    part_a: MartingalePartCheck
    part_b: MartingalePartCheck


def martingale_deviation_check(sigma_seq, samples: int, lam: float,
                               rng: RngStream) -> MartingaleCheckReport:
    """Simulate scalar Gaussian martingale-difference sums and compare both
    tail claims against their bounds.

    Part a) draws zeta_i ~ N(0, sigma_i^2), which meets the second-moment
    premise with equality, and checks
    P{(sum zeta)^2 >= lambda sum sigma_i^2} <= 1/lambda.  Part b) needs the
    exponential-moment premise, so the draws are shrunk by the scalar
    light-tail factor before checking
    P{|sum zeta| >= sqrt(2) (1+lambda) sqrt(sum sigma_i^2)} <= exp(-lambda^2/3).
    """
    sigma_seq = np.asarray(sigma_seq, dtype=np.float64)
    if sigma_seq.size == 0:
        raise InputError("sigma_seq must be nonempty")
    if samples < 1000:
        raise InputError("need at least 1000 simulation samples")
    if not lam > 0:
        raise InputError(f"lambda must be positive, got {lam}")

    total_var = float(np.sum(sigma_seq ** 2))
    draws = rng.standard_normal((samples, sigma_seq.size))

    sums_a = draws @ sigma_seq
    freq_a = FrequencyEstimate.from_indicator(sums_a ** 2 >= lam * total_var)
    raw_a = 1.0 / lam
    part_a = MartingalePartCheck(
        empirical=freq_a.frequency, bound=min(raw_a, 1.0),
        slack=freq_a.slack4, vacuous=raw_a >= 1.0)

    scale = math.sqrt(light_tail_scale(1))
    sums_b = scale * sums_a
    cutoff = math.sqrt(2.0) * (1.0 + lam) * math.sqrt(total_var)
    freq_b = FrequencyEstimate.from_indicator(np.abs(sums_b) >= cutoff)
    raw_b = math.exp(-lam * lam / 3.0)
    part_b = MartingalePartCheck(
        empirical=freq_b.frequency, bound=min(raw_b, 1.0),
        slack=freq_b.slack4, vacuous=raw_b >= 1.0)

    return MartingaleCheckReport(lam=lam, samples=samples,
                                 part_a=part_a, part_b=part_b)


@dataclass
class BoundReport:
    """Evaluated theoretical quantities attached to an experiment."""

    L: float
    D_f: float | None = None
    D_X: float | None = None
    D_tilde: float | None = None
    B_N: float | None = None
    B_bar_N: float | None = None
    D_N: float | None = None
    expectation_bound: float | None = None
    expectation_bound_metric: str | None = None
    f_gap_bound: float | None = None
    thresholds: list[DeviationBound] = field(default_factory=list)
    budgets: dict[str, int] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "L": self.L,
            "D_f": self.D_f,
            "D_X": self.D_X,
            "D_tilde": self.D_tilde,
            "B_N": self.B_N,
            "B_bar_N": self.B_bar_N,
            "D_N": self.D_N,
            "expectation_bound": self.expectation_bound,
            "expectation_bound_metric": self.expectation_bound_metric,
            "f_gap_bound": self.f_gap_bound,
            "thresholds": [
                {"name": t.name, "lambda": t.lam, "threshold": t.threshold,
                 "prob_bound": t.prob_bound, "vacuous": t.vacuous}
                for t in self.thresholds],
            "budgets": dict(self.budgets),
        }
