"""Two-phase schemes: candidate generation plus post-optimization selection.

The optimization phase performs S independent randomized runs from the same
initial point; the post-optimization phase estimates the gradient norm (or
the function value) of each candidate from T fresh oracle draws and keeps
the candidate with the smallest estimate, which sharply improves the
large-deviation behaviour over a single run.

The closed-form parameter calculators return the (S, N, T) triples that
certify an (epsilon, Lambda)-solution:

    S  = ceil(log2(2 / Lambda))
    N  = ceil(max{32 L^2 D_f^2 / eps, [32 L (D~ + D_f^2/D~) sigma / eps]^2})
    T  = ceil(24 (S + 1) sigma^2 / (Lambda eps))
    T' = ceil((24 sigma^2 / eps) [1 + (3 ln(2(S+1)/Lambda))^{1/2}]^2)

in the first-order regime (T' is the smaller light-tail sample size), and

    N^ = ceil(max{12 (n+4) (6 L D_f)^2 / eps,
                  [72 L sqrt(n+4) (D~ + D_f^2/D~) sigma / eps]^2})
    T^ = ceil((24 (n+4) (S+1) / Lambda) max{1, 6 sigma^2 / eps})

in the zeroth-order regime.  The logarithm in S is base 2: the argument
needs 2^{-S} <= Lambda / 2, which no weaker base delivers.  Sample sizes are
floored at 1 so the sigma = 0 degenerate case still averages something.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InputError
from .oracles import FirstOrderOracle, ZerothOrderOracle
from .rng import RngStream
from .rsg import RunResult, rsg_run
from .rsgf import RsgfConfig, rsgf_run
from .stepsize import StepsizePlan, TerminationDistribution

SELECTION_RULES = ("gradient_norm", "function_value")
ORDERS = ("first", "zeroth")


def _ceil(x: float) -> int:
    # Tolerate 1-ulp overshoot when a formula is integer-valued in exact
    # arithmetic but lands just above the integer in floats.
    return max(1, math.ceil(x * (1.0 - 1e-12)))


def _check_eps_lambda(epsilon: float | None, Lambda: float | None) -> None:
    if epsilon is not None and not epsilon > 0:
        raise InputError(f"epsilon must be positive, got {epsilon}")
    if Lambda is not None and not 0.0 < Lambda < 1.0:
        raise InputError(f"Lambda must lie in (0, 1), got {Lambda}")


def params_S(Lambda: float) -> int:
    """Number of candidate runs, ceil(log2(2 / Lambda))."""
    _check_eps_lambda(None, Lambda)
    return _ceil(math.log2(2.0 / Lambda))


def params_N_first_order(epsilon: float, L: float, D_f: float,
                         D_tilde: float, sigma: float) -> int:
    _check_eps_lambda(epsilon, None)
    if not (L > 0 and D_f > 0 and D_tilde > 0):
        raise InputError("L, D_f and D_tilde must be positive")
    if sigma < 0:
        raise InputError("sigma must be nonnegative")
    first = 32.0 * L * L * D_f * D_f / epsilon
    second = (32.0 * L * (D_tilde + D_f * D_f / D_tilde) * sigma / epsilon) ** 2
    return _ceil(max(first, second))


def params_T_first_order(epsilon: float, Lambda: float, sigma: float,
                         S: int) -> int:
    _check_eps_lambda(epsilon, Lambda)
    if sigma < 0 or S < 1:
        raise InputError("sigma must be nonnegative and S >= 1")
    return _ceil(24.0 * (S + 1) * sigma * sigma / (Lambda * epsilon))


def params_T_light_tail(epsilon: float, Lambda: float, sigma: float,
                        S: int) -> int:
    """Smaller post-optimization sample size valid under light-tail noise."""
    _check_eps_lambda(epsilon, Lambda)
    if sigma < 0 or S < 1:
        raise InputError("sigma must be nonnegative and S >= 1")
    inner = 1.0 + math.sqrt(3.0 * math.log(2.0 * (S + 1) / Lambda))
    return _ceil(24.0 * sigma * sigma / epsilon * inner * inner)


def params_N_zeroth_order(epsilon: float, L: float, D_f: float,
                          D_tilde: float, sigma: float, n: int) -> int:
    _check_eps_lambda(epsilon, None)
    if not (L > 0 and D_f > 0 and D_tilde > 0):
        raise InputError("L, D_f and D_tilde must be positive")
    if sigma < 0 or n < 1:
        raise InputError("sigma must be nonnegative and n >= 1")
    first = 12.0 * (n + 4) * (6.0 * L * D_f) ** 2 / epsilon
    second = (72.0 * L * math.sqrt(n + 4)
              * (D_tilde + D_f * D_f / D_tilde) * sigma / epsilon) ** 2
    return _ceil(max(first, second))


def params_T_zeroth_order(epsilon: float, Lambda: float, sigma: float,
                          S: int, n: int) -> int:
    _check_eps_lambda(epsilon, Lambda)
    if sigma < 0 or S < 1 or n < 1:
        raise InputError("sigma must be nonnegative, S >= 1 and n >= 1")
    return _ceil(24.0 * (n + 4) * (S + 1) / Lambda
                 * max(1.0, 6.0 * sigma * sigma / epsilon))


@dataclass
class TwoPhaseConfig:
    """Shape of a two-phase run."""

    S: int
    N: int
    T: int
    selection: str = "gradient_norm"
    recycle_xi: bool = False
    order: str = "first"
    shared_xi: bool = True  # zeroth-order pair sharing, as in RsgfConfig

    def __post_init__(self):
        if self.S < 1 or self.N < 1 or self.T < 1:
            raise InputError("S, N and T must all be >= 1")
        if self.selection not in SELECTION_RULES:
            raise InputError(f"unknown selection rule {self.selection!r}")
        if self.order not in ORDERS:
            raise InputError(f"unknown order {self.order!r}")


@dataclass
class TwoPhaseResult:
    """Output of one two-phase run."""

    x_star_bar: np.ndarray
    chosen_index: int
    candidates: list[np.ndarray]
    selection_scores: list[float]
    phase_calls: tuple[int, int]   # (optimization calls, post calls)
    seed: str
    run_results: list[RunResult] = field(repr=False, default_factory=list)

    @property
    def R_values(self) -> list[int]:
        return [r.R for r in self.run_results]


def _post_scores_first(oracle: FirstOrderOracle, problem, candidates,
                       config: TwoPhaseConfig, rng: RngStream,
                       value_source: ZerothOrderOracle | None
                       ) -> tuple[list[float], int]:
    scores = []
    calls = 0
    for s, cand in enumerate(candidates):
        stream = rng.derive(1, 0 if config.recycle_xi else s)
        if config.selection == "gradient_norm":
            draws = oracle.query_gradient_batch(cand, config.T, stream)
            scores.append(float(np.linalg.norm(draws.mean(axis=0))))
        else:
            vals = [value_source.query_value(cand, stream)
                    for _ in range(config.T)]
            scores.append(float(np.mean(vals)))
        calls += config.T
    return scores, calls


def _post_scores_zeroth(oracle: ZerothOrderOracle, candidates,
                        config: TwoPhaseConfig, mu: float,
                        rng: RngStream) -> tuple[list[float], int]:
    n = oracle.problem.n
    scores = []
    calls = 0
    for s, cand in enumerate(candidates):
        stream = rng.derive(1, 0 if config.recycle_xi else s)
        if config.selection == "gradient_norm":
            u = stream.standard_normal((config.T, n))
            v1, v0 = oracle.query_pair_batch(cand, mu * u, stream,
                                             shared_xi=config.shared_xi)
            estimates = ((v1 - v0) / mu)[:, None] * u
            scores.append(float(np.linalg.norm(estimates.mean(axis=0))))
            calls += 2 * config.T
        else:
            vals = [oracle.query_value(cand, stream) for _ in range(config.T)]
            scores.append(float(np.mean(vals)))
            calls += config.T
    return scores, calls


def run_two_phase(oracle, x1: np.ndarray, config: TwoPhaseConfig,
                  plan: StepsizePlan, dist: TerminationDistribution,
                  mu: float | None = None,
                  rng: RngStream | None = None) -> TwoPhaseResult:
    """Run the full two-phase scheme and return the selected candidate.

    The S optimization runs and the S post-optimization estimates each own a
    pre-assigned derived stream, so the result does not depend on execution
    order.  With ``recycle_xi`` every candidate's estimate replays the same
    draw sequence instead of using a fresh one.  Ties in the selection
    resolve to the lowest candidate index.
    """
    if rng is None:
        raise InputError("run_two_phase needs a rng stream")
    if plan.num_iterations != config.N or dist.num_iterations != config.N:
        raise InputError("plan/distribution length differs from config.N")

    if config.order == "first":
        if not isinstance(oracle, FirstOrderOracle):
            raise InputError("order 'first' needs a FirstOrderOracle")
        if mu is not None:
            raise InputError("mu is meaningful only for order 'zeroth'")
    else:
        if not isinstance(oracle, ZerothOrderOracle):
            raise InputError("order 'zeroth' needs a ZerothOrderOracle")
        if mu is None:
            raise InputError("order 'zeroth' needs a smoothing parameter mu")

    run_results: list[RunResult] = []
    candidates: list[np.ndarray] = []
    for s in range(config.S):
        run_rng = rng.derive(0, s)
        if config.order == "first":
            result = rsg_run(oracle, x1, plan, dist, run_rng)
        else:
            rsgf_cfg = RsgfConfig(mu=mu, plan=plan, dist=dist,
                                  n=oracle.problem.n,
                                  shared_xi=config.shared_xi)
            result = rsgf_run(oracle, x1, rsgf_cfg, run_rng)
        run_results.append(result)
        candidates.append(result.x_out)
    opt_calls = sum(r.oracle_calls for r in run_results)

    if config.order == "first":
        value_source = None
        if config.selection == "function_value":
            # The gradient oracle carries no value queries; function-value
            # selection uses an unbiased scalar-noise value source at the
            # same sigma.
            value_source = ZerothOrderOracle(oracle.problem, oracle.noise,
                                             value_noise_sd=oracle.noise.sigma)
        scores, post_calls = _post_scores_first(
            oracle, oracle.problem, candidates, config, rng, value_source)
    else:
        scores, post_calls = _post_scores_zeroth(
            oracle, candidates, config, mu, rng)

    chosen = int(np.argmin(scores))
    return TwoPhaseResult(
        x_star_bar=candidates[chosen], chosen_index=chosen,
        candidates=candidates, selection_scores=scores,
        phase_calls=(opt_calls, post_calls), seed=rng.describe(),
        run_results=run_results)
