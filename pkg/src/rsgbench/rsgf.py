"""The randomized stochastic gradient-free method (zeroth-order).

Each iteration draws a standard Gaussian direction u_k, makes exactly two
value queries (at x_k + mu u_k and at x_k, sharing one noise realization by
default) and steps along the two-point estimate
G_mu = ((F(x_k + mu u_k) - F(x_k)) / mu) u_k.  As in the first-order
method, R is drawn first and only R - 1 updates run, so a run costs
exactly 2 (R - 1) value queries.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from .errors import DivergenceError, InputError, ValidityError
from .oracles import NoiseModel, ZerothOrderOracle
from .problems import ProblemSpec
from .rng import RngStream
from .rsg import RunResult, _check_plan_dist
from .smoothing import gmu_estimator
from .stats import MonteCarloEstimate
from .stepsize import StepsizePlan, TerminationDistribution, sample_R


def choose_mu(D_f: float, n: int, N: int) -> float:
    """Largest admissible smoothing parameter, D_f / ((n + 4) sqrt(2 N))."""
    if not D_f > 0:
        raise InputError(f"D_f must be positive, got {D_f}")
    if n < 1 or N < 1:
        raise InputError("n and N must be >= 1")
    return D_f / ((n + 4) * math.sqrt(2.0 * N))


def fallback_D_f(f_x1: float, L: float) -> float:
    """Heuristic scale (2 f(x1) / L)^{1/2} for problems with f* >= 0,
    used when the true optimal value is unknown."""
    if f_x1 < 0:
        raise InputError("the fallback assumes a nonnegative objective")
    if not L > 0:
        raise InputError(f"L must be positive, got {L}")
    return math.sqrt(2.0 * f_x1 / L)


@dataclass
class RsgfConfig:
    """Parameters of a gradient-free run.

    ``shared_xi`` controls whether the two per-iteration evaluations see the
    same noise realization (the default) or independent draws.
    """

    mu: float
    plan: StepsizePlan
    dist: TerminationDistribution
    n: int
    shared_xi: bool = True

    def __post_init__(self):
        if not self.mu > 0:
            raise InputError(f"mu must be positive, got {self.mu}")
        if self.n < 1:
            raise InputError(f"n must be >= 1, got {self.n}")
        _check_plan_dist(self.plan, self.dist)
        cap = 1.0 / (2.0 * (self.n + 4) * self.plan.L)
        worst = float(np.max(self.plan.gammas))
        if worst >= cap:
            raise ValidityError(
                f"max stepsize {worst} violates the zeroth-order requirement "
                f"gamma < 1/(2(n+4)L) = {cap}")


def rsgf_run(oracle: ZerothOrderOracle, x1: np.ndarray, config: RsgfConfig,
             rng: RngStream, retain_trajectory: bool = False) -> RunResult:
    """One randomized gradient-free run; returns x_R."""
    problem = oracle.problem
    if problem.n != config.n:
        raise InputError(
            f"config is for n = {config.n} but the problem has n = {problem.n}")
    x = problem.check_point(x1).copy()
    start = time.perf_counter()
    R = sample_R(config.dist, rng)
    calls_before = oracle.call_count
    trajectory = [x.copy()] if retain_trajectory else None
    for k in range(R - 1):
        u = rng.standard_normal(config.n)
        v_shift, v_base = oracle.query_pair(x + config.mu * u, x, rng,
                                            shared_xi=config.shared_xi)
        g = gmu_estimator(v_shift, v_base, u, config.mu)
        x = x - config.plan.gammas[k] * g
        if not np.all(np.isfinite(x)):
            raise DivergenceError(
                f"iterate became non-finite at step {k + 1} of {R - 1}")
        if retain_trajectory:
            trajectory.append(x.copy())
    return RunResult(
        x_out=x, R=R, N=config.plan.num_iterations,
        oracle_calls=oracle.call_count - calls_before,
        seed=rng.describe(), wall_time=time.perf_counter() - start,
        trajectory=np.array(trajectory) if retain_trajectory else None)


def rsgf_expected_sq_gradnorm(problem: ProblemSpec, noise: NoiseModel,
                              config: RsgfConfig, x1: np.ndarray, runs: int,
                              rng: RngStream,
                              metric: str = "grad_norm_sq") -> MonteCarloEstimate:
    """Monte Carlo estimate of E[||grad f(x_R)||^2] over independent
    gradient-free runs (expectation over R, the noise and the directions).

    ``metric="f_gap"`` switches to E[f(x_R) - f*] as in the first-order
    estimator.
    """
    if runs < 1:
        raise InputError("runs must be >= 1")
    if metric not in ("grad_norm_sq", "f_gap"):
        raise InputError(f"unknown metric {metric!r}")
    grad = problem.require_grad()
    if metric == "f_gap" and problem.f_star is None:
        raise InputError("metric 'f_gap' needs a problem with known f_star")
    oracle = ZerothOrderOracle.for_smoothing(problem, noise, config.mu)
    samples = np.empty(runs)
    for i in range(runs):
        result = rsgf_run(oracle, x1, config, rng.derive(i))
        if metric == "grad_norm_sq":
            g = grad(result.x_out)
            samples[i] = float(g @ g)
        else:
            samples[i] = problem.value(result.x_out) - problem.f_star
    return MonteCarloEstimate.from_samples(samples)
