"""The randomized stochastic gradient method (first-order).

A run draws the termination index R first, then performs the plain
stochastic gradient recursion x_{k+1} = x_k - gamma_k G(x_k) for
k = 1..R-1 and returns x_R.  Running past R would not change the output,
so only R - 1 oracle calls are made and accounted.

A single run is strictly sequential; independent runs parallelize freely
when each owns its derived stream.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .errors import DivergenceError, InputError
from .oracles import FirstOrderOracle, NoiseModel
from .problems import ProblemSpec
from .rng import RngStream
from .stats import MonteCarloEstimate
from .stepsize import StepsizePlan, TerminationDistribution, sample_R


@dataclass
class RunResult:
    """Output of one randomized run."""

    x_out: np.ndarray
    R: int
    N: int
    oracle_calls: int
    seed: str
    wall_time: float
    trajectory: np.ndarray | None = None  # (R, n); row k-1 is x_k


def _check_plan_dist(plan: StepsizePlan, dist: TerminationDistribution) -> None:
    if plan.num_iterations != dist.num_iterations:
        raise InputError(
            f"plan has N = {plan.num_iterations} but the termination "
            f"distribution has N = {dist.num_iterations}")


def rsg_run(oracle: FirstOrderOracle, x1: np.ndarray, plan: StepsizePlan,
            dist: TerminationDistribution, rng: RngStream,
            retain_trajectory: bool = False) -> RunResult:
    """One randomized stochastic gradient run; returns x_R."""
    _check_plan_dist(plan, dist)
    x = oracle.problem.check_point(x1).copy()
    start = time.perf_counter()
    R = sample_R(dist, rng)
    calls_before = oracle.call_count
    trajectory = [x.copy()] if retain_trajectory else None
    for k in range(R - 1):
        g = oracle.query_gradient(x, rng)
        x = x - plan.gammas[k] * g
        if not np.all(np.isfinite(x)):
            raise DivergenceError(
                f"iterate became non-finite at step {k + 1} of {R - 1}")
        if retain_trajectory:
            trajectory.append(x.copy())
    return RunResult(
        x_out=x, R=R, N=plan.num_iterations,
        oracle_calls=oracle.call_count - calls_before,
        seed=rng.describe(), wall_time=time.perf_counter() - start,
        trajectory=np.array(trajectory) if retain_trajectory else None)


def rsg_expected_sq_gradnorm(problem: ProblemSpec, noise: NoiseModel,
                             plan: StepsizePlan, dist: TerminationDistribution,
                             x1: np.ndarray, runs: int, rng: RngStream,
                             metric: str = "grad_norm_sq") -> MonteCarloEstimate:
    """Monte Carlo estimate of E[||grad f(x_R)||^2] over independent runs
    (the expectation covers both R and the oracle noise).

    ``metric="f_gap"`` switches to E[f(x_R) - f*] for problems with a known
    optimal value, the quantity bounded in the convex case.
    """
    if runs < 1:
        raise InputError("runs must be >= 1")
    if metric not in ("grad_norm_sq", "f_gap"):
        raise InputError(f"unknown metric {metric!r}")
    grad = problem.require_grad()
    if metric == "f_gap" and problem.f_star is None:
        raise InputError("metric 'f_gap' needs a problem with known f_star")
    oracle = FirstOrderOracle(problem, noise)
    samples = np.empty(runs)
    for i in range(runs):
        result = rsg_run(oracle, x1, plan, dist, rng.derive(i))
        if metric == "grad_norm_sq":
            g = grad(result.x_out)
            samples[i] = float(g @ g)
        else:
            samples[i] = problem.value(result.x_out) - problem.f_star
    return MonteCarloEstimate.from_samples(samples)


def min_gradnorm_diagnostic(trajectory: np.ndarray,
                            problem: ProblemSpec) -> tuple[int, float]:
    """Index (1-based) and value of the smallest true gradient norm along a
    trajectory; ties resolve to the lowest index.

    A noiseless diagnostic only: it needs exact gradients, which the
    stochastic setting does not provide.
    """
    trajectory = np.asarray(trajectory, dtype=np.float64)
    if trajectory.ndim != 2 or trajectory.shape[0] == 0:
        raise InputError("trajectory must be a nonempty (R, n) array")
    grad = problem.require_grad()
    norms = np.array([np.linalg.norm(grad(x)) for x in trajectory])
    idx = int(np.argmin(norms))
    return idx + 1, float(norms[idx])
