"""Statistical verification of the theoretical claims.

Each claim produces a certificate {claim, empirical, bound, slack, verdict}.
Verdicts follow one rule: a claim passes when the empirical quantity stays
below its bound plus the explicit Monte Carlo slack; it is inconclusive
when the slack alone exceeds the bound (the replication count cannot
resolve the comparison); otherwise it fails.  Exact claims carry zero slack
and a 1e-12 tolerance as their bound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import bounds as bounds_mod
from .config import ExperimentConfig
from .errors import ConfigError, ValidityError
from .experiments import ResolvedExperiment, execute, resolve
from .problems import make_quadratic
from .rng import RngStream
from .rsgf import choose_mu
from .smoothing import (SmoothedFunctionHandle, SmoothingConfig,
                        check_smoothing_bounds)
from .stats import FrequencyEstimate
from .stepsize import (constant_plan_first_order,
                       termination_distribution_first_order)
from .two_phase import (params_N_first_order, params_N_zeroth_order,
                        params_S, params_T_first_order, params_T_light_tail,
                        params_T_zeroth_order)

KNOWN_CLAIMS = ("exactness", "preconditions", "expectation", "markov",
                "two-phase-deviation", "epsilon-lambda", "martingale",
                "smoothing")


@dataclass
class ClaimResult:
    claim: str
    empirical: float
    bound: float
    slack: float
    verdict: str
    detail: str = ""

    @staticmethod
    def judge(claim: str, empirical: float, bound: float, slack: float,
              detail: str = "") -> "ClaimResult":
        if slack > bound > 0:
            verdict = "inconclusive"
        elif empirical <= bound + slack:
            verdict = "pass"
        else:
            verdict = "fail"
        return ClaimResult(claim=claim, empirical=empirical, bound=bound,
                           slack=slack, verdict=verdict, detail=detail)

    def to_dict(self) -> dict:
        return {"claim": self.claim, "empirical": self.empirical,
                "bound": self.bound, "slack": self.slack,
                "verdict": self.verdict, "detail": self.detail}


def _claim_exactness(config: ExperimentConfig) -> list[ClaimResult]:
    """sigma = 0 identities: uniform termination for constant plans, the
    parameter calculators on reference inputs, and the quadratic smoothing
    closed forms."""
    deviations = []
    for N in (1, 4, 16):
        plan = constant_plan_first_order(1.0, 1.0, 1.0, N)
        dist = termination_distribution_first_order(plan, 1.0)
        deviations.append(float(np.max(np.abs(dist.probs - 1.0 / N))))
    uniform = ClaimResult.judge("exactness/uniform-termination",
                                max(deviations), 1e-12, 0.0,
                                detail="constant plans, N in {1, 4, 16}")

    calc_checks = [
        (params_S(0.5), 2), (params_S(0.02), 7),
        (params_N_first_order(1.0, 1.0, 1.0, 1.0, 0.0), 32),
        (params_N_first_order(1.0, 1.0, 1.0, 1.0, 1.0), 4096),
        (params_T_first_order(1.0, 0.5, 1.0, 2), 144),
        (params_T_first_order(1.0, 0.5, 0.0, 2), 1),
        (params_T_light_tail(1.0, 0.5, 1.0, 2), 334),
        (params_N_zeroth_order(1.0, 1.0, 1.0, 1.0, 0.0, 4), 3456),
        (params_T_zeroth_order(1.0, 0.5, 0.0, 2, 4), 1152),
        (bounds_mod.budget_totals(2, 4096, 144, "first"), 8480),
        (bounds_mod.budget_totals(2, 32, 1, "first"), 66),
    ]
    calc_dev = max(abs(got - want) for got, want in calc_checks)
    mu_dev = abs(choose_mu(1.0, 4, 2) - 0.0625)
    calculators = ClaimResult.judge("exactness/parameter-calculators",
                                    float(max(calc_dev, mu_dev)), 1e-12, 0.0,
                                    detail=f"{len(calc_checks) + 1} reference "
                                           "evaluations")

    quad = make_quadratic([4.0, 1.0], RngStream(7), rotate=True)
    mu = 0.1
    x = np.array([0.3, -0.7])
    dev = abs(quad.smoothed_value_exact(x, mu)
              - (quad.value(x) + 0.5 * mu * mu * 5.0))
    dev = max(dev, abs(quad.smoothed_value_exact(np.zeros(2), mu)
                       - quad.value(np.zeros(2)) - 2.5 * mu * mu))
    dev = max(dev, abs(quad.smoothed_min_value(mu)
                       - quad.f_star - 2.5 * mu * mu))
    smoothing_ids = ClaimResult.judge("exactness/quadratic-smoothing",
                                      float(dev), 1e-12, 0.0,
                                      detail="trace formula, spectrum (4, 1)")
    return [uniform, calculators, smoothing_ids]


def _claim_preconditions(config: ExperimentConfig) -> list[ClaimResult]:
    """The guard for the termination-weight precondition must reject
    gamma = 2 / L by name."""
    from .stepsize import StepsizePlan
    plan = StepsizePlan(kind="custom", gammas=np.full(4, 2.0), L=1.0,
                        d_tilde=1.0, sigma=0.0, num_iterations=4)
    try:
        termination_distribution_first_order(plan, 1.0)
    except ValidityError as exc:
        named = "2/L" in str(exc)
        return [ClaimResult.judge("preconditions/gamma-guard",
                                  0.0 if named else 1.0, 0.5, 0.0,
                                  detail=str(exc))]
    return [ClaimResult.judge("preconditions/gamma-guard", 1.0, 0.5, 0.0,
                              detail="no error raised for gamma = 2/L")]


def _expectation_rows(config: ExperimentConfig
                      ) -> tuple[ResolvedExperiment, np.ndarray, np.ndarray]:
    resolved, rows = execute(config)
    ok = [r for r in rows if r.status == "ok"]
    if not ok:
        raise ConfigError("all replications diverged")
    grad = np.array([r.grad_norm_sq for r in ok])
    gaps = np.array([r.f_gap for r in ok if r.f_gap is not None])
    return resolved, grad, gaps


def _claim_expectation(config: ExperimentConfig) -> list[ClaimResult]:
    if config.algorithm not in ("rsg", "rsgf"):
        raise ConfigError(
            "the expectation claim applies to single-run algorithms")
    resolved, grad, gaps = _expectation_rows(config)
    from .experiments import build_bound_report
    report = build_bound_report(resolved)
    results = []
    mean = float(np.mean(grad))
    se = math.sqrt(float(np.var(grad, ddof=1)) / grad.size)
    results.append(ClaimResult.judge(
        f"expectation/{config.algorithm}-grad-norm-sq", mean,
        report.expectation_bound, 4.0 * se,
        detail=f"M={grad.size}; bound is L*B_N-style for the constant policy"))
    if gaps.size and report.f_gap_bound is not None:
        gmean = float(np.mean(gaps))
        gse = math.sqrt(float(np.var(gaps, ddof=1)) / gaps.size)
        results.append(ClaimResult.judge(
            f"expectation/{config.algorithm}-f-gap", gmean,
            report.f_gap_bound, 4.0 * gse, detail=f"M={gaps.size}"))
    return results


def _claim_markov(config: ExperimentConfig) -> list[ClaimResult]:
    if config.algorithm not in ("rsg", "rsgf"):
        raise ConfigError("the Markov claim applies to single-run algorithms")
    resolved, grad, _ = _expectation_rows(config)
    if config.policy != "constant":
        raise ConfigError("the Markov claim needs the constant policy")
    if config.algorithm == "rsg":
        base = bounds_mod.compute_BN(resolved.L, resolved.D_f,
                                     resolved.D_tilde, config.sigma,
                                     resolved.N)
    else:
        base = bounds_mod.compute_BN_bar(resolved.L, resolved.D_f,
                                         resolved.D_tilde, config.sigma,
                                         resolved.N, resolved.problem.n)
    results = []
    for lam in (2.0, 4.0):
        dev = bounds_mod.markov_deviation(resolved.L, base, lam)
        freq = FrequencyEstimate.from_indicator(grad >= dev.threshold)
        results.append(ClaimResult.judge(
            f"markov/lambda-{lam:g}", freq.frequency, dev.prob_bound,
            freq.slack4, detail=f"threshold={dev.threshold:.6g}, M={grad.size}"))
    return results


def _claim_two_phase(config: ExperimentConfig) -> list[ClaimResult]:
    if config.algorithm not in ("two-rsg", "two-rsgf"):
        raise ConfigError("the deviation claim applies to two-phase runs")
    resolved, grad, _ = _expectation_rows(config)
    from .experiments import build_bound_report
    report = build_bound_report(resolved)
    if not report.thresholds:
        raise ConfigError(
            "no deviation threshold derivable; set a 'lambda' target")
    results = []
    for dev in report.thresholds:
        freq = FrequencyEstimate.from_indicator(grad >= dev.threshold)
        results.append(ClaimResult.judge(
            f"two-phase-deviation/{dev.name}/lambda-{dev.lam:g}",
            freq.frequency, dev.prob_bound, freq.slack4,
            detail=f"threshold={dev.threshold:.6g}, M={grad.size}, "
                   f"vacuous={dev.vacuous}"))
    return results


def _claim_epsilon_lambda(config: ExperimentConfig) -> list[ClaimResult]:
    if config.algorithm not in ("two-rsg", "two-rsgf"):
        raise ConfigError("the (epsilon, Lambda) claim needs a two-phase run")
    if config.epsilon <= 0 or config.lam <= 0:
        raise ConfigError("the (epsilon, Lambda) claim needs both targets")
    resolved, grad, _ = _expectation_rows(config)
    freq = FrequencyEstimate.from_indicator(grad > config.epsilon)
    return [ClaimResult.judge(
        "epsilon-lambda/failure-frequency", freq.frequency, config.lam,
        freq.slack4_at(config.lam),
        detail=f"epsilon={config.epsilon:g}, S={resolved.S}, N={resolved.N}, "
               f"T={resolved.T}, M={grad.size}")]


def _claim_martingale(config: ExperimentConfig) -> list[ClaimResult]:
    rng = RngStream(config.seed, stream_id=901)
    results = []
    for lam in (2.0, 4.0):
        report = bounds_mod.martingale_deviation_check(
            np.ones(10), 100_000, lam, rng.derive(int(lam)))
        results.append(ClaimResult.judge(
            f"martingale/part-a/lambda-{lam:g}", report.part_a.empirical,
            report.part_a.bound, report.part_a.slack))
        results.append(ClaimResult.judge(
            f"martingale/part-b/lambda-{lam:g}", report.part_b.empirical,
            report.part_b.bound, report.part_b.slack))
    return results


def _claim_smoothing(config: ExperimentConfig) -> list[ClaimResult]:
    resolved = resolve(config)
    problem = resolved.problem
    n = problem.n
    mu = resolved.mu if resolved.mu else choose_mu(resolved.D_f, n,
                                                   max(resolved.N, 1))
    handle = SmoothedFunctionHandle(problem, SmoothingConfig(mu=mu, n=n))
    rng = RngStream(config.seed, stream_id=902)
    points = [resolved.x1 + rng.standard_normal(n) for _ in range(20)]
    report = check_smoothing_bounds(handle, points, rng, samples=20_000)
    # Margins already include the 4-SE allowance; nonnegative means pass.
    worst = -report.min_margin
    return [ClaimResult.judge("smoothing/approximation-bounds", worst, 1e-9,
                              0.0, detail=f"20 points, mu={mu:.3g}")]


_CLAIM_RUNNERS = {
    "exactness": _claim_exactness,
    "preconditions": _claim_preconditions,
    "expectation": _claim_expectation,
    "markov": _claim_markov,
    "two-phase-deviation": _claim_two_phase,
    "epsilon-lambda": _claim_epsilon_lambda,
    "martingale": _claim_martingale,
    "smoothing": _claim_smoothing,
}


def run_claims(config: ExperimentConfig) -> list[ClaimResult]:
    names = [c.strip() for c in config.claims.split(",") if c.strip()]
    if not names:
        raise ConfigError("no claims requested")
    results: list[ClaimResult] = []
    for name in names:
        runner = _CLAIM_RUNNERS.get(name)
        if runner is None:
            raise ConfigError(
                f"unknown claim {name!r}; known: {', '.join(KNOWN_CLAIMS)}")
        results.extend(runner(config))
    return results


def overall_verdict(results: list[ClaimResult]) -> str:
    verdicts = {r.verdict for r in results}
    if "fail" in verdicts:
        return "fail"
    if "inconclusive" in verdicts:
        return "inconclusive"
    return "pass"
