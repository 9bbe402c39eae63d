"""Experiment harness: dispatch, replication, aggregation and reporting.

A configuration resolves to a concrete problem instance, an initial point,
a stepsize plan with its termination distribution, and (for two-phase runs)
the (S, N, T) shape, either explicit or produced by the closed-form
calculators.  Replication i of an experiment owns the stream
(master seed, stream_id = i), so results are independent of scheduling and
reproducible byte for byte.

Output artifacts are a per-replication CSV, an aggregate JSON (whose
statistics are recomputable from the CSV rows to the last ulp, since floats
are written in shortest round-trip form) and an optional plot-data CSV of
budget versus running mean.
"""

from __future__ import annotations

import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import bounds as bounds_mod
from .config import ExperimentConfig, config_to_dict
from .errors import ConfigError, DivergenceError
from .oracles import FirstOrderOracle, NoiseModel, ZerothOrderOracle
from .problems import (ProblemSpec, make_least_squares, make_quadratic,
                       make_sigmoid_svm)
from .rng import RngStream
from .rsg import rsg_run
from .rsgf import RsgfConfig, choose_mu, fallback_D_f, rsgf_run
from .stepsize import (StepsizePlan, TerminationDistribution,
                       constant_plan_first_order, constant_plan_zeroth_order,
                       decreasing_plan, increasing_plan,
                       termination_distribution_first_order,
                       termination_distribution_zeroth_order)
from .two_phase import (TwoPhaseConfig, params_N_first_order,
                        params_N_zeroth_order, params_S, params_T_first_order,
                        params_T_light_tail, params_T_zeroth_order,
                        run_two_phase)

CSV_HEADER = "replication,seed,R,grad_norm_sq,f_gap,oracle_calls,wall_ms,status"
PLOT_HEADER = "budget,running_mean_grad_norm_sq"

CSV_FILE = "replications.csv"
JSON_FILE = "aggregate.json"
PLOT_FILE = "plot_data.csv"


@dataclass
class ResolvedExperiment:
    """Everything needed to execute one replication."""

    config: ExperimentConfig
    problem: ProblemSpec
    x1: np.ndarray
    noise: NoiseModel
    L: float
    D_f: float
    D_X: float | None
    D_tilde: float
    N: int
    plan: StepsizePlan
    dist: TerminationDistribution
    mu: float | None = None
    S: int | None = None
    T: int | None = None

    @property
    def order(self) -> str:
        return "zeroth" if self.config.algorithm in ("rsgf", "two-rsgf") \
            else "first"


def build_problem(config: ExperimentConfig) -> ProblemSpec:
    seed_stream = RngStream(config.problem_seed)
    if config.problem == "quadratic":
        values = config.spectrum_values()
        spectrum = np.ones(config.n) if values is None else np.array(values)
        return make_quadratic(spectrum, seed_stream, rotate=config.rotate)
    if config.problem == "least-squares":
        return make_least_squares(config.n, sparsity=config.ls_sparsity,
                                  noise_sd=config.ls_noise_sd)
    if config.problem == "sigmoid-svm":
        return make_sigmoid_svm(config.n, seed_stream,
                                reg_weight=config.svm_reg,
                                sparsity=config.svm_sparsity)
    raise ConfigError(f"unknown problem {config.problem!r}")


def initial_point(config: ExperimentConfig, problem: ProblemSpec) -> np.ndarray:
    if config.x1_kind == "zeros":
        return np.zeros(problem.n)
    if config.x1_kind == "ones":
        return np.ones(problem.n)
    return config.x1_radius * np.ones(problem.n) / math.sqrt(problem.n)


def resolve(config: ExperimentConfig) -> ResolvedExperiment:
    """Turn a validated configuration into concrete run ingredients."""
    config.validate()
    problem = build_problem(config)
    x1 = initial_point(config, problem)
    L = problem.lipschitz_L
    f_x1 = problem.value(x1)
    if problem.f_star is not None:
        D_f = bounds_mod.compute_Df(f_x1, problem.f_star, L)
    else:
        D_f = fallback_D_f(f_x1, L)
    if D_f <= 0:
        raise ConfigError("x1 coincides with the optimum; D_f would be zero")
    D_X = None
    if problem.x_star is not None:
        D_X = bounds_mod.compute_DX(x1, problem.x_star)
    D_tilde = config.d_tilde if config.d_tilde > 0 else D_f

    kind = config.noise_kind
    if kind == "auto":
        kind = "none" if config.sigma == 0 else "bounded_variance"
    noise = NoiseModel(kind, config.sigma)

    zeroth = config.algorithm in ("rsgf", "two-rsgf")
    two_phase = config.algorithm in ("two-rsg", "two-rsgf")

    S = T = None
    if two_phase:
        S = config.candidates or params_S(config.lam)
        if config.iterations:
            N = config.iterations
        elif zeroth:
            N = params_N_zeroth_order(config.epsilon, L, D_f, D_tilde,
                                      config.sigma, problem.n)
        else:
            N = params_N_first_order(config.epsilon, L, D_f, D_tilde,
                                     config.sigma)
        if config.post_samples:
            T = config.post_samples
        elif zeroth:
            T = params_T_zeroth_order(config.epsilon, config.lam,
                                      config.sigma, S, problem.n)
        elif config.light_tail_T:
            T = params_T_light_tail(config.epsilon, config.lam,
                                    config.sigma, S)
        else:
            T = params_T_first_order(config.epsilon, config.lam,
                                     config.sigma, S)
    else:
        N = config.iterations

    if zeroth:
        plan = constant_plan_zeroth_order(L, D_tilde, config.sigma, N,
                                          problem.n)
        dist = termination_distribution_zeroth_order(plan, L, problem.n)
        mu = config.mu if config.mu > 0 else choose_mu(D_f, problem.n, N)
    else:
        builder = {"constant": constant_plan_first_order,
                   "increasing": increasing_plan,
                   "decreasing": decreasing_plan}[config.policy]
        plan = builder(L, D_tilde, config.sigma, N)
        dist = termination_distribution_first_order(plan, L)
        mu = None

    return ResolvedExperiment(config=config, problem=problem, x1=x1,
                              noise=noise, L=L, D_f=D_f, D_X=D_X,
                              D_tilde=D_tilde, N=N, plan=plan, dist=dist,
                              mu=mu, S=S, T=T)


@dataclass
class ReplicationRow:
    """One CSV row, kept as typed values until formatting."""

    replication: int
    seed: str
    R: str
    grad_norm_sq: float
    f_gap: float | None
    oracle_calls: int
    wall_ms: float
    status: str


def _trajectory_average_run(oracle: FirstOrderOracle, x1, plan, rng):
    """Baseline: run the recursion for the full horizon and average the
    trajectory (the averaging-SA baseline).  Uses N - 1 oracle calls for the
    N trajectory points."""
    x = oracle.problem.check_point(x1).copy()
    total = x.copy()
    for k in range(plan.num_iterations - 1):
        g = oracle.query_gradient(x, rng)
        x = x - plan.gammas[k] * g
        if not np.all(np.isfinite(x)):
            raise DivergenceError(f"iterate became non-finite at step {k + 1}")
        total += x
    return total / plan.num_iterations


def run_replication(resolved: ResolvedExperiment, rep: int) -> ReplicationRow:
    config = resolved.config
    problem = resolved.problem
    stream = RngStream(config.seed, stream_id=rep)
    started = time.perf_counter()
    status = "ok"
    try:
        if config.algorithm == "rsg":
            oracle = FirstOrderOracle(problem, resolved.noise)
            result = rsg_run(oracle, resolved.x1, resolved.plan,
                             resolved.dist, stream)
            x_out, R_text, calls = result.x_out, str(result.R), result.oracle_calls
        elif config.algorithm == "trajectory-average-baseline":
            oracle = FirstOrderOracle(problem, resolved.noise)
            x_out = _trajectory_average_run(oracle, resolved.x1,
                                            resolved.plan, stream)
            R_text, calls = str(resolved.N), oracle.call_count
        elif config.algorithm == "rsgf":
            oracle = ZerothOrderOracle.for_smoothing(problem, resolved.noise,
                                                     resolved.mu)
            rcfg = RsgfConfig(mu=resolved.mu, plan=resolved.plan,
                              dist=resolved.dist, n=problem.n,
                              shared_xi=not config.independent_xi)
            result = rsgf_run(oracle, resolved.x1, rcfg, stream)
            x_out, R_text, calls = result.x_out, str(result.R), result.oracle_calls
        else:  # two-rsg / two-rsgf
            order = "zeroth" if config.algorithm == "two-rsgf" else "first"
            tp = TwoPhaseConfig(
                S=resolved.S, N=resolved.N, T=resolved.T,
                selection=config.selection.replace("-", "_"),
                recycle_xi=config.recycle_xi, order=order,
                shared_xi=not config.independent_xi)
            if order == "first":
                oracle = FirstOrderOracle(problem, resolved.noise)
                result = run_two_phase(oracle, resolved.x1, tp, resolved.plan,
                                       resolved.dist, rng=stream)
            else:
                oracle = ZerothOrderOracle.for_smoothing(
                    problem, resolved.noise, resolved.mu)
                result = run_two_phase(oracle, resolved.x1, tp, resolved.plan,
                                       resolved.dist, mu=resolved.mu,
                                       rng=stream)
            x_out = result.x_star_bar
            R_text = "|".join(str(r) for r in result.R_values)
            calls = result.phase_calls[0] + result.phase_calls[1]
    except DivergenceError:
        wall = (time.perf_counter() - started) * 1e3
        return ReplicationRow(
            replication=rep, seed=stream.describe(), R="0",
            grad_norm_sq=float("nan"), f_gap=None, oracle_calls=0,
            wall_ms=wall if config.record_timing else 0.0, status="diverged")

    g = problem.grad(x_out) if problem.has_grad else None
    grad_norm_sq = float(g @ g) if g is not None else float("nan")
    f_gap = None
    if problem.f_star is not None:
        f_gap = float(problem.value(x_out) - problem.f_star)
    wall = (time.perf_counter() - started) * 1e3
    return ReplicationRow(
        replication=rep, seed=stream.describe(), R=R_text,
        grad_norm_sq=grad_norm_sq, f_gap=f_gap, oracle_calls=calls,
        wall_ms=wall if config.record_timing else 0.0, status=status)


def _run_chunk(config: ExperimentConfig, indices: list[int]
               ) -> list[ReplicationRow]:
    resolved = resolve(config)
    return [run_replication(resolved, i) for i in indices]


def execute(config: ExperimentConfig, threads: int | None = None
            ) -> tuple[ResolvedExperiment, list[ReplicationRow]]:
    """Run all replications; the worker count never affects the results."""
    resolved = resolve(config)
    M = config.replications
    workers = config.threads if threads is None else threads
    if workers == 0:
        workers = os.cpu_count() or 1
    if workers <= 1 or M == 1:
        rows = [run_replication(resolved, i) for i in range(M)]
        return resolved, rows

    workers = min(workers, M)
    chunks = [list(range(w, M, workers)) for w in range(workers)]
    rows_by_index: dict[int, ReplicationRow] = {}
    with ProcessPoolExecutor(max_workers=workers) as pool:
        for chunk_rows in pool.map(_run_chunk, [config] * len(chunks), chunks):
            for row in chunk_rows:
                rows_by_index[row.replication] = row
    return resolved, [rows_by_index[i] for i in range(M)]


# -- formatting and aggregation ----------------------------------------------

def _fmt(x: float | None) -> str:
    if x is None:
        return ""
    return repr(float(x))


def rows_to_csv(rows: list[ReplicationRow]) -> str:
    lines = [CSV_HEADER]
    for r in rows:
        lines.append(",".join([
            str(r.replication), r.seed, r.R, _fmt(r.grad_norm_sq),
            _fmt(r.f_gap), str(r.oracle_calls), _fmt(r.wall_ms), r.status]))
    return "\n".join(lines) + "\n"


def rows_to_plot_csv(rows: list[ReplicationRow]) -> str:
    lines = [PLOT_HEADER]
    budget = 0
    total = 0.0
    count = 0
    for r in rows:
        budget += r.oracle_calls
        if r.status == "ok" and math.isfinite(r.grad_norm_sq):
            total += r.grad_norm_sq
            count += 1
        running = total / count if count else float("nan")
        lines.append(f"{budget},{_fmt(running)}")
    return "\n".join(lines) + "\n"


def _stats_block(values: np.ndarray) -> dict:
    est_mean = float(np.mean(values))
    var = float(np.var(values, ddof=1)) if values.size > 1 else 0.0
    return {"mean": est_mean, "variance": var,
            "se": math.sqrt(var / values.size), "count": int(values.size)}


def build_bound_report(resolved: ResolvedExperiment) -> bounds_mod.BoundReport:
    config = resolved.config
    report = bounds_mod.BoundReport(L=resolved.L, D_f=resolved.D_f,
                                    D_X=resolved.D_X,
                                    D_tilde=resolved.D_tilde)
    sigma = config.sigma
    N = resolved.N
    n = resolved.problem.n
    algo = config.algorithm
    if algo in ("rsg", "two-rsg"):
        if config.policy == "constant":
            report.B_N = bounds_mod.compute_BN(resolved.L, resolved.D_f,
                                               resolved.D_tilde, sigma, N)
            report.expectation_bound = resolved.L * report.B_N
        else:
            report.expectation_bound = bounds_mod.plan_bound_gradnorm(
                resolved.plan.gammas, resolved.L, resolved.D_f, sigma)
        report.expectation_bound_metric = "grad_norm_sq"
        if resolved.D_X is not None and resolved.problem.is_convex:
            if config.policy == "constant":
                report.f_gap_bound = bounds_mod.convex_expectation_bound(
                    resolved.L, resolved.D_X, resolved.D_tilde, sigma, N)
            else:
                report.f_gap_bound = bounds_mod.plan_bound_fgap(
                    resolved.plan.gammas, resolved.L, resolved.D_X, sigma)
        if report.B_N is not None:
            for lam in (2.0, 4.0):
                report.thresholds.append(bounds_mod.markov_deviation(
                    resolved.L, report.B_N, lam))
    elif algo in ("rsgf", "two-rsgf"):
        report.B_bar_N = bounds_mod.compute_BN_bar(
            resolved.L, resolved.D_f, resolved.D_tilde, sigma, N, n)
        report.expectation_bound = resolved.L * report.B_bar_N
        report.expectation_bound_metric = "grad_norm_sq"
        report.D_N = bounds_mod.compute_DN(resolved.L, report.B_bar_N, sigma,
                                           resolved.D_f, N, n)
        if resolved.D_X is not None and resolved.problem.is_convex:
            report.f_gap_bound = bounds_mod.zeroth_convex_expectation_bound(
                resolved.L, resolved.D_X, resolved.D_tilde, sigma, N, n)
    if algo in ("two-rsg", "two-rsgf") and resolved.S and resolved.T:
        order = "zeroth" if algo == "two-rsgf" else "first"
        report.budgets["total_oracle_calls"] = bounds_mod.budget_totals(
            resolved.S, N, resolved.T, order)
        if config.lam > 0:
            lam = 2.0 * (resolved.S + 1) / config.lam
            if algo == "two-rsg":
                report.thresholds.append(bounds_mod.deviation_threshold_2rsg(
                    resolved.L, report.B_N, sigma, resolved.T, resolved.S, lam))
                if resolved.noise.kind == "light_tail":
                    report.thresholds.append(
                        bounds_mod.deviation_threshold_2rsg_light_tail(
                            resolved.L, report.B_N, sigma, resolved.T,
                            resolved.S, 3.0))
            else:
                report.thresholds.append(bounds_mod.deviation_threshold_2rsgf(
                    resolved.L, report.B_bar_N, resolved.D_f, sigma, N,
                    resolved.T, resolved.S, n, lam))
    return report


def build_aggregate(resolved: ResolvedExperiment,
                    rows: list[ReplicationRow]) -> dict:
    config = resolved.config
    ok = [r for r in rows if r.status == "ok"]
    grad = np.array([r.grad_norm_sq for r in ok], dtype=np.float64)
    out = {
        "schema_version": 1,
        "config": config_to_dict(config),
        "constants": {
            "L": resolved.L, "D_f": resolved.D_f, "D_X": resolved.D_X,
            "D_tilde": resolved.D_tilde, "N": resolved.N, "mu": resolved.mu,
            "S": resolved.S, "T": resolved.T,
        },
        "statistics": {
            "replications": len(rows),
            "ok": len(ok),
            "diverged": len(rows) - len(ok),
            "grad_norm_sq": _stats_block(grad) if ok else None,
            "f_gap": None,
            "oracle_calls": {
                "total": int(sum(r.oracle_calls for r in rows)),
                "mean": float(np.mean([r.oracle_calls for r in rows])),
            },
            "failure": None,
        },
        "bounds": build_bound_report(resolved).to_dict(),
    }
    gaps = [r.f_gap for r in ok if r.f_gap is not None]
    if gaps:
        out["statistics"]["f_gap"] = _stats_block(np.array(gaps))
    if config.epsilon > 0 and ok:
        hits = grad > config.epsilon
        out["statistics"]["failure"] = {
            "epsilon": config.epsilon,
            "frequency": float(np.mean(hits)),
            "count": int(hits.size),
        }
    return out


def aggregate_to_json(aggregate: dict) -> str:
    return json.dumps(aggregate, indent=2, sort_keys=True) + "\n"


@dataclass
class ExperimentOutput:
    resolved: ResolvedExperiment
    rows: list[ReplicationRow]
    aggregate: dict
    paths: dict[str, str] = field(default_factory=dict)


def run_experiment(config: ExperimentConfig, out_dir: str | None = None,
                   threads: int | None = None,
                   seed: int | None = None) -> ExperimentOutput:
    """Execute an experiment and, when an output directory is given, write
    the CSV/JSON artifacts into it."""
    if seed is not None:
        config.seed = seed
    resolved, rows = execute(config, threads=threads)
    aggregate = build_aggregate(resolved, rows)
    output = ExperimentOutput(resolved=resolved, rows=rows,
                              aggregate=aggregate)
    target = out_dir if out_dir is not None else config.out_dir
    if target:
        os.makedirs(target, exist_ok=True)
        csv_path = os.path.join(target, CSV_FILE)
        with open(csv_path, "w", encoding="utf-8", newline="") as fh:
            fh.write(rows_to_csv(rows))
        json_path = os.path.join(target, JSON_FILE)
        with open(json_path, "w", encoding="utf-8", newline="") as fh:
            fh.write(aggregate_to_json(aggregate))
        output.paths = {"csv": csv_path, "json": json_path}
        if config.plot_data:
            plot_path = os.path.join(target, PLOT_FILE)
            with open(plot_path, "w", encoding="utf-8", newline="") as fh:
                fh.write(rows_to_plot_csv(rows))
            output.paths["plot"] = plot_path
    return output


PROBLEM_CATALOG = [
    {
        "name": "quadratic",
        "description": "random-rotation quadratic with chosen eigenvalue "
                       "spectrum; exact L, optimum and smoothed form",
        "convex": True,
        "keys": ["n", "spectrum", "rotate", "problem_seed"],
    },
    {
        "name": "least-squares",
        "description": "population least squares over sparse-uniform "
                       "features; convex with closed-form constants",
        "convex": True,
        "keys": ["n", "ls_sparsity", "ls_noise_sd"],
    },
    {
        "name": "sigmoid-svm",
        "description": "nonconvex sigmoid-loss SVM over sparse binary "
                       "features; population objective by exact enumeration "
                       "(n <= 16), L certified numerically",
        "convex": False,
        "keys": ["n", "svm_reg", "svm_sparsity", "problem_seed"],
    },
]
