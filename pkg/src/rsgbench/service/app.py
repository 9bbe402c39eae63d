"""FastAPI service wrapping the core package.

Endpoints expose the parameter calculators, the closed-form bound
evaluators, experiment execution and the claim verifiers to multiple
clients.  Run with

    uvicorn rsgbench.service:app

Experiments execute synchronously in the request; keep service-side
replication counts desk-scale and use the CLI for long batch runs.
"""

from __future__ import annotations

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .. import __version__
from ..bounds import (budget_totals, compute_BN, compute_BN_bar, compute_DN,
                      convex_expectation_bound, deviation_threshold_2rsg,
                      deviation_threshold_2rsg_light_tail,
                      deviation_threshold_2rsgf,
                      zeroth_convex_expectation_bound)
from ..errors import RsgBenchError
from ..experiments import (PROBLEM_CATALOG, build_aggregate, execute)
from ..two_phase import (params_N_first_order, params_N_zeroth_order,
                         params_S, params_T_first_order, params_T_light_tail,
                         params_T_zeroth_order)
from ..verify import overall_verdict, run_claims
from .models import (BoundsRequest, BoundsResponse, ClaimModel,
                     HealthResponse, ParamsRequest, ParamsResponse,
                     ProblemInfo, RowModel, RunRequest, RunResponse,
                     ThresholdModel, VerifyResponse)

app = FastAPI(title="rsgbench", version=__version__)


@app.exception_handler(RsgBenchError)
async def _domain_error(request: Request, exc: RsgBenchError):
    return JSONResponse(status_code=422, content={"detail": str(exc)})


@app.get("/health", response_model=HealthResponse)
def health() -> HealthResponse:
    return HealthResponse(status="ok", version=__version__)


@app.get("/problems", response_model=list[ProblemInfo])
def problems() -> list[ProblemInfo]:
    return [ProblemInfo(**entry) for entry in PROBLEM_CATALOG]


@app.post("/params", response_model=ParamsResponse)
def params(req: ParamsRequest) -> ParamsResponse:
    d_tilde = req.d_tilde if req.d_tilde is not None else req.d_f
    S = params_S(req.lam)
    if req.order == "zeroth":
        if req.n is None:
            raise RsgBenchError("order 'zeroth' requires the dimension n")
        N = params_N_zeroth_order(req.epsilon, req.lipschitz_L, req.d_f,
                                  d_tilde, req.sigma, req.n)
        T = params_T_zeroth_order(req.epsilon, req.lam, req.sigma, S, req.n)
    else:
        N = params_N_first_order(req.epsilon, req.lipschitz_L, req.d_f,
                                 d_tilde, req.sigma)
        if req.light_tail:
            T = params_T_light_tail(req.epsilon, req.lam, req.sigma, S)
        else:
            T = params_T_first_order(req.epsilon, req.lam, req.sigma, S)
    return ParamsResponse(S=S, N=N, T=T,
                          budget=budget_totals(S, N, T, req.order),
                          order=req.order, light_tail=req.light_tail)


@app.post("/bounds", response_model=BoundsResponse)
def bounds(req: BoundsRequest) -> BoundsResponse:
    d_tilde = req.d_tilde if req.d_tilde is not None else req.d_f
    B_N = compute_BN(req.lipschitz_L, req.d_f, d_tilde, req.sigma, req.N)
    out = BoundsResponse(B_N=B_N, gradient_bound=req.lipschitz_L * B_N)
    if req.d_x is not None:
        out.convex_bound = convex_expectation_bound(
            req.lipschitz_L, req.d_x, d_tilde, req.sigma, req.N)
    if req.n is not None:
        out.B_bar_N = compute_BN_bar(req.lipschitz_L, req.d_f, d_tilde,
                                     req.sigma, req.N, req.n)
        out.zeroth_gradient_bound = req.lipschitz_L * out.B_bar_N
        out.D_N = compute_DN(req.lipschitz_L, out.B_bar_N, req.sigma,
                             req.d_f, req.N, req.n)
        if req.d_x is not None:
            out.zeroth_convex_bound = zeroth_convex_expectation_bound(
                req.lipschitz_L, req.d_x, d_tilde, req.sigma, req.N, req.n)
    if req.T is not None and req.S is not None and req.lam is not None:
        thresholds = [deviation_threshold_2rsg(
            req.lipschitz_L, B_N, req.sigma, req.T, req.S, req.lam),
            deviation_threshold_2rsg_light_tail(
            req.lipschitz_L, B_N, req.sigma, req.T, req.S, req.lam)]
        if req.n is not None:
            thresholds.append(deviation_threshold_2rsgf(
                req.lipschitz_L, out.B_bar_N, req.d_f, req.sigma, req.N,
                req.T, req.S, req.n, req.lam))
        out.thresholds = [ThresholdModel(name=t.name, lam=t.lam,
                                         threshold=t.threshold,
                                         prob_bound=t.prob_bound,
                                         vacuous=t.vacuous)
                          for t in thresholds]
    return out


@app.post("/run", response_model=RunResponse)
def run(req: RunRequest) -> RunResponse:
    config = req.to_config()
    resolved, rows = execute(config)
    aggregate = build_aggregate(resolved, rows)
    response = RunResponse(aggregate=aggregate)
    if req.include_rows:
        response.rows = [RowModel(replication=r.replication, seed=r.seed,
                                  R=r.R, grad_norm_sq=r.grad_norm_sq,
                                  f_gap=r.f_gap, oracle_calls=r.oracle_calls,
                                  wall_ms=r.wall_ms, status=r.status)
                         for r in rows]
    return response


@app.post("/verify-bounds", response_model=VerifyResponse)
def verify_bounds(req: RunRequest) -> VerifyResponse:
    config = req.to_config()
    results = run_claims(config)
    return VerifyResponse(
        claims=[ClaimModel(**r.to_dict()) for r in results],
        verdict=overall_verdict(results))
