"""Pydantic request/response models for the HTTP service."""

from __future__ import annotations

from typing import Any, Optional

from pydantic import BaseModel, ConfigDict, Field

from ..config import ExperimentConfig


class HealthResponse(BaseModel):
    status: str
    version: str


class ParamsRequest(BaseModel):
    model_config = ConfigDict(extra="forbid", populate_by_name=True)

    epsilon: float = Field(gt=0)
    lam: float = Field(alias="lambda", gt=0, lt=1)
    lipschitz_L: float = Field(gt=0)
    d_f: float = Field(gt=0)
    d_tilde: Optional[float] = Field(default=None, gt=0)
    sigma: float = Field(default=0.0, ge=0)
    order: str = Field(default="first", pattern="^(first|zeroth)$")
    n: Optional[int] = Field(default=None, ge=1)
    light_tail: bool = False


class ParamsResponse(BaseModel):
    S: int
    N: int
    T: int
    budget: int
    order: str
    light_tail: bool


class ThresholdModel(BaseModel):
    name: str
    lam: float
    threshold: float
    prob_bound: float
    vacuous: bool


class BoundsRequest(BaseModel):
    model_config = ConfigDict(extra="forbid", populate_by_name=True)

    lipschitz_L: float = Field(gt=0)
    d_f: float = Field(gt=0)
    d_tilde: Optional[float] = Field(default=None, gt=0)
    d_x: Optional[float] = Field(default=None, gt=0)
    sigma: float = Field(default=0.0, ge=0)
    N: int = Field(ge=1)
    n: Optional[int] = Field(default=None, ge=1)
    T: Optional[int] = Field(default=None, ge=1)
    S: Optional[int] = Field(default=None, ge=1)
    lam: Optional[float] = Field(default=None, alias="lambda", gt=0)


class BoundsResponse(BaseModel):
    B_N: float
    gradient_bound: float            # L * B_N
    convex_bound: Optional[float] = None
    B_bar_N: Optional[float] = None
    zeroth_gradient_bound: Optional[float] = None
    zeroth_convex_bound: Optional[float] = None
    D_N: Optional[float] = None
    thresholds: list[ThresholdModel] = []


class RunRequest(BaseModel):
    """Mirror of the experiment configuration schema (see the README)."""

    model_config = ConfigDict(extra="forbid", populate_by_name=True)

    problem: str
    algorithm: str
    replications: int = Field(ge=1)
    seed: int = Field(ge=0)
    n: int = 10
    spectrum: str = "identity"
    rotate: bool = False
    problem_seed: int = 2024
    x1_kind: str = "radius"
    x1_radius: float = 2.0
    ls_sparsity: float = 0.05
    ls_noise_sd: float = 0.1
    svm_reg: float = 0.01
    svm_sparsity: float = 0.05
    sigma: float = 0.0
    noise_kind: str = "auto"
    policy: str = "constant"
    iterations: int = 0
    d_tilde: float = 0.0
    mu: float = 0.0
    epsilon: float = 0.0
    lam: float = Field(default=0.0, alias="lambda")
    candidates: int = 0
    post_samples: int = 0
    light_tail_T: bool = False
    selection: str = "gradient-norm"
    recycle_xi: bool = False
    independent_xi: bool = False
    retain_trajectory: bool = False
    claims: str = "expectation"
    threads: int = 1
    include_rows: bool = False

    def to_config(self) -> ExperimentConfig:
        data = self.model_dump()
        data.pop("include_rows")
        data["out_dir"] = ""
        config = ExperimentConfig(**data)
        config.validate()
        return config


class RowModel(BaseModel):
    replication: int
    seed: str
    R: str
    grad_norm_sq: float
    f_gap: Optional[float]
    oracle_calls: int
    wall_ms: float
    status: str


class RunResponse(BaseModel):
    aggregate: dict[str, Any]
    rows: Optional[list[RowModel]] = None


class ClaimModel(BaseModel):
    claim: str
    empirical: float
    bound: float
    slack: float
    verdict: str
    detail: str


class VerifyResponse(BaseModel):
    claims: list[ClaimModel]
    verdict: str


class ProblemInfo(BaseModel):
    name: str
    description: str
    convex: bool
    keys: list[str]
