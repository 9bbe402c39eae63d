"""Experiment configuration: a flat, typed key = value file format.

Lines hold ``key = value`` pairs; blank lines and ``#`` comments are
ignored.  Keys are validated against a fixed schema, unknown or duplicate
keys are rejected with the offending line number, and every field is either
explicit or filled from a documented default.  Zero values for the sizing
fields (iterations, candidates, post_samples, d_tilde, mu) mean "derive
automatically" where a derivation exists.
"""

from __future__ import annotations

from dataclasses import dataclass, fields
from typing import Any

from .errors import ConfigError

PROBLEMS = ("quadratic", "least-squares", "sigmoid-svm")
ALGORITHMS = ("rsg", "rsgf", "two-rsg", "two-rsgf",
              "trajectory-average-baseline")
POLICIES = ("constant", "increasing", "decreasing")
SELECTIONS = ("gradient-norm", "function-value")
NOISE_KINDS = ("auto", "none", "bounded_variance", "light_tail")
X1_KINDS = ("radius", "zeros", "ones")


@dataclass
class ExperimentConfig:
    """Fully typed experiment description (see the README for key docs)."""

    problem: str
    algorithm: str
    replications: int
    seed: int
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
    lam: float = 0.0
    candidates: int = 0
    post_samples: int = 0
    light_tail_T: bool = False
    selection: str = "gradient-norm"
    recycle_xi: bool = False
    independent_xi: bool = False
    retain_trajectory: bool = False
    claims: str = "expectation"
    out_dir: str = "results"
    threads: int = 1
    record_timing: bool = False
    plot_data: bool = False

    def validate(self) -> None:
        checks = [
            ("problem", self.problem in PROBLEMS, f"one of {PROBLEMS}"),
            ("algorithm", self.algorithm in ALGORITHMS, f"one of {ALGORITHMS}"),
            ("replications", self.replications >= 1, ">= 1"),
            ("seed", self.seed >= 0, ">= 0"),
            ("n", self.n >= 1, ">= 1"),
            ("x1_kind", self.x1_kind in X1_KINDS, f"one of {X1_KINDS}"),
            ("sigma", self.sigma >= 0, ">= 0"),
            ("noise_kind", self.noise_kind in NOISE_KINDS,
             f"one of {NOISE_KINDS}"),
            ("policy", self.policy in POLICIES, f"one of {POLICIES}"),
            ("selection", self.selection in SELECTIONS, f"one of {SELECTIONS}"),
            ("iterations", self.iterations >= 0, ">= 0"),
            ("epsilon", self.epsilon >= 0, ">= 0"),
            ("lambda", 0 <= self.lam < 1, "in [0, 1)"),
            ("threads", self.threads >= 0, ">= 0"),
        ]
        for name, ok, want in checks:
            if not ok:
                raise ConfigError(f"invalid value for {name!r}: expected {want}")
        two_phase = self.algorithm in ("two-rsg", "two-rsgf")
        if two_phase:
            if self.candidates == 0 and self.lam == 0:
                raise ConfigError(
                    "two-phase runs need 'candidates' or a 'lambda' target")
            if self.iterations == 0 and self.epsilon == 0:
                raise ConfigError(
                    "two-phase runs need 'iterations' or an 'epsilon' target")
            if self.post_samples == 0 and (self.epsilon == 0 or self.lam == 0):
                raise ConfigError(
                    "two-phase runs need 'post_samples' or both targets")
        elif self.iterations == 0:
            raise ConfigError("single-run algorithms need 'iterations' >= 1")
        if self.algorithm in ("rsgf", "two-rsgf") and self.policy != "constant":
            raise ConfigError(
                "zeroth-order runs support only the constant policy")

    def spectrum_values(self) -> list[float] | None:
        """None for the identity spectrum, otherwise the explicit list."""
        text = self.spectrum.strip()
        if text == "identity":
            return None
        try:
            values = [float(v) for v in text.split(",") if v.strip() != ""]
        except ValueError as exc:
            raise ConfigError(f"invalid spectrum entry: {exc}") from None
        if not values:
            raise ConfigError("spectrum list is empty")
        if len(values) != self.n:
            raise ConfigError(
                f"spectrum has {len(values)} entries but n = {self.n}")
        return values


# The file key 'lambda' is a Python keyword, hence the field rename.
_KEY_TO_FIELD = {"lambda": "lam"}
_FIELD_TO_KEY = {v: k for k, v in _KEY_TO_FIELD.items()}

_FIELD_TYPES = {f.name: f.type for f in fields(ExperimentConfig)}
_REQUIRED = ("problem", "algorithm", "replications", "seed")


def config_keys() -> list[str]:
    """All recognized file keys."""
    return [_FIELD_TO_KEY.get(f.name, f.name)
            for f in fields(ExperimentConfig)]


def _convert(key: str, raw: str, target: str, line: int) -> Any:
    raw = raw.strip()
    if target == "str":
        return raw
    if target == "bool":
        low = raw.lower()
        if low in ("true", "yes", "on", "1"):
            return True
        if low in ("false", "no", "off", "0"):
            return False
        raise ConfigError(f"key {key!r} expects a boolean, got {raw!r}", line)
    try:
        if target == "int":
            return int(raw)
        if target == "float":
            return float(raw)
    except ValueError:
        raise ConfigError(
            f"key {key!r} expects {target}, got {raw!r}", line) from None
    raise ConfigError(f"key {key!r} has unsupported type {target}", line)


def parse_config_text(text: str) -> ExperimentConfig:
    """Parse and validate a configuration document."""
    values: dict[str, Any] = {}
    seen: dict[str, int] = {}
    for lineno, rawline in enumerate(text.splitlines(), start=1):
        line = rawline.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {rawline!r}",
                              lineno)
        key, raw = (part.strip() for part in line.split("=", 1))
        field_name = _KEY_TO_FIELD.get(key, key)
        if field_name not in _FIELD_TYPES:
            raise ConfigError(f"unknown key {key!r}", lineno)
        if key in seen:
            raise ConfigError(
                f"duplicate key {key!r} (first set on line {seen[key]})",
                lineno)
        seen[key] = lineno
        values[field_name] = _convert(key, raw, _FIELD_TYPES[field_name],
                                      lineno)

    missing = [k for k in _REQUIRED if k not in values]
    if missing:
        raise ConfigError(f"missing required keys: {', '.join(missing)}")
    config = ExperimentConfig(**values)
    config.validate()
    return config


def parse_config_file(path: str) -> ExperimentConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path!r}: {exc}") from None
    return parse_config_text(text)


def config_to_dict(config: ExperimentConfig) -> dict[str, Any]:
    """Echo a config as a plain mapping keyed by the file keys."""
    out = {}
    for f in fields(ExperimentConfig):
        out[_FIELD_TO_KEY.get(f.name, f.name)] = getattr(config, f.name)
    return out
