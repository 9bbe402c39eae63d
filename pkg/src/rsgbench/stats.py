"""Small statistical helpers shared by the algorithms and the harness."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InputError
from .rng import RngStream


@dataclass(frozen=True)
class MonteCarloEstimate:
    """A sample mean with its CLT standard error."""

    mean: float
    se: float
    count: int
    variance: float

    @staticmethod
    def from_samples(samples: np.ndarray) -> "MonteCarloEstimate":
        samples = np.asarray(samples, dtype=np.float64)
        count = samples.size
        if count < 1:
            raise InputError("need at least one sample")
        mean = float(np.mean(samples))
        var = float(np.var(samples, ddof=1)) if count > 1 else 0.0
        return MonteCarloEstimate(mean=mean, se=math.sqrt(var / count),
                                  count=count, variance=var)

    @property
    def band4(self) -> float:
        """The 4-standard-error allowance used throughout the checks."""
        return 4.0 * self.se


@dataclass(frozen=True)
class FrequencyEstimate:
    """An empirical event frequency with a conservative CLT slack."""

    frequency: float
    count: int

    @staticmethod
    def from_indicator(hits: np.ndarray) -> "FrequencyEstimate":
        hits = np.asarray(hits, dtype=bool)
        if hits.size < 1:
            raise InputError("need at least one trial")
        return FrequencyEstimate(frequency=float(np.mean(hits)),
                                 count=int(hits.size))

    @property
    def slack4(self) -> float:
        """4 sqrt(0.25 / M), the worst-case binomial standard error band."""
        return 4.0 * math.sqrt(0.25 / self.count)

    def slack4_at(self, p: float) -> float:
        """4 sqrt(p (1-p) / M) for a hypothesized success probability."""
        return 4.0 * math.sqrt(max(p * (1.0 - p), 0.0) / self.count)


def bootstrap_variance_difference(first: np.ndarray, second: np.ndarray,
                                  rng: RngStream, resamples: int = 2000
                                  ) -> np.ndarray:
    """Bootstrap distribution of var(first) - var(second).

    For the one-sided claim var(first) < var(second) at 95% confidence,
    callers check ``np.quantile(result, 0.95) < 0``.
    """
    first = np.asarray(first, dtype=np.float64)
    second = np.asarray(second, dtype=np.float64)
    if first.size < 2 or second.size < 2:
        raise InputError("need at least two observations per sample")
    gen = rng.generator
    out = np.empty(resamples)
    for b in range(resamples):
        f = gen.choice(first, size=first.size, replace=True)
        s = gen.choice(second, size=second.size, replace=True)
        out[b] = np.var(f, ddof=1) - np.var(s, ddof=1)
    return out
