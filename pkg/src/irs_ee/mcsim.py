"""Monte-Carlo estimates of the outage quantities.

The channel sum X does not depend on the transmit power, so one sample
vector can serve every point of a power sweep (see :class:`SampleSet`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .channel import ChannelModel, sample_products
from .outage import (
    EeThreshold,
    RateThreshold,
    SystemConfig,
    q_rate_threshold,
    q_threshold,
)

__all__ = [
    "McEstimate",
    "SampleSet",
    "mc_op_ee",
    "mc_op_rate",
    "mc_cdf",
    "clopper_pearson",
]

MIN_TRIALS = 100


@dataclass(frozen=True)
class McEstimate:
    estimate: float
    stderr: float
    trials: int
    seed: int

    @classmethod
    def from_count(cls, hits, trials, seed):
        p = hits / trials
        return cls(estimate=p, stderr=math.sqrt(p * (1.0 - p) / trials), trials=trials, seed=seed)

    def interval(self, z=1.96):
        """Normal-approximation confidence interval clipped to [0, 1]."""
        half = z * self.stderr
        return max(0.0, self.estimate - half), min(1.0, self.estimate + half)


def clopper_pearson(hits: int, trials: int, level: float = 0.95) -> tuple[float, float]:
    """Exact binomial interval, for estimates too close to 0 or 1 for the normal one."""
    alpha = 1.0 - level
    lo = 0.0 if hits == 0 else stats.beta.ppf(alpha / 2, hits, trials - hits + 1)
    hi = 1.0 if hits == trials else stats.beta.ppf(1 - alpha / 2, hits + 1, trials - hits)
    return float(lo), float(hi)


class SampleSet:
    """Sorted realizations of X for one (model, N, trials, seed)."""

    def __init__(self, model: ChannelModel, n: int, trials: int, seed: int, workers: int = 1):
        if trials < MIN_TRIALS:
            raise ValueError(f"need at least {MIN_TRIALS} trials, got {trials}")
        self.model = model
        self.n = n
        self.trials = trials
        self.seed = seed
        self.values = np.sort(sample_products(model, n, trials, seed, workers=workers))

    def count_below(self, x):
        """Number of samples strictly below x (vectorized over x)."""
        return np.searchsorted(self.values, x, side="left")

    def estimate_below(self, x: float) -> McEstimate:
        return McEstimate.from_count(int(self.count_below(x)), self.trials, self.seed)


def _check_trials(trials):
    if trials < MIN_TRIALS:
        raise ValueError(f"need at least {MIN_TRIALS} trials, got {trials}")


def mc_op_ee(
    config: SystemConfig,
    model: ChannelModel,
    eta: EeThreshold,
    trials: int,
    seed: int,
    samples: SampleSet | None = None,
) -> McEstimate:
    """Fraction of simulated channels whose EE falls short of eta_th."""
    _check_trials(trials)
    root_q = q_threshold(config, eta)[1]
    if samples is None:
        samples = SampleSet(model, config.n_elements, trials, seed)
    return samples.estimate_below(root_q)


def mc_op_rate(
    config: SystemConfig,
    model: ChannelModel,
    rate: RateThreshold,
    trials: int,
    seed: int,
    samples: SampleSet | None = None,
) -> McEstimate:
    _check_trials(trials)
    root_q = q_rate_threshold(config, rate)[1]
    if samples is None:
        samples = SampleSet(model, config.n_elements, trials, seed)
    return samples.estimate_below(root_q)


def mc_cdf(model: ChannelModel, n: int, trials: int, seed: int, grid) -> np.ndarray:
    """Empirical CDF P[X < g] at each abscissa of a sorted grid."""
    grid = np.asarray(grid, dtype=float)
    if np.any(np.diff(grid) < 0):
        raise ValueError("grid must be sorted in nondecreasing order")
    samples = SampleSet(model, n, trials, seed)
    return samples.count_below(grid) / trials
