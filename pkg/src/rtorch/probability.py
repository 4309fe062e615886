"""Normal-distribution arithmetic behind admission control and runtime fitting.

The deadline-miss estimate treats per-task runtimes as independent normals.
Scaled by each task's period they add in utilization space: means add, and
variances add, so the group utilization is again normal.  The miss
probability is the upper tail of that normal beyond the CPU's utilization
ceiling.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .model import TaskSpec

_SQRT2 = math.sqrt(2.0)

# fit quality below which a sample stream is considered well described by a
# single normal; above _GOODNESS_POOR the fit is unusable (e.g. bimodal data)
GOODNESS_GOOD = 0.02
GOODNESS_POOR = 0.1


@dataclass(frozen=True)
class NormalParams:
    """Mean and standard deviation of a normal distribution."""

    mu: float
    sigma: float


def std_normal_cdf(x: float) -> float:
    """Phi(x) via the complementary error function (abs error well below 1e-7)."""
    return 0.5 * math.erfc(-x / _SQRT2)


def joint_utilization(models: Sequence[tuple[NormalParams, int]]) -> NormalParams:
    """Combine per-task runtime normals into one utilization-space normal.

    Each entry is ``(runtime_params_us, period_us)``.  Means add as mu/period;
    variances add as (sigma/period)^2.  Order never matters (exact summation).
    """
    if not models:
        raise ValueError("no tasks")
    mu = math.fsum(m.mu / period for m, period in models)
    var = math.fsum((m.sigma / period) ** 2 for m, period in models)
    return NormalParams(mu, math.sqrt(var))


def miss_probability(joint: NormalParams, u_max: float) -> float:
    """P(group utilization > u_max) for a normal group utilization.

    Degenerate case sigma == 0: 0 if the deterministic load fits, else 1.
    """
    if joint.sigma == 0.0:
        return 0.0 if joint.mu <= u_max else 1.0
    # upper tail 1 - Phi(z) computed directly from erfc to keep precision for z >> 0
    z = (u_max - joint.mu) / joint.sigma
    return 0.5 * math.erfc(z / _SQRT2)


def buffer(tasks: Iterable[TaskSpec]) -> float:
    """Unreserved CPU fraction: 1 - sum(budget/period).  Negative when oversubscribed."""
    return 1.0 - math.fsum(t.budget_us / t.period_us for t in tasks)


def ks_statistic(samples: Sequence[float], params: NormalParams) -> float:
    """One-sample Kolmogorov-Smirnov distance between samples and N(mu, sigma).

    For a degenerate fit (sigma == 0, constant stream) the distance is
    defined as 0.
    """
    if params.sigma == 0.0:
        return 0.0
    xs = np.sort(np.asarray(samples, dtype=float))
    n = xs.size
    # vectorized Phi((x - mu) / sigma)
    from scipy.special import erfc as _erfc

    cdf = 0.5 * _erfc(-(xs - params.mu) / (params.sigma * _SQRT2))
    steps = np.arange(1, n + 1) / n
    d_plus = np.max(steps - cdf)
    d_minus = np.max(cdf - (steps - 1 / n))
    return float(max(d_plus, d_minus))


@dataclass
class StreamingFit:
    """Single-pass (Welford) accumulator for runtime samples.

    Tracks count, mean, sum of squared deviations (m2) and the observed range.
    Samples are retained so ``to_normal`` can score the fit with a KS
    statistic; memory grows linearly with the stream (fine for analysis runs,
    the orchestrator refits over bounded windows instead).  One writer per
    stream; readers take cheap snapshots of the summary fields.
    """

    count: int = 0
    mean: float = 0.0
    m2: float = 0.0
    min_seen: float = math.inf
    max_seen: float = -math.inf
    _samples: list[float] = field(default_factory=list, repr=False)

    def update(self, sample: float) -> None:
        x = float(sample)
        self.count += 1
        delta = x - self.mean
        self.mean += delta / self.count
        self.m2 += delta * (x - self.mean)
        if x < self.min_seen:
            self.min_seen = x
        if x > self.max_seen:
            self.max_seen = x
        self._samples.append(x)

    @property
    def variance(self) -> float:
        """Unbiased sample variance (0 for fewer than two samples)."""
        if self.count < 2:
            return 0.0
        return self.m2 / (self.count - 1)

    @property
    def stddev(self) -> float:
        return math.sqrt(self.variance)

    def to_normal(self, min_count: int = 30) -> tuple[NormalParams, float]:
        """Fitted NormalParams plus KS goodness-of-fit (smaller is better)."""
        if self.count < min_count:
            raise ValueError("insufficient samples")
        params = NormalParams(self.mean, self.stddev)
        return params, ks_statistic(self._samples, params)
