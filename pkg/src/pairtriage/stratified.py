"""Stratified random sampling estimates for match counts over subset unions.

The estimator is the classical stratified mean with finite-population
correction: for sampled proportion r_i of stratum i (population n_i, sample
k_i),

    mean = sum(n_i/n * r_i)
    var  = sum((n_i/n)^2 * (1 - k_i/n_i) * s_i^2 / k_i),   s_i^2 = r_i(1-r_i) k_i/(k_i-1)

and count intervals widen the mean by a two-sided Student t value.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy import stats

from .model import MATCH, Workload
from .oracle import LabelSource

MAX_CONFIDENCE = 0.9999
DEFAULT_SAMPLES_PER_SUBSET = 20


@dataclass(frozen=True)
class StratumSample:
    """Sampling outcome for one unit subset."""

    subset: int
    population: int
    sample_size: int
    matches: int

    def __post_init__(self) -> None:
        if not 0 <= self.matches <= self.sample_size <= self.population:
            raise ValueError(
                f"need 0 <= matches <= sample_size <= population, got {self!r}"
            )
        if self.sample_size < 1:
            raise ValueError("sample_size must be at least 1")

    @property
    def proportion(self) -> float:
        return self.matches / self.sample_size

    @property
    def is_census(self) -> bool:
        return self.sample_size == self.population


@dataclass(frozen=True)
class CountInterval:
    """Two-sided confidence interval for a match count, clamped to [0, population]."""

    lower: float
    upper: float
    confidence: float

    def __post_init__(self) -> None:
        if self.lower > self.upper:
            raise ValueError("interval lower bound exceeds upper bound")


def draw_sample(
    workload: Workload,
    subset: int,
    k: int,
    seed: int | np.random.Generator | np.random.SeedSequence,
    source: LabelSource,
) -> StratumSample:
    """Label k distinct uniformly drawn pairs of one subset through the source."""
    start, stop = workload.subset_bounds(subset)
    n_i = stop - start
    if not 1 <= k <= n_i:
        raise ValueError(f"sample size {k} invalid for subset of {n_i} pairs")
    rng = np.random.default_rng(seed)
    picks = np.sort(rng.choice(n_i, size=k, replace=False)) + start
    labels = source.ask_span(workload, picks.tolist())
    matches = sum(lab == MATCH for lab in labels)
    return StratumSample(subset=subset, population=n_i, sample_size=k, matches=matches)


def stratified_mean_std(samples: Sequence[StratumSample]) -> tuple[float, float]:
    """Mean match proportion of the sampled union and its estimated std."""
    if not samples:
        raise ValueError("need at least one stratum sample")
    n = sum(s.population for s in samples)
    mean = sum(s.population / n * s.proportion for s in samples)
    var = 0.0
    for s in samples:
        fpc = 1.0 - s.sample_size / s.population
        if fpc == 0.0:
            continue  # census stratum contributes no sampling variance
        if s.sample_size < 2:
            raise ValueError(
                f"stratum {s.subset}: sample variance undefined for sample_size < 2"
            )
        s2 = s.proportion * (1.0 - s.proportion) * s.sample_size / (s.sample_size - 1)
        var += (s.population / n) ** 2 * fpc * s2 / s.sample_size
    return mean, float(np.sqrt(var))


def t_quantile(theta: float, dof: float) -> float:
    """Two-sided Student t critical value: P(-t < T < t) = theta."""
    if not 0.0 < theta <= 1.0:
        raise ValueError("confidence must be in (0, 1]")
    theta = min(theta, MAX_CONFIDENCE)
    dof = max(dof, 1.0)
    return float(stats.t.ppf((1.0 + theta) / 2.0, dof))


def count_interval(samples: Sequence[StratumSample], theta: float) -> CountInterval:
    """Confidence interval for the match count of the sampled union.

    Degrees of freedom: total samples minus number of sampled strata, floored
    at one. An empty union yields the degenerate [0, 0] interval.
    """
    if not samples:
        return CountInterval(0.0, 0.0, theta)
    n = sum(s.population for s in samples)
    mean, sd = stratified_mean_std(samples)
    dof = sum(s.sample_size for s in samples) - len(samples)
    t = t_quantile(theta, max(dof, 1))
    half = t * sd
    lower = max(0.0, n * (mean - half))
    upper = min(float(n), n * (mean + half))
    return CountInterval(lower, upper, theta)


def split_confidence(theta: float) -> float:
    """Per-bound confidence so two independent bound events jointly hold at theta."""
    if not 0.0 < theta <= 1.0:
        raise ValueError("confidence must be in (0, 1]")
    return float(np.sqrt(theta))


def sample_all_subsets(
    workload: Workload,
    per_subset: int,
    seed: int,
    source: LabelSource,
) -> list[StratumSample]:
    """One stratum sample per subset, with per-subset seeds derived from ``seed``."""
    return [
        draw_sample(
            workload,
            i,
            min(per_subset, workload.subset_len(i)),
            subset_seed(seed, i),
            source,
        )
        for i in range(workload.num_subsets)
    ]


def subset_seed(seed: int, subset: int) -> np.random.SeedSequence:
    """Deterministic per-subset seed, independent of sampling order."""
    return np.random.SeedSequence(entropy=seed, spawn_key=(subset,))


class StratumAggregator:
    """O(1) count intervals over contiguous runs of sampled strata.

    Precomputes prefix sums of per-stratum count means and variances (count
    units) so bound searches can evaluate many ranges cheaply. Equivalent to
    calling ``count_interval`` on the slice.
    """

    def __init__(self, samples: Sequence[StratumSample]):
        means, variances, ks = [], [], []
        for s in samples:
            means.append(s.population * s.proportion)
            fpc = 1.0 - s.sample_size / s.population
            if fpc == 0.0:
                variances.append(0.0)
            elif s.sample_size < 2:
                raise ValueError(
                    f"stratum {s.subset}: sample variance undefined for sample_size < 2"
                )
            else:
                s2 = s.proportion * (1 - s.proportion) * s.sample_size / (s.sample_size - 1)
                variances.append(s.population**2 * fpc * s2 / s.sample_size)
            ks.append(s.sample_size)
        self._mean_prefix = np.concatenate([[0.0], np.cumsum(means)])
        self._var_prefix = np.concatenate([[0.0], np.cumsum(variances)])
        self._k_prefix = np.concatenate([[0], np.cumsum(ks)])
        self._pop_prefix = np.concatenate([[0], np.cumsum([s.population for s in samples])])

    def interval(self, start: int, stop: int, theta: float) -> CountInterval:
        """Count interval for strata in the half-open range [start, stop)."""
        if stop <= start:
            return CountInterval(0.0, 0.0, theta)
        mean = self._mean_prefix[stop] - self._mean_prefix[start]
        var = self._var_prefix[stop] - self._var_prefix[start]
        total = self._pop_prefix[stop] - self._pop_prefix[start]
        dof = (self._k_prefix[stop] - self._k_prefix[start]) - (stop - start)
        half = t_quantile(theta, max(dof, 1)) * np.sqrt(var)
        return CountInterval(
            lower=max(0.0, float(mean - half)),
            upper=min(float(total), float(mean + half)),
            confidence=theta,
        )
