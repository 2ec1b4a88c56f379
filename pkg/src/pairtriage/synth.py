"""Synthetic workload generation.

Pair similarities are drawn uniformly on [0,1]; each unit subset's target
match proportion follows a logistic curve of the subset's mean similarity,
optionally perturbed by Gaussian irregularity noise, and pair truths are then
Bernoulli draws at that proportion. Everything is deterministic under the
seed, including the emitted CSV bytes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import DEFAULT_SUBSET_SIZE, Workload

CURVE_CEILING = 0.95
CURVE_MIDPOINT = 0.55


@dataclass(frozen=True)
class SyntheticSpec:
    """Generator parameters: size, subset granularity, curve steepness, irregularity."""

    n_pairs: int
    subset_size: int = DEFAULT_SUBSET_SIZE
    tau: float = 14.0
    sigma: float = 0.1
    seed: int = 0

    def __post_init__(self) -> None:
        if self.tau <= 0:
            raise ValueError("tau must be positive")
        if self.sigma < 0:
            raise ValueError("sigma must be nonnegative")
        if self.n_pairs < self.subset_size:
            raise ValueError("n_pairs must be at least subset_size")

    def to_dict(self) -> dict:
        return {
            "n_pairs": self.n_pairs,
            "subset_size": self.subset_size,
            "tau": self.tau,
            "sigma": self.sigma,
            "seed": self.seed,
        }


def logistic_proportion(v: float | np.ndarray, tau: float) -> float | np.ndarray:
    """Match proportion at similarity v: 0.95 / (1 + exp(-tau (v - 0.55)))."""
    return CURVE_CEILING / (1.0 + np.exp(-tau * (np.asarray(v, dtype=np.float64) - CURVE_MIDPOINT)))


def subset_target_proportions(spec: SyntheticSpec, mean_similarities: np.ndarray,
                              rng: np.random.Generator) -> np.ndarray:
    """Per-subset proportions: curve value plus scaled Gaussian irregularity, clamped.

    The noise variance is sigma^2 * p(1-p) so irregularity fades at the curve's
    saturated ends; sigma around 0.5 produces monotonicity violations.
    """
    p = logistic_proportion(mean_similarities, spec.tau)
    if spec.sigma > 0:
        noise = rng.normal(0.0, 1.0, size=len(p)) * spec.sigma * np.sqrt(p * (1.0 - p))
        p = p + noise
    return np.clip(p, 0.0, 1.0)


def generate(spec: SyntheticSpec) -> Workload:
    """Generate a ground-truthed workload following the logistic proportion curve."""
    rng = np.random.default_rng(spec.seed)
    metrics = np.sort(rng.uniform(0.0, 1.0, size=spec.n_pairs))
    ids = [f"s{i:08d}" for i in range(spec.n_pairs)]

    starts = np.arange(0, spec.n_pairs, spec.subset_size)
    sizes = np.diff(np.append(starts, spec.n_pairs))
    mean_sims = np.add.reduceat(metrics, starts) / sizes
    targets = subset_target_proportions(spec, mean_sims, rng)

    per_pair_target = np.repeat(targets, sizes)
    truths = (rng.uniform(size=spec.n_pairs) < per_pair_target).astype(np.int8)
    return Workload.from_arrays(ids, metrics, truths, subset_size=spec.subset_size)
