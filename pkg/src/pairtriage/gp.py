"""Gaussian-process regression of the match-proportion curve.

A squared-exponential kernel plus diagonal observation noise is fitted to
(subset mean similarity, sampled proportion) points with a zero prior mean.
The exact Gaussian conditional gives means and a full covariance over query
subsets; aggregating counts over a subset union turns that posterior into a
normal confidence interval for the union's match count.

The adaptive training loop starts from equidistant subsets and bisects the
gap between neighbours whenever the current fit misses the freshly sampled
midpoint by more than the error threshold, within a sampling budget.
"""

from __future__ import annotations

import json
import warnings
from collections import deque
from dataclasses import dataclass, field, replace
from math import ceil
from typing import Callable

import numpy as np
from scipy import stats

from .model import Workload
from .oracle import LabelSource
from .stratified import (
    DEFAULT_SAMPLES_PER_SUBSET,
    MAX_CONFIDENCE,
    CountInterval,
    StratumSample,
    draw_sample,
    subset_seed,
)

_JITTERS = (0.0, 1e-10, 1e-8, 1e-6)


class GPNumericalError(RuntimeError):
    """Kernel matrix could not be factorized even after jitter escalation."""


@dataclass(frozen=True)
class HyperPolicy:
    """How kernel hyperparameters are chosen when fitting.

    ``fixed`` uses the stated values as-is; ``grid`` keeps the noise but picks
    signal variance and length scale by maximizing the log marginal likelihood
    over a small grid.
    """

    mode: str = "fixed"
    signal_var: float = 0.25
    length_scale: float = 0.1
    noise_var: float = 1e-4
    signal_grid: tuple[float, ...] = (0.05, 0.1, 0.25, 0.5)
    length_grid: tuple[float, ...] = (0.05, 0.1, 0.15, 0.25, 0.4, 0.7, 1.0)
    noise_grid: tuple[float, ...] = (1.0, 2.0, 4.0, 8.0)  # multipliers on noise_var

    def __post_init__(self) -> None:
        if self.mode not in ("fixed", "grid"):
            raise ValueError("hyper policy mode must be 'fixed' or 'grid'")
        if min(self.signal_var, self.length_scale) <= 0 or self.noise_var < 0:
            raise ValueError("kernel hyperparameters must be positive (noise may be 0)")


@dataclass(frozen=True)
class SamplePolicy:
    """Sampling knobs for the adaptive training loop."""

    per_subset: int = DEFAULT_SAMPLES_PER_SUBSET
    hyper: HyperPolicy = field(default_factory=HyperPolicy)


def _se_kernel(xa: np.ndarray, xb: np.ndarray, signal_var: float, length: float) -> np.ndarray:
    d = xa[:, None] - xb[None, :]
    return signal_var * np.exp(-0.5 * (d / length) ** 2)


@dataclass(frozen=True)
class GPModel:
    """Fitted regression state: training data, hyperparameters, cached factorization."""

    inputs: np.ndarray
    targets: np.ndarray
    signal_var: float
    length_scale: float
    noise_var: float
    chol: np.ndarray
    weights: np.ndarray  # solve(K + noise I, targets)
    jitter: float

    def predict_mean(self, v: float) -> float:
        ks = _se_kernel(np.array([v]), self.inputs, self.signal_var, self.length_scale)
        return float((ks @ self.weights)[0])

    def log_marginal_likelihood(self) -> float:
        n = len(self.targets)
        return float(
            -0.5 * self.targets @ self.weights
            - np.log(np.diag(self.chol)).sum()
            - 0.5 * n * np.log(2 * np.pi)
        )

    def to_json(self) -> str:
        return json.dumps(
            {
                "inputs": self.inputs.tolist(),
                "targets": self.targets.tolist(),
                "signal_var": self.signal_var,
                "length_scale": self.length_scale,
                "noise_var": self.noise_var,
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "GPModel":
        d = json.loads(text)
        policy = HyperPolicy(
            mode="fixed",
            signal_var=d["signal_var"],
            length_scale=d["length_scale"],
            noise_var=d["noise_var"],
        )
        return fit(np.array(d["inputs"]), np.array(d["targets"]), policy)


@dataclass(frozen=True)
class ProportionPosterior:
    """Joint Gaussian over match proportions at the query inputs."""

    inputs: np.ndarray
    mean: np.ndarray
    cov: np.ndarray

    @property
    def variances(self) -> np.ndarray:
        return np.diag(self.cov)


def _spread_duplicates(v: np.ndarray) -> np.ndarray:
    """Nudge exactly repeated inputs apart so the kernel matrix stays regular."""
    v = v.astype(np.float64).copy()
    order = np.argsort(v, kind="stable")
    nudge = 1e-9
    for prev, cur in zip(order, order[1:]):
        if v[cur] <= v[prev]:
            v[cur] = v[prev] + nudge
    return v


def _factorize(gram: np.ndarray) -> tuple[np.ndarray, float]:
    for jitter in _JITTERS:
        try:
            return np.linalg.cholesky(gram + jitter * np.eye(len(gram))), jitter
        except np.linalg.LinAlgError:
            continue
    cond = np.linalg.cond(gram)
    raise GPNumericalError(
        f"kernel matrix not positive definite after jitter escalation "
        f"(size {len(gram)}, condition number {cond:.3e})"
    )


def fit(inputs: np.ndarray, targets: np.ndarray, policy: HyperPolicy | None = None) -> GPModel:
    """Fit the regression model; requires at least two training points."""
    policy = policy or HyperPolicy()
    v = np.asarray(inputs, dtype=np.float64).ravel()
    r = np.asarray(targets, dtype=np.float64).ravel()
    if len(v) != len(r):
        raise ValueError("inputs and targets must have equal length")
    if len(v) < 2:
        raise ValueError("need at least two training points")
    if len(np.unique(v)) != len(v):
        v = _spread_duplicates(v)

    candidates: list[tuple[float, float, float]]
    if policy.mode == "grid":
        # the noise level is gridded as multiples of the stated floor, so data
        # scattering more than its sampling noise can claim a wider noise band
        candidates = [
            (s, l, policy.noise_var * mult)
            for s in policy.signal_grid
            for l in policy.length_grid
            for mult in policy.noise_grid
        ]
    else:
        candidates = [(policy.signal_var, policy.length_scale, policy.noise_var)]

    best: GPModel | None = None
    failure: GPNumericalError | None = None
    for signal_var, length, noise_var in candidates:
        gram = _se_kernel(v, v, signal_var, length) + noise_var * np.eye(len(v))
        try:
            chol, jitter = _factorize(gram)
        except GPNumericalError as exc:
            failure = exc
            continue
        weights = np.linalg.solve(chol.T, np.linalg.solve(chol, r))
        model = GPModel(v, r, signal_var, length, noise_var, chol, weights, jitter)
        if best is None or model.log_marginal_likelihood() > best.log_marginal_likelihood():
            best = model
    if best is None:
        raise failure or GPNumericalError("no hyperparameter candidate could be fitted")
    return best


def posterior(model: GPModel, query_inputs: np.ndarray) -> ProportionPosterior:
    """Exact conditional mean and covariance over the query inputs.

    The covariance describes observed (noisy) proportions: the diagonal keeps
    the observation-noise term, so aggregates over unsampled subsets account
    for per-subset scatter as well as curve uncertainty.
    """
    vq = np.asarray(query_inputs, dtype=np.float64).ravel()
    ks = _se_kernel(vq, model.inputs, model.signal_var, model.length_scale)
    kss = _se_kernel(vq, vq, model.signal_var, model.length_scale)
    mean = ks @ model.weights
    half = np.linalg.solve(model.chol, ks.T)
    cov = kss - half.T @ half + model.noise_var * np.eye(len(vq))
    cov = 0.5 * (cov + cov.T)
    diag = np.diag(cov).copy()
    if (diag < -1e-10).any():
        raise GPNumericalError(
            f"posterior variance fell below tolerance: min {diag.min():.3e}; "
            f"train condition number {np.linalg.cond(model.chol @ model.chol.T):.3e}"
        )
    np.fill_diagonal(cov, np.maximum(diag, 0.0))
    return ProportionPosterior(vq, mean, cov)


def normal_quantile(theta: float) -> float:
    """The (1 - (1-theta)/2) point of the standard normal distribution."""
    theta = min(theta, MAX_CONFIDENCE)
    if theta <= 0.0:
        raise ValueError("confidence must be positive")
    return float(stats.norm.ppf(1.0 - (1.0 - theta) / 2.0))


def aggregate_count_interval(
    post: ProportionPosterior, sizes: np.ndarray, theta: float
) -> CountInterval:
    """Confidence interval for the total match count over the queried subsets."""
    sizes = np.asarray(sizes, dtype=np.float64).ravel()
    if len(sizes) != len(post.mean):
        raise ValueError("need one subset size per posterior query point")
    if len(sizes) == 0:
        return CountInterval(0.0, 0.0, theta)
    total = float(sizes.sum())
    mean = float(sizes @ post.mean)
    var = float(sizes @ post.cov @ sizes)
    if var < 0.0:
        if var < -1e-8:
            warnings.warn(f"aggregate variance {var:.3e} clamped to 0 (numerical noise)")
        var = 0.0
    half = normal_quantile(theta) * np.sqrt(var)
    return CountInterval(
        lower=max(0.0, mean - half),
        upper=min(total, mean + half),
        confidence=theta,
    )


class PosteriorAggregator:
    """O(1) count intervals over contiguous subset ranges of one posterior.

    Precomputes prefix sums of the size-weighted mean vector and covariance
    matrix so bound searches can probe many ranges cheaply.
    """

    def __init__(self, post: ProportionPosterior, sizes: np.ndarray):
        sizes = np.asarray(sizes, dtype=np.float64).ravel()
        if len(sizes) != len(post.mean):
            raise ValueError("need one subset size per posterior query point")
        self._sizes_prefix = np.concatenate([[0.0], np.cumsum(sizes)])
        self._mean_prefix = np.concatenate([[0.0], np.cumsum(sizes * post.mean)])
        weighted = post.cov * np.outer(sizes, sizes)
        m = len(sizes)
        prefix = np.zeros((m + 1, m + 1))
        prefix[1:, 1:] = weighted.cumsum(axis=0).cumsum(axis=1)
        self._cov_prefix = prefix

    def interval(self, start: int, stop: int, theta: float) -> CountInterval:
        """Count interval for subsets in the half-open range [start, stop)."""
        if stop <= start:
            return CountInterval(0.0, 0.0, theta)
        total = self._sizes_prefix[stop] - self._sizes_prefix[start]
        mean = self._mean_prefix[stop] - self._mean_prefix[start]
        p = self._cov_prefix
        var = p[stop, stop] - p[start, stop] - p[stop, start] + p[start, start]
        if var < 0.0:
            var = 0.0
        half = normal_quantile(theta) * np.sqrt(var)
        return CountInterval(
            lower=max(0.0, mean - half),
            upper=min(float(total), mean + half),
            confidence=theta,
        )


def _smoothed_noise(samples: list[StratumSample]) -> float:
    """Observation-noise estimate from binomial sampling scatter.

    Uses Laplace-smoothed proportions so strata that sampled all matches or
    none still contribute positive noise instead of claiming certainty.
    """
    terms = []
    for s in samples:
        r = (s.matches + 1.0) / (s.sample_size + 2.0)
        terms.append(r * (1.0 - r) / s.sample_size)
    return float(np.mean(terms))


def fit_proportion_function(
    workload: Workload,
    sample_policy: SamplePolicy,
    p_lower: float,
    p_upper: float,
    epsilon: float,
    seed: int,
    source: LabelSource,
    on_retrain: Callable[[GPModel], None] | None = None,
) -> tuple[GPModel, dict[int, StratumSample]]:
    """Adaptive sampling-and-training loop over the subset grid.

    Starts from ceil(m*p_lower) equidistant subsets, then repeatedly samples
    the middle subset of the widest pending neighbour gap; when the current
    fit misses the observation by at least ``epsilon`` both half-gaps are
    queued. Stops when no gaps remain or ceil(m*p_upper) subsets are sampled.
    """
    if not 0.0 < p_lower <= p_upper <= 1.0:
        raise ValueError("need 0 < p_lower <= p_upper <= 1")
    if epsilon <= 0.0:
        raise ValueError("epsilon must be positive")
    m = workload.num_subsets
    j = ceil(m * p_lower)
    if j < 2:
        raise ValueError(
            f"m*p_lower = {m * p_lower:.2f} gives {j} initial subsets; need at least 2"
        )
    budget = ceil(m * p_upper)
    means = workload.subset_mean_metrics

    def sample(idx: int) -> StratumSample:
        k = min(sample_policy.per_subset, workload.subset_len(idx))
        return draw_sample(workload, idx, k, subset_seed(seed, idx), source)

    initial = np.unique(np.round(np.linspace(0, m - 1, j)).astype(int))
    samples: dict[int, StratumSample] = {int(i): sample(int(i)) for i in initial}

    # hyperparameter re-selection is scheduled (full grid only after 25%
    # training-set growth); the final model always comes from a full search
    # over the final set, so it depends on the set alone, not sampling order
    chosen: tuple[float, float] | None = None
    chosen_noise_mult = 1.0
    last_selection_size = 0

    def train(force_selection: bool = False) -> GPModel:
        nonlocal chosen, chosen_noise_mult, last_selection_size
        idx = sorted(samples)
        noise_floor = _smoothed_noise([samples[i] for i in idx])
        hyper = sample_policy.hyper
        select = (
            hyper.mode != "grid"
            or force_selection
            or chosen is None
            or len(samples) >= 1.25 * last_selection_size
        )
        if select:
            policy = replace(hyper, noise_var=noise_floor)
            model = fit(means[idx], np.array([samples[i].proportion for i in idx]), policy)
            chosen = (model.signal_var, model.length_scale)
            chosen_noise_mult = model.noise_var / noise_floor if noise_floor > 0 else 1.0
            last_selection_size = len(samples)
        else:
            policy = replace(
                hyper,
                mode="fixed",
                signal_var=chosen[0],
                length_scale=chosen[1],
                noise_var=chosen_noise_mult * noise_floor,
            )
            model = fit(means[idx], np.array([samples[i].proportion for i in idx]), policy)
        if on_retrain is not None:
            on_retrain(model)
        return model

    model = train()
    queue: deque[tuple[int, int]] = deque(zip(initial, initial[1:]))
    while queue and len(samples) < m * p_upper:
        a, b = queue.popleft()
        if b - a <= 1:
            continue  # adjacent sampled subsets: nothing between them
        x = (a + b) // 2
        if x in samples:
            continue
        sample_x = sample(x)
        if abs(model.predict_mean(means[x]) - sample_x.proportion) >= epsilon:
            queue.append((a, x))
            queue.append((x, b))
        samples[x] = sample_x
        model = train()
    model = train(force_selection=True)
    assert j <= len(samples) <= budget
    return model, samples
