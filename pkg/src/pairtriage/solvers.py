"""Search procedures that pick the human-verification region.

Four strategies, all operating on unit-subset boundaries:

* ``base_search`` grows the human region outward from an initial boundary,
  certifying precision and recall purely from the monotonicity of match
  proportion in the metric, with windowed proportions of freshly absorbed
  subsets standing in for the unknown machine regions.
* ``all_sampling_search`` samples every subset, then finds the outermost
  region bounds whose stratified count intervals still certify the targets.
* ``partial_sampling_search`` samples only a budgeted portion of subsets,
  regresses the proportion curve and certifies bounds from the regression
  posterior instead of per-subset intervals.
* ``hybrid_search`` takes the partial-sampling bounds as an outer cap, then
  regrows the region from its median subset using, at each step, the better
  of the monotonicity estimate and the regression/sampling estimate.

Every human inspection flows through the given label source, which also
defines the solution's cost. If a target cannot be certified before the
region swallows the whole workload, the full-human solution is returned with
the ``exhausted`` flag instead of looping.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from math import inf
from typing import Callable, Protocol

import numpy as np

from .gp import (
    GPNumericalError,
    HyperPolicy,
    PosteriorAggregator,
    SamplePolicy,
    fit_proportion_function,
    posterior,
)
from .model import (
    MATCH,
    LabelAssignment,
    Partition,
    QualityRequirement,
    Solution,
    Workload,
)
from .oracle import SAMPLING, VERIFICATION, LabelSource
from .stratified import (
    CountInterval,
    StratumAggregator,
    sample_all_subsets,
    split_confidence,
)

BASE = "base"
ALL_SAMPLING = "all_sampling"
PARTIAL_SAMPLING = "partial_sampling"
HYBRID = "hybrid"

PROVENANCE_MONOTONICITY = "monotonicity"
PROVENANCE_SAMPLING = "sampling_gp"


@dataclass(frozen=True)
class SolverConfig:
    """Shared knobs for all search procedures.

    ``initial_boundary`` may be a subset index (int) or a metric value
    (float); None starts at the subset holding the median pair. The sampling
    range bounds the fraction of subsets the regression loop may sample.
    """

    requirement: QualityRequirement
    initial_boundary: int | float | None = None
    base_window: int = 5
    sampling_range: tuple[float, float] = (0.01, 0.05)
    epsilon: float = 0.05
    per_subset_samples: int = 20
    seed: int = 0
    gp_hyper: HyperPolicy = field(default_factory=lambda: HyperPolicy(mode="grid"))

    def __post_init__(self) -> None:
        if not 3 <= self.base_window <= 10:
            raise ValueError("base_window must be between 3 and 10")
        p_l, p_u = self.sampling_range
        if not 0.0 < p_l <= p_u <= 1.0:
            raise ValueError("sampling_range must satisfy 0 < lower <= upper <= 1")
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        if self.per_subset_samples < 1:
            raise ValueError("per_subset_samples must be at least 1")

    def to_dict(self) -> dict:
        return {
            "alpha": self.requirement.alpha,
            "beta": self.requirement.beta,
            "theta": self.requirement.theta,
            "initial_boundary": self.initial_boundary,
            "base_window": self.base_window,
            "sampling_range": list(self.sampling_range),
            "epsilon": self.epsilon,
            "per_subset_samples": self.per_subset_samples,
            "seed": self.seed,
            "gp_hyper_mode": self.gp_hyper.mode,
        }


@dataclass(frozen=True)
class BoundEstimates:
    """Match-count bounds feeding one certification check."""

    matches_plus_lb: float
    matches_minus_ub: float
    matches_h: float
    plus_provenance: str = PROVENANCE_MONOTONICITY
    minus_provenance: str = PROVENANCE_MONOTONICITY


class RangeIntervals(Protocol):
    def interval(self, start: int, stop: int, theta: float) -> CountInterval: ...


# -- threshold forms for the monotonicity-based search ------------------------


def base_precision_threshold(alpha: float, n_plus: float, n_h: float, r_h: float) -> float:
    """Smallest absorbed-window proportion that certifies the precision target.

    The certified lower bound of precision is
    (n_h*r_h + n_plus*r_window) / (n_h*r_h + n_plus); solving for r_window
    gives this threshold. Values <= 0 mean any observation qualifies; values
    > 1 mean no observation can qualify at the current region sizes. With an
    empty machine-match region precision is exact, signalled by -inf.
    """
    if n_plus == 0:
        return -inf
    return (alpha * n_plus - (1.0 - alpha) * r_h * n_h) / n_plus


def base_recall_threshold(
    beta: float, n_minus: float, n_h: float, r_h: float, n_plus: float, r_plus_window: float
) -> float:
    """Largest absorbed-window proportion that certifies the recall target.

    The certified lower bound of recall is M / (M + n_minus*r_window) with
    M = n_h*r_h + n_plus*r_plus_window; solving for r_window gives this
    threshold. An empty machine-unmatch region (or beta = 0) certifies recall
    outright, signalled by +inf.
    """
    if n_minus == 0 or beta == 0.0:
        return inf
    return (1.0 - beta) * (n_h * r_h + n_plus * r_plus_window) / (beta * n_minus)


class _SideTally:
    """Absorb history of one side: windowed proportion over recent subsets."""

    def __init__(self, window: int):
        self.window = window
        self.pairs: list[int] = []
        self.matches: list[int] = []

    def add(self, pairs: int, matches: int) -> None:
        self.pairs.append(pairs)
        self.matches.append(matches)

    def rate(self, default: float = 0.0) -> float:
        if not self.pairs:
            return default
        n = sum(self.pairs[-self.window:])
        c = sum(self.matches[-self.window:])
        return c / n


class _Run:
    """Shared per-run state: workload geometry, labeling, tallies."""

    def __init__(self, workload: Workload, config: SolverConfig, source: LabelSource):
        if len(workload) == 0:
            raise ValueError("cannot search an empty workload")
        self.workload = workload
        self.config = config
        self.source = source
        self.pair_prefix = np.concatenate([[0], np.cumsum(workload.subset_sizes)])
        self.pairs_h = 0
        self.matches_h = 0

    def pairs_in(self, start_subset: int, stop_subset: int) -> int:
        return int(self.pair_prefix[stop_subset] - self.pair_prefix[start_subset])

    def absorb(self, subset: int) -> tuple[int, int]:
        """Human-label one whole subset; returns (pairs, matches)."""
        start, stop = self.workload.subset_bounds(subset)
        labels = self.source.ask_span(self.workload, range(start, stop))
        matches = sum(lab == MATCH for lab in labels)
        self.pairs_h += stop - start
        self.matches_h += matches
        return stop - start, matches

    def finish(self, lo: int, hi: int, solver: str) -> Solution:
        workload, source = self.workload, self.source
        partition = Partition.from_subset_bounds(workload, lo, hi)
        answered, asked = source.snapshot_arrays(workload)
        codes = np.zeros(len(workload), dtype=np.int8)
        codes[partition.plus_pairs.start :] = 1
        np.copyto(codes, answered, where=asked)  # human answers win wherever they exist
        exhausted = len(partition.human_pairs) == len(workload)
        return Solution(
            partition=partition,
            labels=LabelAssignment.from_arrays(workload, codes, asked),
            human_labeled=source.labeled_ids(),
            solver=solver,
            seed=self.config.seed,
            config=self.config,
            exhausted=exhausted,
        )


def _initial_subset(workload: Workload, config: SolverConfig) -> int:
    v0 = config.initial_boundary
    if v0 is None:
        return workload.median_subset
    if isinstance(v0, (int, np.integer)):
        if not 0 <= int(v0) < workload.num_subsets:
            raise ValueError(f"initial subset {v0} out of range")
        return int(v0)
    return workload.subset_containing_metric(float(v0))


def base_search(workload: Workload, config: SolverConfig, source: LabelSource) -> Solution:
    """Monotonicity-only search: grow the human region until both targets certify.

    The upper side absorbs one subset at a time moving right and freezes as
    soon as the windowed proportion of recently absorbed upper subsets reaches
    the precision threshold; the lower side mirrors this for recall. Sides
    alternate, upper first, each frozen independently; a side reaching the
    workload edge freezes there (that side's quality is then exact).
    """
    run = _Run(workload, config, source)
    req = config.requirement
    m = workload.num_subsets
    source.phase = VERIFICATION
    b = _initial_subset(workload, config)
    lo, hi = b, b - 1
    upper = _SideTally(config.base_window)
    lower = _SideTally(config.base_window)
    upper_frozen = hi == m - 1
    lower_frozen = lo == 0

    while not (upper_frozen and lower_frozen):
        if not upper_frozen:
            hi += 1
            upper.add(*run.absorb(hi))
            source.report_bounds(lo, hi)
            n_plus = run.pairs_in(hi + 1, m)
            if n_plus == 0:
                upper_frozen = True
            else:
                r_h = run.matches_h / run.pairs_h
                thr = base_precision_threshold(req.alpha, n_plus, run.pairs_h, r_h)
                upper_frozen = upper.rate() >= thr
        if not lower_frozen:
            lo -= 1
            lower.add(*run.absorb(lo))
            source.report_bounds(lo, max(hi, lo))
            n_minus = run.pairs_in(0, lo)
            if n_minus == 0:
                lower_frozen = True
            else:
                r_h = run.matches_h / run.pairs_h
                n_plus = run.pairs_in(hi + 1, m)
                thr = base_recall_threshold(
                    req.beta, n_minus, run.pairs_h, r_h, n_plus, upper.rate()
                )
                lower_frozen = lower.rate() <= thr

    return run.finish(lo, max(hi, lo), BASE)


# -- sampling-based searches ---------------------------------------------------


def _scan_bounds(
    run: _Run, intervals: RangeIntervals, requirement: QualityRequirement
) -> tuple[int, int]:
    """Outermost region bounds still certifying recall then precision.

    The lower bound starts with an empty machine-unmatch region and moves
    right while the certified recall holds; the upper bound starts with an
    empty machine-match region and moves left while the certified precision
    holds. Each certified bound uses the per-bound confidence sqrt(theta) so
    the two independent bound events jointly reach theta.
    """
    m = run.workload.num_subsets
    conf = split_confidence(requirement.theta)

    def recall_ok(i0: int) -> bool:
        lb_rest = intervals.interval(i0, m, conf).lower
        ub_minus = intervals.interval(0, i0, conf).upper
        denom = ub_minus + lb_rest
        bound = 1.0 if denom == 0 else lb_rest / denom
        return bound >= requirement.beta

    i0 = 0
    while i0 + 1 < m and recall_ok(i0 + 1):
        i0 += 1

    def precision_ok(j0: int) -> bool:
        lb_h = intervals.interval(i0, j0 + 1, conf).lower
        lb_plus = intervals.interval(j0 + 1, m, conf).lower
        n_plus = run.pairs_in(j0 + 1, m)
        denom = lb_h + n_plus
        bound = 1.0 if denom == 0 else (lb_h + lb_plus) / denom
        return bound >= requirement.alpha

    j0 = m - 1
    while j0 - 1 >= i0 and precision_ok(j0 - 1):
        j0 -= 1
    return i0, j0


def all_sampling_search(workload: Workload, config: SolverConfig, source: LabelSource) -> Solution:
    """Sample every subset, then pick the outermost certifiable region bounds."""
    run = _Run(workload, config, source)
    source.phase = SAMPLING
    samples = sample_all_subsets(workload, config.per_subset_samples, config.seed, source)
    aggregator = StratumAggregator(samples)
    i0, j0 = _scan_bounds(run, aggregator, config.requirement)
    source.report_bounds(i0, j0)
    source.phase = VERIFICATION
    for subset in range(i0, j0 + 1):
        run.absorb(subset)
    return run.finish(i0, j0, ALL_SAMPLING)


def _regression_bounds(
    run: _Run, workload: Workload, config: SolverConfig, source: LabelSource
) -> tuple[RangeIntervals, dict, tuple[int, int]]:
    """Fit the proportion curve and scan bounds from its posterior.

    When the sampling budget ends up covering every subset the search
    degenerates to all-subset sampling by construction: the per-subset
    stratified intervals replace the regression posterior.
    """
    p_l, p_u = config.sampling_range
    source.phase = SAMPLING
    model, samples = fit_proportion_function(
        workload,
        SamplePolicy(per_subset=config.per_subset_samples, hyper=config.gp_hyper),
        p_l,
        p_u,
        config.epsilon,
        config.seed,
        source,
    )
    aggregator: RangeIntervals
    if len(samples) == workload.num_subsets:
        aggregator = StratumAggregator([samples[i] for i in range(workload.num_subsets)])
    else:
        post = posterior(model, workload.subset_mean_metrics)
        aggregator = PosteriorAggregator(post, workload.subset_sizes)
    bounds = _scan_bounds(run, aggregator, config.requirement)
    return aggregator, samples, bounds


def partial_sampling_search(
    workload: Workload, config: SolverConfig, source: LabelSource
) -> Solution:
    """Budgeted-sampling search: regression posterior replaces per-subset intervals."""
    run = _Run(workload, config, source)
    try:
        _, _, (i0, j0) = _regression_bounds(run, workload, config, source)
    except GPNumericalError as exc:
        warnings.warn(f"regression failed ({exc}); falling back to all-subset sampling")
        return all_sampling_search(workload, config, source)
    source.report_bounds(i0, j0)
    source.phase = VERIFICATION
    for subset in range(i0, j0 + 1):
        run.absorb(subset)
    return run.finish(i0, j0, PARTIAL_SAMPLING)


def hybrid_search(workload: Workload, config: SolverConfig, source: LabelSource) -> Solution:
    """Regrow the region inside the partial-sampling bounds with the better estimate.

    Starts from the median subset of the sampling solution's region and
    alternately extends upward and downward, checking precision after upper
    moves and recall after lower moves. Each check takes the stronger of the
    monotonicity bound (windowed absorbed proportions) and the regression
    bound at per-bound confidence sqrt(theta). Region bounds never leave the
    sampling solution's range, so the result costs at most as much.
    """
    run = _Run(workload, config, source)
    req = config.requirement
    m = workload.num_subsets
    conf = split_confidence(req.theta)
    try:
        intervals, _, (i0, j0) = _regression_bounds(run, workload, config, source)
    except GPNumericalError as exc:
        warnings.warn(f"regression failed ({exc}); using all-subset sampling estimates")
        source.phase = SAMPLING
        samples = sample_all_subsets(workload, config.per_subset_samples, config.seed, source)
        intervals = StratumAggregator(samples)
        i0, j0 = _scan_bounds(run, intervals, req)

    source.phase = VERIFICATION
    mid = (i0 + j0) // 2
    lo = hi = mid
    upper = _SideTally(config.base_window)
    lower = _SideTally(config.base_window)
    first = run.absorb(mid)
    upper.add(*first)
    lower.add(*first)
    source.report_bounds(lo, hi)

    def plus_estimate() -> tuple[float, str]:
        n_plus = run.pairs_in(hi + 1, m)
        if n_plus == 0:
            return 0.0, PROVENANCE_MONOTONICITY
        mono = n_plus * upper.rate()
        sampled = intervals.interval(hi + 1, m, conf).lower
        if sampled > mono:
            return sampled, PROVENANCE_SAMPLING
        return mono, PROVENANCE_MONOTONICITY

    def estimates() -> BoundEstimates:
        n_minus = run.pairs_in(0, lo)
        plus_lb, plus_src = plus_estimate()
        if n_minus == 0:
            minus_ub, minus_src = 0.0, PROVENANCE_MONOTONICITY
        else:
            mono = n_minus * lower.rate()
            sampled = intervals.interval(0, lo, conf).upper
            if sampled < mono:
                minus_ub, minus_src = sampled, PROVENANCE_SAMPLING
            else:
                minus_ub, minus_src = mono, PROVENANCE_MONOTONICITY
        return BoundEstimates(plus_lb, minus_ub, run.matches_h, plus_src, minus_src)

    def precision_ok() -> bool:
        n_plus = run.pairs_in(hi + 1, m)
        if n_plus == 0:
            return True
        est = estimates()
        return est.matches_h + est.matches_plus_lb >= req.alpha * (est.matches_h + n_plus)

    def recall_ok() -> bool:
        if run.pairs_in(0, lo) == 0:
            return True
        est = estimates()
        found = est.matches_h + est.matches_plus_lb
        return found >= req.beta * (found + est.matches_minus_ub)

    upper_frozen = precision_ok()
    lower_frozen = recall_ok()
    while not (upper_frozen and lower_frozen):
        if not upper_frozen:
            if hi == j0:
                upper_frozen = True  # capped by the sampling solution's bound
            else:
                hi += 1
                upper.add(*run.absorb(hi))
                source.report_bounds(lo, hi)
                upper_frozen = precision_ok()
        if not lower_frozen:
            if lo == i0:
                lower_frozen = True
            else:
                lo -= 1
                lower.add(*run.absorb(lo))
                source.report_bounds(lo, hi)
                lower_frozen = recall_ok()

    return run.finish(lo, hi, HYBRID)


SOLVERS: dict[str, Callable[[Workload, SolverConfig, LabelSource], Solution]] = {
    BASE: base_search,
    ALL_SAMPLING: all_sampling_search,
    PARTIAL_SAMPLING: partial_sampling_search,
    HYBRID: hybrid_search,
}
