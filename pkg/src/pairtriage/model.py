"""Core workload model.

A workload is a metric-sorted collection of candidate record pairs cut into
equal-size unit subsets. Quality targets, three-way partitions of the metric
axis, label assignments and the exact/bounded precision-recall metrics all
live here; everything downstream (sampling, regression, bound search) is
expressed in terms of these types.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass
from typing import Any, Iterable, Iterator, Mapping

import numpy as np

MATCH = "match"
UNMATCH = "unmatch"

MACHINE = "machine"
HUMAN = "human"

DEFAULT_SUBSET_SIZE = 200

_TRUTH_CODE = {UNMATCH: 0, MATCH: 1}


class ContractViolation(ValueError):
    """A precondition on labels or ground truth does not hold."""


class DegeneratePartitionWarning(UserWarning):
    """A metric or bound hit an empty-denominator convention and returned 1."""


@dataclass(frozen=True)
class InstancePair:
    """One candidate record pair with its machine metric value.

    ``truth`` carries the ground-truth label when the workload comes from an
    oracle or simulation dataset; production workloads leave it unset.
    """

    id: str
    metric: float
    truth: str | None = None

    def __post_init__(self) -> None:
        if not 0.0 <= self.metric <= 1.0:
            raise ValueError(f"metric {self.metric!r} of pair {self.id!r} outside [0,1]")
        if self.truth is not None and self.truth not in _TRUTH_CODE:
            raise ValueError(f"truth of pair {self.id!r} must be {MATCH!r} or {UNMATCH!r}")


class Workload:
    """Metric-sorted pair collection divided into unit subsets.

    Pairs are sorted ascending by metric, ties broken by pair id so subset
    boundaries are deterministic. Every subset holds exactly ``subset_size``
    pairs except possibly the last one, and for i < j every metric in subset
    i is <= every metric in subset j.
    """

    def __init__(self, pairs: Iterable[InstancePair], subset_size: int = DEFAULT_SUBSET_SIZE):
        pair_list = list(pairs)
        ids = [p.id for p in pair_list]
        metrics = np.array([p.metric for p in pair_list], dtype=np.float64)
        truths = np.array(
            [-1 if p.truth is None else _TRUTH_CODE[p.truth] for p in pair_list],
            dtype=np.int8,
        )
        self._init_from_arrays(ids, metrics, truths, subset_size)

    @classmethod
    def from_arrays(
        cls,
        ids: list[str],
        metrics: np.ndarray,
        truths: np.ndarray | None = None,
        subset_size: int = DEFAULT_SUBSET_SIZE,
    ) -> "Workload":
        """Build a workload from parallel arrays; truths use -1 for unknown."""
        self = cls.__new__(cls)
        metrics = np.asarray(metrics, dtype=np.float64)
        if truths is None:
            truths = np.full(len(ids), -1, dtype=np.int8)
        self._init_from_arrays(list(ids), metrics, np.asarray(truths, dtype=np.int8), subset_size)
        return self

    def _init_from_arrays(
        self, ids: list[str], metrics: np.ndarray, truths: np.ndarray, subset_size: int
    ) -> None:
        if not (len(ids) == len(metrics) == len(truths)):
            raise ValueError("ids, metrics and truths must have equal length")
        if subset_size < 1:
            raise ValueError("subset_size must be a positive integer")
        if len(ids) and (metrics.min() < 0.0 or metrics.max() > 1.0):
            bad = int(np.argmax((metrics < 0.0) | (metrics > 1.0)))
            raise ValueError(f"metric {metrics[bad]!r} of pair {ids[bad]!r} outside [0,1]")
        if len(set(ids)) != len(ids):
            raise ValueError("pair ids must be unique within a workload")

        order = sorted(range(len(ids)), key=lambda i: (metrics[i], ids[i]))
        order_arr = np.array(order, dtype=np.intp)
        self._ids: list[str] = [ids[i] for i in order]
        self._metrics: np.ndarray = metrics[order_arr]
        self._truths: np.ndarray = truths[order_arr]
        self.subset_size = subset_size
        n = len(self._ids)
        self._starts = np.arange(0, n, subset_size, dtype=np.intp)
        self._index_of = {pid: i for i, pid in enumerate(self._ids)}
        self._mean_metrics: np.ndarray | None = None

    # -- basic accessors ----------------------------------------------------

    def __len__(self) -> int:
        return len(self._ids)

    @property
    def num_subsets(self) -> int:
        return len(self._starts)

    @property
    def ids(self) -> list[str]:
        return self._ids

    @property
    def metrics(self) -> np.ndarray:
        return self._metrics

    @property
    def truths(self) -> np.ndarray:
        """Ground truth codes aligned with sorted order: 1 match, 0 unmatch, -1 unknown."""
        return self._truths

    @property
    def has_truth(self) -> bool:
        return bool((self._truths >= 0).all())

    def index_of(self, pair_id: str) -> int:
        return self._index_of[pair_id]

    def pair(self, index: int) -> InstancePair:
        t = int(self._truths[index])
        truth = None if t < 0 else (MATCH if t == 1 else UNMATCH)
        return InstancePair(self._ids[index], float(self._metrics[index]), truth)

    def iter_pairs(self, indices: Iterable[int] | None = None) -> Iterator[InstancePair]:
        if indices is None:
            indices = range(len(self))
        for i in indices:
            yield self.pair(i)

    @property
    def pairs(self) -> list[InstancePair]:
        return list(self.iter_pairs())

    # -- subset geometry ----------------------------------------------------

    def subset_bounds(self, subset: int) -> tuple[int, int]:
        """Half-open pair-index bounds [start, stop) of one unit subset."""
        if not 0 <= subset < self.num_subsets:
            raise IndexError(f"subset {subset} out of range")
        start = int(self._starts[subset])
        stop = min(start + self.subset_size, len(self))
        return start, stop

    def subset_len(self, subset: int) -> int:
        start, stop = self.subset_bounds(subset)
        return stop - start

    def subset_range(self, subset: int) -> range:
        start, stop = self.subset_bounds(subset)
        return range(start, stop)

    def span_bounds(self, first_subset: int, last_subset: int) -> tuple[int, int]:
        """Pair-index bounds covering subsets first..last inclusive."""
        start, _ = self.subset_bounds(first_subset)
        _, stop = self.subset_bounds(last_subset)
        return start, stop

    @property
    def subset_sizes(self) -> np.ndarray:
        sizes = np.full(self.num_subsets, self.subset_size, dtype=np.intp)
        if self.num_subsets:
            sizes[-1] = len(self) - int(self._starts[-1])
        return sizes

    @property
    def subset_mean_metrics(self) -> np.ndarray:
        """Mean metric value of each unit subset (the regression inputs)."""
        if self._mean_metrics is None:
            sums = np.add.reduceat(self._metrics, self._starts)
            self._mean_metrics = sums / self.subset_sizes
        return self._mean_metrics

    @property
    def median_subset(self) -> int:
        if len(self) == 0:
            raise ValueError("empty workload has no median subset")
        return (len(self) // 2) // self.subset_size

    def subset_containing_metric(self, value: float) -> int:
        """Subset holding the first pair with metric >= value (last subset if none)."""
        idx = int(np.searchsorted(self._metrics, value, side="left"))
        idx = min(idx, len(self) - 1)
        return idx // self.subset_size

    # -- CSV interchange ----------------------------------------------------

    @classmethod
    def from_csv(cls, path: str, subset_size: int = DEFAULT_SUBSET_SIZE) -> "Workload":
        """Read the ``id,metric[,truth]`` workload format (truth given as 0/1)."""
        ids: list[str] = []
        metrics: list[float] = []
        truths: list[int] = []
        with open(path, encoding="utf-8", newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header is None or [h.strip() for h in header[:2]] != ["id", "metric"]:
                raise ValueError(f"{path}: expected header starting with 'id,metric'")
            has_truth_col = len(header) >= 3 and header[2].strip() == "truth"
            for lineno, row in enumerate(reader, start=2):
                if not row:
                    continue
                try:
                    ids.append(row[0])
                    metrics.append(float(row[1]))
                    if has_truth_col and len(row) >= 3 and row[2] != "":
                        code = int(row[2])
                        if code not in (0, 1):
                            raise ValueError
                        truths.append(code)
                    else:
                        truths.append(-1)
                except (ValueError, IndexError):
                    raise ValueError(f"{path}:{lineno}: malformed workload row {row!r}") from None
        metric_arr = np.array(metrics, dtype=np.float64)
        if len(metric_arr) and (metric_arr.min() < 0.0 or metric_arr.max() > 1.0):
            bad = int(np.argmax((metric_arr < 0.0) | (metric_arr > 1.0)))
            raise ValueError(f"{path}: metric {metric_arr[bad]!r} of pair {ids[bad]!r} outside [0,1]")
        return cls.from_arrays(ids, metric_arr, np.array(truths, dtype=np.int8), subset_size)

    def to_csv(self, path: str) -> None:
        include_truth = self.has_truth
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["id", "metric", "truth"] if include_truth else ["id", "metric"])
            for i, pid in enumerate(self._ids):
                row = [pid, repr(float(self._metrics[i]))]
                if include_truth:
                    row.append(str(int(self._truths[i])))
                writer.writerow(row)


@dataclass(frozen=True)
class QualityRequirement:
    """The (precision, recall, confidence) triple a resolution must meet."""

    alpha: float
    beta: float
    theta: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError("alpha must be in [0,1]")
        if not 0.0 <= self.beta <= 1.0:
            raise ValueError("beta must be in [0,1]")
        if not 0.0 < self.theta < 1.0:
            raise ValueError("theta must be in (0,1)")


class LabelAssignment:
    """Immutable pair-id -> label mapping plus each label's source."""

    __slots__ = ("_labels", "_sources", "_array_cache")

    def __init__(self, labels: Mapping[str, str], sources: Mapping[str, str]):
        for pid, lab in labels.items():
            if lab not in _TRUTH_CODE:
                raise ValueError(f"label of pair {pid!r} must be {MATCH!r} or {UNMATCH!r}")
        for pid, src in sources.items():
            if src not in (MACHINE, HUMAN):
                raise ValueError(f"source of pair {pid!r} must be {MACHINE!r} or {HUMAN!r}")
        if set(labels) != set(sources):
            raise ValueError("labels and sources must cover the same pair ids")
        self._labels = dict(labels)
        self._sources = dict(sources)
        self._array_cache = None

    @classmethod
    def from_arrays(
        cls, workload: "Workload", codes: np.ndarray, human_mask: np.ndarray
    ) -> "LabelAssignment":
        """Full assignment aligned with workload order: codes 0/1, human flags."""
        codes = np.asarray(codes, dtype=np.int8)
        human_mask = np.asarray(human_mask, dtype=bool)
        n = len(workload)
        if len(codes) != n or len(human_mask) != n:
            raise ValueError("arrays must cover the whole workload")
        if codes.min(initial=0) < 0 or codes.max(initial=0) > 1:
            raise ValueError("label codes must be 0 or 1")
        self = cls.__new__(cls)
        self._labels = None  # materialized lazily from the arrays on first use
        self._sources = None
        self._array_cache = (workload, codes.copy(), human_mask.copy())
        return self

    def _materialize(self) -> None:
        if self._labels is not None:
            return
        workload, codes, human_mask = self._array_cache
        labs = np.empty(len(workload), dtype=object)
        labs[codes == 1] = MATCH
        labs[codes == 0] = UNMATCH
        srcs = np.empty(len(workload), dtype=object)
        srcs[human_mask] = HUMAN
        srcs[~human_mask] = MACHINE
        self._labels = dict(zip(workload.ids, labs.tolist()))
        self._sources = dict(zip(workload.ids, srcs.tolist()))

    def __len__(self) -> int:
        self._materialize()
        return len(self._labels)

    def __contains__(self, pair_id: str) -> bool:
        self._materialize()
        return pair_id in self._labels

    def label(self, pair_id: str) -> str | None:
        self._materialize()
        return self._labels.get(pair_id)

    def source_of(self, pair_id: str) -> str | None:
        self._materialize()
        return self._sources.get(pair_id)

    def items(self):
        self._materialize()
        return self._labels.items()

    def to_arrays(self, workload: Workload) -> tuple[np.ndarray, np.ndarray]:
        """Label codes and human-source mask aligned with workload order (-1 = unlabeled)."""
        if self._array_cache is not None and self._array_cache[0] is workload:
            return self._array_cache[1].copy(), self._array_cache[2].copy()
        codes = np.full(len(workload), -1, dtype=np.int8)
        human = np.zeros(len(workload), dtype=bool)
        index_of = workload._index_of
        for pid, lab in self._labels.items():
            idx = index_of.get(pid)
            if idx is None:
                raise ContractViolation(f"labeled pair {pid!r} not in workload")
            codes[idx] = _TRUTH_CODE[lab]
            human[idx] = self._sources[pid] == HUMAN
        return codes, human


@dataclass(frozen=True)
class Partition:
    """Three-way split of a workload along unit-subset boundaries.

    ``lower_subset``/``upper_subset`` bound the human region inclusively; both
    are None when the human region is empty. The derived pair-index ranges
    always cover the workload disjointly and respect the metric ordering.
    """

    lower_subset: int | None
    upper_subset: int | None
    minus_pairs: range
    human_pairs: range
    plus_pairs: range

    @classmethod
    def from_subset_bounds(cls, workload: Workload, lower: int, upper: int) -> "Partition":
        m = workload.num_subsets
        if not (0 <= lower <= upper < m):
            raise ValueError(f"invalid human-region subset bounds [{lower}, {upper}] for m={m}")
        h_start, h_stop = workload.span_bounds(lower, upper)
        return cls(
            lower_subset=lower,
            upper_subset=upper,
            minus_pairs=range(0, h_start),
            human_pairs=range(h_start, h_stop),
            plus_pairs=range(h_stop, len(workload)),
        )

    @classmethod
    def all_human(cls, workload: Workload) -> "Partition":
        return cls.from_subset_bounds(workload, 0, workload.num_subsets - 1)

    @classmethod
    def no_human(cls, workload: Workload, split_subset: int) -> "Partition":
        """Empty human region; machine-unmatch below subset ``split_subset``, match from it on."""
        m = workload.num_subsets
        if not 0 <= split_subset <= m:
            raise ValueError(f"split_subset {split_subset} out of range for m={m}")
        split = len(workload) if split_subset == m else workload.subset_bounds(split_subset)[0]
        return cls(
            lower_subset=None,
            upper_subset=None,
            minus_pairs=range(0, split),
            human_pairs=range(split, split),
            plus_pairs=range(split, len(workload)),
        )

    @property
    def human_is_empty(self) -> bool:
        return len(self.human_pairs) == 0

    def region_sizes(self) -> tuple[int, int, int]:
        return len(self.minus_pairs), len(self.human_pairs), len(self.plus_pairs)


@dataclass(frozen=True)
class Solution:
    """A finished split: who labels what, plus provenance of the human work.

    ``human_labeled`` includes every pair the human was charged for (samples
    as well as the whole human region); its size is the human cost.
    """

    partition: Partition
    labels: LabelAssignment
    human_labeled: frozenset[str]
    solver: str
    seed: int | None = None
    config: Any = None
    exhausted: bool = False

    @property
    def human_cost(self) -> int:
        return len(self.human_labeled)

    def cost_fraction(self, workload: Workload) -> float:
        return self.human_cost / len(workload)

    def to_dict(self, workload: Workload, include_labels: bool = True) -> dict:
        d: dict[str, Any] = {
            "solver": self.solver,
            "bounds": {
                "lower_subset": self.partition.lower_subset,
                "upper_subset": self.partition.upper_subset,
            },
            "region_sizes": dict(
                zip(("machine_unmatch", "human", "machine_match"), self.partition.region_sizes())
            ),
            "human_cost": self.human_cost,
            "cost_fraction": self.cost_fraction(workload),
            "seed": self.seed,
            "exhausted": self.exhausted,
            "config": _config_dict(self.config),
        }
        if include_labels:
            d["labels"] = {
                pid: {"label": lab, "source": self.labels.source_of(pid)}
                for pid, lab in self.labels.items()
            }
        return d


def _config_dict(config: Any) -> Any:
    if config is None:
        return None
    if hasattr(config, "to_dict"):
        return config.to_dict()
    return str(config)


# -- quality metrics ---------------------------------------------------------


def _confusion(workload: Workload, labels: LabelAssignment) -> tuple[int, int, int]:
    truths = workload.truths
    if not workload.has_truth:
        bad = int(np.argmax(truths < 0))
        raise ContractViolation(f"pair {workload.ids[bad]!r} has no ground truth")
    codes, _ = labels.to_arrays(workload)
    if (codes < 0).any():
        bad = int(np.argmax(codes < 0))
        raise ContractViolation(f"pair {workload.ids[bad]!r} has no label")
    tp = int(np.count_nonzero((codes == 1) & (truths == 1)))
    fp = int(np.count_nonzero((codes == 1) & (truths == 0)))
    fn = int(np.count_nonzero((codes == 0) & (truths == 1)))
    return tp, fp, fn


def precision(workload: Workload, labels: LabelAssignment) -> float:
    """Fraction of truly matching pairs among pairs labeled match.

    Returns 1.0 by convention when nothing is labeled match.
    """
    tp, fp, _ = _confusion(workload, labels)
    if tp + fp == 0:
        warnings.warn("no pair labeled match; precision is 1 by convention", DegeneratePartitionWarning)
        return 1.0
    return tp / (tp + fp)


def recall(workload: Workload, labels: LabelAssignment) -> float:
    """Fraction of matching pairs that were labeled match.

    Returns 1.0 by convention when the workload holds no true match.
    """
    tp, _, fn = _confusion(workload, labels)
    if tp + fn == 0:
        warnings.warn("no true matching pair; recall is 1 by convention", DegeneratePartitionWarning)
        return 1.0
    return tp / (tp + fn)


def precision_lower_bound(n_plus: int, n_h: int, matches_plus_lb: float, matches_h: float) -> float:
    """Worst-case precision of a split given a lower bound on machine-match matches.

    All human-region pairs count against the denominator, so this is the
    coarse framework-level bound; the solvers use sharper per-approach forms.
    """
    if matches_plus_lb > n_plus or matches_h > n_h:
        raise ValueError("match counts cannot exceed their region populations")
    if n_plus + n_h == 0:
        warnings.warn("empty match-side regions; precision bound is 1", DegeneratePartitionWarning)
        return 1.0
    return (matches_plus_lb + matches_h) / (n_plus + n_h)


def recall_lower_bound(matches_plus_lb: float, matches_h: float, matches_minus_ub: float) -> float:
    """Worst-case recall given bounds on matches kept versus matches discarded."""
    if min(matches_plus_lb, matches_h, matches_minus_ub) < 0:
        raise ValueError("match-count bounds must be nonnegative")
    found = matches_plus_lb + matches_h
    total = found + matches_minus_ub
    if total == 0:
        warnings.warn("no matches anywhere; recall bound is 1", DegeneratePartitionWarning)
        return 1.0
    return found / total


def observed_proportion(workload: Workload, labels: LabelAssignment, subsets: range) -> float:
    """Observed match proportion over a contiguous run of human-labeled subsets."""
    if len(subsets) == 0:
        raise ValueError("subset range is empty")
    start, stop = workload.span_bounds(subsets[0], subsets[-1])
    matches = 0
    for i in range(start, stop):
        pid = workload.ids[i]
        lab = labels.label(pid)
        if lab is None or labels.source_of(pid) != HUMAN:
            raise ContractViolation(f"pair {pid!r} in range lacks a human label")
        matches += lab == MATCH
    return matches / (stop - start)
