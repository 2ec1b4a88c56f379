"""Label sources: the single gate through which every human inspection flows.

Each pair is charged at most once; repeated asks hit the cache at zero cost.
A journal file of answered pairs makes long labeling sessions resumable: on
restart the cache is rebuilt from the journal and the solver replays its
deterministic ask sequence straight through the already-answered prefix.
"""

from __future__ import annotations

import threading
import time
from dataclasses import dataclass
from typing import Iterable, NamedTuple

import numpy as np

from .model import MATCH, UNMATCH, InstancePair, Workload

SAMPLING = "sampling"
VERIFICATION = "verification"


class OracleAbort(RuntimeError):
    """The label source was closed while asks were outstanding."""


class HumanCost(NamedTuple):
    count: int
    fraction_of_workload: float


@dataclass(frozen=True)
class LabelRequest:
    """One pending question for the human: which pair, what to show, which phase."""

    pair_id: str
    display: dict[str, str]
    phase: str


class LabelSource:
    """Base label source: caching, cost accounting and optional journaling.

    Subclasses implement ``_resolve`` to produce a label for an uncached pair.
    The cache is shared state guarded by a lock; interactive answering and a
    running solver may touch it from different threads.
    """

    kind = "abstract"

    def __init__(self, journal_path: str | None = None):
        self.cache: dict[str, str] = {}
        self.phase = SAMPLING
        self._lock = threading.RLock()
        self._journal_path = journal_path
        self._journal_fh = None
        if journal_path is not None:
            self._replay_journal(journal_path)
            self._journal_fh = open(journal_path, "a", encoding="utf-8")

    # -- core protocol -------------------------------------------------------

    def ask(self, pair: InstancePair) -> str:
        """Label one pair, charging it only on the first ask."""
        with self._lock:
            cached = self.cache.get(pair.id)
        if cached is not None:
            return cached
        label = self._resolve(pair)
        self._record(pair.id, label)
        return label

    def ask_batch(self, pairs: Iterable[InstancePair]) -> list[str]:
        return [self.ask(p) for p in pairs]

    def ask_span(self, workload: Workload, indices: Iterable[int]) -> list[str]:
        """Label pairs by workload index; batches so queue-backed sources enqueue all at once."""
        return self.ask_batch(list(workload.iter_pairs(indices)))

    @property
    def asked_count(self) -> int:
        with self._lock:
            return len(self.cache)

    def human_cost(self, workload: Workload) -> HumanCost:
        count = self.asked_count
        return HumanCost(count, count / len(workload))

    def labeled_ids(self) -> frozenset[str]:
        with self._lock:
            return frozenset(self.cache)

    def snapshot(self) -> dict[str, str]:
        """Copy of every charged pair's answer."""
        with self._lock:
            return dict(self.cache)

    def snapshot_arrays(self, workload: Workload) -> tuple[np.ndarray, np.ndarray]:
        """Answers aligned with workload order: codes (-1 unasked) and asked mask."""
        codes = np.full(len(workload), -1, dtype=np.int8)
        mask = np.zeros(len(workload), dtype=bool)
        index_of = workload._index_of
        for pid, lab in self.snapshot().items():
            idx = index_of.get(pid)
            if idx is not None:
                codes[idx] = 1 if lab == MATCH else 0
                mask[idx] = True
        return codes, mask

    def close(self) -> None:
        if self._journal_fh is not None:
            self._journal_fh.close()
            self._journal_fh = None

    def report_bounds(self, lower_subset: int, upper_subset: int) -> None:
        """Progress hook for interactive frontends; no-op by default."""

    # -- internals -------------------------------------------------------------

    def _resolve(self, pair: InstancePair) -> str:
        raise NotImplementedError

    def _record(self, pair_id: str, label: str) -> None:
        with self._lock:
            if pair_id in self.cache:
                return
            self.cache[pair_id] = label
            if self._journal_fh is not None:
                self._journal_fh.write(f"{pair_id},{label},{time.time():.6f}\n")
                self._journal_fh.flush()

    def _replay_journal(self, path: str) -> None:
        try:
            fh = open(path, encoding="utf-8")
        except FileNotFoundError:
            return
        with fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                pair_id, label, _ = line.split(",", 2)
                if label not in (MATCH, UNMATCH):
                    raise ValueError(f"journal {path}: bad label {label!r} for {pair_id!r}")
                self.cache[pair_id] = label


class GroundTruthSource(LabelSource):
    """Perfect simulated human: answers straight from the pair's ground truth.

    Spans are tracked in an index mask bound to the first workload seen, so
    bulk labeling costs no per-pair bookkeeping; the id-keyed cache view is
    materialized only when someone actually reads it.
    """

    kind = "ground_truth"

    def __init__(self, journal_path: str | None = None):
        super().__init__(journal_path)
        self._workload: Workload | None = None
        self._mask: np.ndarray | None = None

    def _bind(self, workload: Workload) -> None:
        if self._workload is None:
            self._workload = workload
            self._mask = np.zeros(len(workload), dtype=bool)
            if self.cache:  # journal replay: move in-workload entries to the mask
                index_of = workload._index_of
                keep: dict[str, str] = {}
                for pid, lab in self.cache.items():
                    idx = index_of.get(pid)
                    if idx is None:
                        keep[pid] = lab
                    else:
                        self._mask[idx] = True
                self.cache.clear()
                self.cache.update(keep)
        elif self._workload is not workload:
            raise ValueError("ground-truth source is already bound to another workload")

    def _resolve(self, pair: InstancePair) -> str:
        if pair.truth is None:
            raise ValueError(f"pair {pair.id!r} has no ground truth to reveal")
        return pair.truth

    def ask(self, pair: InstancePair) -> str:
        if self._workload is not None:
            idx = self._workload._index_of.get(pair.id)
            if idx is not None:
                self.ask_span(self._workload, [idx])
                t = int(self._workload.truths[idx])
                return MATCH if t == 1 else UNMATCH
        return super().ask(pair)

    def ask_span(self, workload: Workload, indices) -> list[str]:
        with self._lock:
            self._bind(workload)
            mask = self._mask
            if isinstance(indices, range):
                sel = slice(indices.start, indices.stop, indices.step)
                truths = workload.truths[sel]
            else:
                sel = np.asarray(list(indices), dtype=np.intp)
                truths = workload.truths[sel]
            if truths.min(initial=1) < 0:
                raise ValueError("workload has pairs without ground truth in the asked span")
            if self._journal_fh is not None:
                fresh = np.zeros(len(workload), dtype=bool)
                fresh[sel] = True
                fresh &= ~mask
                stamp = time.time()
                for i in np.flatnonzero(fresh).tolist():
                    lab = MATCH if workload.truths[i] == 1 else UNMATCH
                    self._journal_fh.write(f"{workload.ids[i]},{lab},{stamp:.6f}\n")
                self._journal_fh.flush()
            mask[sel] = True
        labs = np.empty(len(truths), dtype=object)
        labs[truths == 1] = MATCH
        labs[truths == 0] = UNMATCH
        return labs.tolist()

    @property
    def asked_count(self) -> int:
        with self._lock:
            extra = int(self._mask.sum()) if self._mask is not None else 0
            return len(self.cache) + extra

    def labeled_ids(self) -> frozenset[str]:
        with self._lock:
            ids = set(self.cache)
            if self._mask is not None and self._workload is not None:
                wl_ids = self._workload.ids
                ids.update(map(wl_ids.__getitem__, np.flatnonzero(self._mask).tolist()))
            return frozenset(ids)

    def snapshot(self) -> dict[str, str]:
        with self._lock:
            out = dict(self.cache)
            if self._mask is not None and self._workload is not None:
                w = self._workload
                for i in np.flatnonzero(self._mask).tolist():
                    out[w.ids[i]] = MATCH if w.truths[i] == 1 else UNMATCH
            return out

    def snapshot_arrays(self, workload: Workload):
        with self._lock:
            if self._workload is workload and self._mask is not None and not self.cache:
                codes = np.where(workload.truths == 1, 1, 0).astype(np.int8)
                codes[~self._mask] = -1
                return codes, self._mask.copy()
        return super().snapshot_arrays(workload)


class ScriptedSource(LabelSource):
    """Replays a fixed transcript of pair-id -> label answers."""

    kind = "scripted"

    def __init__(self, transcript: dict[str, str], journal_path: str | None = None):
        super().__init__(journal_path)
        self._transcript = dict(transcript)

    def _resolve(self, pair: InstancePair) -> str:
        if pair.id not in self._transcript:
            raise KeyError(f"transcript has no answer for pair {pair.id!r}")
        return self._transcript[pair.id]


class InteractiveSource(LabelSource):
    """Queue-backed source: asks block until an answer arrives over the API.

    The solver thread enqueues requests and waits; the serving thread feeds
    answers in via ``answer``. Closing the source aborts outstanding asks.
    """

    kind = "interactive"

    def __init__(self, journal_path: str | None = None, display_fn=None):
        super().__init__(journal_path)
        self._display_fn = display_fn or (lambda pair: {"metric": f"{pair.metric:.4f}"})
        self._cond = threading.Condition(self._lock)
        self._pending: dict[str, LabelRequest] = {}
        self._order: list[str] = []
        self._closed = False
        self.current_bounds: tuple[int, int] | None = None

    def _resolve(self, pair: InstancePair) -> str:
        with self._cond:
            if pair.id not in self._pending:
                self._pending[pair.id] = LabelRequest(pair.id, self._display_fn(pair), self.phase)
                self._order.append(pair.id)
                self._cond.notify_all()
            while pair.id not in self.cache:
                if self._closed:
                    raise OracleAbort(f"label source closed while waiting on {pair.id!r}")
                self._cond.wait(timeout=0.5)
            return self.cache[pair.id]

    def ask_batch(self, pairs: Iterable[InstancePair]) -> list[str]:
        pairs = list(pairs)
        with self._cond:
            todo = []
            for p in pairs:
                if p.id not in self.cache and p.id not in self._pending:
                    self._pending[p.id] = LabelRequest(p.id, self._display_fn(p), self.phase)
                    self._order.append(p.id)
                    todo.append(p.id)
            if todo:
                self._cond.notify_all()
            while any(p.id not in self.cache for p in pairs):
                if self._closed:
                    raise OracleAbort("label source closed with asks outstanding")
                self._cond.wait(timeout=0.5)
            return [self.cache[p.id] for p in pairs]

    # -- the serving side ------------------------------------------------------

    def pending_requests(self, limit: int = 10) -> list[LabelRequest]:
        with self._cond:
            return [self._pending[pid] for pid in self._order[:limit]]

    def has_pending(self) -> bool:
        with self._cond:
            return bool(self._pending)

    def answer(self, pair_id: str, label: str) -> str:
        """Feed one answer in. Returns 'accepted', 'duplicate', or raises KeyError."""
        if label not in (MATCH, UNMATCH):
            raise ValueError(f"label must be {MATCH!r} or {UNMATCH!r}")
        with self._cond:
            if pair_id in self.cache:
                return "duplicate"
            if pair_id not in self._pending:
                raise KeyError(f"pair {pair_id!r} is not awaiting a label")
            del self._pending[pair_id]
            self._order.remove(pair_id)
            self._record(pair_id, label)  # re-entrant: same underlying lock
            self._cond.notify_all()
        return "accepted"

    def report_bounds(self, lower_subset: int, upper_subset: int) -> None:
        with self._cond:
            self.current_bounds = (lower_subset, upper_subset)

    def close(self) -> None:
        with self._cond:
            self._closed = True
            self._cond.notify_all()
        super().close()


def human_cost(source: LabelSource, workload: Workload) -> HumanCost:
    """Inspected-pair count and its fraction of the workload."""
    return source.human_cost(workload)
