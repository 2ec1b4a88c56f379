"""Pair similarity from raw records.

Attribute similarities (token Jaccard or Jaro-Winkler) are aggregated with
normalized weights into a single metric in [0,1]; a blocking threshold then
filters out the pairs unlikely to match before they enter a workload.
"""

from __future__ import annotations

import csv
import re
import warnings
from dataclasses import dataclass, field

import numpy as np

from .model import MATCH, UNMATCH, Workload

_TOKEN_SPLIT = re.compile(r"[^0-9a-z]+")

JACCARD = "jaccard_tokens"
JARO_WINKLER = "jaro_winkler"


class SimilarityConfigError(ValueError):
    """A similarity configuration references attributes or measures it cannot use."""


@dataclass(frozen=True)
class RecordTable:
    """One entity collection: (id, attribute -> text) records sharing a schema."""

    records: list[tuple[str, dict[str, str]]]
    schema: list[str]

    def __post_init__(self) -> None:
        ids = [rid for rid, _ in self.records]
        if len(set(ids)) != len(ids):
            raise ValueError("record ids must be unique")
        for rid, attrs in self.records:
            missing = set(self.schema) - set(attrs)
            if missing:
                raise ValueError(f"record {rid!r} missing attributes {sorted(missing)}")

    def __len__(self) -> int:
        return len(self.records)

    @classmethod
    def from_csv(cls, path: str) -> "RecordTable":
        """Read ``id,attr1,attr2,...`` rows; short rows are padded with empty text."""
        with open(path, encoding="utf-8", newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if not header or header[0].strip() != "id":
                raise ValueError(f"{path}: expected header starting with 'id'")
            schema = [h.strip() for h in header[1:]]
            records = []
            for lineno, row in enumerate(reader, start=2):
                if not row:
                    continue
                values = row[1:] + [""] * (len(schema) - len(row) + 1)
                records.append((row[0], dict(zip(schema, values))))
        return cls(records, schema)


@dataclass(frozen=True)
class SimilarityConfig:
    """Per-attribute measure and weight plus the blocking threshold.

    Weights are normalized to sum to one at construction; passing None lets
    ``derive_weights`` fill them in from distinct-value counts.
    """

    measures: dict[str, str]
    weights: dict[str, float] | None = None
    blocking_threshold: float = 0.0
    token_prefilter: bool = False

    def __post_init__(self) -> None:
        if not self.measures:
            raise SimilarityConfigError("at least one attribute measure required")
        for attr, measure in self.measures.items():
            if measure not in (JACCARD, JARO_WINKLER):
                raise SimilarityConfigError(f"unknown measure {measure!r} for attribute {attr!r}")
        if not 0.0 <= self.blocking_threshold <= 1.0:
            raise SimilarityConfigError("blocking_threshold must be in [0,1]")
        if self.weights is not None:
            if set(self.weights) != set(self.measures):
                raise SimilarityConfigError("weights must cover exactly the measured attributes")
            total = sum(self.weights.values())
            if total <= 0 or any(v < 0 for v in self.weights.values()):
                raise SimilarityConfigError("weights must be nonnegative with positive sum")
            object.__setattr__(self, "weights", {a: v / total for a, v in self.weights.items()})


def tokenize(text: str) -> frozenset[str]:
    """Lowercase and split on non-alphanumeric runs."""
    return frozenset(t for t in _TOKEN_SPLIT.split(text.lower()) if t)


def jaccard_tokens(a: str, b: str) -> float:
    """Token-set Jaccard similarity; 1.0 when both token sets are empty."""
    ta, tb = tokenize(a), tokenize(b)
    if not ta and not tb:
        return 1.0
    union = len(ta | tb)
    return len(ta & tb) / union


def jaro_winkler(a: str, b: str) -> float:
    """Jaro similarity with the Winkler prefix boost (prefix cap 4, scale 0.1)."""
    if a == b:
        return 1.0
    if not a or not b:
        return 0.0
    la, lb = len(a), len(b)
    window = max(la, lb) // 2 - 1
    if window < 0:
        window = 0
    matched_b = [False] * lb
    a_matches = []
    for i, ch in enumerate(a):
        lo = max(0, i - window)
        hi = min(lb, i + window + 1)
        for j in range(lo, hi):
            if not matched_b[j] and b[j] == ch:
                matched_b[j] = True
                a_matches.append(ch)
                break
    m = len(a_matches)
    if m == 0:
        return 0.0
    b_matches = [b[j] for j in range(lb) if matched_b[j]]
    transpositions = sum(x != y for x, y in zip(a_matches, b_matches)) / 2.0
    jaro = (m / la + m / lb + (m - transpositions) / m) / 3.0
    prefix = 0
    for x, y in zip(a, b):
        if x != y or prefix == 4:
            break
        prefix += 1
    return jaro + prefix * 0.1 * (1.0 - jaro)


_MEASURES = {JACCARD: jaccard_tokens, JARO_WINKLER: jaro_winkler}


def aggregate_similarity(
    record_a: dict[str, str], record_b: dict[str, str], config: SimilarityConfig
) -> float:
    """Weighted sum of per-attribute similarities under the given config."""
    if config.weights is None:
        raise SimilarityConfigError("config has no weights; call derive_weights first")
    total = 0.0
    for attr, weight in config.weights.items():
        if attr not in record_a or attr not in record_b:
            raise SimilarityConfigError(f"attribute {attr!r} not present on both records")
        total += weight * _MEASURES[config.measures[attr]](record_a[attr], record_b[attr])
    return min(1.0, max(0.0, total))


def derive_weights(
    table_a: RecordTable, table_b: RecordTable, attributes: list[str]
) -> dict[str, float]:
    """Weight each attribute by its distinct nonempty value count across both tables."""
    if not attributes:
        raise SimilarityConfigError("attributes must be nonempty")
    counts: dict[str, int] = {}
    for attr in attributes:
        values = {attrs[attr] for _, attrs in table_a.records if attrs.get(attr, "").strip()}
        values |= {attrs[attr] for _, attrs in table_b.records if attrs.get(attr, "").strip()}
        if not values:
            warnings.warn(f"attribute {attr!r} has no distinct values; excluded from weights")
            continue
        counts[attr] = len(values)
    if not counts:
        raise SimilarityConfigError("no attribute has any distinct value")
    total = sum(counts.values())
    return {attr: c / total for attr, c in counts.items()}


def _resolve_config(table_a: RecordTable, table_b: RecordTable, config: SimilarityConfig) -> SimilarityConfig:
    if config.weights is not None:
        return config
    weights = derive_weights(table_a, table_b, list(config.measures))
    measures = {a: m for a, m in config.measures.items() if a in weights}
    return SimilarityConfig(measures, weights, config.blocking_threshold, config.token_prefilter)


def _prefilter_candidates(table_a: RecordTable, table_b: RecordTable, config: SimilarityConfig):
    """Candidate index pairs sharing at least one token on some Jaccard attribute.

    Only safe when every measured attribute is token-based and the threshold is
    positive; any pair with zero shared tokens then scores 0 < threshold.
    """
    jaccard_attrs = [a for a, m in config.measures.items() if m == JACCARD]
    index: dict[str, set[int]] = {}
    for j, (_, attrs) in enumerate(table_b.records):
        for attr in jaccard_attrs:
            for tok in tokenize(attrs[attr]):
                index.setdefault(tok, set()).add(j)
    for i, (_, attrs) in enumerate(table_a.records):
        seen: set[int] = set()
        for attr in jaccard_attrs:
            for tok in tokenize(attrs[attr]):
                seen |= index.get(tok, set())
        for j in sorted(seen):
            yield i, j


def block(
    table_a: RecordTable,
    table_b: RecordTable,
    config: SimilarityConfig,
    gold: set[tuple[str, str]] | None = None,
    subset_size: int = 200,
) -> Workload:
    """Score all cross-table pairs and keep those at or above the blocking threshold.

    Pair ids are ``id_a|id_b``. When a gold mapping (set of matching id pairs)
    is supplied, every kept pair receives a ground-truth label.
    """
    config = _resolve_config(table_a, table_b, config)
    use_prefilter = (
        config.token_prefilter
        and config.blocking_threshold > 0.0
        and all(m == JACCARD for m in config.measures.values())
    )
    if use_prefilter:
        candidates = _prefilter_candidates(table_a, table_b, config)
    else:
        candidates = (
            (i, j) for i in range(len(table_a)) for j in range(len(table_b))
        )

    ids: list[str] = []
    metrics: list[float] = []
    truths: list[int] = []
    for i, j in candidates:
        rid_a, attrs_a = table_a.records[i]
        rid_b, attrs_b = table_b.records[j]
        sim = aggregate_similarity(attrs_a, attrs_b, config)
        if sim < config.blocking_threshold:
            continue
        ids.append(f"{rid_a}|{rid_b}")
        metrics.append(sim)
        if gold is None:
            truths.append(-1)
        else:
            truths.append(1 if (rid_a, rid_b) in gold else 0)
    return Workload.from_arrays(
        ids, np.array(metrics), np.array(truths, dtype=np.int8), subset_size=subset_size
    )


def load_gold_csv(path: str) -> set[tuple[str, str]]:
    """Read the ``id_a,id_b`` gold mapping of true matches."""
    gold: set[tuple[str, str]] = set()
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or len(header) < 2:
            raise ValueError(f"{path}: expected header 'id_a,id_b'")
        for row in reader:
            if row:
                gold.add((row[0], row[1]))
    return gold


def split_pair_id(pair_id: str) -> tuple[str, str]:
    left, _, right = pair_id.partition("|")
    return left, right
