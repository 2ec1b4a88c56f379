"""Exact quality metrics and the certified bounds a three-way split gives.

A workload split into machine-unmatch / human / machine-match regions has
quality that can be bounded before the machine regions' truths are known:
a lower bound on matches in the match region and an upper bound on matches
in the unmatch region are all it takes.
"""

import numpy as np

from pairtriage.model import (
    MATCH,
    UNMATCH,
    LabelAssignment,
    Partition,
    Workload,
    precision,
    precision_lower_bound,
    recall,
    recall_lower_bound,
)

rng = np.random.default_rng(7)
n = 600
metrics = np.sort(rng.uniform(size=n))
truths = (rng.uniform(size=n) < metrics).astype(np.int8)  # matchier toward the top
workload = Workload.from_arrays([f"d{i:03d}" for i in range(n)], metrics, truths, subset_size=50)

# a split: bottom 4 subsets auto-unmatch, 4 to the human, top 4 auto-match
split = Partition.from_subset_bounds(workload, 4, 7)
print("region sizes (machine-unmatch, human, machine-match):", split.region_sizes())

codes = np.zeros(n, dtype=np.int8)
codes[split.plus_pairs.start:] = 1
human_mask = np.zeros(n, dtype=bool)
human_mask[split.human_pairs.start:split.human_pairs.stop] = True
codes[human_mask] = workload.truths[human_mask]  # the human answers exactly
labels = LabelAssignment.from_arrays(workload, codes, human_mask)

print("achieved precision:", round(precision(workload, labels), 4))
print("achieved recall:   ", round(recall(workload, labels), 4))

# the certified view, using only counts and bounds
matches_h = int(workload.truths[split.human_pairs].sum())
true_plus = int(workload.truths[split.plus_pairs].sum())
true_minus = int(workload.truths[split.minus_pairs].sum())
plus_lb = int(0.8 * true_plus)    # pretend estimate: a safe lower bound
minus_ub = int(1.3 * true_minus)  # and a safe upper bound

p_bound = precision_lower_bound(len(split.plus_pairs), len(split.human_pairs), plus_lb, matches_h)
r_bound = recall_lower_bound(plus_lb, matches_h, minus_ub)
print(f"certified precision >= {p_bound:.4f}, certified recall >= {r_bound:.4f}")
print("bounds hold:", p_bound <= precision(workload, labels), r_bound <= recall(workload, labels))
