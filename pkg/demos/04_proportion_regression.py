"""Regressing the match-proportion curve from a few sampled subsets.

Instead of sampling every subset, the adaptive loop samples a budgeted few,
fits a Gaussian-process curve through them, and bisects any neighbour gap
whose midpoint surprises the current fit. The resulting posterior turns
whole subset ranges into match-count intervals.
"""

import numpy as np

from pairtriage.gp import (
    HyperPolicy,
    SamplePolicy,
    aggregate_count_interval,
    fit_proportion_function,
    posterior,
)
from pairtriage.oracle import GroundTruthSource
from pairtriage.synth import SyntheticSpec, generate, logistic_proportion

workload = generate(SyntheticSpec(n_pairs=40000, subset_size=200, tau=14, sigma=0.1, seed=4))
m = workload.num_subsets
source = GroundTruthSource()

model, sampled = fit_proportion_function(
    workload,
    SamplePolicy(per_subset=40, hyper=HyperPolicy(mode="grid")),
    p_lower=0.03,
    p_upper=0.12,
    epsilon=0.05,
    seed=11,
    source=source,
)
print(f"sampled {len(sampled)} of {m} subsets ({source.asked_count} labels)")
print(f"selected kernel: signal={model.signal_var} length={model.length_scale} "
      f"noise={model.noise_var:.4f}")

post = posterior(model, workload.subset_mean_metrics)
print("\n subset   curve   posterior mean +- sd")
for s in range(0, m, m // 10):
    v = workload.subset_mean_metrics[s]
    print(f"  {s:4d}    {logistic_proportion(v, 14):.3f}   "
          f"{post.mean[s]:+.3f} +- {np.sqrt(post.cov[s, s]):.3f}"
          + ("   (sampled)" if s in sampled else ""))

# aggregate the top quarter of the workload into one count interval
top = range(3 * m // 4, m)
sub_post = posterior(model, workload.subset_mean_metrics[list(top)])
sizes = workload.subset_sizes[list(top)]
interval = aggregate_count_interval(sub_post, sizes, theta=0.9)
true_top = int(sum(workload.truths[workload.subset_range(s)].sum() for s in top))
print(f"\ntop-quarter match count: interval [{interval.lower:.0f}, {interval.upper:.0f}] "
      f"at 90%, truth {true_top}")
print("model dump:", model.to_json()[:100], "...")
