"""The four search procedures head to head on one synthetic workload.

All four return a certified split; they differ in how they estimate the
machine regions' match counts and therefore in how much human labeling they
spend. The hybrid reuses the sampling solution's bounds as an outer cap and
regrows the region with the better of both estimates, so it tracks whichever
of the other two is cheaper.
"""

import time

from pairtriage.model import QualityRequirement, precision, recall
from pairtriage.oracle import GroundTruthSource
from pairtriage.solvers import SOLVERS, SolverConfig
from pairtriage.synth import SyntheticSpec, generate

workload = generate(SyntheticSpec(n_pairs=20000, subset_size=200, tau=14, sigma=0.1, seed=1))
config = SolverConfig(
    requirement=QualityRequirement(alpha=0.9, beta=0.9, theta=0.9),
    sampling_range=(0.05, 0.25),
    per_subset_samples=40,
    seed=5,
)

print(f"workload: {len(workload)} pairs, requirement alpha=beta=theta=0.9\n")
print("solver             human cost   fraction   precision   recall   bounds      time")
for name, solve in SOLVERS.items():
    source = GroundTruthSource()
    started = time.perf_counter()
    solution = solve(workload, config, source)
    elapsed = time.perf_counter() - started
    p = precision(workload, solution.labels)
    r = recall(workload, solution.labels)
    bounds = f"[{solution.partition.lower_subset},{solution.partition.upper_subset}]"
    print(f"{name:18s} {solution.human_cost:10d}   {solution.cost_fraction(workload):8.3f}"
          f"   {p:9.4f}   {r:6.4f}   {bounds:9s} {elapsed * 1000:6.0f}ms")
