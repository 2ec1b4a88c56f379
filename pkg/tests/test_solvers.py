import numpy as np
import pytest

from pairtriage.model import (
    HUMAN,
    MACHINE,
    MATCH,
    UNMATCH,
    QualityRequirement,
    Workload,
    precision,
    recall,
)
from pairtriage.oracle import GroundTruthSource
from pairtriage.solvers import (
    SolverConfig,
    all_sampling_search,
    base_precision_threshold,
    base_recall_threshold,
    base_search,
    hybrid_search,
    partial_sampling_search,
)
from pairtriage.synth import SyntheticSpec, generate


def req(alpha=0.9, beta=0.9, theta=0.9):
    return QualityRequirement(alpha, beta, theta)


def separable_workload(n=1000, subset_size=50):
    """All unmatches strictly below metric 0.5, all matches above."""
    half = n // 2
    metrics = np.concatenate([np.linspace(0.01, 0.45, half), np.linspace(0.55, 0.99, n - half)])
    truths = np.concatenate([np.zeros(half, np.int8), np.ones(n - half, np.int8)])
    ids = [f"p{i:05d}" for i in range(n)]
    return Workload.from_arrays(ids, metrics, truths, subset_size=subset_size)


def all_unmatch_workload(n=600, subset_size=50):
    rng = np.random.default_rng(0)
    metrics = np.sort(rng.uniform(size=n))
    return Workload.from_arrays(
        [f"p{i:05d}" for i in range(n)], metrics, np.zeros(n, np.int8), subset_size
    )


def check_solution_contract(workload, solution):
    """Human region fully human-labeled; machine labels follow the region rule."""
    part = solution.partition
    ids = workload.ids
    for idx in part.human_pairs:
        assert ids[idx] in solution.human_labeled
        assert solution.labels.source_of(ids[idx]) == HUMAN
    for idx in part.minus_pairs:
        if solution.labels.source_of(ids[idx]) == MACHINE:
            assert solution.labels.label(ids[idx]) == UNMATCH
    for idx in part.plus_pairs:
        if solution.labels.source_of(ids[idx]) == MACHINE:
            assert solution.labels.label(ids[idx]) == MATCH
    assert solution.human_cost == len(solution.human_labeled)


class TestThresholds:
    def test_precision_threshold_values(self):
        assert base_precision_threshold(1.0, 1000, 500, 0.7) == 1.0
        assert base_precision_threshold(0.9, 1000, 500, 0.5) == pytest.approx(0.875)
        assert base_precision_threshold(0.0, 1000, 500, 0.5) <= 0.0
        assert base_precision_threshold(0.9, 0, 500, 0.5) == -np.inf

    def test_recall_threshold_values(self):
        assert base_recall_threshold(1.0, 1000, 500, 0.5, 1000, 0.9) == 0.0
        assert base_recall_threshold(0.9, 1000, 500, 0.5, 1000, 0.9) == pytest.approx(115 / 900)
        assert base_recall_threshold(0.9, 1000, 500, 0.0, 1000, 0.0) == 0.0
        assert base_recall_threshold(0.0, 1000, 500, 0.5, 1000, 0.9) == np.inf
        assert base_recall_threshold(0.9, 0, 500, 0.5, 1000, 0.9) == np.inf


class TestBaseSearch:
    def test_zero_requirements_minimal_window(self):
        w = separable_workload()
        sol = base_search(w, SolverConfig(requirement=req(0.0, 0.0)), GroundTruthSource())
        # both conditions met at the first check: one subset per side
        assert len(sol.partition.human_pairs) <= 2 * w.subset_size
        check_solution_contract(w, sol)

    def test_separable_freezes_fast(self):
        w = separable_workload()
        cfg = SolverConfig(requirement=req(0.9, 0.9), base_window=5)
        sol = base_search(w, cfg, GroundTruthSource())
        assert len(sol.partition.human_pairs) <= (cfg.base_window + 1) * 2 * w.subset_size
        assert precision(w, sol.labels) == 1.0
        assert recall(w, sol.labels) == 1.0
        check_solution_contract(w, sol)

    def test_all_unmatch_labels_everything_unmatch(self):
        w = all_unmatch_workload()
        sol = base_search(w, SolverConfig(requirement=req(0.9, 0.9)), GroundTruthSource())
        assert all(lab == UNMATCH for _, lab in sol.labels.items())
        assert recall(w, sol.labels) == 1.0  # no true matches: convention
        check_solution_contract(w, sol)

    def test_deterministic(self):
        w = generate(SyntheticSpec(n_pairs=4000, subset_size=100, tau=12, sigma=0.1, seed=3))
        cfg = SolverConfig(requirement=req())
        a = base_search(w, cfg, GroundTruthSource())
        b = base_search(w, cfg, GroundTruthSource())
        assert a.partition == b.partition
        assert a.human_cost == b.human_cost

    def test_monotone_data_meets_requirements(self):
        for seed in range(5):
            w = generate(SyntheticSpec(n_pairs=10000, subset_size=200, tau=14, sigma=0.0, seed=seed))
            sol = base_search(w, SolverConfig(requirement=req(0.9, 0.9)), GroundTruthSource())
            assert precision(w, sol.labels) >= 0.9
            assert recall(w, sol.labels) >= 0.9

    def test_exhausted_flag_on_impossible_requirement(self):
        # alternating truths destroy monotonicity; near-1 requirements cannot
        # be certified before the whole workload is absorbed
        rng = np.random.default_rng(5)
        metrics = np.sort(rng.uniform(size=400))
        truths = np.tile([0, 1], 200).astype(np.int8)
        w = Workload.from_arrays([f"p{i}" for i in range(400)], metrics, truths, 50)
        sol = base_search(w, SolverConfig(requirement=req(0.999, 0.999)), GroundTruthSource())
        assert sol.exhausted
        assert len(sol.partition.human_pairs) == len(w)
        assert precision(w, sol.labels) == 1.0 and recall(w, sol.labels) == 1.0


class TestAllSampling:
    def test_census_equals_brute_force(self):
        for tau, sigma, seed in [(8, 0.0, 0), (14, 0.1, 1), (18, 0.3, 2), (10, 0.1, 3)]:
            w = generate(SyntheticSpec(n_pairs=20 * 50, subset_size=50, tau=tau, sigma=sigma, seed=seed))
            cfg = SolverConfig(requirement=req(), per_subset_samples=50, seed=seed)  # census
            sol = all_sampling_search(w, cfg, GroundTruthSource())
            bi, bj, bsize = brute_force_bounds(w, 0.9, 0.9)
            assert (sol.partition.lower_subset, sol.partition.upper_subset) == (bi, bj)
            assert len(sol.partition.human_pairs) == bsize * 50

    def test_beta_zero_pushes_lower_bound_to_top(self):
        w = generate(SyntheticSpec(n_pairs=1000, subset_size=50, tau=14, sigma=0.0, seed=1))
        cfg = SolverConfig(requirement=req(beta=0.0), per_subset_samples=50, seed=0)
        sol = all_sampling_search(w, cfg, GroundTruthSource())
        assert sol.partition.lower_subset == w.num_subsets - 1

    def test_shrinks_toward_mixing_region_with_census(self):
        w = separable_workload(n=2000, subset_size=100)
        cfg = SolverConfig(requirement=req(theta=0.99), per_subset_samples=100, seed=0)
        sol = all_sampling_search(w, cfg, GroundTruthSource())
        assert len(sol.partition.human_pairs) <= 2 * 100
        check_solution_contract(w, sol)

    def test_sampling_cost_charged_once(self):
        w = generate(SyntheticSpec(n_pairs=2000, subset_size=100, tau=14, sigma=0.1, seed=2))
        src = GroundTruthSource()
        sol = all_sampling_search(w, SolverConfig(requirement=req(), per_subset_samples=10, seed=4), src)
        in_dh = len(sol.partition.human_pairs)
        sampled_outside = sum(
            1
            for pid in sol.human_labeled
            if not (sol.partition.human_pairs.start <= w.index_of(pid) < sol.partition.human_pairs.stop)
        )
        assert sol.human_cost == in_dh + sampled_outside
        assert src.asked_count == sol.human_cost


def brute_force_bounds(workload, alpha, beta):
    """Exhaustive minimal human region under exact certified conditions."""
    m = workload.num_subsets
    counts = np.add.reduceat(
        workload.truths.astype(int), np.arange(0, len(workload), workload.subset_size)
    )
    M = np.concatenate([[0], np.cumsum(counts)])
    N = np.concatenate([[0], np.cumsum(workload.subset_sizes)])
    best = None
    for i in range(m):
        rec = 1.0 if M[m] == 0 else (M[m] - M[i]) / M[m]
        if rec < beta:
            continue
        for j in range(i, m):
            mh = M[j + 1] - M[i]
            mplus = M[m] - M[j + 1]
            nplus = N[m] - N[j + 1]
            den = mh + nplus
            prec = 1.0 if den == 0 else (mh + mplus) / den
            if prec >= alpha:
                key = (j - i + 1, -i)
                if best is None or key < best[0]:
                    best = (key, (i, j))
    (size, neg_i), (bi, bj) = best
    return bi, bj, size


class TestPartialSampling:
    def test_degenerate_full_sampling_matches_all_sampling(self):
        w = separable_workload(n=1000, subset_size=50)
        for seed in range(3):
            cfg = SolverConfig(requirement=req(), sampling_range=(1.0, 1.0), per_subset_samples=20, seed=seed)
            a = all_sampling_search(w, cfg, GroundTruthSource())
            p = partial_sampling_search(w, cfg, GroundTruthSource())
            assert a.partition == p.partition
            assert a.human_cost == p.human_cost

    def test_smooth_workload_beats_all_sampling(self):
        w = generate(SyntheticSpec(n_pairs=100000, subset_size=200, tau=14, sigma=0.0, seed=3))
        cfg = SolverConfig(
            requirement=req(), sampling_range=(0.01, 0.05), per_subset_samples=40, seed=0
        )
        pa = partial_sampling_search(w, cfg, GroundTruthSource())
        al = all_sampling_search(w, cfg, GroundTruthSource())
        assert pa.human_cost < al.human_cost

    def test_meets_requirement_with_margin(self):
        w = generate(SyntheticSpec(n_pairs=20000, subset_size=200, tau=14, sigma=0.1, seed=7))
        for seed in range(4):
            cfg = SolverConfig(
                requirement=req(), sampling_range=(0.05, 0.25), per_subset_samples=40, seed=seed
            )
            sol = partial_sampling_search(w, cfg, GroundTruthSource())
            assert precision(w, sol.labels) >= 0.9
            assert recall(w, sol.labels) >= 0.9
            check_solution_contract(w, sol)


class TestHybrid:
    def test_never_larger_than_sampling_solution(self):
        w = generate(SyntheticSpec(n_pairs=20000, subset_size=200, tau=12, sigma=0.1, seed=4))
        for seed in range(4):
            cfg = SolverConfig(
                requirement=req(), sampling_range=(0.05, 0.25), per_subset_samples=40, seed=seed
            )
            s0 = partial_sampling_search(w, cfg, GroundTruthSource())
            hy = hybrid_search(w, cfg, GroundTruthSource())
            assert hy.human_cost <= s0.human_cost
            assert hy.partition.lower_subset >= s0.partition.lower_subset
            assert hy.partition.upper_subset <= s0.partition.upper_subset
            check_solution_contract(w, hy)

    def test_tracks_best_of_both_regimes(self):
        # steep curve: sampling wins; hybrid must not exceed it meaningfully
        w = generate(SyntheticSpec(n_pairs=20000, subset_size=200, tau=18, sigma=0.1, seed=5))
        cfg = SolverConfig(requirement=req(), sampling_range=(0.05, 0.25), per_subset_samples=40, seed=1)
        base = base_search(w, SolverConfig(requirement=req()), GroundTruthSource())
        samp = partial_sampling_search(w, cfg, GroundTruthSource())
        hybr = hybrid_search(w, cfg, GroundTruthSource())
        floor = min(base.human_cost, samp.human_cost)
        assert hybr.human_cost <= floor + 0.01 * len(w)

    def test_quality_met(self):
        w = generate(SyntheticSpec(n_pairs=20000, subset_size=200, tau=14, sigma=0.1, seed=6))
        for seed in range(4):
            cfg = SolverConfig(
                requirement=req(), sampling_range=(0.05, 0.25), per_subset_samples=40, seed=seed
            )
            sol = hybrid_search(w, cfg, GroundTruthSource())
            assert precision(w, sol.labels) >= 0.9
            assert recall(w, sol.labels) >= 0.9


class TestConfidenceUnderIrregularity:
    def test_sampling_solvers_hold_at_high_sigma(self):
        # even heavy proportion irregularity stays within the sampling
        # solvers' confidence budget (success rate >= theta)
        w = generate(SyntheticSpec(n_pairs=10000, subset_size=200, tau=14, sigma=0.4, seed=19))
        for solver in (partial_sampling_search, hybrid_search):
            ok = 0
            for seed in range(30):
                cfg = SolverConfig(
                    requirement=req(), sampling_range=(0.05, 0.3), per_subset_samples=40, seed=seed
                )
                sol = solver(w, cfg, GroundTruthSource())
                ok += precision(w, sol.labels) >= 0.9 and recall(w, sol.labels) >= 0.9
            assert ok / 30 >= 0.9, f"{solver.__name__}: {ok}/30"


class TestRequirementMonotonicity:
    def test_human_region_grows_with_requirements(self):
        w = generate(SyntheticSpec(n_pairs=10000, subset_size=200, tau=14, sigma=0.1, seed=8))
        for solver in (base_search, all_sampling_search, partial_sampling_search, hybrid_search):
            sizes = []
            for ab in (0.7, 0.8, 0.9, 0.95):
                cfg = SolverConfig(
                    requirement=req(ab, ab), sampling_range=(0.05, 0.25), per_subset_samples=40, seed=11
                )
                sol = solver(w, cfg, GroundTruthSource())
                sizes.append(len(sol.partition.human_pairs))
            assert sizes == sorted(sizes), f"{solver.__name__}: {sizes}"


class TestConfigValidation:
    def test_bounds(self):
        with pytest.raises(ValueError):
            SolverConfig(requirement=req(), base_window=2)
        with pytest.raises(ValueError):
            SolverConfig(requirement=req(), base_window=11)
        with pytest.raises(ValueError):
            SolverConfig(requirement=req(), sampling_range=(0.0, 0.5))
        with pytest.raises(ValueError):
            SolverConfig(requirement=req(), sampling_range=(0.6, 0.5))
        with pytest.raises(ValueError):
            SolverConfig(requirement=req(), epsilon=0.0)
