import numpy as np
import pytest

from pairtriage.model import MATCH, UNMATCH, Workload
from pairtriage.oracle import GroundTruthSource
from pairtriage.stratified import (
    CountInterval,
    StratumSample,
    count_interval,
    draw_sample,
    sample_all_subsets,
    split_confidence,
    stratified_mean_std,
    subset_seed,
    t_quantile,
)


def planted_workload(proportions, subset_size=100, seed=0):
    """Strata with exactly round(n*p) matches each, shuffled within the stratum."""
    rng = np.random.default_rng(seed)
    metrics, truths = [], []
    for s, p in enumerate(proportions):
        lo, hi = s / len(proportions), (s + 1) / len(proportions)
        metrics.extend(np.sort(rng.uniform(lo, hi - 1e-9, size=subset_size)))
        t = np.zeros(subset_size, dtype=np.int8)
        t[: round(subset_size * p)] = 1
        rng.shuffle(t)
        truths.extend(t)
    ids = [f"p{i:05d}" for i in range(len(metrics))]
    return Workload.from_arrays(ids, np.array(metrics), np.array(truths, dtype=np.int8), subset_size)


class TestDrawSample:
    def test_census_recovers_exact_proportion(self):
        w = planted_workload([0.3, 0.7])
        src = GroundTruthSource()
        s = draw_sample(w, 0, 100, 1, src)
        assert s.is_census
        assert s.proportion == pytest.approx(0.3)

    def test_fixed_seed_reproducible(self):
        w = planted_workload([0.4])
        a = draw_sample(w, 0, 15, 42, GroundTruthSource())
        b = draw_sample(w, 0, 15, 42, GroundTruthSource())
        assert a == b

    def test_all_match_stratum(self):
        w = planted_workload([1.0])
        for k in (1, 5, 50):
            s = draw_sample(w, 0, k, 3, GroundTruthSource())
            assert s.proportion == 1.0

    def test_k_bounds_enforced(self):
        w = planted_workload([0.5])
        with pytest.raises(ValueError):
            draw_sample(w, 0, 101, 0, GroundTruthSource())
        with pytest.raises(ValueError):
            draw_sample(w, 0, 0, 0, GroundTruthSource())

    def test_cost_charged_through_source(self):
        w = planted_workload([0.5])
        src = GroundTruthSource()
        draw_sample(w, 0, 10, 7, src)
        assert src.asked_count == 10


class TestMeanStd:
    def test_all_zero_proportions(self):
        samples = [StratumSample(i, 100, 10, 0) for i in range(3)]
        mean, sd = stratified_mean_std(samples)
        assert mean == 0.0 and sd == 0.0

    def test_census_gives_zero_std(self):
        samples = [StratumSample(0, 50, 50, 20), StratumSample(1, 50, 50, 5)]
        mean, sd = stratified_mean_std(samples)
        assert mean == pytest.approx(0.25)
        assert sd == 0.0

    def test_two_stratum_frozen_value(self):
        # independent evaluation of the estimator (verified against the exact
        # hypergeometric sampling variance): mean 0.3, sigma 0.1
        samples = [StratumSample(0, 100, 10, 2), StratumSample(1, 100, 10, 4)]
        mean, sd = stratified_mean_std(samples)
        assert mean == pytest.approx(0.3)
        assert sd == pytest.approx(0.1, abs=1e-12)

    def test_small_sample_rejected(self):
        with pytest.raises(ValueError):
            stratified_mean_std([StratumSample(0, 100, 1, 0)])
        # a census of a single-pair stratum is fine
        mean, sd = stratified_mean_std([StratumSample(0, 1, 1, 1)])
        assert (mean, sd) == (1.0, 0.0)


class TestTQuantile:
    def test_reference_values(self):
        assert t_quantile(0.9, np.inf) == pytest.approx(1.6449, abs=1e-4)
        assert t_quantile(0.95, 10) == pytest.approx(2.2281, abs=1e-4)

    def test_cap_keeps_value_finite(self):
        assert np.isfinite(t_quantile(1.0, 5))
        assert t_quantile(0.99999, 5) == t_quantile(0.9999, 5)

    def test_rejects_bad_confidence(self):
        with pytest.raises(ValueError):
            t_quantile(0.0, 5)
        with pytest.raises(ValueError):
            t_quantile(1.5, 5)


class TestCountInterval:
    def test_census_degenerate(self):
        samples = [StratumSample(0, 40, 40, 10), StratumSample(1, 40, 40, 30)]
        ci = count_interval(samples, 0.9)
        assert ci.lower == ci.upper == pytest.approx(40.0)

    def test_interval_formula(self):
        samples = [StratumSample(0, 100, 10, 2), StratumSample(1, 100, 10, 4)]
        ci = count_interval(samples, 0.9)
        mean, sd = 0.3, 0.1
        t = t_quantile(0.9, 18)  # dof = 20 samples - 2 strata
        assert ci.lower == pytest.approx(max(0.0, 200 * (mean - t * sd)))
        assert ci.upper == pytest.approx(min(200.0, 200 * (mean + t * sd)))

    def test_clamped_at_zero(self):
        samples = [StratumSample(0, 1000, 5, 1)]
        ci = count_interval(samples, 0.99)
        assert ci.lower == 0.0

    def test_empty_union(self):
        ci = count_interval([], 0.9)
        assert (ci.lower, ci.upper) == (0.0, 0.0)


class TestSplitConfidence:
    def test_values(self):
        assert split_confidence(0.81) == pytest.approx(0.9)
        assert split_confidence(0.9) == pytest.approx(0.94868, abs=1e-5)
        assert split_confidence(1.0) == 1.0

    def test_rejects_out_of_range(self):
        with pytest.raises(ValueError):
            split_confidence(0.0)


class TestCoverage:
    def test_interval_coverage_on_planted_strata(self):
        # smaller sibling of the acceptance check: coverage within 3 pp of target
        proportions = np.linspace(0.15, 0.85, 8)
        w = planted_workload(proportions, subset_size=100, seed=5)
        true_count = int(w.truths.sum())
        theta, hits, reps = 0.9, 0, 500
        rng = np.random.default_rng(11)
        for _ in range(reps):
            src = GroundTruthSource()
            samples = [draw_sample(w, i, 20, rng, src) for i in range(w.num_subsets)]
            ci = count_interval(samples, theta)
            hits += ci.lower <= true_count <= ci.upper
        assert hits / reps >= theta - 0.03

    def test_width_shrinks_with_sample_size(self):
        w = planted_workload([0.3, 0.5, 0.7], subset_size=200, seed=2)
        rng = np.random.default_rng(4)
        widths = []
        for k in (10, 40, 160):
            trial = []
            for _ in range(30):
                samples = [draw_sample(w, i, k, rng, GroundTruthSource()) for i in range(3)]
                ci = count_interval(samples, 0.9)
                trial.append(ci.upper - ci.lower)
            widths.append(np.mean(trial))
        assert widths[0] > widths[1] > widths[2]


class TestHelpers:
    def test_subset_seed_stable(self):
        a = np.random.default_rng(subset_seed(7, 3)).integers(0, 1 << 30, 4)
        b = np.random.default_rng(subset_seed(7, 3)).integers(0, 1 << 30, 4)
        c = np.random.default_rng(subset_seed(7, 4)).integers(0, 1 << 30, 4)
        assert np.array_equal(a, b)
        assert not np.array_equal(a, c)

    def test_sample_all_subsets_shape(self):
        w = planted_workload([0.2, 0.5, 0.9], subset_size=50)
        src = GroundTruthSource()
        samples = sample_all_subsets(w, 10, 3, src)
        assert [s.subset for s in samples] == [0, 1, 2]
        assert src.asked_count == 30
        again = sample_all_subsets(w, 10, 3, GroundTruthSource())
        assert samples == again  # per-subset seeds are order independent
