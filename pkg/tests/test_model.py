import numpy as np
import pytest

from pairtriage.model import (
    HUMAN,
    MACHINE,
    MATCH,
    UNMATCH,
    ContractViolation,
    DegeneratePartitionWarning,
    InstancePair,
    LabelAssignment,
    Partition,
    QualityRequirement,
    Workload,
    observed_proportion,
    precision,
    precision_lower_bound,
    recall,
    recall_lower_bound,
)


def make_workload(metrics, truths=None, subset_size=2):
    ids = [f"p{i:04d}" for i in range(len(metrics))]
    t = None if truths is None else np.array(truths, dtype=np.int8)
    return Workload.from_arrays(ids, np.array(metrics, dtype=float), t, subset_size=subset_size)


def full_assignment(workload, labels, source=HUMAN):
    lab = {pid: labels[i] for i, pid in enumerate(workload.ids)}
    src = {pid: source for pid in workload.ids}
    return LabelAssignment(lab, src)


class TestWorkload:
    def test_sorted_and_subset_geometry(self):
        w = make_workload([0.9, 0.1, 0.5, 0.3, 0.7], subset_size=2)
        assert list(w.metrics) == sorted(w.metrics)
        assert w.num_subsets == 3
        assert w.subset_bounds(0) == (0, 2)
        assert w.subset_bounds(2) == (4, 5)  # last subset may be short
        assert w.subset_len(2) == 1
        sizes = w.subset_sizes
        assert list(sizes) == [2, 2, 1]

    def test_tie_break_by_id_is_deterministic(self):
        ids = ["b", "a", "c"]
        w = Workload.from_arrays(ids, np.array([0.5, 0.5, 0.5]), subset_size=2)
        assert w.ids == ["a", "b", "c"]

    def test_metric_ordering_across_subsets(self):
        rng = np.random.default_rng(7)
        w = make_workload(rng.uniform(size=103), subset_size=10)
        for i in range(w.num_subsets - 1):
            lo, hi = w.subset_bounds(i)
            lo2, hi2 = w.subset_bounds(i + 1)
            assert w.metrics[lo:hi].max() <= w.metrics[lo2:hi2].min()

    def test_rejects_bad_metric_and_duplicate_ids(self):
        with pytest.raises(ValueError):
            make_workload([0.2, 1.5])
        with pytest.raises(ValueError):
            Workload.from_arrays(["a", "a"], np.array([0.1, 0.2]))

    def test_empty_workload_allowed_but_has_no_median(self):
        w = Workload([])
        assert len(w) == 0 and w.num_subsets == 0
        with pytest.raises(ValueError):
            _ = w.median_subset

    def test_csv_roundtrip(self, tmp_path):
        w = make_workload([0.9, 0.1, 0.5], truths=[1, 0, 1], subset_size=2)
        path = tmp_path / "wl.csv"
        w.to_csv(str(path))
        back = Workload.from_csv(str(path), subset_size=2)
        assert back.ids == w.ids
        assert np.array_equal(back.metrics, w.metrics)
        assert np.array_equal(back.truths, w.truths)

    def test_csv_rejects_malformed_rows(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("id,metric,truth\nx,0.5,2\n", encoding="utf-8")
        with pytest.raises(ValueError, match="bad.csv:2"):
            Workload.from_csv(str(path))

    def test_median_subset_and_metric_lookup(self):
        w = make_workload(np.linspace(0, 1, 10), subset_size=3)
        assert w.median_subset == (10 // 2) // 3
        assert w.subset_containing_metric(0.0) == 0
        assert w.subset_containing_metric(1.0) == w.num_subsets - 1


class TestPartition:
    def test_partition_completeness_random(self):
        rng = np.random.default_rng(11)
        w = make_workload(rng.uniform(size=57), subset_size=5)
        m = w.num_subsets
        for _ in range(50):
            lo = int(rng.integers(0, m))
            hi = int(rng.integers(lo, m))
            p = Partition.from_subset_bounds(w, lo, hi)
            total = sum(p.region_sizes())
            assert total == len(w)
            assert p.minus_pairs.stop == p.human_pairs.start
            assert p.human_pairs.stop == p.plus_pairs.start

    def test_metric_ordering_across_regions(self):
        rng = np.random.default_rng(3)
        w = make_workload(rng.uniform(size=40), subset_size=4)
        p = Partition.from_subset_bounds(w, 2, 5)
        mm = w.metrics
        if len(p.minus_pairs) and len(p.human_pairs):
            assert mm[p.minus_pairs].max() <= mm[p.human_pairs].min()
        if len(p.human_pairs) and len(p.plus_pairs):
            assert mm[p.human_pairs].max() <= mm[p.plus_pairs].min()

    def test_empty_human_region(self):
        w = make_workload(np.linspace(0, 1, 12), subset_size=4)
        p = Partition.no_human(w, 2)
        assert p.human_is_empty
        assert p.lower_subset is None and p.upper_subset is None
        assert len(p.minus_pairs) == 8 and len(p.plus_pairs) == 4

    def test_all_human_gives_perfect_quality(self):
        truths = [0, 1, 0, 1, 1, 0]
        w = make_workload([0.1, 0.3, 0.4, 0.6, 0.8, 0.9], truths=truths, subset_size=2)
        labels = full_assignment(w, [MATCH if t else UNMATCH for t in w.truths])
        assert precision(w, labels) == 1.0
        assert recall(w, labels) == 1.0

    def test_invalid_bounds_rejected(self):
        w = make_workload(np.linspace(0, 1, 8), subset_size=4)
        with pytest.raises(ValueError):
            Partition.from_subset_bounds(w, 1, 0)
        with pytest.raises(ValueError):
            Partition.from_subset_bounds(w, 0, 2)


class TestQualityRequirement:
    def test_validation(self):
        QualityRequirement(0.9, 0.9, 0.9)
        with pytest.raises(ValueError):
            QualityRequirement(1.1, 0.9, 0.9)
        with pytest.raises(ValueError):
            QualityRequirement(0.9, -0.1, 0.9)
        with pytest.raises(ValueError):
            QualityRequirement(0.9, 0.9, 1.0)


class TestMetrics:
    def test_perfect_labeling(self):
        w = make_workload([0.2, 0.4, 0.6, 0.8], truths=[0, 1, 0, 1])
        labels = full_assignment(w, [UNMATCH, MATCH, UNMATCH, MATCH])
        assert precision(w, labels) == 1.0
        assert recall(w, labels) == 1.0

    def test_counted_four_pair_instance(self):
        # exhaustive count: pairs t0..t3 with truth m,m,m,u; labels m,m,u,m
        # -> tp=2 (t0,t1), fp=1 (t3), fn=1 (t2)
        w = make_workload([0.1, 0.3, 0.5, 0.7], truths=[1, 1, 1, 0])
        labels = full_assignment(w, [MATCH, MATCH, UNMATCH, MATCH])
        assert precision(w, labels) == pytest.approx(2 / 3)
        assert recall(w, labels) == pytest.approx(2 / 3)

    def test_degenerate_conventions(self):
        w = make_workload([0.2, 0.6], truths=[1, 1])
        labels = full_assignment(w, [UNMATCH, UNMATCH])
        with pytest.warns(DegeneratePartitionWarning):
            assert precision(w, labels) == 1.0
        assert recall(w, labels) == 0.0

        w2 = make_workload([0.2, 0.6], truths=[0, 0])
        labels2 = full_assignment(w2, [UNMATCH, UNMATCH])
        with pytest.warns(DegeneratePartitionWarning):
            assert recall(w2, labels2) == 1.0

    def test_missing_truth_or_label_raises_with_pair_id(self):
        w = make_workload([0.2, 0.6], truths=[1, -1])
        labels = full_assignment(w, [MATCH, MATCH])
        with pytest.raises(ContractViolation, match="p0001"):
            precision(w, labels)

        w2 = make_workload([0.2, 0.6], truths=[1, 0])
        partial = LabelAssignment({"p0000": MATCH}, {"p0000": HUMAN})
        with pytest.raises(ContractViolation, match="p0001"):
            recall(w2, partial)


class TestBounds:
    def test_precision_bound_substitution(self):
        assert precision_lower_bound(200, 100, 180, 50) == pytest.approx(230 / 300)

    def test_precision_bound_edges(self):
        assert precision_lower_bound(0, 100, 0, 40) == pytest.approx(0.4)
        assert precision_lower_bound(50, 10, 50, 10) == 1.0
        with pytest.warns(DegeneratePartitionWarning):
            assert precision_lower_bound(0, 0, 0, 0) == 1.0
        with pytest.raises(ValueError):
            precision_lower_bound(10, 5, 11, 0)

    def test_recall_bound_substitution(self):
        assert recall_lower_bound(180, 50, 20) == pytest.approx(0.92)
        assert recall_lower_bound(7, 3, 0) == 1.0
        with pytest.warns(DegeneratePartitionWarning):
            assert recall_lower_bound(0, 0, 0) == 1.0

    def test_bound_monotonicity_random_tuples(self):
        # finite differences over random count tuples
        rng = np.random.default_rng(23)
        for _ in range(200):
            n_plus = int(rng.integers(1, 500))
            n_h = int(rng.integers(1, 500))
            mp = int(rng.integers(0, n_plus))
            mh = int(rng.integers(0, n_h))
            mu = int(rng.integers(0, 500))
            p0 = precision_lower_bound(n_plus, n_h, mp, mh)
            assert precision_lower_bound(n_plus, n_h, min(mp + 1, n_plus), mh) >= p0
            assert precision_lower_bound(n_plus, n_h, mp, min(mh + 1, n_h)) >= p0
            r0 = recall_lower_bound(mp, mh, mu)
            assert recall_lower_bound(mp + 1, mh, mu) >= r0
            assert recall_lower_bound(mp, mh + 1, mu) >= r0
            assert recall_lower_bound(mp, mh, mu + 1) <= r0


class TestObservedProportion:
    def test_hand_counts(self):
        truths = [1, 1, 1, 0, 0, 0, 0, 0]
        w = make_workload(np.linspace(0, 1, 8), truths=truths, subset_size=4)
        labels = full_assignment(w, [MATCH] * 3 + [UNMATCH] * 5)
        assert observed_proportion(w, labels, range(0, 2)) == pytest.approx(3 / 8)
        assert observed_proportion(w, labels, range(1, 2)) == 0.0

    def test_all_match_and_all_unmatch(self):
        w = make_workload([0.1, 0.2, 0.3, 0.4], truths=[1, 1, 1, 1], subset_size=2)
        labels = full_assignment(w, [MATCH] * 4)
        assert observed_proportion(w, labels, range(0, 2)) == 1.0
        labels2 = full_assignment(w, [UNMATCH] * 4)
        assert observed_proportion(w, labels2, range(0, 2)) == 0.0

    def test_errors(self):
        w = make_workload([0.1, 0.2], truths=[1, 0], subset_size=2)
        labels = full_assignment(w, [MATCH, UNMATCH])
        with pytest.raises(ValueError):
            observed_proportion(w, labels, range(0, 0))
        machine = full_assignment(w, [MATCH, UNMATCH], source=MACHINE)
        with pytest.raises(ContractViolation):
            observed_proportion(w, machine, range(0, 1))
