import numpy as np
import pytest

from flowsentry.sampling import partition, per_group_sample, stratified_partition


class TestPartition:
    def test_exact_fraction(self):
        train, test = partition(1000, 0.7, seed=42)
        assert len(train) == 700
        assert len(test) == 300

    def test_half_rounds_up(self):
        train, test = partition(5, 0.5, seed=0)
        assert len(train) == 3 and len(test) == 2

    def test_disjoint_and_complete(self):
        train, test = partition(137, 0.7, seed=9)
        merged = np.concatenate([train, test])
        assert sorted(merged.tolist()) == list(range(137))

    def test_deterministic(self):
        a = partition(500, 0.7, seed=42)
        b = partition(500, 0.7, seed=42)
        assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])

    def test_seed_changes_selection(self):
        a, _ = partition(500, 0.7, seed=1)
        b, _ = partition(500, 0.7, seed=2)
        assert not np.array_equal(a, b)

    def test_indices_sorted(self):
        train, test = partition(100, 0.3, seed=5)
        assert np.all(np.diff(train) > 0)
        assert np.all(np.diff(test) > 0)


class TestStratifiedPartition:
    def test_per_class_arithmetic(self):
        labels = ["Normal"] * 800 + ["DoS"] * 200
        train, test = stratified_partition(labels, 0.7, seed=3)
        train_labels = [labels[i] for i in train]
        assert train_labels.count("Normal") == 560
        assert train_labels.count("DoS") == 140
        assert len(test) == 300

    def test_every_index_once(self):
        labels = ["a"] * 40 + ["b"] * 25 + ["c"] * 35
        train, test = stratified_partition(labels, 0.6, seed=7)
        assert sorted(np.concatenate([train, test]).tolist()) == list(range(100))

    def test_deterministic(self):
        labels = (["x"] * 50 + ["y"] * 50) * 3
        a = stratified_partition(labels, 0.7, seed=21)
        b = stratified_partition(labels, 0.7, seed=21)
        assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])


class TestPerGroupSample:
    def test_small_group_kept_whole(self):
        labels = ["rare"] * 36 + ["common"] * 500
        idx = per_group_sample(labels, cap=1000, seed=0)
        kept = [labels[i] for i in idx]
        assert kept.count("rare") == 36
        assert kept.count("common") == 500

    def test_cap_enforced(self):
        labels = ["big"] * 50000
        idx = per_group_sample(labels, cap=1000, seed=0)
        assert len(idx) == 1000
        assert len(set(idx.tolist())) == 1000

    def test_cap_above_everything_is_identity(self):
        labels = ["a"] * 10 + ["b"] * 20
        idx = per_group_sample(labels, cap=10_000, seed=0)
        assert sorted(idx.tolist()) == list(range(30))

    def test_deterministic(self):
        labels = ["a"] * 100 + ["b"] * 100
        a = per_group_sample(labels, cap=30, seed=4)
        b = per_group_sample(labels, cap=30, seed=4)
        assert np.array_equal(a, b)

    def test_rejects_nonpositive_cap(self):
        with pytest.raises(ValueError):
            per_group_sample(["a"], cap=0, seed=0)
