"""Synthetic data generation, Dirichlet partitioning, and CSV round trips."""

import logging

import numpy as np
import pytest

from fedzge.data import Dataset, PartitionSpec, dirichlet_partition, load_csv, make_synthetic, save_csv
from fedzge.errors import ConfigError, DataFormatError, ShapeError


class TestDataset:
    def test_rejects_empty(self):
        with pytest.raises(ShapeError):
            Dataset(np.zeros((0, 2)), np.zeros(0, dtype=int), 2)

    def test_rejects_bad_labels(self):
        with pytest.raises(ShapeError):
            Dataset(np.zeros((2, 2)), np.array([0, 1]), 2)
        with pytest.raises(ShapeError):
            Dataset(np.zeros((2, 2)), np.array([1, 3]), 2)

    def test_rejects_length_mismatch(self):
        with pytest.raises(ShapeError):
            Dataset(np.zeros((3, 2)), np.array([1, 2]), 2)


class TestMakeSynthetic:
    def test_counts_balanced(self):
        ds = make_synthetic(2, 2, 10, 0.3, seed=0)
        assert ds.size == 20
        assert ds.dim == 2
        counts = {c: int((ds.labels == c).sum()) for c in (1, 2)}
        assert counts == {1: 10, 2: 10}

    def test_zero_spread_collapses_to_means(self):
        ds = make_synthetic(3, 4, 5, 0.0, seed=1)
        for c in (1, 2, 3):
            rows = ds.samples[ds.labels == c]
            assert np.ptp(rows, axis=0).max() == 0.0

    def test_distinct_class_means(self):
        ds = make_synthetic(4, 4, 3, 0.0, seed=2)
        means = {tuple(ds.samples[ds.labels == c][0]) for c in range(1, 5)}
        assert len(means) == 4

    def test_range_clamped(self):
        ds = make_synthetic(2, 3, 50, 2.0, seed=3)
        assert ds.samples.min() >= -1.0
        assert ds.samples.max() <= 1.0

    def test_deterministic_under_seed(self):
        a = make_synthetic(3, 5, 20, 0.4, seed=7)
        b = make_synthetic(3, 5, 20, 0.4, seed=7)
        assert np.array_equal(a.samples, b.samples)
        assert np.array_equal(a.labels, b.labels)
        c = make_synthetic(3, 5, 20, 0.4, seed=8)
        assert not np.array_equal(a.samples, c.samples)

    def test_degenerate_arguments(self):
        with pytest.raises(ConfigError):
            make_synthetic(1, 4, 5, 0.1, seed=0)
        with pytest.raises(ConfigError):
            make_synthetic(3, 1, 5, 0.1, seed=0)
        with pytest.raises(ConfigError):
            make_synthetic(2, 4, 0, 0.1, seed=0)
        with pytest.raises(ConfigError):
            make_synthetic(2, 4, 5, -0.1, seed=0)
        with pytest.raises(ConfigError):
            # 20 classes need 5 lattice bits but only 2 feature dims exist
            make_synthetic(20, 2, 5, 0.1, seed=0)


def multiset(ds: Dataset) -> set:
    return {(int(l),) + tuple(row) for l, row in zip(ds.labels, ds.samples)}


class TestDirichletPartition:
    def test_conservation_any_alpha(self):
        ds = make_synthetic(4, 4, 25, 0.3, seed=0)
        for alpha in (0.1, 1.0, 100.0):
            shards = dirichlet_partition(ds, PartitionSpec(5, alpha, seed=1))
            assert sum(s.size for s in shards) == ds.size
            merged = set()
            for s in shards:
                merged |= multiset(s)
            assert merged == multiset(ds)

    def test_per_class_counts_conserved(self):
        ds = make_synthetic(3, 4, 30, 0.3, seed=2)
        shards = dirichlet_partition(ds, PartitionSpec(4, 0.5, seed=3))
        for c in (1, 2, 3):
            total = sum(int((s.labels == c).sum()) for s in shards)
            assert total == 30

    def test_concentration_limit_balances(self):
        ds = make_synthetic(2, 4, 50, 0.3, seed=4)
        shards = dirichlet_partition(ds, PartitionSpec(2, 1e9, seed=5))
        for c in (1, 2):
            counts = [int((s.labels == c).sum()) for s in shards]
            assert abs(counts[0] - counts[1]) <= 1

    def test_every_client_nonempty_even_at_tiny_alpha(self):
        ds = make_synthetic(2, 4, 20, 0.3, seed=6)
        for seed in range(10):
            shards = dirichlet_partition(ds, PartitionSpec(8, 0.05, seed=seed))
            assert all(s.size >= 1 for s in shards)

    def test_reassignment_logged(self, caplog):
        ds = make_synthetic(2, 4, 3, 0.3, seed=7)
        with caplog.at_level(logging.WARNING, logger="fedzge.data"):
            for seed in range(40):
                dirichlet_partition(ds, PartitionSpec(5, 0.05, seed=seed))
        assert any("reassigned" in r.message for r in caplog.records)

    def test_heterogeneity_grows_as_alpha_shrinks(self):
        # Monte-Carlo oracle: mean max-class share over 20 seeds
        ds = make_synthetic(10, 6, 40, 0.3, seed=8)

        def mean_max_share(alpha):
            shares = []
            for seed in range(20):
                shards = dirichlet_partition(ds, PartitionSpec(10, alpha, seed=seed))
                for s in shards:
                    counts = np.bincount(s.labels, minlength=11)[1:]
                    shares.append(counts.max() / s.size)
            return float(np.mean(shares))

        assert mean_max_share(0.1) > mean_max_share(1e9)

    def test_deterministic_under_seed(self):
        ds = make_synthetic(3, 4, 20, 0.3, seed=9)
        a = dirichlet_partition(ds, PartitionSpec(4, 0.3, seed=11))
        b = dirichlet_partition(ds, PartitionSpec(4, 0.3, seed=11))
        for s, t in zip(a, b):
            assert np.array_equal(s.samples, t.samples)
            assert np.array_equal(s.labels, t.labels)

    def test_proportions_average_uniform(self):
        # empirical mean of each client's share tends to 1/K
        ds = make_synthetic(2, 4, 200, 0.3, seed=10)
        K = 4
        shares = np.zeros(K)
        n_seeds = 60
        for seed in range(n_seeds):
            shards = dirichlet_partition(ds, PartitionSpec(K, 1.0, seed=seed))
            shares += np.array([s.size for s in shards]) / ds.size
        shares /= n_seeds
        # Dir(1) share std is ~0.194; 3 sigma over 60 seeds
        bound = 3 * 0.194 / np.sqrt(n_seeds)
        assert np.abs(shares - 1 / K).max() < bound

    def test_more_clients_than_samples_rejected(self):
        ds = make_synthetic(2, 4, 2, 0.3, seed=12)
        with pytest.raises(ConfigError):
            dirichlet_partition(ds, PartitionSpec(10, 1.0, seed=0))

    def test_spec_validation(self):
        with pytest.raises(ConfigError):
            PartitionSpec(0, 1.0, seed=0)
        with pytest.raises(ConfigError):
            PartitionSpec(2, 0.0, seed=0)


class TestCsv:
    def test_round_trip(self, tmp_path):
        ds = make_synthetic(3, 4, 10, 0.3, seed=0)
        path = str(tmp_path / "ds.csv")
        save_csv(ds, path)
        back = load_csv(path)
        assert np.array_equal(back.labels, ds.labels)
        assert np.abs(back.samples - ds.samples).max() <= 1e-9
        assert back.num_classes == ds.num_classes

    def test_empty_file(self, tmp_path):
        path = tmp_path / "empty.csv"
        path.write_text("")
        with pytest.raises(DataFormatError, match="no rows"):
            load_csv(str(path))

    def test_header_only(self, tmp_path):
        path = tmp_path / "header.csv"
        path.write_text("label,f0,f1\n")
        with pytest.raises(DataFormatError, match="no rows"):
            load_csv(str(path))

    def test_short_row_names_line(self, tmp_path):
        path = tmp_path / "short.csv"
        path.write_text("label,f0,f1\n1,0.5,0.5\n2,0.25\n")
        with pytest.raises(DataFormatError, match="line 3"):
            load_csv(str(path))

    def test_bad_label_names_line(self, tmp_path):
        path = tmp_path / "badlabel.csv"
        path.write_text("label,f0\nx,0.5\n")
        with pytest.raises(DataFormatError, match="line 2.*label"):
            load_csv(str(path))

    def test_nonpositive_label_rejected(self, tmp_path):
        path = tmp_path / "zerolabel.csv"
        path.write_text("label,f0\n0,0.5\n")
        with pytest.raises(DataFormatError, match="label"):
            load_csv(str(path))

    def test_malformed_header(self, tmp_path):
        path = tmp_path / "badheader.csv"
        path.write_text("labels,f0\n1,0.5\n")
        with pytest.raises(DataFormatError, match="header"):
            load_csv(str(path))

    def test_malformed_value_names_line(self, tmp_path):
        path = tmp_path / "badval.csv"
        path.write_text("label,f0\n1,abc\n")
        with pytest.raises(DataFormatError, match="line 2"):
            load_csv(str(path))
