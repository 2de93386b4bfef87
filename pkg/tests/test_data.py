import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cpaudit.data import DataError, Dataset, OracleInfo, kfold, load_csv, split, write_csv
from cpaudit.rng import RngStream


def _write(tmp_path, text, name="d.csv"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


class TestLoadCsv:
    def test_basic_parse(self, tmp_path):
        path = _write(tmp_path, "a,b,target\n1,2,3\n4,5,6\n7,8,9\n")
        d = load_csv(path, "target")
        assert d.n == 3 and d.p == 2
        assert d.feature_names == ("a", "b")
        assert np.array_equal(d.y, [3.0, 6.0, 9.0])

    def test_nan_cell_rejected_with_location(self, tmp_path):
        path = _write(tmp_path, "a,target\n1,2\nNaN,4\n")
        with pytest.raises(DataError, match="row 2.*'a'"):
            load_csv(path, "target")

    def test_non_numeric_cell_named(self, tmp_path):
        path = _write(tmp_path, "a,target\n1,2\nfoo,4\n")
        with pytest.raises(DataError, match="non-numeric.*row 2"):
            load_csv(path, "target")

    def test_missing_file(self, tmp_path):
        with pytest.raises(DataError, match="no such file"):
            load_csv(tmp_path / "absent.csv", "target")

    def test_missing_target(self, tmp_path):
        path = _write(tmp_path, "a,b\n1,2\n")
        with pytest.raises(DataError, match="target column"):
            load_csv(path, "z")

    def test_roundtrip_identity_random_files(self, tmp_path):
        # independent oracle: write -> parse must reproduce the arrays exactly
        g = np.random.default_rng(0)
        for i in range(10):
            n, p = int(g.integers(1, 12)), int(g.integers(1, 5))
            d = Dataset(g.normal(size=(n, p)) * 10.0 ** g.integers(-8, 8), g.normal(size=n))
            path = tmp_path / f"r{i}.csv"
            write_csv(d, path)
            d2 = load_csv(path, "target")
            assert np.array_equal(d.X, d2.X)
            assert np.array_equal(d.y, d2.y)


class TestDatasetInvariants:
    def test_length_mismatch(self):
        with pytest.raises(DataError):
            Dataset(np.zeros((3, 2)), np.zeros(4))

    def test_nonfinite_rejected(self):
        with pytest.raises(DataError):
            Dataset(np.array([[np.inf]]), np.array([1.0]))
        with pytest.raises(DataError):
            Dataset(np.array([[1.0]]), np.array([np.nan]))

    def test_oracle_sigma_positive(self):
        with pytest.raises(DataError):
            OracleInfo(np.zeros(2), np.array([1.0, 0.0]), "standard-normal")

    def test_oracle_row_count(self):
        with pytest.raises(DataError):
            Dataset(np.zeros((3, 1)), np.zeros(3),
                    oracle=OracleInfo(np.zeros(2), np.ones(2), "standard-normal"))


class TestSplit:
    def test_even_sizes(self, rng):
        d = Dataset(np.zeros((10, 1)), np.zeros(10))
        plan = split(d, 0.5, rng)
        assert len(plan.train_indices) == 5 and len(plan.eval_indices) == 5

    def test_floor_rule(self, rng):
        d = Dataset(np.zeros((7, 1)), np.zeros(7))
        plan = split(d, 0.5, rng)
        assert len(plan.train_indices) == 3 and len(plan.eval_indices) == 4

    def test_deterministic(self):
        d = Dataset(np.zeros((20, 1)), np.zeros(20))
        a = split(d, 0.3, RngStream(5, 2))
        b = split(d, 0.3, RngStream(5, 2))
        assert np.array_equal(a.train_indices, b.train_indices)
        assert np.array_equal(a.eval_indices, b.eval_indices)

    def test_partition(self, rng):
        d = Dataset(np.zeros((13, 1)), np.zeros(13))
        plan = split(d, 0.4, rng)
        merged = np.sort(np.concatenate([plan.train_indices, plan.eval_indices]))
        assert np.array_equal(merged, np.arange(13))

    def test_empty_side_rejected(self, rng):
        d = Dataset(np.zeros((3, 1)), np.zeros(3))
        with pytest.raises(DataError):
            split(d, 0.05, rng)


class TestKfold:
    def test_equal_folds(self, rng):
        d = Dataset(np.zeros((10, 1)), np.zeros(10))
        folds = kfold(d, 5, rng)
        assert [len(f) for f in folds] == [2] * 5

    def test_balance_rule(self, rng):
        d = Dataset(np.zeros((11, 1)), np.zeros(11))
        sizes = sorted(len(f) for f in kfold(d, 5, rng))
        assert sizes == [2, 2, 2, 2, 3]

    def test_k_too_large(self, rng):
        d = Dataset(np.zeros((4, 1)), np.zeros(4))
        with pytest.raises(DataError):
            kfold(d, 5, rng)

    @settings(max_examples=60, deadline=None)
    @given(n=st.integers(2, 40), k=st.integers(2, 40), seed=st.integers(0, 2**32))
    def test_partition_property(self, n, k, seed):
        if k > n:
            k = n
        d = Dataset(np.zeros((n, 1)), np.zeros(n))
        folds = kfold(d, k, RngStream(seed))
        merged = np.sort(np.concatenate(folds))
        assert np.array_equal(merged, np.arange(n))
        sizes = [len(f) for f in folds]
        assert max(sizes) - min(sizes) <= 1
