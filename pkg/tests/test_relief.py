import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import brute_force_relief

from catastrank.dataset import Dataset
from catastrank.relief import (
    ReliefError,
    diff,
    equal_frequency_bins,
    export_weights,
    load_weights_order,
    relief_rank,
)


@pytest.fixture
def toy():
    """Feature 1 separates the two outcome bins, feature 2 is constant."""
    X = np.array([[0.0, 0.5], [0.1, 0.5], [0.9, 0.5], [1.0, 0.5]])
    y = np.array([0.0, 0.1, 0.9, 1.0])
    return Dataset.from_arrays(X, y)


class TestDiff:
    def test_identical(self):
        assert diff(0.37, 0.37, 1.0) == 0.0

    def test_range_endpoints(self):
        assert diff(1.0, 0.0, 1.0) == 1.0

    def test_scaled(self):
        assert diff(0.8, 0.3, 0.5) == pytest.approx(1.0, abs=1e-15)

    def test_bad_unit(self):
        with pytest.raises(ReliefError):
            diff(1.0, 0.0, 0.0)


class TestBins:
    def test_equal_shares(self):
        labels = equal_frequency_bins([5.0, 1.0, 3.0, 2.0, 4.0, 0.0], 3)
        np.testing.assert_array_equal(labels, [2, 0, 1, 1, 2, 0])

    def test_ties_split_by_index(self):
        np.testing.assert_array_equal(equal_frequency_bins([1.0] * 4, 2), [0, 0, 1, 1])

    @given(st.lists(st.floats(-10, 10), min_size=4, max_size=60), st.integers(2, 6))
    def test_counts_balanced_and_monotone(self, y, k):
        labels = equal_frequency_bins(y, k)
        counts = np.bincount(labels, minlength=k)
        assert counts.max() - counts.min() <= 1
        order = np.argsort(y, kind="stable")
        assert np.all(np.diff(labels[order]) >= 0)


class TestReliefRank:
    def test_hand_computed_toy(self, toy):
        # per instance (-hit^2 + miss^2): 0.80, 0.63, 0.63, 0.80 -> mean 0.715
        rw = relief_rank(toy, "all")
        assert rw.weight_of(1) == pytest.approx(0.715, abs=1e-12)
        assert rw.weight_of(2) == 0.0
        assert rw.m == 4
        assert list(rw.relevant) == [True, False]
        assert rw.order() == [1, 2]

    def test_constant_feature_weight_zero(self):
        rng = np.random.default_rng(0)
        X = rng.uniform(size=(30, 3))
        X[:, 2] = 7.0
        rw = relief_rank(Dataset.from_arrays(X, rng.uniform(size=30)))
        assert rw.weight_of(3) == 0.0

    def test_noise_weights_can_be_negative(self):
        rng = np.random.default_rng(1)
        rw = relief_rank(Dataset.from_arrays(rng.uniform(size=(40, 6)), rng.uniform(size=40)))
        assert rw.w.min() < 0

    @settings(max_examples=40, deadline=None)
    @given(st.integers(4, 20), st.integers(1, 5), st.integers(2, 4), st.integers(0, 2**32 - 1))
    def test_matches_brute_force(self, n, p, bins, seed):
        rng = np.random.default_rng(seed)
        ds = Dataset.from_arrays(rng.uniform(size=(n, p)), rng.uniform(size=n))
        if n <= bins:  # every bin a singleton; covered by test_errors
            return
        got = relief_rank(ds, "all", class_bins=bins).w
        want = brute_force_relief(ds.X.tolist(), ds.y.tolist(), bins)
        np.testing.assert_array_equal(got, want)

    def test_row_permutation_invariance(self):
        rng = np.random.default_rng(2)
        X, y = rng.uniform(size=(25, 4)), rng.uniform(size=25)
        perm = rng.permutation(25)
        a = relief_rank(Dataset.from_arrays(X, y), "all").w
        b = relief_rank(Dataset.from_arrays(X[perm], y[perm]), "all").w
        np.testing.assert_allclose(a, b, rtol=0, atol=1e-14)

    def test_sampled_is_reproducible(self):
        rng = np.random.default_rng(3)
        ds = Dataset.from_arrays(rng.uniform(size=(50, 3)), rng.uniform(size=50))
        a = relief_rank(ds, 10, seed=5)
        b = relief_rank(ds, 10, seed=5)
        np.testing.assert_array_equal(a.w, b.w)
        assert a.m == 10
        assert not np.array_equal(a.w, relief_rank(ds, 10, seed=6).w)

    def test_oversampling_with_replacement(self):
        rng = np.random.default_rng(4)
        ds = Dataset.from_arrays(rng.uniform(size=(12, 2)), rng.uniform(size=12))
        assert relief_rank(ds, 40, seed=1).m == 40

    def test_m_equal_n_is_exhaustive(self, toy):
        np.testing.assert_array_equal(relief_rank(toy, 4).w, relief_rank(toy, "all").w)

    def test_singleton_bins_are_skipped(self):
        # 5 samples in 3 bins -> labels 0,0,1,1,2; the last sample has no hit
        X = np.array([[0.0], [0.2], [0.5], [0.6], [1.0]])
        y = np.array([0.0, 1.0, 2.0, 3.0, 4.0])
        rw = relief_rank(Dataset.from_arrays(X, y), "all", class_bins=3)
        assert rw.m == 4
        np.testing.assert_array_equal(rw.w, brute_force_relief(X.tolist(), (y / 4).tolist(), 3))

    def test_tau_threshold(self, toy):
        rw = relief_rank(toy, "all", tau=0.8)
        assert not rw.relevant.any()

    @pytest.mark.parametrize("kw,msg", [
        ({"m": 0}, "m must be"),
        ({"tau": 1.5}, "tau"),
        ({"class_bins": 1}, "class_bins"),
        ({"class_bins": 9}, "singleton"),
    ])
    def test_errors(self, toy, kw, msg):
        with pytest.raises(ReliefError, match=msg):
            relief_rank(toy, **kw)


class TestExport:
    def test_format(self, toy, tmp_path):
        path = tmp_path / "w.csv"
        export_weights(relief_rank(toy), path)
        lines = path.read_text().splitlines()
        assert lines[0].startswith("# outcome discretized into 2 equal-frequency bins")
        assert lines[1] == "attribute_id,weight,relevant"
        assert lines[2] == "1,0.715000,true"
        assert lines[3] == "2,0.000000,false"
        assert load_weights_order(path) == [1, 2]

    def test_order_ties_by_id(self):
        X = np.tile(np.array([[0.3], [0.3], [0.3], [0.3]]), (1, 3))
        rw = relief_rank(Dataset.from_arrays(X, [0.0, 1.0, 2.0, 3.0]))
        assert rw.order() == [1, 2, 3]
