import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from catastrank.dataset import Dataset
from catastrank.regress import (
    fit_knn,
    fit_linear,
    fit_regressor,
    fit_tree,
    mae,
    predict_knn,
    rmse,
)

vectors = arrays(np.float64, st.integers(1, 30), elements=st.floats(-1e3, 1e3))


class TestLinear:
    def test_exact_line(self):
        x = np.linspace(0, 1, 11)
        m = fit_linear(x, 2 * x + 1)
        assert m.beta0 == pytest.approx(1.0, abs=1e-12)
        np.testing.assert_allclose(m.betas, [2.0], atol=1e-12)
        np.testing.assert_allclose(m.predict(x[:, None]), 2 * x + 1, atol=1e-12)
        assert not m.regularized

    def test_three_points(self):
        # normal equations: [[3, 3], [3, 5]] c = [1, 1] -> c = (1/3, 0)
        m = fit_linear(np.array([0.0, 1.0, 2.0]), np.array([0.0, 1.0, 0.0]))
        assert m.beta0 == pytest.approx(1 / 3, abs=1e-14)
        assert m.betas[0] == pytest.approx(0.0, abs=1e-14)

    def test_duplicated_column_regularizes(self):
        rng = np.random.default_rng(0)
        x = rng.uniform(size=20)
        m = fit_linear(np.column_stack([x, x]), 3 * x)
        assert m.regularized
        assert np.all(np.isfinite(m.betas))
        np.testing.assert_allclose(m.betas, [1.5, 1.5], atol=1e-6)

    def test_underdetermined_regularizes(self):
        m = fit_linear(np.eye(3), [1.0, 2.0, 3.0])
        assert m.regularized
        assert np.all(np.isfinite(m.predict(np.eye(3))))

    def test_accepts_dataset(self):
        rng = np.random.default_rng(1)
        ds = Dataset.from_arrays(rng.uniform(size=(30, 2)), rng.uniform(size=30))
        a, b = fit_linear(ds), fit_linear(ds.X, ds.y)
        np.testing.assert_array_equal(a.betas, b.betas)

    def test_predict_shape_check(self):
        m = fit_linear(np.ones((5, 2)) + np.arange(10).reshape(5, 2) ** 2, np.arange(5.0))
        with pytest.raises(ValueError, match="expected 2 features"):
            m.predict(np.ones((1, 3)))

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.floats(0.01, 100), st.floats(-50, 50))
    def test_affine_feature_rescaling_invariance(self, seed, scale, shift):
        rng = np.random.default_rng(seed)
        X = rng.uniform(size=(40, 3))
        y = X @ [1.0, -2.0, 0.5] + 0.1 * rng.standard_normal(40)
        X2 = X.copy()
        X2[:, 1] = scale * X2[:, 1] + shift
        p1 = fit_linear(X, y).predict(X)
        p2 = fit_linear(X2, y).predict(X2)
        np.testing.assert_allclose(p1, p2, atol=1e-8)


class TestKnn:
    @pytest.fixture
    def five(self):
        X = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [2.0, 2.0], [0.5, 0.4]])
        y = np.array([1.0, 2.0, 3.0, 4.0, 5.0])
        return X, y

    def test_hand_placed_query(self, five):
        X, y = five
        q = np.array([0.4, 0.3])
        # exhaustive scan: squared distances 0.25, 0.45, 0.65, 5.0, 0.02
        d = ((X - q) ** 2).sum(axis=1)
        nearest = np.argsort(d)[:3]
        assert set(nearest) == {4, 0, 1}
        assert predict_knn(fit_knn(X, y, k=3), q) == pytest.approx((5 + 1 + 2) / 3)

    def test_training_point_k1(self, five):
        X, y = five
        m = fit_knn(X, y, k=1)
        for xi, yi in zip(X, y):
            assert predict_knn(m, xi) == yi

    def test_k_equals_n_is_mean(self, five):
        X, y = five
        assert predict_knn(fit_knn(X, y, k=5), [9.0, 9.0]) == pytest.approx(y.mean())

    def test_ties_go_to_lower_index(self):
        X = np.array([[1.0], [-1.0], [1.0]])
        m = fit_knn(X, [10.0, 20.0, 30.0], k=1)
        assert predict_knn(m, [0.0]) == 10.0
        assert fit_knn(X, [10.0, 20.0, 30.0], k=2).predict([[1.0]])[0] == 20.0

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.integers(1, 200), st.integers(1, 4))
    def test_matches_exhaustive_scan(self, seed, n, p):
        rng = np.random.default_rng(seed)
        X = np.round(rng.uniform(size=(n, p)), 2)  # rounding forces distance ties
        y = rng.standard_normal(n)
        k = int(rng.integers(1, min(n, 7) + 1))
        m = fit_knn(X, y, k=k)
        for q in np.round(rng.uniform(size=(5, p)), 2):
            d = [sum((X[i, j] - q[j]) ** 2 for j in range(p)) for i in range(n)]
            nn = sorted(range(n), key=lambda i: (d[i], i))[:k]
            assert predict_knn(m, q) == np.mean(y[nn])

    def test_invalid_k(self, five):
        with pytest.raises(ValueError):
            fit_knn(*five, k=0)
        with pytest.raises(ValueError):
            fit_knn(*five, k=6)

    def test_query_dimension(self, five):
        with pytest.raises(ValueError):
            predict_knn(fit_knn(*five), [1.0])


def best_split_oracle(x, y, min_leaf):
    """Exhaustive scan of midpoints for the smallest summed child SSE."""
    xs = np.unique(x)
    best = (math.inf, None)
    for lo, hi in zip(xs[:-1], xs[1:]):
        t = 0.5 * (lo + hi)
        left, right = y[x <= t], y[x > t]
        if left.size < min_leaf or right.size < min_leaf:
            continue
        sse = ((left - left.mean()) ** 2).sum() + ((right - right.mean()) ** 2).sum()
        if sse < best[0]:
            best = (sse, t)
    return best[1]


class TestTree:
    def test_constant_target(self):
        rng = np.random.default_rng(0)
        t = fit_tree(rng.uniform(size=(50, 2)), np.full(50, 3.5))
        assert t.n_leaves == 1
        np.testing.assert_array_equal(t.predict(rng.uniform(size=(4, 2))), 3.5)

    def test_step_function(self):
        rng = np.random.default_rng(1)
        x = rng.uniform(size=100)
        y = (x > 0.5).astype(float)
        t = fit_tree(x, y, prune=0.2, min_leaf=5, seed=0)
        assert t.feature[0] == 0
        # root threshold equals the exhaustive oracle on the growing share
        perm = np.random.default_rng(0).permutation(100)
        grow = np.sort(perm[20:])
        assert t.threshold[0] == pytest.approx(best_split_oracle(x[grow], y[grow], 5))
        assert abs(t.threshold[0] - 0.5) < 0.05
        assert t.n_leaves == 2
        np.testing.assert_array_equal(t.predict([[0.1], [0.9]]), [0.0, 1.0])

    @settings(max_examples=25, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_root_split_matches_oracle(self, seed):
        rng = np.random.default_rng(seed)
        x = np.round(rng.uniform(size=60), 2)
        y = np.sin(6 * x) + 0.1 * rng.standard_normal(60)
        from catastrank.regress import _Grower

        split = _Grower(x[:, None], y, 5).best_split(np.arange(60))
        want = best_split_oracle(x, y, 5)
        if want is None:
            assert split is None
        else:
            assert split[1] == pytest.approx(want)

    def test_piecewise_constant_within_leaf(self):
        rng = np.random.default_rng(2)
        X = rng.uniform(size=(200, 2))
        y = np.where(X[:, 0] > 0.3, 1.0, 0.0) + X[:, 1]
        t = fit_tree(X, y, min_leaf=5)
        q = rng.uniform(size=(50, 2))
        leaves = t.leaf_index(q)
        for i in range(50):
            same = np.flatnonzero(leaves == leaves[i])
            assert np.all(t.predict(q[same]) == t.predict(q[i:i + 1])[0])

    def test_pruning_never_increases_holdout_error(self):
        rng = np.random.default_rng(3)
        n = 300
        X = rng.uniform(size=(n, 3))
        y = X[:, 0] + 0.5 * rng.standard_normal(n)
        perm = np.random.default_rng(7).permutation(n)
        hold, grow = np.sort(perm[:60]), np.sort(perm[60:])
        from catastrank.regress import _Grower, _prune, TreeModel

        g = _Grower(X, y, 5)
        g.node(grow)
        full = TreeModel(np.array(g.feature), np.array(g.threshold), np.array(g.left),
                         np.array(g.right), np.array(g.value), np.array(g.n_train), 5)
        pruned = _prune(full, X[hold], y[hold])
        assert pruned.n_pruned > 0
        assert pruned.n_leaves < full.n_leaves
        err = lambda m: np.mean((m.predict(X[hold]) - y[hold]) ** 2)  # noqa: E731
        assert err(pruned) <= err(full)

    def test_min_leaf_respected(self):
        rng = np.random.default_rng(4)
        X = rng.uniform(size=(120, 2))
        t = fit_tree(X, rng.standard_normal(120), min_leaf=10, prune=0.1)
        assert np.all(t.n_train[t.feature < 0] >= 10)

    @pytest.mark.parametrize("kw", [{"min_leaf": 0}, {"prune": 0.0}, {"prune": 0.5}])
    def test_invalid_options(self, kw):
        with pytest.raises(ValueError):
            fit_tree(np.ones((10, 1)), np.ones(10), **kw)

    def test_seeded(self):
        rng = np.random.default_rng(5)
        X, y = rng.uniform(size=(80, 2)), rng.uniform(size=80)
        a, b = fit_tree(X, y, seed=9), fit_tree(X, y, seed=9)
        np.testing.assert_array_equal(a.predict(X), b.predict(X))


class TestMetrics:
    def test_perfect(self):
        assert mae([1.0, 2.0], [1.0, 2.0]) == 0.0
        assert rmse([1.0, 2.0], [1.0, 2.0]) == 0.0

    def test_arithmetic(self):
        assert mae([1, 2], [0, 4]) == 1.5
        assert rmse([1, 2], [0, 4]) == pytest.approx(math.sqrt(2.5))

    @pytest.mark.parametrize("fn", [mae, rmse])
    def test_errors(self, fn):
        with pytest.raises(ValueError, match="length mismatch"):
            fn([1.0], [1.0, 2.0])
        with pytest.raises(ValueError, match="empty"):
            fn([], [])

    @given(vectors, st.data())
    def test_rmse_dominates_mae(self, pred, data):
        truth = data.draw(arrays(np.float64, pred.size, elements=st.floats(-1e3, 1e3)))
        assert rmse(pred, truth) >= mae(pred, truth) * (1 - 1e-12)


def test_fit_regressor_dispatch():
    X = np.linspace(0, 1, 30)[:, None]
    y = X[:, 0] * 2
    for name in ("linear", "knn", "tree"):
        assert fit_regressor(name, X, y).predict(X).shape == (30,)
    with pytest.raises(ValueError, match="unknown regressor"):
        fit_regressor("m5p", X, y)
