"""Regressors used to score feature subsets, and their error metrics.

* ordinary least squares through a QR factorization,
* k-nearest-neighbour regression by exhaustive scan,
* a variance-reduction regression tree with reduced-error pruning.

Every ``fit_*`` accepts either a :class:`Dataset` or an ``(X, y)`` pair.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import Dataset

RIDGE_LAMBDA = 1e-8


def _xy(train, y=None):
    if isinstance(train, Dataset):
        return train.X, train.y
    X = np.asarray(train, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    return X, np.asarray(y, dtype=float)


# -- linear -----------------------------------------------------------------

@dataclass(frozen=True)
class LinearModel:
    beta0: float
    betas: np.ndarray
    regularized: bool = False

    def predict(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X[None, :]
        if X.shape[1] != self.betas.size:
            raise ValueError(f"expected {self.betas.size} features, got {X.shape[1]}")
        return self.beta0 + X @ self.betas


def fit_linear(train, y=None) -> LinearModel:
    """Least squares with intercept.

    A rank-deficient design (or too few samples) falls back to a ridge
    solution with ``lambda = 1e-8`` on the slopes and sets ``regularized``.
    """
    X, y = _xy(train, y)
    n, p = X.shape
    A = np.column_stack([np.ones(n), X])
    regularized = n < p + 1
    if not regularized:
        Q, R = np.linalg.qr(A)
        d = np.abs(np.diag(R))
        regularized = d.min() <= max(n, p + 1) * np.finfo(float).eps * d.max()
    if regularized:
        penalty = np.sqrt(RIDGE_LAMBDA) * np.eye(p + 1)[1:]
        Q, R = np.linalg.qr(np.vstack([A, penalty]))
        coef = np.linalg.solve(R, Q.T @ np.concatenate([y, np.zeros(p)]))
    else:
        coef = np.linalg.solve(R, Q.T @ y)
    return LinearModel(float(coef[0]), coef[1:], bool(regularized))


# -- k nearest neighbours ---------------------------------------------------

@dataclass(frozen=True)
class KnnModel:
    k: int
    X: np.ndarray
    y: np.ndarray

    def predict(self, Xq) -> np.ndarray:
        Xq = np.asarray(Xq, dtype=float)
        if Xq.ndim == 1:
            Xq = Xq[None, :]
        out = np.empty(Xq.shape[0])
        step = max(1, (1 << 21) // max(1, self.X.shape[0]))
        for s in range(0, Xq.shape[0], step):
            d = _sq_dist(Xq[s:s + step], self.X)
            nn = np.argsort(d, axis=1, kind="stable")[:, : self.k]
            out[s:s + step] = self.y[nn].mean(axis=1)
        return out


def _sq_dist(Q, X):
    d = np.zeros((Q.shape[0], X.shape[0]))
    for j in range(X.shape[1]):
        delta = Q[:, j, None] - X[None, :, j]
        d += delta * delta
    return d


def fit_knn(train, y=None, k: int = 3) -> KnnModel:
    X, y = _xy(train, y)
    if not 1 <= k <= X.shape[0]:
        raise ValueError(f"k must lie in [1, {X.shape[0]}], got {k}")
    return KnnModel(int(k), np.array(X), np.array(y))


def predict_knn(model: KnnModel, x) -> float:
    """Mean target of the ``k`` nearest training points; ties go to lower index."""
    x = np.asarray(x, dtype=float)
    if x.shape != (model.X.shape[1],):
        raise ValueError(f"query must have {model.X.shape[1]} features")
    return float(model.predict(x[None, :])[0])


# -- regression tree --------------------------------------------------------

@dataclass(frozen=True)
class TreeModel:
    """Flat binary tree; ``feature[i] == -1`` marks a leaf."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    n_train: np.ndarray
    min_leaf: int
    n_pruned: int = 0

    @property
    def n_leaves(self) -> int:
        return int(np.sum(self.feature < 0))

    def leaf_index(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X[None, :]
        node = np.zeros(X.shape[0], dtype=int)
        while True:
            inner = self.feature[node] >= 0
            if not inner.any():
                return node
            idx = np.flatnonzero(inner)
            nd = node[idx]
            go_left = X[idx, self.feature[nd]] <= self.threshold[nd]
            node[idx] = np.where(go_left, self.left[nd], self.right[nd])

    def predict(self, X) -> np.ndarray:
        return self.value[self.leaf_index(X)]


class _Grower:
    def __init__(self, X, y, min_leaf):
        self.X, self.y, self.min_leaf = X, y, min_leaf
        self.feature, self.threshold, self.left, self.right = [], [], [], []
        self.value, self.n_train = [], []

    def node(self, idx):
        me = len(self.feature)
        self.feature.append(-1)
        self.threshold.append(0.0)
        self.left.append(-1)
        self.right.append(-1)
        self.value.append(float(self.y[idx].mean()))
        self.n_train.append(idx.size)
        split = self.best_split(idx)
        if split is not None:
            j, thr = split
            mask = self.X[idx, j] <= thr
            self.feature[me] = j
            self.threshold[me] = thr
            self.left[me] = self.node(idx[mask])
            self.right[me] = self.node(idx[~mask])
        return me

    def best_split(self, idx):
        n = idx.size
        L = self.min_leaf
        if n < 2 * L:
            return None
        y = self.y[idx]
        base = float(np.sum((y - y.mean()) ** 2))
        if base <= 0:
            return None
        best_gain, best = 1e-12 * base, None
        for j in range(self.X.shape[1]):
            x = self.X[idx, j]
            order = np.argsort(x, kind="stable")
            xs, ys = x[order], y[order]
            cs, cs2 = np.cumsum(ys), np.cumsum(ys * ys)
            nl = np.arange(1, n)
            sl, sl2 = cs[:-1], cs2[:-1]
            sr, sr2 = cs[-1] - sl, cs2[-1] - sl2
            nr = n - nl
            sse = (sl2 - sl * sl / nl) + (sr2 - sr * sr / nr)
            ok = (nl >= L) & (nr >= L) & (xs[1:] > xs[:-1])
            if not ok.any():
                continue
            cand = np.flatnonzero(ok)
            i = cand[np.argmin(sse[cand])]
            gain = base - sse[i]
            if gain > best_gain:
                best_gain = gain
                best = (j, 0.5 * (xs[i] + xs[i + 1]))
        return best


def fit_tree(train, y=None, prune: float = 0.2, min_leaf: int = 5, seed: int = 0) -> TreeModel:
    """Grow on a random ``1 - prune`` share of the data, prune on the rest.

    Splits greedily minimize the summed squared error of the children; a
    subtree is collapsed into a leaf whenever that does not increase the
    squared error on the holdout share.
    """
    X, y = _xy(train, y)
    if min_leaf < 1:
        raise ValueError("min_leaf must be >= 1")
    if not 0.0 < prune < 0.5:
        raise ValueError("prune holdout fraction must lie in (0, 0.5)")
    n = X.shape[0]
    rng = np.random.default_rng(seed)
    perm = rng.permutation(n)
    n_hold = int(round(prune * n))
    grow, hold = np.sort(perm[n_hold:]), np.sort(perm[:n_hold])
    if grow.size < 2 * min_leaf:
        grow, hold = np.arange(n), np.array([], dtype=int)
    g = _Grower(X, y, min_leaf)
    g.node(grow)
    tree = TreeModel(
        np.array(g.feature), np.array(g.threshold), np.array(g.left), np.array(g.right),
        np.array(g.value), np.array(g.n_train), min_leaf,
    )
    return _prune(tree, X[hold], y[hold])


def _prune(tree: TreeModel, Xh, yh) -> TreeModel:
    feature = tree.feature.copy()
    n_nodes = feature.size
    # route holdout rows to every node on their path
    members = [[] for _ in range(n_nodes)]
    for r in range(Xh.shape[0]):
        node = 0
        while True:
            members[node].append(r)
            if feature[node] < 0:
                break
            node = tree.left[node] if Xh[r, feature[node]] <= tree.threshold[node] else tree.right[node]
    pruned = 0

    def visit(node):
        nonlocal pruned
        rows = np.array(members[node], dtype=int)
        leaf_err = float(np.sum((yh[rows] - tree.value[node]) ** 2)) if rows.size else 0.0
        if feature[node] < 0:
            return leaf_err
        sub_err = visit(tree.left[node]) + visit(tree.right[node])
        if leaf_err <= sub_err:
            feature[node] = -1
            pruned += 1
            return leaf_err
        return sub_err

    visit(0)
    # compact: keep nodes reachable from the root
    keep, stack = [], [0]
    while stack:
        nd = stack.pop()
        keep.append(nd)
        if feature[nd] >= 0:
            stack.extend([tree.right[nd], tree.left[nd]])
    keep.sort()
    remap = {old: new for new, old in enumerate(keep)}
    keep = np.array(keep)
    left = np.array([remap[tree.left[k]] if feature[k] >= 0 else -1 for k in keep], dtype=int)
    right = np.array([remap[tree.right[k]] if feature[k] >= 0 else -1 for k in keep], dtype=int)
    return TreeModel(
        feature[keep], tree.threshold[keep], left, right, tree.value[keep],
        tree.n_train[keep], tree.min_leaf, pruned,
    )


# -- metrics ----------------------------------------------------------------

def _pair(pred, truth):
    pred = np.asarray(pred, dtype=float).ravel()
    truth = np.asarray(truth, dtype=float).ravel()
    if pred.size != truth.size:
        raise ValueError(f"length mismatch: {pred.size} predictions, {truth.size} targets")
    if pred.size == 0:
        raise ValueError("empty prediction vector")
    return pred, truth


def mae(pred, truth) -> float:
    """Mean absolute error."""
    pred, truth = _pair(pred, truth)
    return float(np.mean(np.abs(pred - truth)))


def rmse(pred, truth) -> float:
    """Root mean squared error."""
    pred, truth = _pair(pred, truth)
    return float(np.sqrt(np.mean((pred - truth) ** 2)))


REGRESSORS = ("linear", "knn", "tree")


def fit_regressor(name: str, X, y, knn_k=3, tree_min_leaf=5, tree_prune=0.2, seed=0):
    """Fit one of :data:`REGRESSORS` and return an object with ``predict``."""
    if name == "linear":
        return fit_linear(X, y)
    if name == "knn":
        return fit_knn(X, y, k=min(knn_k, len(y)))
    if name == "tree":
        return fit_tree(X, y, prune=tree_prune, min_leaf=tree_min_leaf, seed=seed)
    raise ValueError(f"unknown regressor {name!r}; choose from {REGRESSORS}")
