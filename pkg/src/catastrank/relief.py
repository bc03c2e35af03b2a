"""RELIEF feature weighting adapted to a continuous outcome.

The outcome is cut into ``class_bins`` equal-frequency bins which play the
role of classes.  For every sampled instance the nearest same-bin instance
(hit) and nearest other-bin instance (miss) are found by Euclidean distance
over all features, and each weight moves by
``-(x - hit)^2 + (x - miss)^2``.  Weights are averaged over the instances
actually used.

Accumulation runs in ascending sample index so results do not depend on
the draw order.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .dataset import Dataset


class ReliefError(ValueError):
    pass


@dataclass(frozen=True)
class ReliefWeights:
    w: np.ndarray
    feature_ids: tuple
    m: int
    tau: float
    seed: int
    class_bins: int = 2

    @property
    def relevant(self) -> np.ndarray:
        return self.w > self.tau

    def order(self) -> list:
        """Feature ids by descending weight, ties by ascending id."""
        idx = sorted(range(len(self.feature_ids)), key=lambda j: (-self.w[j], self.feature_ids[j]))
        return [self.feature_ids[j] for j in idx]

    def weight_of(self, fid: int) -> float:
        return float(self.w[self.feature_ids.index(fid)])


def diff(xk: float, yk: float, nu_k: float = 1.0) -> float:
    """Normalized difference of one feature between two instances."""
    if not nu_k > 0:
        raise ReliefError(f"normalization unit must be positive, got {nu_k}")
    return (xk - yk) / nu_k


def equal_frequency_bins(y, class_bins: int) -> np.ndarray:
    """Bin label per sample; ranks (ties by index) are split into equal shares."""
    y = np.asarray(y, dtype=float)
    n = y.size
    order = np.argsort(y, kind="stable")
    labels = np.empty(n, dtype=int)
    labels[order] = (np.arange(n) * class_bins) // n
    return labels


def _visit_order(n, eligible, m, rng):
    if m == n:
        # exhaustive: every usable instance once; unusable ones cannot be replaced
        return np.flatnonzero(eligible)
    pool = np.flatnonzero(eligible)
    if m < n:
        perm = rng.permutation(n)
        picked = perm[eligible[perm]][:m]
    else:
        picked = rng.choice(pool, size=m, replace=True)
    return np.sort(picked)


def relief_rank(ds: Dataset, m="all", tau: float = 0.0, class_bins: int = 2,
                seed: int = 42) -> ReliefWeights:
    """Compute RELIEF weights for every feature of ``ds``.

    Parameters
    ----------
    m : int or "all"
        Number of sampled instances; ``"all"`` (or ``n_samples``) visits every
        instance once.  Instances whose bin has no other member are skipped
        and, when sampling, replaced by a fresh draw.
    tau : float
        Relevance threshold in [0, 1] on the averaged weight.
    class_bins : int
        Number of equal-frequency outcome bins (>= 2).
    """
    n, p = ds.X.shape
    if m == "all":
        m = n
    m = int(m)
    if m < 1:
        raise ReliefError(f"m must be >= 1, got {m}")
    if not 0.0 <= tau <= 1.0:
        raise ReliefError(f"tau must lie in [0, 1], got {tau}")
    if class_bins < 2:
        raise ReliefError(f"class_bins must be >= 2, got {class_bins}")

    labels = equal_frequency_bins(ds.y, class_bins)
    counts = np.bincount(labels, minlength=class_bins)
    if np.count_nonzero(counts) < 2:
        raise ReliefError("outcome binning produced a single class")
    eligible = counts[labels] >= 2
    if not np.any(eligible):
        raise ReliefError("every outcome bin is a singleton; no near hits exist")

    rng = np.random.default_rng(seed)
    visit = _visit_order(n, eligible, m, rng)
    X = ds.X
    W = np.zeros(p)
    for i in visit:
        x = X[i]
        d = np.zeros(n)
        for k in range(p):
            delta = X[:, k] - x[k]
            d = d + delta * delta
        same = labels == labels[i]
        d_hit = np.where(same, d, np.inf)
        d_hit[i] = np.inf
        d_miss = np.where(same, np.inf, d)
        hit = X[int(np.argmin(d_hit))]
        miss = X[int(np.argmin(d_miss))]
        dh = x - hit
        dm = x - miss
        W = W - dh * dh + dm * dm
    used = len(visit)
    return ReliefWeights(W / used, tuple(ds.feature_ids), used, float(tau), seed, class_bins)


def export_weights(rw: ReliefWeights, path) -> None:
    """CSV with columns ``attribute_id,weight,relevant``, best first.

    A leading comment records how the outcome was discretized.
    """
    lines = [
        f"# outcome discretized into {rw.class_bins} equal-frequency bins; "
        f"m={rw.m} tau={rw.tau:.6f} seed={rw.seed}",
        "attribute_id,weight,relevant",
    ]
    for fid in rw.order():
        w = rw.weight_of(fid)
        lines.append(f"{fid},{w:.6f},{str(w > rw.tau).lower()}")
    with open(path, "w", newline="") as fh:
        fh.write("\n".join(lines) + "\n")


def load_weights_order(path) -> list:
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and not r[0].startswith("#")]
    return [int(r[0]) for r in rows[1:]]
