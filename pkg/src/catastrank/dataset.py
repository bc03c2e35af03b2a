"""Loading, normalization and partitioning of numeric tables.

Every column (outcome included) is min-max scaled to [0, 1] at load time.
Features are addressed by 1-based ids that follow the column order of the
source file with the outcome column skipped; the id ``0`` is reserved for
the outcome itself (see :data:`OUTCOME`).
"""

from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

OUTCOME = 0

MIN_SAMPLES = 4


class DatasetError(ValueError):
    """Raised for malformed input tables or invalid column references."""


@dataclass(frozen=True)
class Dataset:
    """Immutable numeric table with one designated outcome column.

    Attributes
    ----------
    X : ndarray, shape (n_samples, n_features)
        Feature matrix, columns ordered as ``feature_ids``.
    y : ndarray, shape (n_samples,)
        Outcome vector.
    feature_ids : tuple of int
        1-based ids of the feature columns.
    feature_names : tuple of str
    outcome_name : str
    outcome_index : int
        0-based position of the outcome column in the source table.
    feature_meta : ndarray, shape (n_features, 2)
        Raw ``(min, max)`` of every feature column.
    outcome_meta : tuple of float
        Raw ``(min, max)`` of the outcome.
    normalized : bool
        False only for tables built with ``from_arrays(normalize=False)``.
    """

    X: np.ndarray
    y: np.ndarray
    feature_ids: tuple
    feature_names: tuple
    outcome_name: str
    outcome_index: int
    feature_meta: np.ndarray
    outcome_meta: tuple
    normalized: bool = True
    _pos: dict = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        X = np.array(self.X, dtype=float)
        y = np.array(self.y, dtype=float)
        X.setflags(write=False)
        y.setflags(write=False)
        meta = np.array(self.feature_meta, dtype=float).reshape(-1, 2)
        meta.setflags(write=False)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "feature_meta", meta)
        object.__setattr__(self, "feature_ids", tuple(int(i) for i in self.feature_ids))
        object.__setattr__(self, "feature_names", tuple(self.feature_names))
        object.__setattr__(self, "outcome_meta", tuple(float(v) for v in self.outcome_meta))
        if X.ndim != 2 or X.shape[0] != y.shape[0] or X.shape[1] != len(self.feature_ids):
            raise DatasetError("feature matrix, outcome and feature ids disagree in shape")
        if len(set(self.feature_ids)) != len(self.feature_ids):
            raise DatasetError("duplicate feature ids")
        if OUTCOME in self.feature_ids:
            raise DatasetError("feature id 0 is reserved for the outcome")
        object.__setattr__(self, "_pos", {fid: j for j, fid in enumerate(self.feature_ids)})

    @property
    def n_samples(self) -> int:
        return self.X.shape[0]

    @property
    def n_features(self) -> int:
        return self.X.shape[1]

    @property
    def constant_features(self) -> tuple:
        """Ids of features whose raw max equals raw min."""
        return tuple(
            fid for fid, (lo, hi) in zip(self.feature_ids, self.feature_meta) if hi == lo
        )

    @property
    def outcome_constant(self) -> bool:
        return self.outcome_meta[0] == self.outcome_meta[1]

    def column(self, fid: int) -> np.ndarray:
        """Return the outcome (``fid == 0``) or the feature with id ``fid``."""
        if fid == OUTCOME:
            return self.y
        try:
            return self.X[:, self._pos[fid]]
        except KeyError:
            raise DatasetError(f"unknown feature id {fid}") from None

    def name_of(self, fid: int) -> str:
        if fid == OUTCOME:
            return self.outcome_name
        return self.feature_names[self._position(fid)]

    def _position(self, fid):
        try:
            return self._pos[fid]
        except KeyError:
            raise DatasetError(f"unknown feature id {fid}") from None

    def denormalize(self, fid: int, values=None) -> np.ndarray:
        """Map normalized values of column ``fid`` back to raw units.

        Constant columns map back to their single raw value.
        """
        if fid == OUTCOME:
            lo, hi = self.outcome_meta
        else:
            lo, hi = self.feature_meta[self._position(fid)]
        v = self.column(fid) if values is None else np.asarray(values, dtype=float)
        if not self.normalized:
            return np.array(v, dtype=float)
        return lo + v * (hi - lo)

    @classmethod
    def from_arrays(cls, X, y, feature_names=None, outcome_name="z", normalize=True):
        """Build a dataset from raw arrays; the outcome is placed last.

        With ``normalize=False`` the values are stored as given, which is
        meant for synthetic experiments on the cusp model's native scale.
        """
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X[:, None]
        y = np.asarray(y, dtype=float)
        p = X.shape[1]
        if feature_names is None:
            feature_names = [f"x{j + 1}" for j in range(p)]
        if len(feature_names) != p:
            raise DatasetError("feature_names length does not match X")
        table = np.column_stack([X, y])
        _check_shape(table.shape[0], table.shape[1])
        if not np.all(np.isfinite(table)):
            raise DatasetError("non-finite values in input arrays")
        lo, hi = table.min(axis=0), table.max(axis=0)
        if normalize:
            table = _minmax(table, lo, hi)
        return cls(
            X=table[:, :p],
            y=table[:, p],
            feature_ids=tuple(range(1, p + 1)),
            feature_names=tuple(feature_names),
            outcome_name=outcome_name,
            outcome_index=p,
            feature_meta=np.column_stack([lo[:p], hi[:p]]),
            outcome_meta=(lo[p], hi[p]),
            normalized=normalize,
        )


@dataclass(frozen=True)
class FoldPlan:
    n_folds: int
    assignments: np.ndarray
    seed: int

    def __post_init__(self):
        a = np.array(self.assignments, dtype=int)
        a.setflags(write=False)
        object.__setattr__(self, "assignments", a)

    def split(self, fold: int):
        """Return ``(train_idx, test_idx)`` for one fold."""
        test = self.assignments == fold
        return np.flatnonzero(~test), np.flatnonzero(test)

    def sizes(self) -> list:
        return np.bincount(self.assignments, minlength=self.n_folds).tolist()

    def digest(self) -> str:
        import hashlib

        return hashlib.sha256(self.assignments.astype("<i8").tobytes()).hexdigest()[:16]


def _check_shape(n_rows, n_cols):
    if n_cols < 2:
        raise DatasetError(f"need at least 2 columns, got {n_cols}")
    if n_rows < MIN_SAMPLES:
        raise DatasetError(f"need at least {MIN_SAMPLES} rows, got {n_rows}")


def _minmax(table, lo, hi):
    span = hi - lo
    out = np.zeros_like(table)
    ok = span > 0
    out[:, ok] = (table[:, ok] - lo[ok]) / span[ok]
    return out


def resolve_outcome(header: Sequence[str], outcome) -> int:
    """Translate a column name or 0-based index (int or digit string) to an index."""
    n = len(header)
    if outcome is None:
        return n - 1
    if isinstance(outcome, str) and outcome in header:
        return header.index(outcome)
    try:
        idx = int(outcome)
    except (TypeError, ValueError):
        raise DatasetError(f"unknown outcome column {outcome!r}") from None
    if idx < 0:
        idx += n
    if not 0 <= idx < n:
        raise DatasetError(f"outcome index {outcome} out of range for {n} columns")
    return idx


def load_csv(path, outcome=None) -> Dataset:
    """Read a headered numeric CSV and return a normalized :class:`Dataset`.

    Parameters
    ----------
    path : str or path-like
    outcome : str or int, optional
        Column name or 0-based index of the outcome; defaults to the last
        column.
    """
    if not os.path.isfile(path):
        raise DatasetError(f"no such file: {path}")
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DatasetError(f"{path}: empty file") from None
        dupes = sorted({h for h in header if header.count(h) > 1})
        if dupes:
            raise DatasetError(f"{path}: duplicate column names {dupes}")
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise DatasetError(
                    f"{path}: row {lineno} has {len(row)} cells, header has {len(header)}"
                )
            vals = []
            for col, cell in enumerate(row):
                try:
                    v = float(cell)
                except ValueError:
                    v = math.nan
                if not math.isfinite(v):
                    raise DatasetError(
                        f"{path}: non-numeric cell {cell!r} at row {lineno}, "
                        f"column {col + 1} ({header[col]})"
                    )
                vals.append(v)
            rows.append(vals)
    _check_shape(len(rows), len(header))
    table = np.array(rows, dtype=float)
    oi = resolve_outcome(header, outcome)
    lo, hi = table.min(axis=0), table.max(axis=0)
    norm = _minmax(table, lo, hi)
    feat_cols = [j for j in range(len(header)) if j != oi]
    return Dataset(
        X=norm[:, feat_cols],
        y=norm[:, oi],
        feature_ids=tuple(range(1, len(feat_cols) + 1)),
        feature_names=tuple(header[j] for j in feat_cols),
        outcome_name=header[oi],
        outcome_index=oi,
        feature_meta=np.column_stack([lo[feat_cols], hi[feat_cols]]),
        outcome_meta=(lo[oi], hi[oi]),
    )


def make_folds(ds: Dataset, n_folds: int, seed: int = 42) -> FoldPlan:
    """Random, unstratified partition of the samples into ``n_folds`` folds.

    Fold sizes differ by at most one.
    """
    n = ds.n_samples if isinstance(ds, Dataset) else int(ds)
    if not 2 <= n_folds <= n:
        raise DatasetError(f"n_folds must lie in [2, {n}], got {n_folds}")
    rng = np.random.default_rng(seed)
    order = rng.permutation(n)
    assignments = np.empty(n, dtype=int)
    assignments[order] = np.arange(n) % n_folds
    return FoldPlan(n_folds=n_folds, assignments=assignments, seed=seed)


def select_features(ds: Dataset, keep: Sequence[int]) -> Dataset:
    """Return a dataset holding the outcome plus the features in ``keep``.

    Feature ids are preserved, so selecting twice with the same list is a
    no-op.
    """
    keep = [int(k) for k in keep]
    if not keep:
        raise DatasetError("keep list is empty")
    if len(set(keep)) != len(keep):
        raise DatasetError(f"duplicate ids in keep list {keep}")
    pos = [ds._position(k) for k in keep]
    return Dataset(
        X=ds.X[:, pos],
        y=ds.y,
        feature_ids=tuple(keep),
        feature_names=tuple(ds.feature_names[p] for p in pos),
        outcome_name=ds.outcome_name,
        outcome_index=ds.outcome_index,
        feature_meta=ds.feature_meta[pos],
        outcome_meta=ds.outcome_meta,
        normalized=ds.normalized,
    )
