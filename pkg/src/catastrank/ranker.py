"""Feature ranking by reciprocal AIC of per-feature cusp fits.

Each candidate feature is used in turn as the bifurcation covariate of a
cusp regression whose state is the outcome and whose asymmetry covariate is
one fixed feature (by default the last one).  Features are ordered by
ascending AIC; the reported rank score is ``1/AIC``.
"""

from __future__ import annotations

import csv
import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .cusp_fit import CuspFitError, default_spec, fit
from .cusp_model import CuspNumericalError
from .dataset import Dataset, DatasetError

log = logging.getLogger(__name__)

RANKING_HEADER = ("attribute_id", "aic", "rank", "kept")


class RankingError(RuntimeError):
    pass


@dataclass(frozen=True)
class RankEntry:
    feature_id: int
    aic: float
    rank_score: float
    kept: bool
    converged: bool = True
    error: str = ""


@dataclass(frozen=True)
class RankingTable:
    """Ranked candidates plus the asymmetry feature, which is never ranked."""

    entries: tuple
    threshold_t: float
    n_requested: int
    asymmetry_feature: int
    meta: dict = field(default_factory=dict, compare=False)

    @property
    def kept_ids(self) -> list:
        return [e.feature_id for e in self.entries if e.kept]

    def order(self) -> list:
        """All feature ids best-first, the asymmetry feature last."""
        ids = [e.feature_id for e in self.entries]
        if self.asymmetry_feature is not None and self.asymmetry_feature not in ids:
            ids.append(self.asymmetry_feature)
        return ids


def rank_score(aic: float) -> float:
    """``1/AIC``; zero for a failed fit (infinite AIC)."""
    if math.isinf(aic):
        return 0.0
    if aic == 0.0:
        return math.inf
    return 1.0 / aic


def _sort_key(entry: RankEntry):
    # ascending AIC is best-first for any sign; reciprocal would misorder negatives
    return (entry.aic, entry.feature_id)


def feature_seed(seed: int, feature_id: int) -> int:
    """Per-feature multistart seed, independent of scheduling order."""
    return int(np.random.SeedSequence([int(seed), int(feature_id)]).generate_state(1)[0])


def _fit_one(ds, fid, asym, seed, fit_options):
    try:
        f = fit(ds, default_spec(fid, asym), seed=feature_seed(seed, fid), **fit_options)
    except (CuspFitError, CuspNumericalError) as exc:
        log.warning("cusp fit failed for feature %d: %s", fid, exc)
        return RankEntry(fid, math.inf, 0.0, False, False, str(exc))
    if not math.isfinite(f.aic):
        return RankEntry(fid, math.inf, 0.0, False, False, "non-finite AIC")
    return RankEntry(fid, f.aic, rank_score(f.aic), False, f.converged)


def rank_features(ds: Dataset, n_f: int, t: float = 0.0, asymmetry=None, seed: int = 42,
                  threads: int = 1, progress=None, **fit_options) -> RankingTable:
    """Rank every feature except the asymmetry feature and keep the best ``n_f``.

    Parameters
    ----------
    n_f : int
        Number of features to keep, ``1 <= n_f < N``.
    t : float
        Threshold; a feature with ``0 < AIC`` and ``1/AIC <= t`` is dropped.
        Non-positive AICs are never thresholded.
    asymmetry : int, optional
        Feature id driving the asymmetry control; defaults to the last feature.
    threads : int
        Worker threads for the per-feature fits.  Output does not depend on it.
    progress : callable, optional
        Called as ``progress(feature_id, entry)`` as fits complete.
    """
    N = ds.n_features
    if not 1 <= n_f < N:
        raise RankingError(f"n_f must satisfy 1 <= n_f < {N}, got {n_f}")
    if t < 0:
        raise RankingError(f"threshold must be non-negative, got {t}")
    asym = ds.feature_ids[-1] if asymmetry is None else int(asymmetry)
    if asym not in ds.feature_ids:
        raise DatasetError(f"unknown asymmetry feature id {asym}")
    candidates = [fid for fid in ds.feature_ids if fid != asym]

    def work(fid):
        entry = _fit_one(ds, fid, asym, seed, fit_options)
        if progress is not None:
            progress(fid, entry)
        return entry

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(work, candidates))
    else:
        results = [work(fid) for fid in candidates]
    if all(math.isinf(e.aic) for e in results):
        raise RankingError("cusp fits failed for every candidate feature")

    ordered = sorted(results, key=_sort_key)
    entries = []
    n_kept = 0
    for e in ordered:
        eliminated = math.isinf(e.aic) or (e.aic > 0 and e.rank_score <= t)
        keep = not eliminated and n_kept < n_f
        n_kept += keep
        entries.append(RankEntry(e.feature_id, e.aic, e.rank_score, keep, e.converged, e.error))
    return RankingTable(tuple(entries), float(t), int(n_f), asym,
                        meta={"seed": seed, "n_candidates": len(candidates)})


def _fmt(v: float) -> str:
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return f"{v:.6f}"


def ranking_csv_lines(rt: RankingTable) -> list:
    lines = [",".join(RANKING_HEADER)]
    for e in rt.entries:
        lines.append(f"{e.feature_id},{_fmt(e.aic)},{_fmt(e.rank_score)},{str(e.kept).lower()}")
    if rt.asymmetry_feature is not None and rt.asymmetry_feature not in [
        e.feature_id for e in rt.entries
    ]:
        lines.append(f"{rt.asymmetry_feature},n/a,n/a,false")
    return lines


def export_ranking(rt: RankingTable, path) -> None:
    """Write the table as CSV (``attribute_id,aic,rank,kept``), 6 decimals."""
    with open(path, "w", newline="") as fh:
        fh.write("\n".join(ranking_csv_lines(rt)) + "\n")


def load_ranking(path) -> RankingTable:
    """Read a file written by :func:`export_ranking`.

    Threshold and requested count are not stored; they come back as NaN and
    the number of kept rows.
    """
    if not os.path.isfile(path):
        raise DatasetError(f"no such file: {path}")
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and not r[0].startswith("#")]
    if not rows or tuple(rows[0]) != RANKING_HEADER:
        raise DatasetError(f"{path}: expected header {','.join(RANKING_HEADER)}")
    entries, asym = [], None
    for r in rows[1:]:
        fid = int(r[0])
        if r[1] == "n/a":
            asym = fid
            continue
        entries.append(RankEntry(fid, float(r[1]), float(r[2]), r[3] == "true"))
    return RankingTable(tuple(entries), math.nan, sum(e.kept for e in entries), asym)
