"""Cross-validated evaluation of ranked feature subsets.

A ranking is computed once on the full table; for every requested feature
count the top features are cut from it and each regressor is scored by
k-fold cross-validation with one fold plan shared by all cells.  Because
the ranking sees every sample, errors carry the usual filter-selection
optimism; the report says so in its provenance block.
"""

from __future__ import annotations

import hashlib
import io
import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from . import __version__
from .dataset import Dataset, load_csv, make_folds, select_features
from .ranker import load_ranking, rank_features
from .regress import REGRESSORS, fit_regressor, mae, rmse
from .relief import load_weights_order, relief_rank

log = logging.getLogger(__name__)

RANKERS = ("cusp", "relief")
SELECTION_CAVEAT = (
    "ranking computed once on the full dataset outside the CV loop; "
    "errors include filter-selection bias"
)


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    input: str
    outcome: object = None
    ranker: str = "cusp"
    regressors: tuple = ("linear", "knn", "tree")
    feature_counts: tuple = ()
    n_folds: int = 10
    seed: int = 42
    ranking_file: str = None
    knn_k: int = 3
    tree_min_leaf: int = 5
    tree_prune: float = 0.2
    cusp_threshold: float = 0.0
    asymmetry: int = None
    relief_m: object = "all"
    relief_tau: float = 0.0
    relief_bins: int = 2
    threads: int = 1

    def __post_init__(self):
        self.regressors = tuple(self.regressors)
        self.feature_counts = tuple(int(c) for c in self.feature_counts)
        self.validate()

    def validate(self, n_features=None):
        if self.ranker not in RANKERS:
            raise ConfigError(f"ranker must be one of {RANKERS}, got {self.ranker!r}")
        if not self.regressors:
            raise ConfigError("no regressors given")
        bad = [r for r in self.regressors if r not in REGRESSORS]
        if bad:
            raise ConfigError(f"unknown regressors {bad}; choose from {REGRESSORS}")
        c = self.feature_counts
        if any(a <= b for a, b in zip(c, c[1:])):
            raise ConfigError(f"feature_counts must be strictly decreasing, got {list(c)}")
        if c and c[-1] < 1:
            raise ConfigError("feature counts must be positive")
        if n_features is not None and c and c[0] > n_features:
            raise ConfigError(f"feature count {c[0]} exceeds the {n_features} available features")
        if self.n_folds < 2:
            raise ConfigError("n_folds must be >= 2")

    def echo(self) -> dict:
        """Settings that affect results (worker count excluded)."""
        d = asdict(self)
        d.pop("threads")
        return d


@dataclass(frozen=True)
class EvalRow:
    ranker: str
    regressor: str
    feature_count: int
    mae: float
    rmse: float
    fold_count: int
    seed: int
    status: str = "ok"
    reason: str = ""


@dataclass
class EvalReport:
    rows: list
    provenance: dict = field(default_factory=dict)
    ranking: list = field(default_factory=list)

    @property
    def partial(self) -> bool:
        return any(r.status != "ok" for r in self.rows)

    def cell(self, regressor, feature_count) -> EvalRow:
        for r in self.rows:
            if r.regressor == regressor and r.feature_count == feature_count:
                return r
        raise KeyError((regressor, feature_count))

    def csv_text(self) -> str:
        out = io.StringIO()
        for k, v in self.provenance.items():
            out.write(f"# {k}: {v}\n")
        out.write("ranker,regressor,feature_count,mae,rmse,fold_count,seed,status,reason\n")
        for r in self.rows:
            out.write(
                f"{r.ranker},{r.regressor},{r.feature_count},{_f6(r.mae)},{_f6(r.rmse)},"
                f"{r.fold_count},{r.seed},{r.status},{r.reason}\n"
            )
        return out.getvalue()

    def text_table(self) -> str:
        """Aligned table: one line per regressor, one column per feature count."""
        counts = sorted({r.feature_count for r in self.rows}, reverse=True)
        regs = list(dict.fromkeys(r.regressor for r in self.rows))
        ranker = self.rows[0].ranker if self.rows else ""
        head = [f"MAE ({ranker})"] + [str(c) for c in counts]
        lines = [head]
        for reg in regs:
            line = [reg]
            for c in counts:
                try:
                    cell = self.cell(reg, c)
                    line.append(_f6(cell.mae) if cell.status == "ok" else "failed")
                except KeyError:
                    line.append("-")
            lines.append(line)
        return _align(lines)

    def write(self, path) -> None:
        with open(path, "w", newline="") as fh:
            fh.write(self.csv_text())


@dataclass
class ComparisonReport:
    """Two rankers evaluated on identical folds; ``winner`` compares MAE."""

    labels: tuple
    reports: tuple
    provenance: dict = field(default_factory=dict)

    @property
    def rows(self):
        a, b = self.reports
        out = []
        for ra in a.rows:
            rb = b.cell(ra.regressor, ra.feature_count)
            if ra.status != "ok" or rb.status != "ok":
                winner = "n/a"
            elif ra.mae < rb.mae:
                winner = self.labels[0]
            elif rb.mae < ra.mae:
                winner = self.labels[1]
            else:
                winner = "tie"
            out.append((ra.regressor, ra.feature_count, ra, rb, winner))
        return out

    @property
    def partial(self) -> bool:
        return any(r.partial for r in self.reports)

    def csv_text(self) -> str:
        la, lb = self.labels
        out = io.StringIO()
        for k, v in self.provenance.items():
            out.write(f"# {k}: {v}\n")
        out.write(f"regressor,feature_count,mae_{la},mae_{lb},rmse_{la},rmse_{lb},winner\n")
        for reg, c, ra, rb, winner in self.rows:
            out.write(
                f"{reg},{c},{_f6(ra.mae)},{_f6(rb.mae)},{_f6(ra.rmse)},{_f6(rb.rmse)},{winner}\n"
            )
        return out.getvalue()

    def text_table(self) -> str:
        la, lb = self.labels
        lines = [["regressor", "features", f"mae_{la}", f"mae_{lb}", "winner"]]
        for reg, c, ra, rb, winner in self.rows:
            lines.append([reg, str(c), _f6(ra.mae), _f6(rb.mae), winner])
        return _align(lines)

    def write(self, path) -> None:
        with open(path, "w", newline="") as fh:
            fh.write(self.csv_text())


def _f6(v) -> str:
    if v is None or (isinstance(v, float) and math.isnan(v)):
        return "nan"
    return f"{v:.6f}"


def _align(lines) -> str:
    widths = [max(len(row[i]) for row in lines) for i in range(len(lines[0]))]
    return "\n".join(
        "  ".join(cell.rjust(w) if i else cell.ljust(w) for i, (cell, w) in enumerate(zip(row, widths)))
        for row in lines
    ) + "\n"


def file_digest(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def compute_ranking(ds: Dataset, cfg: ExperimentConfig) -> list:
    """Feature ids best-first according to the configured ranker or ranking file."""
    if cfg.ranking_file:
        path = cfg.ranking_file
        with open(path) as fh:
            header = next(line for line in fh if not line.startswith("#"))
        if header.startswith("attribute_id,aic"):
            order = load_ranking(path).order()
        else:
            order = load_weights_order(path)
        missing = [f for f in ds.feature_ids if f not in order]
        unknown = [f for f in order if f not in ds.feature_ids]
        if unknown:
            raise ConfigError(f"ranking file lists unknown feature ids {unknown}")
        return order + missing
    if cfg.ranker == "cusp":
        rt = rank_features(ds, ds.n_features - 1, cfg.cusp_threshold, cfg.asymmetry,
                           cfg.seed, threads=cfg.threads)
        return rt.order()
    rw = relief_rank(ds, cfg.relief_m, cfg.relief_tau, cfg.relief_bins, cfg.seed)
    return rw.order()


def cross_validate(ds: Dataset, regressor: str, folds, cfg: ExperimentConfig):
    """Pooled out-of-fold predictions -> ``(mae, rmse)``."""
    pred = np.empty(ds.n_samples)
    for k in range(folds.n_folds):
        tr, te = folds.split(k)
        model = fit_regressor(regressor, ds.X[tr], ds.y[tr], knn_k=cfg.knn_k,
                              tree_min_leaf=cfg.tree_min_leaf, tree_prune=cfg.tree_prune,
                              seed=cfg.seed + k)
        pred[te] = model.predict(ds.X[te])
    return mae(pred, ds.y), rmse(pred, ds.y)


def run_experiment(cfg: ExperimentConfig, ds: Dataset = None) -> EvalReport:
    """Rank once, then cross-validate every (regressor, feature count) cell.

    A failing cell is reported with ``status="failed"`` and its reason; the
    remaining cells are still evaluated.
    """
    if ds is None:
        ds = load_csv(cfg.input, cfg.outcome)
    counts = cfg.feature_counts or (ds.n_features,)
    cfg.validate(ds.n_features)
    order = compute_ranking(ds, cfg)
    folds = make_folds(ds, cfg.n_folds, cfg.seed)
    ranker_label = "file" if cfg.ranking_file else cfg.ranker

    cells = [(c, reg) for c in counts for reg in cfg.regressors]

    def evaluate(cell):
        c, reg = cell
        try:
            # column order follows the source table so a cell depends only on the set
            chosen = set(order[:c])
            sub = select_features(ds, [f for f in ds.feature_ids if f in chosen])
            m, r = cross_validate(sub, reg, folds, cfg)
            if not (math.isfinite(m) and math.isfinite(r)):
                raise ArithmeticError("non-finite error")
            return EvalRow(ranker_label, reg, c, m, r, folds.n_folds, cfg.seed)
        except Exception as exc:  # recorded per cell, report still emitted
            log.warning("cell (%s, %d) failed: %s", reg, c, exc)
            return EvalRow(ranker_label, reg, c, math.nan, math.nan, folds.n_folds, cfg.seed,
                           "failed", str(exc).replace(",", ";").replace("\n", " "))

    if cfg.threads > 1:
        with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
            rows = list(pool.map(evaluate, cells))
    else:
        rows = [evaluate(c) for c in cells]

    provenance = {
        "tool": f"catastrank {__version__}",
        "input_sha256": file_digest(cfg.input) if cfg.input and os.path.isfile(cfg.input) else "n/a",
        "n_samples": ds.n_samples,
        "n_features": ds.n_features,
        "outcome": ds.outcome_name,
        "fold_plan": folds.digest(),
        "ranking": " ".join(str(f) for f in order),
        "config": " ".join(f"{k}={v}" for k, v in cfg.echo().items()),
        "note": SELECTION_CAVEAT,
    }
    return EvalReport(rows, provenance, order)


_SHARED = ("input", "outcome", "n_folds", "seed", "regressors", "feature_counts")


def compare_rankers(cfg_a: ExperimentConfig, cfg_b: ExperimentConfig) -> ComparisonReport:
    """Evaluate two configurations side by side on the same folds."""
    diffs = [k for k in _SHARED if getattr(cfg_a, k) != getattr(cfg_b, k)]
    if diffs:
        raise ConfigError(f"configurations differ in shared fields {diffs}")
    ds = load_csv(cfg_a.input, cfg_a.outcome)
    ra = run_experiment(cfg_a, ds)
    rb = run_experiment(cfg_b, ds)
    la = "file" if cfg_a.ranking_file else cfg_a.ranker
    lb = "file" if cfg_b.ranking_file else cfg_b.ranker
    if la == lb:
        la, lb = la + "_a", lb + "_b"
    prov = dict(ra.provenance)
    prov.pop("ranking", None)
    prov.pop("config", None)
    prov[f"ranking_{la}"] = ra.provenance["ranking"]
    prov[f"ranking_{lb}"] = rb.provenance["ranking"]
    prov[f"config_{la}"] = ra.provenance["config"]
    prov[f"config_{lb}"] = rb.provenance["config"]
    return ComparisonReport((la, lb), (ra, rb), prov)


def emit_plot_data(report, path) -> list:
    """Write one tab-separated file per regressor into directory ``path``.

    Columns are ``feature_count, mae, rmse`` for a single report and
    ``feature_count, mae_<a>, mae_<b>, rmse_<a>, rmse_<b>`` for a comparison,
    rows ascending by feature count.  Returns the written paths.
    """
    os.makedirs(path, exist_ok=True)
    written = []
    if isinstance(report, ComparisonReport):
        la, lb = report.labels
        by_reg = {}
        for reg, c, ra, rb, _ in report.rows:
            by_reg.setdefault(reg, []).append((c, ra.mae, rb.mae, ra.rmse, rb.rmse))
        header = f"feature_count\tmae_{la}\tmae_{lb}\trmse_{la}\trmse_{lb}"
    else:
        if not report.rows:
            raise ValueError("empty report")
        by_reg = {}
        for r in report.rows:
            by_reg.setdefault(r.regressor, []).append((r.feature_count, r.mae, r.rmse))
        header = "feature_count\tmae\trmse"
    for reg, items in by_reg.items():
        fn = os.path.join(path, f"{reg}.tsv")
        with open(fn, "w", newline="") as fh:
            fh.write(header + "\n")
            for item in sorted(items):
                fh.write("\t".join([str(item[0])] + [_f6(v) for v in item[1:]]) + "\n")
        written.append(fn)
    return written


def read_config_file(path) -> dict:
    """Parse ``key=value`` lines; ``#`` starts a comment."""
    out = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key=value")
            k, v = line.split("=", 1)
            out[k.strip().replace("-", "_")] = v.strip()
    return out


CONFIG_KEYS = tuple(f.name for f in fields(ExperimentConfig))
