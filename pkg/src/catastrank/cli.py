"""Command line entry point: ``catastrank <subcommand> [flags]``.

Every flag may also come from a ``key=value`` config file (``--config``)
or from an environment variable ``CATASTRANK_<FLAG>`` (upper case, dashes
as underscores).  Precedence: flag > environment > config file > default.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys

from . import __version__

EXIT_OK, EXIT_FAIL, EXIT_PARTIAL, EXIT_USAGE = 0, 1, 2, 64
ENV_PREFIX = "CATASTRANK_"

log = logging.getLogger("catastrank")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _int_or_all(v):
    return v if str(v) == "all" else int(v)


def _int_list(v):
    return [int(x) for x in str(v).replace(" ", "").split(",") if x]


def _str_list(v):
    return [x for x in str(v).replace(" ", "").split(",") if x]


def _outcome(v):
    return v


COMMON = [
    ("--input", str, None, True, "input CSV (header row, numeric cells)"),
    ("--outcome", _outcome, None, False, "outcome column name or 0-based index (default: last)"),
    ("--seed", int, 42, False, "seed for folds, multistart and RELIEF sampling"),
    ("--threads", int, None, False, "worker threads (default: available CPUs)"),
]
CUSP = [
    ("--threshold", float, 0.0, False, "drop features with 0 < AIC and 1/AIC <= threshold"),
    ("--asymmetry", int, None, False, "feature id used as asymmetry covariate (default: last)"),
]
RELIEF = [
    ("--m", _int_or_all, "all", False, "sampled instances, or 'all'"),
    ("--tau", float, 0.0, False, "relevance threshold in [0, 1]"),
    ("--bins", int, 2, False, "equal-frequency outcome bins"),
]
EVAL = [
    ("--ranking", str, None, False, "precomputed ranking CSV (skips ranking)"),
    ("--regressors", _str_list, ["linear", "knn", "tree"], False, "comma list of linear,knn,tree"),
    ("--counts", _int_list, None, False, "strictly decreasing feature counts (default: all)"),
    ("--folds", int, 10, False, "cross-validation folds"),
    ("--knn-k", int, 3, False, "neighbours for knn"),
    ("--tree-min-leaf", int, 5, False, "minimum samples per tree leaf"),
    ("--tree-prune", float, 0.2, False, "holdout share for reduced-error pruning"),
    ("--out", str, None, False, "report CSV path (default: standard output)"),
    ("--plot-dir", str, None, False, "directory for per-regressor TSV plot data"),
]

COMMANDS = {
    "rank": (
        "rank features by reciprocal AIC of cusp fits",
        COMMON + CUSP + [
            ("--top", int, None, True, "number of features to keep"),
            ("--out", str, None, True, "ranking CSV path"),
        ],
    ),
    "relief": (
        "RELIEF weights on an equal-frequency binned outcome",
        COMMON + RELIEF + [("--out", str, None, True, "weights CSV path")],
    ),
    "select": (
        "write the outcome plus the top-ranked features of a ranking file",
        COMMON + [
            ("--ranking", str, None, True, "ranking CSV from 'rank' or 'relief'"),
            ("--top", int, None, False, "features to keep (default: rows marked kept/relevant)"),
            ("--out", str, None, True, "output CSV path (raw units)"),
        ],
    ),
    "eval": (
        "cross-validated regression error versus feature count",
        COMMON + CUSP + RELIEF + [("--ranker", str, "cusp", False, "cusp or relief")] + EVAL,
    ),
    "compare": (
        "evaluate two rankers side by side on identical folds",
        COMMON + CUSP + RELIEF + [("--rankers", _str_list, ["cusp", "relief"], False,
                                   "two rankers, comma separated")]
        + [o for o in EVAL if o[0] != "--ranking"],
    ),
    "cusp-diag": (
        "print discriminant, equilibria and log-normalizer of the cusp",
        [
            ("--alpha", float, None, True, "asymmetry control"),
            ("--beta", float, None, True, "bifurcation control"),
        ],
    ),
}


def build_parser():
    parser = _Parser(
        prog="catastrank",
        description="Cusp-catastrophe feature ranking with a RELIEF baseline "
                    "and a cross-validated regression harness.",
    )
    parser.add_argument("--version", action="version", version=f"catastrank {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="command")
    for name, (helptext, options) in COMMANDS.items():
        p = sub.add_parser(name, help=helptext, description=helptext)
        p.error = parser.error
        p.add_argument("--config", default=None, help="key=value config file")
        for flag, _, default, required, h in options:
            extra = " (required)" if required else f" (default: {default})"
            p.add_argument(flag, default=argparse.SUPPRESS, help=h + extra)
    return parser


def resolve(command, ns, environ=None):
    """Merge flags, environment, config file and defaults into typed values."""
    from .harness import read_config_file

    environ = os.environ if environ is None else environ
    given = vars(ns)
    cfg_path = given.get("config") or environ.get(ENV_PREFIX + "CONFIG")
    file_vals = {}
    if cfg_path:
        try:
            file_vals = read_config_file(cfg_path)
        except (OSError, ValueError) as exc:
            raise UsageError(f"cannot read config file: {exc}") from None
    options = COMMANDS[command][1]
    known = {flag[2:].replace("-", "_") for flag, *_ in options}
    unknown = sorted(set(file_vals) - known)
    if unknown:
        raise UsageError(f"unknown keys in config file: {unknown}")
    out = {}
    for flag, conv, default, required, _ in options:
        dest = flag[2:].replace("-", "_")
        env_key = ENV_PREFIX + dest.upper()
        if dest in given:
            raw = given[dest]
        elif env_key in environ:
            raw = environ[env_key]
        elif dest in file_vals:
            raw = file_vals[dest]
        else:
            if required:
                raise UsageError(f"{command}: missing required option {flag}")
            out[dest] = default
            continue
        try:
            out[dest] = conv(raw)
        except (TypeError, ValueError):
            raise UsageError(f"{command}: invalid value for {flag}: {raw!r}") from None
    if "threads" in out and out["threads"] is None:
        out["threads"] = os.cpu_count() or 1
    if out.get("threads") is not None and out["threads"] < 1:
        raise UsageError("--threads must be >= 1")
    return out


def _experiment_config(o, ranker, ranking=None):
    from .harness import ExperimentConfig

    return ExperimentConfig(
        input=o["input"], outcome=o["outcome"], ranker=ranker,
        regressors=tuple(o["regressors"]), feature_counts=tuple(o["counts"] or ()),
        n_folds=o["folds"], seed=o["seed"], ranking_file=ranking,
        knn_k=o["knn_k"], tree_min_leaf=o["tree_min_leaf"], tree_prune=o["tree_prune"],
        cusp_threshold=o["threshold"], asymmetry=o["asymmetry"],
        relief_m=o["m"], relief_tau=o["tau"], relief_bins=o["bins"], threads=o["threads"],
    )


def _emit(text, path):
    if path:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_rank(o):
    from .dataset import load_csv
    from .ranker import export_ranking, rank_features

    ds = load_csv(o["input"], o["outcome"])
    rt = rank_features(ds, o["top"], o["threshold"], o["asymmetry"], o["seed"],
                       threads=o["threads"],
                       progress=lambda fid, e: log.info("feature %d: aic=%s", fid, e.aic))
    export_ranking(rt, o["out"])
    return EXIT_OK


def cmd_relief(o):
    from .dataset import load_csv
    from .relief import export_weights, relief_rank

    ds = load_csv(o["input"], o["outcome"])
    rw = relief_rank(ds, o["m"], o["tau"], o["bins"], o["seed"])
    log.info("outcome discretized into %d equal-frequency bins", rw.class_bins)
    export_weights(rw, o["out"])
    return EXIT_OK


def cmd_select(o):
    import csv

    import numpy as np

    from .dataset import OUTCOME, load_csv, select_features

    ds = load_csv(o["input"], o["outcome"])
    with open(o["ranking"], newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and not r[0].startswith("#")]
    header, body = rows[0], rows[1:]
    if o["top"] is not None:
        keep = [int(r[0]) for r in body[: o["top"]]]
    else:
        keep = [int(r[0]) for r in body if r[-1] == "true"]
    sub = select_features(ds, keep)
    names = list(sub.feature_names) + [sub.outcome_name]
    cols = [sub.denormalize(f) for f in sub.feature_ids] + [sub.denormalize(OUTCOME)]
    table = np.column_stack(cols)
    with open(o["out"], "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(names)
        for row in table:
            w.writerow([repr(float(v)) for v in row])
    return EXIT_OK


def cmd_eval(o):
    from .harness import emit_plot_data, run_experiment

    cfg = _experiment_config(o, o["ranker"], o["ranking"])
    report = run_experiment(cfg)
    _emit(report.csv_text(), o["out"])
    if o["out"]:
        sys.stdout.write(report.text_table())
    if o["plot_dir"]:
        emit_plot_data(report, o["plot_dir"])
    return EXIT_PARTIAL if report.partial else EXIT_OK


def cmd_compare(o):
    from .harness import compare_rankers, emit_plot_data

    rankers = o["rankers"]
    if len(rankers) != 2:
        raise UsageError("--rankers needs exactly two entries")
    cfg_a = _experiment_config(o, rankers[0])
    cfg_b = _experiment_config(o, rankers[1])
    report = compare_rankers(cfg_a, cfg_b)
    _emit(report.csv_text(), o["out"])
    if o["out"]:
        sys.stdout.write(report.text_table())
    if o["plot_dir"]:
        emit_plot_data(report, o["plot_dir"])
    return EXIT_PARTIAL if report.partial else EXIT_OK


def cmd_cusp_diag(o):
    from .cusp_model import CuspParams, discriminant, equilibria, log_normalizer

    p = CuspParams(o["alpha"], o["beta"])
    eq = equilibria(p)
    out = [
        f"alpha: {p.alpha:.6f}",
        f"beta: {p.beta:.6f}",
        f"discriminant: {discriminant(p):.6f}",
        "equilibria: " + ", ".join(f"{r:.6f} ({s})" for r, s in zip(eq.roots, eq.stability)),
        f"log_normalizer: {log_normalizer(p):.6f}",
    ]
    sys.stdout.write("\n".join(out) + "\n")
    return EXIT_OK


HANDLERS = {
    "rank": cmd_rank, "relief": cmd_relief, "select": cmd_select,
    "eval": cmd_eval, "compare": cmd_compare, "cusp-diag": cmd_cusp_diag,
}


def main(argv=None) -> int:
    logging.basicConfig(stream=sys.stderr, level=logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
        if ns.command is None:
            parser.print_help(sys.stderr)
            return EXIT_USAGE
        opts = resolve(ns.command, ns)
    except UsageError as exc:
        sys.stderr.write(f"{exc}\n")
        return EXIT_USAGE
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    sys.stderr.write(
        f"effective config ({ns.command}): "
        + " ".join(f"{k}={v}" for k, v in sorted(opts.items())) + "\n"
    )
    from .dataset import DatasetError
    from .harness import ConfigError

    try:
        return HANDLERS[ns.command](opts)
    except UsageError as exc:
        sys.stderr.write(f"{exc}\n")
        return EXIT_USAGE
    except ConfigError as exc:
        sys.stderr.write(f"configuration error: {exc}\n")
        return EXIT_USAGE
    except (DatasetError, OSError, ArithmeticError, RuntimeError, ValueError) as exc:
        log.error("%s", exc)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
