"""Feature ranking with stochastic cusp catastrophe fits, plus a RELIEF baseline
and a cross-validation harness for regression error versus feature count."""

__version__ = "0.1.0"

from .cusp_fit import CuspFit, CuspRegressionSpec, aic_of, fit, negative_log_likelihood
from .cusp_model import (
    CuspParams,
    density,
    discriminant,
    equilibria,
    log_normalizer,
    potential,
)
from .dataset import Dataset, FoldPlan, load_csv, make_folds, select_features
from .harness import ExperimentConfig, compare_rankers, emit_plot_data, run_experiment
from .ranker import RankingTable, export_ranking, load_ranking, rank_features
from .regress import fit_knn, fit_linear, fit_tree, mae, predict_knn, rmse
from .relief import ReliefWeights, diff, relief_rank

__all__ = [
    "CuspFit", "CuspParams", "CuspRegressionSpec", "Dataset", "ExperimentConfig",
    "FoldPlan", "RankingTable", "ReliefWeights", "aic_of", "compare_rankers", "density",
    "diff", "discriminant", "emit_plot_data", "equilibria", "export_ranking", "fit",
    "fit_knn", "fit_linear", "fit_tree", "load_csv", "load_ranking", "log_normalizer",
    "mae", "make_folds", "negative_log_likelihood", "potential", "predict_knn",
    "rank_features", "relief_rank", "rmse", "run_experiment", "select_features",
]
