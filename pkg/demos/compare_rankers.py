"""
Cusp ranking against RELIEF
===========================

Cross-validate linear regression and k-nearest neighbours on the top
features chosen by each ranker.  The two rankers share one fold plan, so
the per-cell differences come from the selected subsets alone.
"""

import os
import tempfile

from make_breast_cancer_csv import write

from catastrank.harness import ExperimentConfig, compare_rankers

path = write(os.path.join(tempfile.mkdtemp(), "breast_cancer.csv"))

common = dict(input=path, regressors=("linear", "knn"), feature_counts=(30, 20, 10, 5),
              n_folds=10, seed=42, threads=os.cpu_count() or 1)
report = compare_rankers(ExperimentConfig(ranker="cusp", **common),
                         ExperimentConfig(ranker="relief", **common))

print(report.text_table())

# The rankings themselves live in the provenance block.
for key in ("ranking_cusp", "ranking_relief"):
    print(key, report.provenance[key].split()[:10], "...")
