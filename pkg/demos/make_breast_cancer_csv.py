"""Write the Wisconsin breast cancer table (569 x 30) as a catastrank input CSV.

The copy bundled with scikit-learn is used, so no download is needed.  The
layout puts the binary diagnosis first, the remaining 29 measurements after
it, and ``mean radius`` last so that it is the default outcome.

    python demos/make_breast_cancer_csv.py demos/data/breast_cancer.csv
"""

import csv
import sys

from sklearn.datasets import load_breast_cancer

OUTCOME = "mean radius"


def write(path):
    bunch = load_breast_cancer()
    names = [n.replace(" ", "_") for n in bunch.feature_names]
    j = list(bunch.feature_names).index(OUTCOME)
    order = [k for k in range(len(names)) if k != j] + [j]
    header = ["diagnosis"] + [names[k] for k in order]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row, target in zip(bunch.data, bunch.target):
            w.writerow([int(target)] + [repr(float(row[k])) for k in order])
    return path


if __name__ == "__main__":
    write(sys.argv[1] if len(sys.argv) > 1 else "breast_cancer.csv")
