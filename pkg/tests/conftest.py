import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))
sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "demos"))

ACCEPTANCE = []


def record(number, description, passed, detail=""):
    ACCEPTANCE.append((number, description, bool(passed), detail))


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number, description, passed, detail in sorted(ACCEPTANCE):
        flag = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"[{flag}] {number}. {description} :: {detail}")


@pytest.fixture(scope="session")
def breast_cancer_csv(tmp_path_factory):
    from make_breast_cancer_csv import write

    path = tmp_path_factory.mktemp("data") / "breast_cancer.csv"
    return str(write(str(path)))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def write_csv(path, header, rows):
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for r in rows:
            fh.write(",".join(str(v) for v in r) + "\n")
    return str(path)
