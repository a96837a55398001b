import numpy as np
import pytest

from zibreg.model import Dataset
from zibreg.simulation import SCENARIO_1, generate_dataset


def random_dataset(rng, n=50, p=5, q=5, scale=1.0):
    X = np.column_stack([np.ones(n), rng.normal(0.0, scale, (n, p - 1))])
    Z = np.column_stack([np.ones(n), rng.normal(0.0, scale, (n, q - 1))])
    y = (rng.random(n) < 0.4).astype(float)
    return Dataset(y=y, X=X, Z=Z)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def scenario1_data():
    return generate_dataset(SCENARIO_1, 500, np.random.default_rng(3))


def write_csv(path, data, xnames=None, znames=None):
    """Write a Dataset (intercepts dropped) as a headed CSV."""
    xnames = xnames or [f"x{j}" for j in range(2, data.p + 1)]
    znames = znames or [f"z{j}" for j in range(2, data.q + 1)]
    with open(path, "w") as fh:
        fh.write(",".join(["y", *xnames, *znames]) + "\n")
        for i in range(data.n):
            vals = [data.y[i], *data.X[i, 1:], *data.Z[i, 1:]]
            fh.write(",".join(repr(float(v)) for v in vals) + "\n")
    return xnames, znames


# Acceptance results, printed as one line per criterion at the end of the run.
ACCEPTANCE = {}


@pytest.fixture
def acceptance():
    def record(number, passed, detail):
        ACCEPTANCE[number] = (bool(passed), detail)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        passed, detail = ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}")
