import numpy as np
import pytest

from bismooth import SolverConfig, run_bicg, run_bicr, run_transform_concise, run_transform_original
from bismooth.linalg import toeplitz_test_matrix


def toeplitz_system(n):
    A = toeplitz_test_matrix(n)
    b = A.apply(np.ones(n))
    return A, b, np.zeros(n), b.copy()


@pytest.fixture(scope="session")
def toeplitz60():
    return toeplitz_system(60)


@pytest.fixture(scope="session")
def toeplitz200():
    return toeplitz_system(200)


@pytest.fixture(scope="session")
def full_cfg():
    return SolverConfig(tol=1e-12, max_iter=1000, store="full")


@pytest.fixture(scope="session")
def runs60(toeplitz60, full_cfg):
    A, b, x0, rt0 = toeplitz60
    return {
        "bicg": run_bicg(A, b, x0, rt0, full_cfg),
        "bicr": run_bicr(A, b, x0, rt0, full_cfg),
        "orig": run_transform_original(A, b, x0, rt0, full_cfg),
        "concise": run_transform_concise(A, b, x0, rt0, full_cfg),
    }


@pytest.fixture(scope="session")
def runs200(toeplitz200, full_cfg):
    A, b, x0, rt0 = toeplitz200
    return {
        "bicg": run_bicg(A, b, x0, rt0, full_cfg),
        "bicr": run_bicr(A, b, x0, rt0, full_cfg),
        "orig": run_transform_original(A, b, x0, rt0, full_cfg),
        "concise": run_transform_concise(A, b, x0, rt0, full_cfg),
    }


def pytest_terminal_summary(terminalreporter):
    import sys

    module = sys.modules.get("test_acceptance")
    results = getattr(module, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for number in sorted(results):
            terminalreporter.write_line(results[number])
