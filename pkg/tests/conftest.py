import numpy as np
import pytest

from gcrf.core import ModelParams, SufficientStats, compute_stats, Dataset

ACCEPTANCE_LINES = []


def random_stats(rng, n, p, m=20):
    x = rng.standard_normal((m, n))
    y = x @ rng.standard_normal((n, p)) + rng.standard_normal((m, p))
    return compute_stats(Dataset(x, y))


def random_params(rng, n, p):
    b = rng.standard_normal((p, p))
    lam = b @ b.T / p + 0.5 * np.eye(p)
    return ModelParams(lam, 0.5 * rng.standard_normal((n, p)))


def central_difference(fun, point, h=1e-5):
    """Entrywise central differences of scalar ``fun`` at array ``point``."""
    point = np.asarray(point, dtype=float)
    grad = np.zeros_like(point)
    for idx in np.ndindex(point.shape):
        up, down = point.copy(), point.copy()
        up[idx] += h
        down[idx] -= h
        grad[idx] = (fun(up) - fun(down)) / (2 * h)
    return grad


def rel_error(approx, exact):
    return float(np.linalg.norm(approx - exact) / max(np.linalg.norm(exact), 1.0))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def scalar_stats():
    # closed-form optimum: lam = 1, theta = -1, objective 1
    return SufficientStats([[2.0]], [[1.0]], [[1.0]], m=1)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
