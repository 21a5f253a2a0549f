import math
import sys

import numpy as np
import pytest

from fillrad import samplers
from fillrad.metric_core import validate_metric


def random_metric(seed: int, n: int = 8, ties: bool = False, dyadic: bool = False) -> np.ndarray:
    """Perturbed Euclidean metric (or small-integer metric with many ties), closed under shortest paths.

    With ``dyadic`` the entries are multiples of 1/64, so the closure is computed
    without rounding and the triangle inequality holds exactly.
    """
    rng = np.random.default_rng(seed)
    if ties:
        d = rng.integers(1, 4, size=(n, n)).astype(float)
    else:
        X = rng.normal(size=(n, 3))
        d = np.linalg.norm(X[:, None] - X[None, :], axis=-1) * rng.uniform(0.9, 1.1, size=(n, n))
    d = np.minimum(d, d.T)
    if dyadic:
        d = np.maximum(np.round(d * 64), 1) / 64
    np.fill_diagonal(d, 0.0)
    for k in range(n):
        d = np.minimum(d, d[:, k:k + 1] + d[k:k + 1, :])
    return d


@pytest.fixture
def make_metric():
    def make(seed, n=8, ties=False):
        return validate_metric(random_metric(seed, n, ties))
    return make


@pytest.fixture(scope="session")
def circle128():
    return samplers.sample_circle(2 * math.pi, 128)


@pytest.fixture(scope="session")
def sphere150():
    return samplers.sample_sphere(2, 150, 0)


@pytest.fixture(scope="session")
def torus():
    return samplers.sample_flat_torus(2 * math.pi, 1.2 * math.pi, 32, 20)


@pytest.fixture(scope="session")
def small_torus():
    return samplers.sample_flat_torus(2 * math.pi, 1.2 * math.pi, 10, 6)


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    lines = getattr(module, "ACCEPTANCE_LINES", None)
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(lines):
        terminalreporter.write_line(lines[number])
