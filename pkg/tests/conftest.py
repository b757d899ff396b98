import numpy as np
import pytest
from scipy.stats import ortho_group

from prodgraph import Graph


def random_orthogonal(d, rng):
    return ortho_group.rvs(d, random_state=rng)


def graph_with_spectrum(values, rng):
    """Symmetric "adjacency" with prescribed eigenvalues and random eigenvectors."""
    values = np.asarray(values, dtype=float)
    q = random_orthogonal(values.size, rng)
    a = (q * values) @ q.T
    return Graph((a + a.T) / 2)


def distinct_spectrum(d, rng, spread=1.0):
    """``d`` eigenvalues with pairwise gaps of at least ``spread / (2 d)``."""
    base = np.linspace(-spread, spread, d)
    return base + rng.uniform(-0.2, 0.2, d) * spread / d


def match_columns(estimate, truth):
    """Per-truth-column |inner product| under the best signed matching."""
    from scipy.optimize import linear_sum_assignment

    w = np.abs(estimate.T @ truth)
    r, c = linear_sum_assignment(w, maximize=True)
    return w[r, c]


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
