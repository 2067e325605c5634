from pathlib import Path

import numpy as np
import pytest

from mlgcn.graph import Graph, SyntheticSpec, adjacency_from_edges, generate_synthetic

TINY = Path(__file__).resolve().parents[1] / "src" / "mlgcn" / "data" / "tiny"


@pytest.fixture
def tiny_path():
    return TINY


def random_graph(rng, n, d=3, c=3, density=0.25, weighted=False, train_frac=0.5):
    iu, ju = np.triu_indices(n, k=1)
    keep = rng.random(len(iu)) < density
    w = rng.uniform(0.5, 2.0, keep.sum()) if weighted else np.ones(keep.sum())
    adj = adjacency_from_edges(n, zip(iu[keep], ju[keep], w))
    labels = (rng.random((n, c)) < 0.4).astype(float)
    labels[np.arange(n), rng.integers(c, size=n)] = 1.0
    train = rng.random(n) < train_frac
    train[0] = True
    return Graph(adj, rng.standard_normal((n, d)), labels, train, ~train)


@pytest.fixture
def fixture_graph():
    """The n=30, d=8, c=4 graph used for gradient checks."""
    return generate_synthetic(SyntheticSpec(
        n=30, c=4, corr_pairs=((0, 1, 0.8), (2, 3, 0.8)), p_in=0.3, p_out=0.05,
        noise_dims=4, train_fraction=0.5, seed=7,
    ))


def central_difference(f, x, step=1e-5):
    """Numerical gradient of scalar ``f`` at array ``x`` (x is restored afterwards)."""
    grad = np.zeros_like(x)
    for idx in np.ndindex(x.shape):
        orig = x[idx]
        x[idx] = orig + step
        hi = f()
        x[idx] = orig - step
        lo = f()
        x[idx] = orig
        grad[idx] = (hi - lo) / (2 * step)
    return grad


def max_rel_error(a, b):
    return float((np.abs(a - b) / (np.abs(a) + np.abs(b) + 1e-8)).max(initial=0.0))


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
