import numpy as np
import pytest

from regclust.graph_core import AffinityGraph


def graph_from_edges(n, edges, weight=1.0):
    w = np.zeros((n, n))
    for i, j in edges:
        w[i, j] = w[j, i] = weight
    return AffinityGraph(w)


def random_weighted(n, seed, binary=False, dens=0.5):
    rng = np.random.default_rng(seed)
    u = rng.random((n, n))
    w = (u < dens).astype(float) if binary else u
    w = np.triu(w, 1)
    return AffinityGraph(w + w.T)


def block_pair_graph(half=4):
    """vs = A1 u A2, vt = B1 u B2; complete A1-B1 and A2-B2, nothing else."""
    a1 = list(range(half))
    a2 = list(range(half, 2 * half))
    b1 = list(range(2 * half, 3 * half))
    b2 = list(range(3 * half, 4 * half))
    edges = [(i, j) for i in a1 for j in b1] + [(i, j) for i in a2 for j in b2]
    return graph_from_edges(4 * half, edges), a1 + a2, b1 + b2


@pytest.fixture
def block_pair():
    return block_pair_graph()


ACCEPTANCE_LINES = []


def report(number, ok, text):
    """Record one acceptance line; ``ok`` is True, False or None (skipped)."""
    tag = {True: "PASS", False: "FAIL", None: "SKIP"}[ok]
    line = f"criterion {number:>2} [{tag}] {text}"
    ACCEPTANCE_LINES.append((number, line))
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
