"""Dense weighted graphs, density arithmetic and synthetic generators."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

BINARY = "binary"
WEIGHTED = "weighted"


class PreconditionError(ValueError):
    """Raised when an operation is called outside its documented domain."""


@dataclass(frozen=True, eq=False)
class AffinityGraph:
    """Symmetric graph on ``n`` vertices with edge weights in ``[0, 1]``.

    The weight matrix is copied and frozen on construction, so a graph can be
    shared freely between threads.

    Parameters
    ----------
    weights : array-like of shape (n, n)
        Symmetric matrix with zero diagonal.
    mode : {"binary", "weighted"}, default=None
        Inferred from the entries when omitted.
    """

    weights: np.ndarray
    mode: str = None
    _edge_total: float = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        w = np.array(self.weights, dtype=np.float64, copy=True)
        if w.ndim != 2 or w.shape[0] != w.shape[1]:
            raise PreconditionError(f"weights must be square, got shape {w.shape}")
        if not np.all(np.isfinite(w)):
            raise PreconditionError("weights contain non-finite values")
        if w.min(initial=0.0) < 0.0 or w.max(initial=0.0) > 1.0:
            raise PreconditionError("weights must lie in [0, 1]")
        if np.any(np.diag(w) != 0.0):
            raise PreconditionError("weights must have a zero diagonal")
        if not np.array_equal(w, w.T):
            raise PreconditionError("weights must be symmetric")
        is_binary = bool(np.all((w == 0.0) | (w == 1.0)))
        mode = self.mode
        if mode is None:
            mode = BINARY if is_binary else WEIGHTED
        if mode not in (BINARY, WEIGHTED):
            raise PreconditionError(f"unknown mode {mode!r}")
        if mode == BINARY and not is_binary:
            raise PreconditionError("binary mode requires 0/1 weights")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "mode", mode)
        object.__setattr__(self, "_edge_total", float(w.sum()) / 2.0)

    @property
    def n(self) -> int:
        return self.weights.shape[0]

    @property
    def edge_weight(self) -> float:
        """Total edge weight (number of edges for binary graphs)."""
        return self._edge_total

    def permuted(self, order) -> "AffinityGraph":
        """Relabel vertices so that new vertex ``i`` is old vertex ``order[i]``."""
        order = np.asarray(order)
        return AffinityGraph(self.weights[np.ix_(order, order)], mode=self.mode)


def as_vertex_set(ids, n: int | None = None) -> np.ndarray:
    """Validate ``ids`` as an ordered set of distinct vertex indices."""
    arr = np.asarray(ids, dtype=np.int64).reshape(-1)
    if np.unique(arr).size != arr.size:
        raise PreconditionError("vertex set contains duplicates")
    if n is not None and arr.size and (arr.min() < 0 or arr.max() >= n):
        raise PreconditionError(f"vertex ids must lie in [0, {n})")
    return arr


def _check_pair(g: AffinityGraph, a, b) -> tuple[np.ndarray, np.ndarray]:
    a = as_vertex_set(a, g.n)
    b = as_vertex_set(b, g.n)
    if a.size == 0 or b.size == 0:
        raise PreconditionError("vertex sets must be nonempty")
    if np.intersect1d(a, b).size:
        raise PreconditionError("vertex sets must be disjoint")
    return a, b


def edge_sum(g: AffinityGraph, a, b) -> float:
    """e(A, B): total weight of edges with one end in ``a`` and one in ``b``."""
    a, b = _check_pair(g, a, b)
    return float(g.weights[np.ix_(a, b)].sum())


def density(g: AffinityGraph, a, b) -> float:
    """Edge density ``e(A, B) / (|A| |B|)`` between two disjoint vertex sets."""
    a, b = _check_pair(g, a, b)
    return float(g.weights[np.ix_(a, b)].sum()) / (a.size * b.size)


def deviation_matrix(g: AffinityGraph, a, b) -> np.ndarray:
    """Sub-block of the weights between ``a`` and ``b``, centred on its density."""
    a, b = _check_pair(g, a, b)
    block = g.weights[np.ix_(a, b)]
    return block - block.sum() / block.size


def gen_random_bipartite(p: int, q: int, dens: float, seed: int) -> AffinityGraph:
    """Random bipartite graph; vertices ``0..p-1`` form one side, ``p..p+q-1`` the other."""
    if not 0.0 <= dens <= 1.0:
        raise PreconditionError(f"dens must lie in [0, 1], got {dens}")
    if p < 0 or q < 0:
        raise PreconditionError("side sizes must be nonnegative")
    rng = np.random.default_rng(seed)
    cross = (rng.random((p, q)) < dens).astype(np.float64)
    w = np.zeros((p + q, p + q))
    w[:p, p:] = cross
    w[p:, :p] = cross.T
    return AffinityGraph(w, mode=BINARY)


def gen_planted_partition(block_sizes, p_in: float, p_out: float, seed: int):
    """Planted-partition graph and its block labels.

    Returns
    -------
    graph : AffinityGraph
    labels : ndarray of shape (n,)
        Block index of each vertex; blocks occupy consecutive vertex ranges.
    """
    if not (0.0 <= p_out <= p_in <= 1.0):
        raise PreconditionError("need 0 <= p_out <= p_in <= 1")
    sizes = [int(s) for s in block_sizes]
    if not sizes or min(sizes) < 1:
        raise PreconditionError("block sizes must be positive")
    labels = np.repeat(np.arange(len(sizes)), sizes)
    n = labels.size
    rng = np.random.default_rng(seed)
    prob = np.where(labels[:, None] == labels[None, :], p_in, p_out)
    upper = np.triu(rng.random((n, n)) < prob, k=1)
    w = (upper | upper.T).astype(np.float64)
    return AffinityGraph(w, mode=BINARY), labels


def canonical_order(g: AffinityGraph) -> np.ndarray:
    """Vertex order that depends only on each vertex's multiset of weights.

    Vertices are ranked by the sum, then the sum of squares, of their sorted
    weight rows; remaining ties fall back to the vertex index.  Sorting rows
    first makes the keys bit-identical under any relabelling, so seeded
    procedures that walk vertices in this order are permutation-equivariant
    whenever the keys are distinct (generic weighted graphs).
    """
    rows = np.sort(g.weights, axis=1)
    first = rows.sum(axis=1)
    second = (rows * rows).sum(axis=1)
    return np.lexsort((np.arange(g.n), second, first))
