"""Spectral clustering, k-means and the two-phase regularity clustering pipeline."""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.linalg import eigh

from .graph_core import AffinityGraph, PreconditionError
from .partition import EquitablePartition, RegularityConfig, RunTrace, run_ppr
from .reduced_graph import ReducedGraph, build_reduced

REGULARITY_ALON = "regularity_alon"
REGULARITY_FK = "regularity_fk"
SPECTRAL_FULL = "spectral_full"
SPECTRAL_KNN = "spectral_knn"
KMEANS = "kmeans"


@dataclass(frozen=True, eq=False)
class ClusterAssignment:
    labels: np.ndarray
    k_clusters: int
    method: str

    def __post_init__(self):
        labels = np.asarray(self.labels, dtype=np.int64)
        if labels.size and (labels.min() < 0 or labels.max() >= self.k_clusters):
            raise PreconditionError("cluster ids must lie in [0, k_clusters)")
        object.__setattr__(self, "labels", labels)

    def to_dict(self) -> dict:
        return {"labels": self.labels.tolist(), "k": int(self.k_clusters), "method": self.method}


class LloydResult(NamedTuple):
    labels: np.ndarray
    centers: np.ndarray
    inertia: float
    history: list


def _sq_dist(x, centers):
    d = (x * x).sum(axis=1)[:, None] - 2.0 * x @ centers.T + (centers * centers).sum(axis=1)[None, :]
    return np.maximum(d, 0.0)


def _kmeanspp(x, k, rng):
    n = x.shape[0]
    centers = np.empty((k, x.shape[1]))
    centers[0] = x[rng.integers(n)]
    closest = _sq_dist(x, centers[:1])[:, 0]
    for j in range(1, k):
        total = closest.sum()
        if total > 0:
            idx = int(np.searchsorted(np.cumsum(closest), rng.random() * total, side="right"))
            idx = min(idx, n - 1)
        else:
            idx = int(rng.integers(n))
        centers[j] = x[idx]
        closest = np.minimum(closest, _sq_dist(x, centers[j : j + 1])[:, 0])
    return centers


def lloyd(points, k: int, seed=0, max_iter: int = 300) -> LloydResult:
    """One k-means run: k-means++ seeding, then Lloyd steps to a fixpoint.

    ``history`` holds the inertia of every assignment step.  A cluster that
    loses all its points is re-seeded at the point farthest from its centre.
    """
    x = np.asarray(points, dtype=np.float64)
    if x.ndim != 2:
        raise PreconditionError("points must be a 2-d array")
    n = x.shape[0]
    if not 1 <= k <= n:
        raise PreconditionError(f"need 1 <= k <= n, got k={k}, n={n}")
    rng = np.random.default_rng(seed)
    centers = _kmeanspp(x, k, rng)
    labels = None
    history = []
    for _ in range(max_iter):
        d2 = _sq_dist(x, centers)
        new_labels = np.argmin(d2, axis=1)
        history.append(float(d2[np.arange(n), new_labels].sum()))
        if labels is not None and np.array_equal(new_labels, labels):
            break
        labels = new_labels
        counts = np.bincount(labels, minlength=k)
        sums = np.zeros_like(centers)
        np.add.at(sums, labels, x)
        filled = counts > 0
        centers[filled] = sums[filled] / counts[filled, None]
        if not filled.all():
            far = ((x - centers[labels]) ** 2).sum(axis=1)
            for j in np.flatnonzero(~filled):
                i = int(np.argmax(far))
                centers[j] = x[i]
                far[i] = -1.0
    d2 = _sq_dist(x, centers)
    labels = np.argmin(d2, axis=1)
    return LloydResult(labels, centers, float(d2[np.arange(n), labels].sum()), history)


def kmeans(points, k: int, seed=0, max_iter: int = 300, n_init: int = 1) -> ClusterAssignment:
    """k-means with k-means++ seeding; the best of ``n_init`` seeded runs is kept.

    Points are visited in a canonical (lexicographic) order so the result does
    not depend on how the rows are arranged.
    """
    x = np.asarray(points, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    if k > x.shape[0]:
        raise PreconditionError(f"k={k} exceeds the number of points {x.shape[0]}")
    order = np.lexsort(x.T[::-1])
    xs = x[order]
    seeds = np.random.SeedSequence(int(seed)).spawn(max(1, n_init))
    best = None
    for ss in seeds:
        run = lloyd(xs, k, seed=ss, max_iter=max_iter)
        if best is None or run.inertia < best.inertia:
            best = run
    labels = np.empty(x.shape[0], dtype=np.int64)
    labels[order] = best.labels
    return ClusterAssignment(labels, k, KMEANS)


def spectral_embedding(affinity, k: int) -> np.ndarray:
    """Row-normalised top-``k`` eigenvectors of ``D^-1/2 A D^-1/2``."""
    a = np.asarray(affinity, dtype=np.float64)
    deg = a.sum(axis=1)
    inv = np.zeros_like(deg)
    inv[deg > 0] = 1.0 / np.sqrt(deg[deg > 0])
    norm_aff = inv[:, None] * a * inv[None, :]
    n = a.shape[0]
    _, vecs = eigh(norm_aff, subset_by_index=[n - k, n - 1])
    vecs = vecs[:, ::-1]
    # fix each eigenvector's sign by its largest entry, for reproducibility
    pivot = np.argmax(np.abs(vecs), axis=0)
    vecs = vecs * np.sign(vecs[pivot, np.arange(k)])[None, :]
    lengths = np.linalg.norm(vecs, axis=1)
    out = np.zeros_like(vecs)
    nz = lengths > 1e-12
    out[nz] = vecs[nz] / lengths[nz, None]
    return out


def spectral_njw(affinity, k: int, seed=0, n_init: int = 10, method: str = SPECTRAL_FULL) -> ClusterAssignment:
    """Ng-Jordan-Weiss spectral clustering of a symmetric nonnegative affinity matrix.

    Rows of the embedding that vanish (isolated vertices) take no part in
    k-means and are attached to the nearest centre afterwards.
    """
    a = np.asarray(affinity.weights if isinstance(affinity, AffinityGraph) else affinity, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise PreconditionError("affinity must be square")
    if not np.allclose(a, a.T) or a.min(initial=0.0) < 0:
        raise PreconditionError("affinity must be symmetric and nonnegative")
    n = a.shape[0]
    if not 2 <= k <= n:
        raise PreconditionError(f"need 2 <= k <= {n}, got k={k}")
    emb = spectral_embedding(a, k)
    live = np.linalg.norm(emb, axis=1) > 0
    if live.sum() < k:
        raise PreconditionError("too few connected vertices for the requested k")
    sub = kmeans(emb[live], k, seed=seed, n_init=n_init)
    labels = np.empty(n, dtype=np.int64)
    labels[live] = sub.labels
    if not live.all():
        centers = np.stack([emb[live][sub.labels == j].mean(axis=0) if np.any(sub.labels == j)
                            else np.full(k, np.inf) for j in range(k)])
        labels[~live] = np.argmin(_sq_dist(emb[~live], np.nan_to_num(centers, posinf=1e6)), axis=1)
    return ClusterAssignment(labels, k, method)


def project_labels(p: EquitablePartition, reduced_labels, n: int | None = None) -> np.ndarray:
    """Give every class member its class's label; exceptional vertices get ``-1``."""
    labels = reduced_labels.labels if isinstance(reduced_labels, ClusterAssignment) else np.asarray(reduced_labels)
    if labels.size != p.k:
        raise PreconditionError(f"expected {p.k} reduced labels, got {labels.size}")
    member = p.membership(n)
    out = np.full(member.size, -1, dtype=np.int64)
    inside = member >= 0
    out[inside] = labels[member[inside]]
    return out


def assign_exceptional(affinity, labels, exceptional, kappa: int = 5, k_clusters: int | None = None,
                       method: str = REGULARITY_ALON) -> ClusterAssignment:
    """Label exceptional vertices by a ``kappa``-nearest-neighbour vote.

    Neighbours are the labelled vertices of highest affinity; among equal
    affinities, those sharing more weighted common neighbours come first, then
    lower indices.  Vote ties go to the label with the larger summed affinity,
    then to the lower label.  Every vote uses the labelling as given, so the
    processing order of exceptional vertices does not matter.
    """
    w = np.asarray(affinity.weights if isinstance(affinity, AffinityGraph) else affinity, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64).copy()
    exceptional = np.asarray(exceptional, dtype=np.int64)
    if kappa < 1:
        raise PreconditionError("kappa must be at least 1")
    known = np.flatnonzero(labels >= 0)
    known = known[~np.isin(known, exceptional)]
    if known.size == 0:
        raise PreconditionError("no labelled vertices to vote")
    if k_clusters is None:
        k_clusters = int(labels[known].max()) + 1
    if exceptional.size == 0:
        return ClusterAssignment(labels, k_clusters, method)
    base = labels.copy()
    rows = w[np.ix_(exceptional, known)]
    common = rows @ w[np.ix_(known, known)]
    take = min(kappa, known.size)
    for r, v in enumerate(exceptional):
        order = np.lexsort((known, -common[r], -rows[r]))[:take]
        votes = np.bincount(base[known[order]], minlength=k_clusters)
        mass = np.bincount(base[known[order]], weights=rows[r, order], minlength=k_clusters)
        cand = np.lexsort((np.arange(k_clusters), -mass, -votes))
        labels[v] = cand[0]
    return ClusterAssignment(labels, k_clusters, method)


class RegularityResult(NamedTuple):
    assignment: ClusterAssignment
    trace: RunTrace
    reduced: ReducedGraph
    partition: EquitablePartition


def regularity_cluster(graph: AffinityGraph, k: int, cfg: RegularityConfig, kappa: int = 5,
                       n_init: int = 10) -> RegularityResult:
    """Two-phase regularity clustering of ``graph`` into ``k`` clusters.

    The graph is partitioned by :func:`run_ppr`, compressed into its reduced
    graph, the reduced graph is clustered by NJW spectral clustering, the
    labels are projected back to class members and exceptional vertices are
    settled by a nearest-neighbour vote.
    """
    if not isinstance(graph, AffinityGraph):
        graph = AffinityGraph(graph)
    part, trace = run_ppr(graph, cfg)
    if part.k < k:
        raise PreconditionError(
            f"reduced graph has {part.k} vertices, fewer than k={k}; lower h or raise l"
        )
    reduced = build_reduced(graph, part)
    method = REGULARITY_ALON if cfg.checker == "alon" else REGULARITY_FK
    red = spectral_njw(reduced.weights, k, seed=cfg.seed, n_init=n_init, method=method)
    partial = project_labels(part, red, graph.n)
    full = assign_exceptional(graph, partial, part.exceptional, kappa, k_clusters=k, method=method)
    return RegularityResult(full, trace, reduced, part)
