"""Scikit-learn style wrappers around the partitioning and clustering routines."""

from __future__ import annotations

import math

import numpy as np
from sklearn.base import BaseEstimator, ClusterMixin, TransformerMixin
from sklearn.neighbors import kneighbors_graph
from sklearn.utils.validation import check_array, check_is_fitted, check_symmetric

from .clustering import (
    KMEANS,
    SPECTRAL_FULL,
    SPECTRAL_KNN,
    _sq_dist,
    kmeans,
    regularity_cluster,
    spectral_njw,
)
from .graph_core import AffinityGraph, PreconditionError
from .ingest import MEDIAN, build_affinity
from .partition import RegularityConfig, run_ppr
from .reduced_graph import build_reduced

PRECOMPUTED = "precomputed"
RBF = "rbf"
KNN = "knn"


def validate_affinity(X) -> AffinityGraph:
    """Check a precomputed affinity matrix and wrap it as a graph."""
    if isinstance(X, AffinityGraph):
        return X
    a = check_array(X, dtype=np.float64, ensure_min_samples=2, ensure_min_features=2)
    if a.shape[0] != a.shape[1]:
        raise ValueError(f"precomputed affinity must be square, got {a.shape}")
    a = check_symmetric(a, raise_exception=True)
    return AffinityGraph(a)


def _as_graph(X, affinity, sigma) -> AffinityGraph:
    if affinity == PRECOMPUTED:
        return validate_affinity(X)
    if affinity == RBF:
        return build_affinity(check_array(X, dtype=np.float64, ensure_min_samples=2), sigma)
    raise ValueError(f"affinity must be {PRECOMPUTED!r} or {RBF!r}, got {affinity!r}")


def _config(est) -> RegularityConfig:
    return RegularityConfig(epsilon=est.epsilon, l=est.l, h=est.h, checker=est.checker,
                            seed=est.random_state, max_iters=est.max_iters, n_jobs=est.n_jobs)


class RegularityPartitioner(TransformerMixin, BaseEstimator):
    """Approximately epsilon-regular equitable partition of a graph.

    Parameters
    ----------
    epsilon : float, default=0.25
    l : int, default=2
        Refinement number; each iteration splits every class into ``l`` parts.
    h : int or None, default=None
        Minimum class size.
    checker : {"alon", "fk"}, default="alon"
    affinity : {"precomputed", "rbf"}, default="precomputed"
        How ``X`` is read in :meth:`fit`.
    sigma : "median" or float, default="median"
        Kernel width when ``affinity="rbf"``.
    random_state : int, default=0
    max_iters : int, default=30
    n_jobs : int, default=1

    Attributes
    ----------
    partition_ : EquitablePartition
    trace_ : RunTrace
    reduced_graph_ : ReducedGraph
    labels_ : ndarray of shape (n,)
        Class of every vertex, ``-1`` for the exceptional class.
    n_classes_ : int
    """

    def __init__(self, epsilon=0.25, l=2, h=None, checker="alon", affinity=PRECOMPUTED,
                 sigma=MEDIAN, random_state=0, max_iters=30, n_jobs=1):
        self.epsilon = epsilon
        self.l = l
        self.h = h
        self.checker = checker
        self.affinity = affinity
        self.sigma = sigma
        self.random_state = random_state
        self.max_iters = max_iters
        self.n_jobs = n_jobs

    def fit(self, X, y=None):
        g = _as_graph(X, self.affinity, self.sigma)
        part, trace = run_ppr(g, _config(self))
        self.partition_ = part
        self.trace_ = trace
        self.reduced_graph_ = build_reduced(g, part)
        self.labels_ = part.membership(g.n)
        self.n_classes_ = part.k
        self.n_features_in_ = g.n
        return self

    def transform(self, X):
        """Membership indicator of shape (n, k); exceptional rows are all zero.

        The partition is transductive, so ``X`` is only used to check that the
        vertex count matches the fitted graph.
        """
        check_is_fitted(self, "partition_")
        n = self.labels_.size
        if np.shape(X)[0] != n:
            raise ValueError(f"expected {n} rows, got {np.shape(X)[0]}")
        out = np.zeros((n, self.n_classes_))
        inside = self.labels_ >= 0
        out[np.flatnonzero(inside), self.labels_[inside]] = 1.0
        return out


class RegularityClustering(ClusterMixin, BaseEstimator):
    """Two-phase clustering: regularity partition, then spectral on the reduced graph.

    Parameters
    ----------
    n_clusters : int, default=2
    epsilon, l, h, checker, affinity, sigma, random_state, max_iters, n_jobs
        As in :class:`RegularityPartitioner`.
    kappa : int, default=5
        Neighbours consulted for every exceptional vertex.
    n_init : int, default=10
        k-means restarts on the reduced embedding.

    Attributes
    ----------
    labels_ : ndarray of shape (n,)
    partition_, trace_, reduced_graph_
    """

    def __init__(self, n_clusters=2, epsilon=0.25, l=2, h=None, checker="alon", kappa=5,
                 affinity=PRECOMPUTED, sigma=MEDIAN, random_state=0, max_iters=30, n_jobs=1,
                 n_init=10):
        self.n_clusters = n_clusters
        self.epsilon = epsilon
        self.l = l
        self.h = h
        self.checker = checker
        self.kappa = kappa
        self.affinity = affinity
        self.sigma = sigma
        self.random_state = random_state
        self.max_iters = max_iters
        self.n_jobs = n_jobs
        self.n_init = n_init

    def fit(self, X, y=None):
        g = _as_graph(X, self.affinity, self.sigma)
        res = regularity_cluster(g, self.n_clusters, _config(self), kappa=self.kappa, n_init=self.n_init)
        self.labels_ = res.assignment.labels
        self.partition_ = res.partition
        self.trace_ = res.trace
        self.reduced_graph_ = res.reduced
        self.method_ = res.assignment.method
        return self


class NJWSpectralClustering(ClusterMixin, BaseEstimator):
    """Normalised spectral clustering on a full or nearest-neighbour affinity.

    Parameters
    ----------
    n_clusters : int, default=2
    affinity : {"rbf", "knn", "precomputed"}, default="rbf"
        ``"knn"`` connects each point to its ``n_neighbors`` nearest points
        (symmetrised with the maximum).
    sigma : "median" or float, default="median"
    n_neighbors : int or None, default=None
        ``ceil(log(n))`` when omitted.
    random_state : int, default=0
    n_init : int, default=10
    """

    def __init__(self, n_clusters=2, affinity=RBF, sigma=MEDIAN, n_neighbors=None, random_state=0,
                 n_init=10):
        self.n_clusters = n_clusters
        self.affinity = affinity
        self.sigma = sigma
        self.n_neighbors = n_neighbors
        self.random_state = random_state
        self.n_init = n_init

    def fit(self, X, y=None):
        if self.affinity == KNN:
            x = check_array(X, dtype=np.float64, ensure_min_samples=2)
            n = x.shape[0]
            nn = self.n_neighbors or max(1, math.ceil(math.log(n)))
            if nn >= n:
                raise PreconditionError(f"n_neighbors={nn} must be below n={n}")
            a = kneighbors_graph(x, nn, mode="connectivity", include_self=False).toarray()
            a = np.maximum(a, a.T)
            self.n_neighbors_ = nn
            method = SPECTRAL_KNN
        else:
            a = _as_graph(X, self.affinity, self.sigma).weights
            method = SPECTRAL_FULL
        self.affinity_matrix_ = a
        self.labels_ = spectral_njw(a, self.n_clusters, seed=self.random_state, n_init=self.n_init,
                                    method=method).labels
        return self


class SeededKMeans(ClusterMixin, BaseEstimator):
    """k-means with k-means++ seeding and deterministic restarts.

    Parameters
    ----------
    n_clusters : int, default=2
    max_iter : int, default=300
    n_init : int, default=10
    random_state : int, default=0

    Attributes
    ----------
    labels_ : ndarray of shape (n,)
    cluster_centers_ : ndarray of shape (n_clusters, d)
    """

    def __init__(self, n_clusters=2, max_iter=300, n_init=10, random_state=0):
        self.n_clusters = n_clusters
        self.max_iter = max_iter
        self.n_init = n_init
        self.random_state = random_state

    def fit(self, X, y=None):
        x = check_array(X, dtype=np.float64)
        res = kmeans(x, self.n_clusters, seed=self.random_state, max_iter=self.max_iter, n_init=self.n_init)
        self.labels_ = res.labels
        centers = np.stack([x[res.labels == j].mean(axis=0) if np.any(res.labels == j)
                            else np.full(x.shape[1], np.nan) for j in range(self.n_clusters)])
        self.cluster_centers_ = centers
        self.n_features_in_ = x.shape[1]
        self.method_ = KMEANS
        return self

    def predict(self, X):
        check_is_fitted(self, "cluster_centers_")
        x = check_array(X, dtype=np.float64)
        if x.shape[1] != self.n_features_in_:
            raise ValueError(f"expected {self.n_features_in_} features, got {x.shape[1]}")
        empty = np.isnan(self.cluster_centers_).any(axis=1)
        d = _sq_dist(x, np.nan_to_num(self.cluster_centers_))
        d[:, empty] = np.inf
        return np.argmin(d, axis=1)
