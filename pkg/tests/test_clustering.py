import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import random_weighted
from regclust.clustering import (
    assign_exceptional,
    kmeans,
    lloyd,
    project_labels,
    regularity_cluster,
    spectral_embedding,
    spectral_njw,
)
from regclust.evaluation import accuracy
from regclust.graph_core import AffinityGraph, PreconditionError, gen_planted_partition
from regclust.ingest import Dataset, build_affinity
from regclust.partition import EquitablePartition, RegularityConfig


def blobs(sizes, sep, seed, dim=2):
    rng = np.random.default_rng(seed)
    centers = np.eye(dim)[: len(sizes)] * sep if len(sizes) <= dim else rng.normal(size=(len(sizes), dim)) * sep
    x = np.concatenate([centers[i] + rng.normal(size=(s, dim)) for i, s in enumerate(sizes)])
    return x, np.repeat(np.arange(len(sizes)), sizes)


def test_njw_two_cliques():
    g, labels = gen_planted_partition([8, 8], 1.0, 0.0, seed=0)
    assert accuracy(labels, spectral_njw(g.weights, 2).labels).accuracy == 100.0


def test_njw_blobs():
    x, y = blobs([20, 20], sep=10.0, seed=1)
    g = build_affinity(Dataset(x), sigma=1.0)
    assert accuracy(y, spectral_njw(g, 2).labels).accuracy == 100.0


def test_njw_errors():
    with pytest.raises(PreconditionError):
        spectral_njw(np.zeros((3, 3)) + np.eye(3), 5)
    with pytest.raises(PreconditionError):
        spectral_njw(np.array([[0, 1.0], [0.5, 0]]), 2)


def test_njw_isolated_vertex_gets_a_label():
    g, _ = gen_planted_partition([6, 6], 1.0, 0.0, seed=0)
    w = np.zeros((13, 13))
    w[:12, :12] = g.weights
    a = spectral_njw(w, 2)
    assert a.labels.shape == (13,) and 0 <= a.labels[12] < 2


def test_embedding_orthonormal_and_unit_rows():
    g = random_weighted(40, 0)
    a = g.weights
    deg = a.sum(axis=1)
    norm = a / np.sqrt(np.outer(deg, deg))
    from scipy.linalg import eigh
    _, vecs = eigh(norm)
    top = vecs[:, -3:]
    assert np.allclose(top.T @ top, np.eye(3), atol=1e-8)
    emb = spectral_embedding(a, 3)
    assert np.allclose(np.linalg.norm(emb, axis=1), 1.0, atol=1e-10)


def test_njw_permutation_equivariant():
    x, _ = blobs([15, 15, 15], sep=5.0, seed=2, dim=3)
    g = build_affinity(Dataset(x))
    perm = np.random.default_rng(0).permutation(45)
    a = spectral_njw(g.weights, 3, seed=1).labels
    b = spectral_njw(g.weights[np.ix_(perm, perm)], 3, seed=1).labels
    assert np.array_equal(b, a[perm])


def test_kmeans_examples():
    x = np.random.default_rng(0).normal(size=(7, 2))
    res = lloyd(x, 7, seed=0)
    assert res.inertia == 0.0 and len(set(res.labels)) == 7
    one = lloyd(x, 1, seed=0)
    assert np.allclose(one.centers[0], x.mean(axis=0))
    xb, yb = blobs([30, 30, 30], sep=20.0, seed=3, dim=3)
    assert accuracy(yb, kmeans(xb, 3, seed=0, n_init=3).labels).accuracy == 100.0
    with pytest.raises(PreconditionError):
        kmeans(x, 8)


@settings(max_examples=40, deadline=None)
@given(st.integers(5, 60), st.integers(1, 6), st.integers(0, 10_000))
def test_kmeans_inertia_non_increasing(n, k, seed):
    k = min(k, n)
    x = np.random.default_rng(seed).normal(size=(n, 2))
    res = lloyd(x, k, seed=seed)
    h = res.history
    assert all(b <= a for a, b in zip(h, h[1:]))
    assert np.array_equal(res.labels, lloyd(x, k, seed=seed).labels)


def test_project_labels():
    p = EquitablePartition([[0, 2], [1, 3]], [4, 5, 6])
    out = project_labels(p, [1, 0], 7)
    assert out.tolist() == [1, 0, 1, 0, -1, -1, -1]
    assert (out == -1).sum() == 3
    full = project_labels(EquitablePartition([[0], [1]], []), [0, 1])
    assert full.tolist() == [0, 1]
    with pytest.raises(PreconditionError):
        project_labels(p, [0, 1, 2], 7)


def test_assign_exceptional_examples():
    w = np.zeros((5, 5))
    w[4, 0] = w[0, 4] = w[4, 1] = w[1, 4] = 0.9
    g = AffinityGraph(w)
    labels = np.array([0, 0, 1, 1, -1])
    assert assign_exceptional(g, labels, [4], kappa=3).labels[4] == 0
    same = assign_exceptional(g, np.array([0, 0, 1, 1, 1]), [], kappa=3)
    assert same.labels.tolist() == [0, 0, 1, 1, 1]
    # kappa=2 tie between one vote each: the 0.9 side wins over 0.8
    w = np.zeros((3, 3))
    w[2, 0] = w[0, 2] = 0.9
    w[2, 1] = w[1, 2] = 0.8
    assert assign_exceptional(AffinityGraph(w), np.array([1, 0, -1]), [2], kappa=2).labels[2] == 1
    with pytest.raises(PreconditionError):
        assign_exceptional(g, np.full(5, -1), [4])


def test_assign_exceptional_order_independent():
    g = random_weighted(30, 5)
    labels = np.repeat([0, 1, 2], 10)
    exc = np.array([3, 13, 25, 7])
    part = labels.copy()
    part[exc] = -1
    a = assign_exceptional(g, part, exc, kappa=4).labels
    b = assign_exceptional(g, part, exc[::-1], kappa=4).labels
    assert np.array_equal(a, b) and (a >= 0).all()


def test_regularity_cluster_covers_and_errors():
    g, labels = gen_planted_partition([100, 100], 0.8, 0.05, seed=0)
    res = regularity_cluster(g, 2, RegularityConfig(0.3, 2))
    assert res.assignment.labels.shape == (200,) and (res.assignment.labels >= 0).all()
    assert accuracy(labels, res.assignment.labels).accuracy >= 90
    with pytest.raises(PreconditionError, match="lower h or raise l"):
        regularity_cluster(g, 3, RegularityConfig(0.3, 2, h=60))


def test_regularity_cluster_cliques():
    g, labels = gen_planted_partition([60, 60], 1.0, 0.0, seed=0)
    res = regularity_cluster(g, 2, RegularityConfig(0.3, 2))
    assert accuracy(labels, res.assignment.labels).accuracy == 100.0


def test_regularity_cluster_equivariant():
    x, _ = blobs([40, 40], sep=4.0, seed=6)
    g = build_affinity(Dataset(x))
    perm = np.random.default_rng(2).permutation(80)
    cfg = RegularityConfig(0.3, 2, seed=3)
    a = regularity_cluster(g, 2, cfg).assignment.labels
    b = regularity_cluster(g.permuted(perm), 2, cfg).assignment.labels
    assert np.array_equal(b, a[perm])
