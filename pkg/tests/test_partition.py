import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import random_weighted
from regclust.graph_core import AffinityGraph, PreconditionError, gen_planted_partition
from regclust.partition import (
    HALT_REGULAR,
    HALT_SIZE,
    EquitablePartition,
    RegularityConfig,
    check_all_pairs,
    index_of,
    initial_partition,
    modified_refine,
    partition_to_dict,
    run_ppr,
)
from regclust.regularity_check import ALON, FK, IRREGULAR, REGULAR, Certificate, PairVerdict


def cliques(sizes):
    g, labels = gen_planted_partition(sizes, 1.0, 0.0, seed=0)
    return g, labels


@pytest.mark.parametrize("n,l,size,extra", [(10, 2, 5, 0), (11, 2, 5, 1), (1599, 2, 799, 1)])
def test_initial_partition(n, l, size, extra):
    p = initial_partition(n, l, seed=3)
    assert p.k == l and p.class_size == size and p.exceptional.size == extra
    p.validate(n)


def test_initial_partition_too_small():
    with pytest.raises(PreconditionError):
        initial_partition(3, 2, seed=0)


def test_index_examples():
    g = AffinityGraph(np.zeros((6, 6)))
    p = EquitablePartition([[0, 1], [2, 3], [4, 5]], [])
    assert index_of(p, g) == 0.0
    w = np.zeros((4, 4))
    w[:2, 2:] = w[2:, :2] = 1.0
    assert index_of(EquitablePartition([[0, 1], [2, 3]], []), AffinityGraph(w)) == 0.25
    # three classes of two, every cross density 0.5
    w = np.zeros((6, 6))
    for s in range(3):
        for t in range(3):
            if s != t:
                w[2 * s, 2 * t] = w[2 * s + 1, 2 * t + 1] = 1.0
    g = AffinityGraph(w)
    p = EquitablePartition([[0, 1], [2, 3], [4, 5]], [])
    assert abs(index_of(p, g) - 1 / 12) < 1e-15
    with pytest.raises(PreconditionError):
        index_of(EquitablePartition([[0, 1]], []), g)


def test_check_all_pairs_counts_and_cliques():
    g, labels = cliques([6, 6, 6])
    p = EquitablePartition([np.flatnonzero(labels == b) for b in range(3)], [])
    for checker in (ALON, FK):
        vs = check_all_pairs(g, p, 0.3, checker, seed=1)
        assert [v.pair for v in vs] == [(0, 1), (0, 2), (1, 2)]
        assert all(v.kind == REGULAR for v in vs)
    two = EquitablePartition([[0, 1, 2], [3, 4, 5]], list(range(6, 18)))
    assert len(check_all_pairs(g, two, 0.3)) == 1


def test_check_all_pairs_planted_has_irregular():
    g, _ = gen_planted_partition([40, 40], 0.9, 0.05, seed=2)
    p = initial_partition(80, 2, seed=0)
    assert any(v.kind == IRREGULAR for v in check_all_pairs(g, p, 0.25, ALON))


def test_check_all_pairs_thread_independent():
    g, _ = gen_planted_partition([60, 60], 0.7, 0.1, seed=4)
    p = initial_partition(120, 2, seed=0)
    p = EquitablePartition(p.classes.reshape(8, -1), p.exceptional)
    for checker in (ALON, FK):
        one = [v.to_dict() for v in check_all_pairs(g, p, 0.3, checker, seed=5, n_jobs=1)]
        many = [v.to_dict() for v in check_all_pairs(g, p, 0.3, checker, seed=5, n_jobs=3)]
        assert one == many


def _irregular(pair, x, y):
    return PairVerdict(IRREGULAR, pair, ALON, Certificate(np.array(x), np.array(y), 1.0, 0.0))


def test_refine_hand_trace():
    # k=2, class size 8, l=2, certificates cut both classes into atoms of 3 and 5
    g = AffinityGraph(np.zeros((16, 16)))
    p = EquitablePartition([list(range(8)), list(range(8, 16))], [])
    v = _irregular((0, 1), [0, 1, 2], [8, 9, 10])
    q = modified_refine(g, p, [v], l=2, seed=0)
    assert q.k == 4 and q.class_size == 4 and q.exceptional.size == 0
    q.validate(16)
    # each new class lies inside one old class
    for cls in q.classes:
        assert (cls < 8).all() or (cls >= 8).all()


def test_refine_needs_irregular_pair():
    g = AffinityGraph(np.zeros((8, 8)))
    p = EquitablePartition([[0, 1, 2, 3], [4, 5, 6, 7]], [])
    with pytest.raises(PreconditionError):
        modified_refine(g, p, [PairVerdict(REGULAR, (0, 1), ALON)], l=2, seed=0)


def test_refine_class_count_bound():
    g = random_weighted(103, 0)
    p = initial_partition(103, 3, seed=0)
    verdicts = check_all_pairs(g, p, 0.3, ALON)
    q = modified_refine(g, p, verdicts, l=4, seed=1)
    assert q.k <= 1 + 4 * p.k
    assert q.exceptional.size - p.exceptional.size < p.k * (q.class_size + 4)
    q.validate(103)


def test_run_ppr_regular_graph_halts_at_once():
    for w in (np.zeros((40, 40)), 1.0 - np.eye(40)):
        part, trace = run_ppr(AffinityGraph(w), RegularityConfig(0.3, 2))
        assert trace.halt_reason == HALT_REGULAR and len(trace.records) == 1 and part.k == 2


def test_run_ppr_size_halt_returns_finest_valid():
    g = random_weighted(200, 1)
    cfg = RegularityConfig(0.25, 2)
    part, trace = run_ppr(g, cfg)
    assert trace.halt_reason == HALT_SIZE
    assert part.class_size >= cfg.h and part.class_size // 2 < cfg.h
    assert part.k == trace.records[-1].k


def test_high_epsilon_few_iterations():
    g, _ = gen_planted_partition([100, 100], 0.6, 0.3, seed=0)
    for l in (6, 7):
        _, trace = run_ppr(g, RegularityConfig(0.7, l, h=2))
        assert len(trace.records) <= 3


def test_config_defaults_and_validation():
    assert RegularityConfig(0.15, 2).h == 7
    assert RegularityConfig(0.5, 3).h == 6
    with pytest.raises(PreconditionError):
        RegularityConfig(1.2)
    with pytest.raises(PreconditionError):
        RegularityConfig(0.3, l=1)
    with pytest.raises(PreconditionError):
        RegularityConfig(0.3, checker="nope")


def test_partition_json_schema():
    g = random_weighted(60, 2)
    cfg = RegularityConfig(0.3, 2)
    part, trace = run_ppr(g, cfg)
    doc = partition_to_dict(part, trace, cfg)
    assert set(doc) == {"k", "class_size", "classes", "exceptional", "trace", "halt_reason", "config"}
    assert set(doc["trace"][0]) == {"iter", "k", "class_size", "exceptional_size", "index",
                                    "irregular_pairs", "required_regular"}


@settings(max_examples=25, deadline=None)
@given(st.integers(60, 300), st.integers(0, 10_000), st.sampled_from([0.2, 0.35, 0.5]), st.integers(2, 4),
       st.booleans(), st.sampled_from([ALON, FK]))
def test_run_ppr_invariants(n, seed, eps, l, binary, checker):
    g = random_weighted(n, seed, binary=binary)
    cfg = RegularityConfig(eps, l, h=2 * l, seed=seed, checker=checker)
    if n < cfg.l * cfg.h:
        return
    seen = []
    run_ppr(g, cfg, on_iteration=lambda rec, p, v: seen.append((rec, p)))
    for i, (rec, p) in enumerate(seen):
        p.validate(n)
        assert 0 <= rec.index <= (p.k - 1) / (2 * p.k)
        if i:
            prev = seen[i - 1][1]
            assert p.k == l * prev.k and p.class_size == prev.class_size // l


def test_run_ppr_deterministic_and_thread_independent():
    g, _ = gen_planted_partition([80, 80, 80], 0.7, 0.1, seed=1)
    a = run_ppr(g, RegularityConfig(0.3, 2, seed=4))
    b = run_ppr(g, RegularityConfig(0.3, 2, seed=4, n_jobs=3))
    assert np.array_equal(a[0].classes, b[0].classes)
    assert a[1].to_list() == b[1].to_list()


def test_run_ppr_equivariant_on_generic_weights():
    g = random_weighted(90, 3)
    perm = np.random.default_rng(1).permutation(90)
    cfg = RegularityConfig(0.3, 2, seed=2)
    pa, _ = run_ppr(g, cfg)
    pb, _ = run_ppr(g.permuted(perm), cfg)
    # vertex i of the permuted graph is vertex perm[i] of the original
    assert np.array_equal(perm[pb.classes], pa.classes)
