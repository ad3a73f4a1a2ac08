import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from regclust.graph_core import BINARY, PreconditionError
from regclust.ingest import DataError, Dataset, binarize, build_affinity, load_csv


def write(tmp_path, text, name="data.csv"):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_no_label_column(tmp_path):
    ds = load_csv(write(tmp_path, "1,2\n3,4\n5,6\n7,8\n"))
    assert ds.n == 4 and ds.labels is None and ds.n_features == 2


def test_labels_coded_by_first_appearance(tmp_path):
    p = write(tmp_path, "a,b,kind\n1,2,rose\n3,4,iris\n5,6,rose\n7,8,lily\n")
    ds = load_csv(p, "kind")
    assert ds.labels.tolist() == [0, 1, 0, 2]
    assert ds.label_names == ["rose", "iris", "lily"]
    assert load_csv(p, 2).labels.tolist() == [0, 1, 0, 2]
    assert load_csv(p, -1).labels.tolist() == [0, 1, 0, 2]


def test_headerless_text_labels(tmp_path):
    ds = load_csv(write(tmp_path, "1 2 x\n3 4 y\n5 6 x\n"), 2)
    assert ds.n == 3 and ds.labels.tolist() == [0, 1, 0]


def test_semicolon_and_missing_rows(tmp_path):
    ds = load_csv(write(tmp_path, "f1;f2;q\n1;2;5\n?;4;6\n5;;6\n7;8;5\n"), "q")
    assert ds.n == 2 and ds.dropped == 2
    assert ds.labels.tolist() == [0, 0]


def test_constant_column_standardized_to_zero(tmp_path):
    ds = load_csv(write(tmp_path, "1,5\n2,5\n3,5\n"), standardize=True)
    assert np.array_equal(ds.features[:, 1], np.zeros(3))
    assert abs(ds.features[:, 0].mean()) < 1e-12
    assert abs(ds.features[:, 0].std() - 1.0) < 1e-12


def test_load_errors(tmp_path):
    with pytest.raises(DataError):
        load_csv(tmp_path / "missing.csv")
    with pytest.raises(DataError):
        load_csv(write(tmp_path, "1,2\n3,abc\n"))
    with pytest.raises(DataError):
        load_csv(write(tmp_path, "?,1\nNA,2\n"))
    with pytest.raises(DataError):
        load_csv(write(tmp_path, "a,b\n1,2\n"), "c")


def test_affinity_identical_points():
    g = build_affinity(Dataset(np.array([[0.0, 0.0], [0.0, 0.0], [3.0, 4.0]])), sigma=1.0)
    assert g.weights[0, 1] == 1.0
    assert g.weights[0, 0] == 0.0


def test_affinity_far_points_vanish():
    g = build_affinity(Dataset(np.array([[0.0], [1e6]])), sigma=1.0)
    assert g.weights[0, 1] == 0.0


def test_affinity_collinear_closed_form():
    g = build_affinity(Dataset(np.array([[0.0], [2.0], [4.0]])), sigma=2.0)
    assert abs(g.weights[0, 1] - np.exp(-0.5)) < 1e-15
    assert abs(g.weights[0, 2] - np.exp(-2.0)) < 1e-15


def test_median_heuristic_errors_on_identical_points():
    with pytest.raises(PreconditionError, match="fixed sigma"):
        build_affinity(Dataset(np.ones((4, 2))))


def test_binarize():
    rng = np.random.default_rng(0)
    g = build_affinity(Dataset(rng.normal(size=(41, 3))))
    full = binarize(g, 0.0)
    assert full.mode == BINARY and full.edge_weight == 41 * 40 / 2
    with pytest.raises(PreconditionError):
        binarize(g, 1.5)
    off = g.weights[np.triu_indices(41, 1)]
    half = binarize(g, float(np.median(off)))
    assert abs(half.edge_weight - off.size / 2) <= 1


@settings(max_examples=30, deadline=None)
@given(st.integers(3, 25), st.integers(0, 1000))
def test_affinity_permutation_equivariant(n, seed):
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(n, 2))
    perm = rng.permutation(n)
    g = build_affinity(Dataset(x))
    h = build_affinity(Dataset(x[perm]))
    np.testing.assert_allclose(h.weights, g.weights[np.ix_(perm, perm)], rtol=0, atol=1e-12)
