"""Cross-validated parameter search and the benchmark table across methods."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass, field

import numpy as np
from joblib import Parallel, delayed

from .clustering import regularity_cluster
from .estimators import NJWSpectralClustering, SeededKMeans
from .evaluation import accuracy
from .graph_core import AffinityGraph, PreconditionError
from .ingest import MEDIAN, Dataset, binarize, build_affinity, median_sigma
from .partition import RegularityConfig
from .regularity_check import ALON, FK

CSV_HEADER = ["dataset", "features", "compression", "regular1", "regular2", "spect1", "spect2", "kmeans"]
PROTOCOL = (
    "folds drawn from a seeded permutation; each (epsilon, l) cell is scored by the accuracy of "
    "regularity clustering on every validation fold alone; the cell with the best mean validation "
    "accuracy wins (ties: smaller epsilon, then smaller l); the reported accuracy is the mean, over "
    "folds, of the winning cell's accuracy on the data outside the fold"
)


@dataclass(frozen=True)
class GridSearchSpec:
    """Candidate values for ``epsilon`` and ``l`` plus the fold count."""

    epsilon_grid: tuple = tuple(np.linspace(0.15, 0.50, 25).tolist())
    l_values: tuple = (2, 3, 4, 5, 6, 7)
    folds: int = 5

    def __post_init__(self):
        eps = tuple(float(e) for e in self.epsilon_grid)
        ls = tuple(int(v) for v in self.l_values)
        if not eps or not ls:
            raise PreconditionError("grids must be nonempty")
        if any(not 0.0 < e < 1.0 for e in eps):
            raise PreconditionError("epsilon values must lie in (0, 1)")
        if any(v < 2 for v in ls):
            raise PreconditionError("l values must be at least 2")
        if self.folds < 2:
            raise PreconditionError("need at least two folds")
        object.__setattr__(self, "epsilon_grid", eps)
        object.__setattr__(self, "l_values", ls)

    @classmethod
    def sized(cls, n_eps: int = 25, l_values=(2, 3, 4, 5, 6, 7), folds: int = 5, lo=0.15, hi=0.50):
        return cls(tuple(np.linspace(lo, hi, n_eps).tolist()), tuple(l_values), folds)

    def cells(self) -> list:
        return [(e, v) for e in self.epsilon_grid for v in self.l_values]


@dataclass
class GridSearchResult:
    epsilon: float
    l: int
    validation_accuracy: float
    reported_accuracy: float
    checker: str
    scores: list = field(default_factory=list)
    protocol: str = PROTOCOL

    def to_dict(self) -> dict:
        return asdict(self)


def subgraph(g: AffinityGraph, idx) -> AffinityGraph:
    idx = np.asarray(idx)
    return AffinityGraph(g.weights[np.ix_(idx, idx)], mode=g.mode)


def fold_split(n: int, folds: int, seed: int) -> list:
    """Disjoint folds covering ``range(n)``, each sorted."""
    if folds > n:
        raise PreconditionError(f"cannot split {n} points into {folds} folds")
    perm = np.random.default_rng(seed).permutation(n)
    return [np.sort(part) for part in np.array_split(perm, folds)]


def _score(g, labels, idx, k, eps, l, checker, seed, kappa):
    sub = subgraph(g, idx)
    cfg = RegularityConfig(epsilon=eps, l=l, checker=checker, seed=seed)
    try:
        res = regularity_cluster(sub, k, cfg, kappa=kappa)
    except PreconditionError:
        return None
    return accuracy(labels[idx], res.assignment.labels).accuracy


def grid_search(ds: Dataset, k: int, spec: GridSearchSpec | None = None, checker: str = ALON, seed: int = 0,
                graph: AffinityGraph | None = None, kappa: int = 5, n_jobs: int = 1) -> GridSearchResult:
    """Pick ``(epsilon, l)`` by cross-validated regularity-clustering accuracy.

    A cell that cannot produce ``k`` clusters on some fold scores nothing
    there and is only eligible if it succeeds on every fold.
    """
    spec = spec or GridSearchSpec()
    if ds.labels is None:
        raise PreconditionError("grid search needs labelled data")
    g = graph if graph is not None else build_affinity(ds)
    folds = fold_split(ds.n, spec.folds, seed)
    cells = spec.cells()
    jobs = [(c, f) for c in range(len(cells)) for f in range(len(folds))]
    vals = Parallel(n_jobs=n_jobs, prefer="threads")(
        delayed(_score)(g, ds.labels, folds[f], k, *cells[c], checker, seed, kappa) for c, f in jobs
    )
    table = np.full((len(cells), len(folds)), np.nan)
    for (c, f), v in zip(jobs, vals):
        if v is not None:
            table[c, f] = v
    ok = ~np.isnan(table).any(axis=1)
    if not ok.any():
        raise PreconditionError("no grid cell produced a valid clustering on every fold")
    means = np.where(ok, np.nan_to_num(table).mean(axis=1), -np.inf)
    # cells are ordered by epsilon then l, so the first maximum is the tie winner
    best = int(np.argmax(means))
    eps, l = cells[best]
    everyone = np.arange(ds.n)
    rest = [np.setdiff1d(everyone, fold) for fold in folds]
    held = Parallel(n_jobs=n_jobs, prefer="threads")(
        delayed(_score)(g, ds.labels, idx, k, eps, l, checker, seed, kappa) for idx in rest
    )
    held = [h for h in held if h is not None]
    reported = float(np.mean(held)) if held else float("nan")
    scores = [
        {"epsilon": e, "l": v, "mean": (None if not ok[i] else float(means[i]))}
        for i, (e, v) in enumerate(cells)
    ]
    return GridSearchResult(eps, l, float(means[best]), reported, checker, scores)


@dataclass
class BenchmarkRow:
    dataset: str
    features: int
    n: int
    k_reduced: int | None = None
    regular1: float | None = None
    regular2: float | None = None
    spect1: float | None = None
    spect2: float | None = None
    kmeans: float | None = None
    meta: dict = field(default_factory=dict)
    error: str | None = None

    @property
    def compression(self) -> str:
        return f"{self.n}-{self.k_reduced}" if self.k_reduced is not None else ""

    def csv_fields(self) -> list:
        acc = [self.regular1, self.regular2, self.spect1, self.spect2, self.kmeans]
        return [self.dataset, str(self.features), self.compression] + ["" if a is None else f"{a:.4f}" for a in acc]

    def to_dict(self) -> dict:
        out = asdict(self)
        out["compression"] = self.compression
        return out


def _benchmark_one(ds: Dataset, k: int | None, spec: GridSearchSpec, seed: int, sigma, threshold,
                   kappa: int, n_jobs: int) -> BenchmarkRow:
    row = BenchmarkRow(ds.name, ds.n_features, ds.n)
    try:
        if ds.labels is None:
            raise PreconditionError("dataset has no labels")
        k = k or ds.n_classes
        g = build_affinity(ds, sigma)
        if threshold is not None:
            g = binarize(g, threshold)
        row.meta = {"k": k, "sigma": sigma if isinstance(sigma, str) else float(sigma),
                    "sigma_value": median_sigma(ds.features) if sigma == MEDIAN else float(sigma),
                    "graph_mode": g.mode, "binarize": threshold, "seed": seed,
                    "grid": {"n_epsilon": len(spec.epsilon_grid), "l_values": list(spec.l_values),
                             "folds": spec.folds}}
        for tag, checker in (("regular1", ALON), ("regular2", FK)):
            gs = grid_search(ds, k, spec, checker=checker, seed=seed, graph=g, kappa=kappa, n_jobs=n_jobs)
            setattr(row, tag, gs.reported_accuracy)
            row.meta[tag] = {"epsilon": gs.epsilon, "l": gs.l, "validation_accuracy": gs.validation_accuracy,
                             "protocol": gs.protocol}
            if checker == ALON:
                full = regularity_cluster(g, k, RegularityConfig(gs.epsilon, gs.l, checker=ALON, seed=seed,
                                                                 n_jobs=n_jobs), kappa=kappa)
                row.k_reduced = full.partition.k
        knn = NJWSpectralClustering(k, affinity="knn", random_state=seed).fit(ds.features)
        row.spect1 = accuracy(ds.labels, knn.labels_).accuracy
        row.meta["spect1_neighbors"] = knn.n_neighbors_
        full = NJWSpectralClustering(k, affinity="rbf", sigma=sigma, random_state=seed).fit(ds.features)
        row.spect2 = accuracy(ds.labels, full.labels_).accuracy
        km = SeededKMeans(k, random_state=seed).fit(ds.features)
        row.kmeans = accuracy(ds.labels, km.labels_).accuracy
    except (PreconditionError, ValueError, np.linalg.LinAlgError) as exc:
        row.error = f"{type(exc).__name__}: {exc}"
    return row


def run_benchmark(datasets, k_policy=None, seed: int = 0, spec: GridSearchSpec | None = None, sigma=MEDIAN,
                  binarize_threshold=None, kappa: int = 5, n_jobs: int = 1) -> list:
    """One :class:`BenchmarkRow` per dataset; failures are recorded on the row.

    ``k_policy`` is ``None`` (number of distinct labels), an int, or a mapping
    from dataset name to int.
    """
    spec = spec or GridSearchSpec()
    rows = []
    for ds in datasets:
        k = k_policy.get(ds.name) if isinstance(k_policy, dict) else k_policy
        rows.append(_benchmark_one(ds, k, spec, seed, sigma, binarize_threshold, kappa, n_jobs))
    return rows


def rows_to_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in rows:
        w.writerow(r.csv_fields())
    return buf.getvalue()


def rows_to_json(rows) -> str:
    return json.dumps({"header": CSV_HEADER, "rows": [r.to_dict() for r in rows]}, indent=2, sort_keys=True) + "\n"
