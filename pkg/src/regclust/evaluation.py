"""Clustering accuracy under the best one-to-one mapping of cluster ids to labels."""

from __future__ import annotations

from dataclasses import dataclass
from itertools import permutations

import numpy as np
from scipy.optimize import linear_sum_assignment

from .graph_core import PreconditionError

BRUTEFORCE_LIMIT = 6


@dataclass(frozen=True)
class AccuracyReport:
    accuracy: float
    mapping: dict
    confusion: np.ndarray

    def to_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "mapping": {str(k): v for k, v in self.mapping.items()},
            "confusion": self.confusion.tolist(),
        }


def hungarian(cost) -> np.ndarray:
    """Minimum-cost perfect assignment of a square matrix, as ``row -> column``.

    Among equally cheap assignments the lexicographically smallest is
    returned: rows are fixed in order, each to the lowest column that keeps
    the optimum reachable.
    """
    cost = np.asarray(cost, dtype=np.float64)
    if cost.ndim != 2 or cost.shape[0] != cost.shape[1]:
        raise PreconditionError("cost matrix must be square")
    if not np.all(np.isfinite(cost)):
        raise PreconditionError("cost matrix must be finite")
    n = cost.shape[0]
    if n == 0:
        return np.zeros(0, dtype=np.int64)

    def best(rows, cols):
        if not rows:
            return 0.0
        sub = cost[np.ix_(rows, cols)]
        r, c = linear_sum_assignment(sub)
        return float(sub[r, c].sum())

    scale = max(1.0, float(np.abs(cost).max()))
    target = best(list(range(n)), list(range(n)))
    assign = np.empty(n, dtype=np.int64)
    rows = list(range(n))
    cols = list(range(n))
    spent = 0.0
    for i in range(n):
        rest = rows[1:]
        for j in cols:
            remaining = [c for c in cols if c != j]
            total = spent + cost[i, j] + best(rest, remaining)
            if total <= target + 1e-9 * scale * n:
                assign[i] = j
                spent += cost[i, j]
                rows = rest
                cols = remaining
                break
    return assign


def _encode(values):
    values = np.asarray(values).reshape(-1)
    uniq, codes = np.unique(values, return_inverse=True)
    return uniq, codes


def _contingency(true_labels, cluster_labels):
    y = np.asarray(true_labels).reshape(-1)
    c = np.asarray(cluster_labels).reshape(-1)
    if y.size != c.size:
        raise PreconditionError("label vectors differ in length")
    if y.size == 0:
        raise PreconditionError("empty label vectors")
    ys, yi = _encode(y)
    cs, ci = _encode(c)
    table = np.zeros((cs.size, ys.size), dtype=np.int64)
    np.add.at(table, (ci, yi), 1)
    return ys, cs, table


def accuracy(true_labels, cluster_labels) -> AccuracyReport:
    """Percentage of points whose cluster maps to their true label.

    Cluster ids are matched to labels by a maximum-weight assignment on the
    contingency table, padded with zeros when the counts differ.
    """
    ys, cs, table = _contingency(true_labels, cluster_labels)
    size = max(table.shape)
    padded = np.zeros((size, size), dtype=np.int64)
    padded[: table.shape[0], : table.shape[1]] = table
    assign = hungarian(-padded)
    matched = int(padded[np.arange(size), assign].sum())
    mapping = {}
    for ci, yi in enumerate(assign[: cs.size]):
        if yi < ys.size:
            mapping[cs[ci].item()] = ys[yi].item()
    return AccuracyReport(100.0 * matched / table.sum(), mapping, table)


def accuracy_bruteforce(true_labels, cluster_labels) -> float:
    """Same quantity as :func:`accuracy`, maximised over every injective map (test oracle)."""
    ys, cs, table = _contingency(true_labels, cluster_labels)
    if max(ys.size, cs.size) > BRUTEFORCE_LIMIT:
        raise PreconditionError(f"brute force limited to {BRUTEFORCE_LIMIT} distinct labels")
    n = int(table.sum())
    best = 0
    if cs.size <= ys.size:
        for target in permutations(range(ys.size), cs.size):
            best = max(best, sum(int(table[i, j]) for i, j in enumerate(target)))
    else:
        for source in permutations(range(cs.size), ys.size):
            best = max(best, sum(int(table[i, j]) for j, i in enumerate(source)))
    return 100.0 * best / n
