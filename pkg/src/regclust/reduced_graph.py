"""Compression of a graph into the density graph of its partition classes."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graph_core import AffinityGraph, PreconditionError
from .partition import EquitablePartition, class_densities


@dataclass(frozen=True, eq=False)
class ReducedGraph:
    """One vertex per partition class, weighted by inter-class density.

    Attributes
    ----------
    weights : ndarray of shape (k, k)
    class_map : ndarray of shape (k, class_size)
        Original vertices behind each reduced vertex.
    """

    weights: np.ndarray
    class_map: np.ndarray

    @property
    def k(self) -> int:
        return self.weights.shape[0]

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "weights": self.weights.tolist(),
            "class_map": np.asarray(self.class_map).tolist(),
        }


def build_reduced(g: AffinityGraph, p: EquitablePartition, threshold: float | None = None) -> ReducedGraph:
    """Reduced graph of ``p``; every class pair is kept, weighted by its density.

    ``threshold`` optionally zeroes pairs whose density does not exceed it.
    The exceptional class is not represented.
    """
    if p.k < 2:
        raise PreconditionError("reduced graph needs at least two classes")
    weights = class_densities(g, p)
    if threshold is not None:
        weights = np.where(weights > threshold, weights, 0.0)
    weights.setflags(write=False)
    return ReducedGraph(weights, p.classes)
