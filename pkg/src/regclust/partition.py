"""Equitable partitions, the index potential and the practical regularity driver."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, asdict

import numpy as np
from joblib import Parallel, delayed

from .graph_core import AffinityGraph, PreconditionError, canonical_order
from .regularity_check import (
    ALON,
    CHECKERS,
    FK,
    IRREGULAR,
    REGULAR,
    Certificate,
    PairVerdict,
    _alon_batch,
    _fk_batch,
    alon_min_size,
    fk_level,
    pair_seed,
)

logger = logging.getLogger(__name__)

HALT_SIZE = "class_size_below_h"
HALT_REGULAR = "regularity_reached"
HALT_MAX_ITERS = "max_iters"


@dataclass(frozen=True, eq=False)
class EquitablePartition:
    """Classes of identical size plus the exceptional class.

    ``classes`` is a ``(k, class_size)`` integer array; row ``i`` lists the
    members of class ``i``.
    """

    classes: np.ndarray
    exceptional: np.ndarray

    def __post_init__(self):
        classes = np.array(self.classes, dtype=np.int64, copy=True)
        if classes.ndim != 2 or classes.shape[0] < 1 or classes.shape[1] < 1:
            raise PreconditionError("need at least one nonempty class")
        exceptional = np.sort(np.asarray(self.exceptional, dtype=np.int64).reshape(-1))
        classes.setflags(write=False)
        exceptional.setflags(write=False)
        object.__setattr__(self, "classes", classes)
        object.__setattr__(self, "exceptional", exceptional)

    @property
    def k(self) -> int:
        return self.classes.shape[0]

    @property
    def class_size(self) -> int:
        return self.classes.shape[1]

    @property
    def n(self) -> int:
        return self.classes.size + self.exceptional.size

    def validate(self, n: int) -> None:
        """Raise unless the classes and exceptional set partition ``range(n)``."""
        everything = np.concatenate([self.classes.ravel(), self.exceptional])
        if everything.size != n or not np.array_equal(np.sort(everything), np.arange(n)):
            raise PreconditionError("partition does not cover the vertex set exactly once")

    def membership(self, n: int | None = None) -> np.ndarray:
        """Class index of every vertex, ``-1`` for exceptional vertices."""
        n = self.n if n is None else n
        out = np.full(n, -1, dtype=np.int64)
        out[self.classes.ravel()] = np.repeat(np.arange(self.k), self.class_size)
        return out

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "class_size": self.class_size,
            "classes": self.classes.tolist(),
            "exceptional": self.exceptional.tolist(),
        }


@dataclass
class RegularityConfig:
    """User parameters of the practical regularity partitioning driver.

    ``h`` defaults to ``max(ceil(1 / epsilon), 2 * l)``.
    """

    epsilon: float
    l: int = 2
    h: int | None = None
    checker: str = ALON
    seed: int = 0
    max_iters: int = 30
    n_jobs: int = 1

    def __post_init__(self):
        if not 0.0 < self.epsilon < 1.0:
            raise PreconditionError(f"epsilon must lie in (0, 1), got {self.epsilon}")
        if int(self.l) != self.l or self.l < 2:
            raise PreconditionError("refinement number l must be an integer >= 2")
        self.l = int(self.l)
        if self.h is None:
            self.h = max(math.ceil(1.0 / self.epsilon - 1e-9), 2 * self.l)
        if int(self.h) != self.h or self.h < 2:
            raise PreconditionError("minimum class size h must be an integer >= 2")
        self.h = int(self.h)
        if self.checker not in CHECKERS:
            raise PreconditionError(f"checker must be one of {CHECKERS}")
        if self.max_iters < 1:
            raise PreconditionError("max_iters must be positive")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class IterationRecord:
    iter: int
    k: int
    class_size: int
    exceptional_size: int
    index: float
    irregular_pairs: int
    required_regular: int


@dataclass
class RunTrace:
    records: list = field(default_factory=list)
    halt_reason: str | None = None

    @property
    def indices(self) -> list:
        return [r.index for r in self.records]

    def to_list(self) -> list:
        return [asdict(r) for r in self.records]


def initial_partition(n: int, l: int, seed: int) -> EquitablePartition:
    """``l`` classes of ``n // l`` vertices from a seeded shuffle; the rest is exceptional."""
    if l < 1 or n < 2 * l:
        raise PreconditionError(f"need n >= 2 * l, got n={n}, l={l}")
    perm = np.random.default_rng(seed).permutation(n)
    size = n // l
    return EquitablePartition(perm[: l * size].reshape(l, size), perm[l * size :])


def _blocked(g: AffinityGraph, p: EquitablePartition) -> np.ndarray:
    """Weights reordered so classes are contiguous, shaped ``(k, c, k, c)``."""
    order = p.classes.ravel()
    k, c = p.k, p.class_size
    return g.weights[np.ix_(order, order)].reshape(k, c, k, c)


def class_densities(g: AffinityGraph, p: EquitablePartition) -> np.ndarray:
    """``k x k`` matrix of inter-class densities with zero diagonal."""
    dens = np.triu(_blocked(g, p).sum(axis=(1, 3)) / float(p.class_size**2), 1)
    # mirror the upper triangle so the matrix is exactly symmetric
    return dens + dens.T


def index_of(p: EquitablePartition, g: AffinityGraph) -> float:
    """Index (potential) ``(1 / k^2) * sum_{s<t} d(C_s, C_t)^2`` of the partition."""
    if p.k < 2:
        raise PreconditionError("index needs at least two classes")
    dens = class_densities(g, p)
    iu = np.triu_indices(p.k, 1)
    return float(np.sum(dens[iu] ** 2)) / p.k**2


# upper bound on floats gathered per checker batch
_BATCH_FLOATS = 1 << 22


def _run_batch(blocks4, classes, pairs, eps, checker, seed) -> list:
    s_idx = np.array([s for s, _ in pairs])
    t_idx = np.array([t for _, t in pairs])
    stack = blocks4[s_idx, :, t_idx, :]
    if checker == ALON:
        found = _alon_batch(stack, eps)
        level = eps**4
    else:
        found = _fk_batch(stack, eps, [pair_seed(seed, s, t) for s, t in pairs])
        level = fk_level(eps)
    out = []
    for (s, t), got in zip(pairs, found):
        if got is None:
            out.append(PairVerdict(REGULAR, (s, t), checker))
        else:
            xi, yi, dev = got
            cert = Certificate(classes[s][xi], classes[t][yi], dev, level)
            out.append(PairVerdict(IRREGULAR, (s, t), checker, cert))
    return out


def check_all_pairs(g: AffinityGraph, p: EquitablePartition, eps: float, checker=ALON,
                    seed: int = 0, n_jobs: int = 1) -> list:
    """One verdict per unordered class pair ``s < t``, in lexicographic order.

    Pairs are checked in fixed-size batches; with ``n_jobs != 1`` the batches
    run on a thread pool.  Batch boundaries do not depend on ``n_jobs`` and
    every pair draws from its own seeded stream, so the verdicts are the same
    for any degree of parallelism.
    """
    if p.k < 2:
        raise PreconditionError("need at least two classes")
    if checker not in CHECKERS:
        raise PreconditionError(f"checker must be one of {CHECKERS}")
    blocks4 = _blocked(g, p)
    pairs = [(s, t) for s in range(p.k) for t in range(s + 1, p.k)]
    per_batch = max(1, _BATCH_FLOATS // (p.class_size**2))
    batches = [pairs[i : i + per_batch] for i in range(0, len(pairs), per_batch)]
    if n_jobs == 1 or len(batches) == 1:
        parts = [_run_batch(blocks4, p.classes, b, eps, checker, seed) for b in batches]
    else:
        parts = Parallel(n_jobs=n_jobs, prefer="threads")(
            delayed(_run_batch)(blocks4, p.classes, b, eps, checker, seed) for b in batches
        )
    return [v for part in parts for v in part]


def modified_refine(g: AffinityGraph, p: EquitablePartition, verdicts, l: int,
                    seed: int) -> EquitablePartition:
    """Refine ``p`` using at most one irregular pair per class.

    Each class involved in an irregular pair is split into two atoms by the
    certificate of one such pair (drawn with a per-class seeded stream).
    Atoms are carved into subsets of size ``m = class_size // l``; leftovers of
    a class are pooled and shuffled, and one more subset is carved when at
    least ``m`` remain.  At most ``l`` subsets are kept per class, everything
    else joins the exceptional class, so the result has exactly ``l * k``
    classes of size ``m``.
    """
    m = p.class_size // l
    if m < 1:
        raise PreconditionError(f"class size {p.class_size} too small to refine with l={l}")
    partners = [[] for _ in range(p.k)]
    for v in verdicts:
        if v.kind == IRREGULAR:
            s, t = v.pair
            partners[s].append(v)
            partners[t].append(v)
    if not any(partners):
        raise PreconditionError("refinement needs at least one irregular pair")

    new_classes = []
    exceptional = [p.exceptional]
    for s in range(p.k):
        members = p.classes[s]
        rng = np.random.default_rng([int(seed), s])
        if partners[s]:
            chosen = partners[s][int(rng.integers(len(partners[s])))]
            side = chosen.certificate.x if chosen.pair[0] == s else chosen.certificate.y
            inside = np.isin(members, side)
            atoms = [members[inside], members[~inside]]
        else:
            atoms = [members]
        pieces, leftovers = [], []
        for atom in atoms:
            full = (atom.size // m) * m
            pieces.extend(atom[:full].reshape(-1, m))
            leftovers.append(atom[full:])
        pool = rng.permutation(np.concatenate(leftovers))
        if pool.size >= m:
            pieces.append(pool[:m])
            pool = pool[m:]
        new_classes.extend(pieces[:l])
        exceptional.append(pool)
        exceptional.extend(pieces[l:])
    return EquitablePartition(np.array(new_classes), np.concatenate(exceptional))


def max_irregular(k: int, eps: float) -> float:
    """Largest number of unverified pairs an ``eps``-regular partition may have.

    An ``eps`` fraction of the ``k (k - 1) / 2`` class pairs.
    """
    return eps * k * (k - 1) / 2.0


def required_regular(k: int, eps: float) -> int:
    """Verified-regular pairs needed before the driver can stop at ``k`` classes."""
    return max(0, math.ceil(k * (k - 1) / 2 - max_irregular(k, eps) - 1e-9))


def run_ppr(g: AffinityGraph, cfg: RegularityConfig, on_iteration=None):
    """Practical regularity partitioning.

    Starting from ``l`` random classes, alternately check all class pairs and
    refine, until at most an ``eps`` fraction of the pairs is left unverified or
    the next refinement would push the class size below ``h``.

    Parameters
    ----------
    g : AffinityGraph
    cfg : RegularityConfig
    on_iteration : callable, optional
        Called as ``on_iteration(record, partition, verdicts)`` after every
        pair check.

    Returns
    -------
    partition : EquitablePartition
        The first partition that met the regularity count, or the finest one
        whose class size is still at least ``h``.
    trace : RunTrace
    """
    if g.n < cfg.l * cfg.h:
        raise PreconditionError(f"need n >= l * h = {cfg.l * cfg.h}, got n={g.n}")
    stream = np.random.SeedSequence(int(cfg.seed))
    start = initial_partition(g.n, cfg.l, int(stream.generate_state(1)[0]))
    canon = canonical_order(g)
    part = EquitablePartition(canon[start.classes], canon[start.exceptional])
    trace = RunTrace()
    for it in range(1, cfg.max_iters + 1):
        it_seed = int(np.random.SeedSequence([int(cfg.seed), it]).generate_state(1)[0])
        verdicts = check_all_pairs(g, part, cfg.epsilon, cfg.checker, it_seed, cfg.n_jobs)
        irregular = sum(v.kind == IRREGULAR for v in verdicts)
        record = IterationRecord(
            iter=it,
            k=part.k,
            class_size=part.class_size,
            exceptional_size=int(part.exceptional.size),
            index=index_of(part, g),
            irregular_pairs=int(irregular),
            required_regular=required_regular(part.k, cfg.epsilon),
        )
        trace.records.append(record)
        if on_iteration is not None:
            on_iteration(record, part, verdicts)
        logger.debug("iteration %d: k=%d size=%d irregular=%d index=%.4f",
                     it, part.k, part.class_size, irregular, record.index)
        # size first: the next refinement would shrink classes below h
        if part.class_size // cfg.l < cfg.h:
            trace.halt_reason = HALT_SIZE
            return part, trace
        if irregular <= max_irregular(part.k, cfg.epsilon):
            trace.halt_reason = HALT_REGULAR
            return part, trace
        if it == cfg.max_iters:
            break
        part = modified_refine(g, part, verdicts, cfg.l, it_seed)
    trace.halt_reason = HALT_MAX_ITERS
    return part, trace


def partition_to_dict(p: EquitablePartition, trace: RunTrace, cfg: RegularityConfig) -> dict:
    out = p.to_dict()
    out["trace"] = trace.to_list()
    out["halt_reason"] = trace.halt_reason
    out["config"] = cfg.to_dict()
    return out


__all__ = [
    "EquitablePartition",
    "RegularityConfig",
    "RunTrace",
    "IterationRecord",
    "initial_partition",
    "index_of",
    "class_densities",
    "check_all_pairs",
    "modified_refine",
    "run_ppr",
    "required_regular",
    "max_irregular",
    "partition_to_dict",
    "alon_min_size",
    "FK",
]
