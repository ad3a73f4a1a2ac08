"""Pair regularity checkers.

Every checker answers one question about a pair of vertex classes: is the
pair (approximately) regular, or is there a pair of subsets whose density
deviates from the pair density by a certified amount?  Irregular answers
always carry a :class:`Certificate` that has been recomputed and checked
against its size and deviation bounds before it is returned.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .graph_core import AffinityGraph, PreconditionError, _check_pair

ALON = "alon"
FK = "fk"
EXHAUSTIVE = "exhaustive"
CHECKERS = (ALON, FK)

REGULAR = "regular"
IRREGULAR = "irregular"

# pivots tried by the co-degree step before giving up
_MAX_PIVOTS = 5
# power iteration settings used inside check_pair_fk
FK_TOL = 1e-6
FK_MAX_ITER = 2000
EXHAUSTIVE_LIMIT = 10


@dataclass(frozen=True, eq=False)
class Certificate:
    """Witness ``(x, y)`` of an irregular pair.

    ``deviation`` is ``|d(x, y) - d(V_s, V_t)|`` and ``level`` the bound it
    certifies; construction fails unless ``deviation >= level``.
    """

    x: np.ndarray
    y: np.ndarray
    deviation: float
    level: float

    def __post_init__(self):
        if len(self.x) == 0 or len(self.y) == 0:
            raise PreconditionError("certificate sets must be nonempty")
        if not self.deviation >= self.level:
            raise PreconditionError(
                f"certificate deviation {self.deviation} below level {self.level}"
            )

    def to_dict(self) -> dict:
        return {
            "x": [int(i) for i in self.x],
            "y": [int(i) for i in self.y],
            "deviation": float(self.deviation),
            "level": float(self.level),
        }


@dataclass(frozen=True, eq=False)
class PairVerdict:
    kind: str
    pair: tuple
    checker: str
    certificate: Certificate | None = None

    def __post_init__(self):
        if self.kind == IRREGULAR and self.certificate is None:
            raise PreconditionError("irregular verdicts need a certificate")
        if self.kind == REGULAR and self.certificate is not None:
            raise PreconditionError("regular verdicts carry no certificate")

    @property
    def is_regular(self) -> bool:
        return self.kind == REGULAR

    def to_dict(self) -> dict:
        out = {"kind": self.kind, "pair": list(self.pair), "checker": self.checker}
        if self.certificate is not None:
            out["certificate"] = self.certificate.to_dict()
        return out


class SingularTriplet(NamedTuple):
    sigma: float
    u: np.ndarray
    v: np.ndarray
    converged: bool


def alon_min_size(eps: float, class_size: int) -> int:
    """Smallest certificate side accepted for an ``eps`` check of equal classes."""
    return max(1, math.ceil(eps**4 / 16.0 * class_size))


def fk_level(eps: float) -> float:
    return eps**9 / 108.0


def _validated(block, xi, yi, d, level, min_x, min_y):
    """Return ``(xi, yi, deviation)`` if the local index sets certify ``level``."""
    if xi.size < min_x or yi.size < min_y:
        return None
    dev = abs(float(block[np.ix_(xi, yi)].mean()) - d)
    if dev >= level:
        return xi, yi, dev
    return None


def _masked_density(blocks, xmask, ymask):
    e = np.matmul(xmask[:, None, :], np.matmul(blocks, ymask[:, :, None]))[:, 0, 0]
    with np.errstate(invalid="ignore", divide="ignore"):
        return e / (xmask.sum(axis=1) * ymask.sum(axis=1))


def _deviators(degrees, expected, width, count_bound):
    """Majority-direction vertices whose degree is off by at least ``width``."""
    hi = degrees - expected[:, None] >= width
    lo = expected[:, None] - degrees >= width
    nhi, nlo = hi.sum(axis=1), lo.sum(axis=1)
    triggered = nhi + nlo > count_bound
    pick = np.where((nhi >= nlo)[:, None], hi, lo)
    return triggered, pick


def _codegree_step(block, d, eps):
    nc = block.shape[0]
    width = eps**4 * nc
    codeg = block.T @ block - d * d * nc
    np.fill_diagonal(codeg, 0.0)
    calm = np.abs(block.sum(axis=0) - d * nc) < width
    score = np.where(calm, codeg.sum(axis=1), -np.inf)
    order = np.argsort(-score, kind="stable")[:_MAX_PIVOTS]
    min_size = alon_min_size(eps, nc)
    best = None
    for y0 in order:
        if not np.isfinite(score[y0]):
            break
        partners = np.flatnonzero(codeg[y0] >= 2.0 * width)
        yi = np.union1d(partners, [y0])
        xi = np.flatnonzero(block[:, y0] > d)
        got = _validated(block, xi, yi, d, eps**4, min_size, min_size)
        if got is not None and (best is None or got[2] > best[2]):
            best = got
    return best


def _alon_batch(blocks: np.ndarray, eps: float) -> list:
    """Alon-style check of a stack of ``(c, c)`` blocks (rows: first class).

    Each entry of the result is ``None`` for a regular pair or
    ``(xi, yi, deviation)`` in block-local indices.

    Pairs sparser than ``eps**3`` are regular.  Otherwise, when more than
    ``eps**4 / 8 * c`` vertices on a side have degree off the average by
    ``eps**4 * c``, the majority-direction deviators give candidates (against
    the whole other class, or against the deviators of the other side).
    Without such deviators a co-degree pivot search is used.  The validated
    candidate with the largest deviation wins.
    """
    blocks = np.asarray(blocks, dtype=np.float64)
    n_pairs, c, _ = blocks.shape
    e4 = eps**4
    width = e4 * c
    count_bound = e4 / 8.0 * c
    min_size = alon_min_size(eps, c)
    d = blocks.mean(axis=(1, 2))
    col_deg = blocks.sum(axis=1)
    row_deg = blocks.sum(axis=2)
    y_trig, y_mask = _deviators(col_deg, d * c, width, count_bound)
    x_trig, x_mask = _deviators(row_deg, d * c, width, count_bound)
    active = d >= eps**3

    ny = y_mask.sum(axis=1)
    nx = x_mask.sum(axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        dens_y = (y_mask * col_deg).sum(axis=1) / (c * ny)
        dens_x = (x_mask * row_deg).sum(axis=1) / (c * nx)
    dens_xy = np.full(n_pairs, np.nan)
    both = active & x_trig & y_trig
    if both.any():
        dens_xy[both] = _masked_density(blocks[both], x_mask[both].astype(float), y_mask[both].astype(float))
    devs = np.abs(np.stack([dens_y, dens_x, dens_xy], axis=1) - d[:, None])
    ok = np.stack([
        active & y_trig & (ny >= min_size),
        active & x_trig & (nx >= min_size),
        both & (nx >= min_size) & (ny >= min_size),
    ], axis=1)
    ok &= devs >= e4
    devs = np.where(ok, devs, -np.inf)
    choice = np.argmax(devs, axis=1)

    full = np.arange(c)
    out = [None] * n_pairs
    for i in range(n_pairs):
        if not active[i]:
            continue
        if not (x_trig[i] or y_trig[i]):
            out[i] = _codegree_step(blocks[i], float(d[i]), eps)
            continue
        j = choice[i]
        if not ok[i, j]:
            continue
        xi = full if j == 0 else np.flatnonzero(x_mask[i])
        yi = full if j == 1 else np.flatnonzero(y_mask[i])
        out[i] = (xi, yi, float(devs[i, j]))
    return out


def _alon_block(block: np.ndarray, eps: float):
    return _alon_batch(np.asarray(block)[None], eps)[0]


def _power_batch(w: np.ndarray, v: np.ndarray, tol: float, max_iter: int):
    """Power iteration on ``W^T W`` for a stack of matrices sharing a shape."""
    n_mat, p, q = w.shape
    v = v / np.linalg.norm(v, axis=1, keepdims=True)
    conv = ~np.any(w.reshape(n_mat, -1), axis=1)
    dead = np.linalg.norm(np.matmul(w, v[:, :, None])[:, :, 0], axis=1) == 0.0
    for i in np.flatnonzero(dead & ~conv):
        v[i] = 0.0
        v[i, int(np.argmax(np.linalg.norm(w[i], axis=0)))] = 1.0
    idx = np.flatnonzero(~conv)
    wa, va = w[idx], v[idx]
    live = np.ones(idx.size, dtype=bool)
    for _ in range(max_iter):
        if not live.any():
            break
        x = np.matmul(wa, va[:, :, None])[:, :, 0]
        sigma = np.linalg.norm(x, axis=1)
        u = x / sigma[:, None]
        y = np.matmul(u[:, None, :], wa)[:, 0, :]
        resid = np.linalg.norm(y - sigma[:, None] * va, axis=1)
        va = np.where(live[:, None], y / np.linalg.norm(y, axis=1, keepdims=True), va)
        done = live & (resid <= tol * sigma)
        if done.any():
            v[idx[done]] = va[done]
            conv[idx[done]] = True
            live &= ~done
            # compact once half of the stack has converged
            if 2 * live.sum() <= live.size:
                idx, wa, va = idx[live], wa[live], va[live]
                live = live[live]
    v[idx[live]] = va[live]
    x = np.matmul(w, v[:, :, None])[:, :, 0]
    sigma = np.linalg.norm(x, axis=1)
    zero = sigma == 0.0
    u = np.zeros((n_mat, p))
    u[~zero] = x[~zero] / sigma[~zero, None]
    if zero.any():
        u[zero, 0] = 1.0
        v[zero] = 0.0
        v[zero, 0] = 1.0
    pivot = np.argmax(np.abs(v), axis=1)
    flip = np.where(v[np.arange(n_mat), pivot] < 0, -1.0, 1.0)
    return sigma, u * flip[:, None], v * flip[:, None], conv


def first_singular_value(w, tol: float = 1e-10, max_iter: int = 10000, seed=0) -> SingularTriplet:
    """Largest singular value of ``w`` and its singular vectors by power iteration.

    Iterates ``v <- W^T W v`` from a seeded random start until the residual
    ``||W^T u - sigma v||`` drops below ``tol * sigma``.  When ``max_iter``
    is exhausted the best estimate is returned with ``converged=False``.
    Signs are fixed so that the largest entry of ``v`` is positive.
    """
    w = np.asarray(w, dtype=np.float64)
    if w.ndim != 2 or 0 in w.shape:
        raise PreconditionError("matrix must have nonzero dimensions")
    if not tol > 0:
        raise PreconditionError("tol must be positive")
    v0 = np.random.default_rng(seed).standard_normal(w.shape[1])
    sigma, u, v, conv = _power_batch(w[None], v0[None], tol, max_iter)
    return SingularTriplet(float(sigma[0]), u[0], v[0], bool(conv[0]))


def _prefix_sweep(dev: np.ndarray, u: np.ndarray, v: np.ndarray):
    """Best sign-consistent prefix pairs of the singular vectors, for a stack of blocks.

    Rows are ranked by ``|u|`` inside one sign class, columns by ``|v|``; for
    each block the prefix pair maximising ``|W(S, T)| / sqrt(|S| |T|)`` over
    the four sign combinations is returned as boolean masks.
    """
    n_mat, p, q = dev.shape
    scale = 1.0 / np.sqrt(np.outer(np.arange(1, p + 1), np.arange(1, q + 1)))
    best_score = np.full(n_mat, -np.inf)
    best_rows = np.zeros((n_mat, p), dtype=bool)
    best_cols = np.zeros((n_mat, q), dtype=bool)
    ar = np.arange(n_mat)
    for su in (1.0, -1.0):
        rmask = su * u > 0
        rorder = np.argsort(np.where(rmask, -np.abs(u), np.inf), axis=1, kind="stable")
        nr = rmask.sum(axis=1)
        for sv in (1.0, -1.0):
            cmask = sv * v > 0
            corder = np.argsort(np.where(cmask, -np.abs(v), np.inf), axis=1, kind="stable")
            nc = cmask.sum(axis=1)
            sub = dev[ar[:, None, None], rorder[:, :, None], corder[:, None, :]]
            score = np.abs(sub.cumsum(axis=1).cumsum(axis=2)) * scale
            valid = (np.arange(p)[None, :, None] < nr[:, None, None]) & (np.arange(q)[None, None, :] < nc[:, None, None])
            score = np.where(valid, score, -np.inf).reshape(n_mat, -1)
            flat = np.argmax(score, axis=1)
            top = score[ar, flat]
            better = top > best_score
            for i in np.flatnonzero(better):
                bi, bj = divmod(int(flat[i]), q)
                best_rows[i] = False
                best_rows[i, rorder[i, : bi + 1]] = True
                best_cols[i] = False
                best_cols[i, corder[i, : bj + 1]] = True
            best_score = np.where(better, top, best_score)
    return best_score, best_rows, best_cols


def _fk_batch(blocks: np.ndarray, eps: float, seeds, tol=None, max_iter=None) -> list:
    """Singular-value check of a stack of ``(p, q)`` blocks; same output as :func:`_alon_batch`."""
    tol = FK_TOL if tol is None else tol
    max_iter = FK_MAX_ITER if max_iter is None else max_iter
    blocks = np.asarray(blocks, dtype=np.float64)
    n_pairs, p, q = blocks.shape
    d = blocks.mean(axis=(1, 2))
    dev = blocks - d[:, None, None]
    v0 = np.stack([np.random.default_rng(s).standard_normal(q) for s in seeds])
    sigma, u, v, conv = _power_batch(dev, v0, tol, max_iter)
    threshold = eps**3 * math.sqrt(p * q)
    sigma = np.where(conv, sigma, sigma * (1.0 + tol))
    out = [None] * n_pairs
    cand = np.flatnonzero(sigma >= threshold)
    if cand.size == 0:
        return out
    score, rows, cols = _prefix_sweep(dev[cand], u[cand], v[cand])
    level = fk_level(eps)
    min_x = max(1, math.ceil(level * p))
    min_y = max(1, math.ceil(level * q))
    dens = _masked_density(blocks[cand], rows.astype(float), cols.astype(float))
    gap = np.abs(dens - d[cand])
    for j, i in enumerate(cand):
        if not np.isfinite(score[j]):
            continue
        xi, yi = np.flatnonzero(rows[j]), np.flatnonzero(cols[j])
        if xi.size >= min_x and yi.size >= min_y and gap[j] >= level:
            out[i] = (xi, yi, float(gap[j]))
    return out


def _fk_block(block: np.ndarray, eps: float, seed, tol=None, max_iter=None):
    return _fk_batch(np.asarray(block)[None], eps, [seed], tol, max_iter)[0]


def _exhaustive_block(block: np.ndarray, eps: float):
    """Maximum-deviation witness over all subset pairs; ``None`` if regular."""
    p, q = block.shape
    d = float(block.mean())

    def masks(size, lower):
        rows = [m for m in range(1, 1 << size) if bin(m).count("1") > lower]
        mat = np.array([[(m >> i) & 1 for i in range(size)] for m in rows], dtype=np.float64)
        return mat.reshape(-1, size)

    mx = masks(p, eps * p)
    my = masks(q, eps * q)
    if mx.shape[0] == 0 or my.shape[0] == 0:
        return None
    e = mx @ block @ my.T
    dens = e / np.outer(mx.sum(axis=1), my.sum(axis=1))
    gap = np.abs(dens - d)
    i, j = np.unravel_index(int(np.argmax(gap)), gap.shape)
    if gap[i, j] < eps - 1e-12:
        return None
    return np.flatnonzero(mx[i]), np.flatnonzero(my[j]), float(gap[i, j])


def _verdict(found, vs, vt, level, pair, checker) -> PairVerdict:
    if found is None:
        return PairVerdict(REGULAR, pair, checker)
    xi, yi, dev = found
    cert = Certificate(vs[xi], vt[yi], dev, level)
    return PairVerdict(IRREGULAR, pair, checker, cert)


def _check_eps(eps):
    if not 0.0 < eps < 1.0:
        raise PreconditionError(f"eps must lie in (0, 1), got {eps}")


def check_pair_alon(g: AffinityGraph, vs, vt, eps: float, pair=(0, 1)) -> PairVerdict:
    """Verify the pair ``(vs, vt)`` as ``eps``-regular or certify it irregular.

    Certificates satisfy ``|x|, |y| >= ceil(eps**4 / 16 * |vs|)`` and
    ``|d(x, y) - d(vs, vt)| >= eps**4``.
    """
    vs, vt = _check_pair(g, vs, vt)
    _check_eps(eps)
    if vs.size != vt.size:
        raise PreconditionError("Alon check needs equally sized classes")
    found = _alon_block(g.weights[np.ix_(vs, vt)], eps)
    return _verdict(found, vs, vt, eps**4, pair, ALON)


def check_pair_fk(g: AffinityGraph, vs, vt, eps: float, seed=0, pair=(0, 1)) -> PairVerdict:
    """Singular-value check of the pair ``(vs, vt)``.

    The pair is declared regular when the top singular value of the centred
    block is below ``eps**3 * sqrt(|vs| |vt|)``; this is conservative since any
    ``eps``-witness forces a larger singular value.  Otherwise a rounded pair
    of singular-vector prefixes is certified at level ``eps**9 / 108``.
    """
    vs, vt = _check_pair(g, vs, vt)
    _check_eps(eps)
    found = _fk_block(g.weights[np.ix_(vs, vt)], eps, seed)
    return _verdict(found, vs, vt, fk_level(eps), pair, FK)


def check_pair_exhaustive(g: AffinityGraph, vs, vt, eps: float, pair=(0, 1)) -> PairVerdict:
    """Decide ``eps``-regularity exactly by enumerating all subset pairs (test oracle)."""
    vs, vt = _check_pair(g, vs, vt)
    _check_eps(eps)
    if vs.size > EXHAUSTIVE_LIMIT or vt.size > EXHAUSTIVE_LIMIT:
        raise PreconditionError(f"exhaustive check limited to {EXHAUSTIVE_LIMIT} vertices per class")
    found = _exhaustive_block(g.weights[np.ix_(vs, vt)], eps)
    return _verdict(found, vs, vt, eps, pair, EXHAUSTIVE)


def pair_seed(seed: int, s: int, t: int) -> np.random.SeedSequence:
    """Per-pair random stream, independent of evaluation order."""
    return np.random.SeedSequence([int(seed), int(s), int(t)])


__all__ = [
    "ALON",
    "FK",
    "Certificate",
    "PairVerdict",
    "SingularTriplet",
    "alon_min_size",
    "check_pair_alon",
    "check_pair_exhaustive",
    "check_pair_fk",
    "first_singular_value",
    "fk_level",
    "pair_seed",
]
