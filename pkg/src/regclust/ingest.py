"""Loading labelled feature tables and turning them into affinity graphs."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.spatial.distance import pdist, squareform

from .graph_core import BINARY, AffinityGraph, PreconditionError

MISSING = frozenset({"", "?", "na", "nan", "null"})
MEDIAN = "median"


class DataError(ValueError):
    """Raised when an input file cannot be turned into a dataset."""


@dataclass(frozen=True, eq=False)
class Dataset:
    """Real-valued feature matrix with optional integer class labels.

    Attributes
    ----------
    features : ndarray of shape (n, d)
    labels : ndarray of shape (n,) or None
    name : str
    dropped : int
        Rows discarded for missing values.
    label_names : list
        Original label values, indexed by code.
    """

    features: np.ndarray
    labels: np.ndarray | None = None
    name: str = "dataset"
    dropped: int = 0
    label_names: list = field(default_factory=list)

    def __post_init__(self):
        x = np.asarray(self.features, dtype=np.float64)
        if x.ndim != 2 or x.shape[1] < 1:
            raise DataError("features must be a 2-d array with at least one column")
        if not np.all(np.isfinite(x)):
            raise DataError("features contain non-finite values")
        object.__setattr__(self, "features", x)
        if self.labels is not None:
            y = np.asarray(self.labels, dtype=np.int64)
            if y.shape != (x.shape[0],):
                raise DataError("labels must have one entry per row")
            object.__setattr__(self, "labels", y)

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    @property
    def n_classes(self) -> int:
        return 0 if self.labels is None else int(np.unique(self.labels).size)


def _split_rows(text: str) -> list:
    lines = [ln for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    if not lines:
        return []
    head = lines[0]
    for delim in (",", ";", "\t"):
        if delim in head:
            return [[c.strip() for c in row] for row in csv.reader(io.StringIO("\n".join(lines)), delimiter=delim)]
    return [ln.split() for ln in lines]


def _is_number(cell: str) -> bool:
    try:
        float(cell)
    except ValueError:
        return False
    return True


def _looks_like_header(rows) -> bool:
    # a text cell above a numeric one means the first row names the columns;
    # text labels in a headerless file stay text all the way down
    first = rows[0]
    below = rows[1] if len(rows) > 1 else None
    for j, cell in enumerate(first):
        if _is_number(cell) or cell.lower() in MISSING:
            continue
        if below is None or j >= len(below) or _is_number(below[j]) or below[j].lower() in MISSING:
            return True
    return False


def _resolve_column(selector, header, width):
    if selector is None:
        return None
    if isinstance(selector, int) or (isinstance(selector, str) and selector.lstrip("-").isdigit()):
        idx = int(selector)
        if not -width <= idx < width:
            raise DataError(f"label column {idx} out of range for {width} columns")
        return idx % width
    if header is None or selector not in header:
        raise DataError(f"label column {selector!r} not found in header")
    return header.index(selector)


def load_csv(path, label_column=None, standardize: bool = False, name: str | None = None) -> Dataset:
    """Read a delimited numeric table.

    The delimiter (comma, semicolon, tab or whitespace) and an optional header
    row are detected from the first line.  Rows with a missing cell are
    dropped and counted.  Label values may be arbitrary text and are coded
    ``0, 1, ...`` by first appearance.

    Parameters
    ----------
    path : str or Path
    label_column : int, str or None
        Column index (negative allowed) or header name of the labels.
    standardize : bool
        Z-score each feature column; constant columns become zeros.
    """
    path = Path(path)
    try:
        text = path.read_text()
    except (OSError, UnicodeDecodeError) as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    rows = _split_rows(text)
    if not rows:
        raise DataError(f"{path} is empty")
    header = None
    if _looks_like_header(rows):
        header, rows = rows[0], rows[1:]
    width = len(header) if header is not None else len(rows[0]) if rows else 0
    col = _resolve_column(label_column, header, width)

    feats, raw_labels, dropped = [], [], 0
    for lineno, row in enumerate(rows, start=2 if header is not None else 1):
        if len(row) != width:
            raise DataError(f"line {lineno}: expected {width} fields, got {len(row)}")
        if any(c.lower() in MISSING for c in row):
            dropped += 1
            continue
        vals = []
        for j, cell in enumerate(row):
            if j == col:
                continue
            try:
                vals.append(float(cell))
            except ValueError:
                raise DataError(f"line {lineno}: non-numeric feature {cell!r}") from None
        if not all(math.isfinite(v) for v in vals):
            dropped += 1
            continue
        feats.append(vals)
        if col is not None:
            raw_labels.append(row[col])
    if not feats:
        raise DataError(f"{path} has no usable rows")
    x = np.asarray(feats, dtype=np.float64)
    if x.shape[1] == 0:
        raise DataError("no feature columns besides the label")
    if standardize:
        x = standardize_columns(x)
    labels, names = None, []
    if col is not None:
        codes = {}
        for v in raw_labels:
            codes.setdefault(v, len(codes))
        labels = np.array([codes[v] for v in raw_labels], dtype=np.int64)
        names = list(codes)
    return Dataset(x, labels, name or path.stem, dropped, names)


def standardize_columns(x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    mu = x.mean(axis=0)
    sd = x.std(axis=0)
    out = np.zeros_like(x)
    live = sd > 0
    out[:, live] = (x[:, live] - mu[live]) / sd[live]
    return out


def median_sigma(points) -> float:
    """Median pairwise Euclidean distance."""
    return float(np.median(pdist(np.asarray(points, dtype=np.float64))))


def build_affinity(ds, sigma=MEDIAN) -> AffinityGraph:
    """Gaussian-kernel graph ``exp(-|xi - xj|^2 / (2 sigma^2))``.

    ``sigma`` is ``"median"`` for the median pairwise distance or a positive
    number.
    """
    x = ds.features if isinstance(ds, Dataset) else np.asarray(ds, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] < 2:
        raise PreconditionError("need at least two points")
    d = pdist(x)
    if isinstance(sigma, str):
        if sigma != MEDIAN:
            raise PreconditionError(f"sigma must be 'median' or a positive number, got {sigma!r}")
        s = float(np.median(d))
        if s <= 0.0:
            raise PreconditionError("median pairwise distance is 0; pass a fixed sigma instead")
    else:
        s = float(sigma)
        if not (s > 0.0 and math.isfinite(s)):
            raise PreconditionError(f"sigma must be positive, got {sigma}")
    w = squareform(np.exp(-(d * d) / (2.0 * s * s)))
    return AffinityGraph(w)


def binarize(g: AffinityGraph, threshold: float) -> AffinityGraph:
    """Binary graph with an edge wherever the weight reaches ``threshold``."""
    if not 0.0 <= threshold <= 1.0:
        raise PreconditionError(f"threshold must lie in [0, 1], got {threshold}")
    w = (g.weights >= threshold).astype(np.float64)
    np.fill_diagonal(w, 0.0)
    return AffinityGraph(w, mode=BINARY)
