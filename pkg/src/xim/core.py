"""Shared domain types: datasets, dissimilarities, lattices, prototypes, configs.

All containers freeze their arrays on construction so they can be shared
between threads and runs without defensive copies.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np


class XimError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(XimError, ValueError):
    """Invalid parameter or configuration value."""


class StructureError(XimError, ValueError):
    """Input has the wrong structure (ragged rows, non-square matrix...)."""


class DomainError(XimError, ValueError):
    """A value lies outside its admissible domain."""


class ShapeError(XimError, ValueError):
    """Array dimensions do not agree."""


class ParseError(XimError, ValueError):
    """A cell could not be parsed as a number.

    ``row`` and ``col`` are 0-based indices into the data rows (header
    excluded) and the raw columns of the file.
    """

    def __init__(self, row: int, col: int, cell: str, path=None):
        self.row, self.col, self.cell = row, col, cell
        where = f" in {path}" if path is not None else ""
        super().__init__(f"cannot parse {cell!r} as a number at (row {row}, col {col}){where}")


def _frozen(a, dtype=float) -> np.ndarray:
    arr = np.array(a, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


def make_rng(seed: int) -> np.random.Generator:
    """Counter-based (Philox) generator; one seed drives every random choice."""
    return np.random.Generator(np.random.Philox(int(seed) & 0xFFFFFFFFFFFFFFFF))


# --------------------------------------------------------------------------
# Datasets and dissimilarities
# --------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Dataset:
    """N data vectors in D dimensions with optional labels and row ids."""

    points: np.ndarray
    labels: Optional[np.ndarray] = None
    ids: Optional[Sequence[str]] = None

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        if pts.ndim != 2 or pts.shape[0] < 1 or pts.shape[1] < 1:
            raise StructureError(f"points must be an N x D matrix with N, D >= 1, got shape {pts.shape}")
        if not np.all(np.isfinite(pts)):
            raise DomainError("points contain NaN or Inf")
        object.__setattr__(self, "points", _frozen(pts))
        if self.labels is not None:
            labels = _frozen(self.labels, dtype=np.int64)
            if labels.shape != (pts.shape[0],):
                raise StructureError(f"expected {pts.shape[0]} labels, got {labels.shape}")
            object.__setattr__(self, "labels", labels)
        if self.ids is not None:
            ids = tuple(str(i) for i in self.ids)
            if len(ids) != pts.shape[0]:
                raise StructureError(f"expected {pts.shape[0]} ids, got {len(ids)}")
            object.__setattr__(self, "ids", ids)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def __len__(self):
        return self.n

    def subset(self, index) -> "Dataset":
        index = np.asarray(index)
        return Dataset(
            self.points[index],
            None if self.labels is None else self.labels[index],
            None if self.ids is None else [self.ids[i] for i in index],
        )


@dataclass(frozen=True, eq=False)
class DissimilarityMatrix:
    """Square matrix of nonnegative dissimilarities with a zero diagonal.

    Symmetry is not required; ``symmetric`` reports whether it holds.
    """

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 2 or v.shape[0] != v.shape[1] or v.shape[0] < 1:
            raise StructureError(f"dissimilarity matrix must be square, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise DomainError("dissimilarities contain NaN or Inf")
        if np.any(v < 0):
            raise DomainError("negative dissimilarity")
        diag = np.diag(v)
        if np.any(diag >= 1e-12):
            raise DomainError(f"nonzero diagonal entry (max {diag.max():g})")
        v = v.copy()
        np.fill_diagonal(v, 0.0)
        object.__setattr__(self, "values", _frozen(v))

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def symmetric(self) -> bool:
        return self.check_symmetric()

    def check_symmetric(self, atol: float = 0.0) -> bool:
        return bool(np.allclose(self.values, self.values.T, rtol=0.0, atol=atol))

    @classmethod
    def from_points(cls, points) -> "DissimilarityMatrix":
        """Squared Euclidean dissimilarities between the rows of ``points``."""
        x = np.asarray(points.points if isinstance(points, Dataset) else points, dtype=float)
        d = sq_dist(x, x)
        np.fill_diagonal(d, 0.0)
        return cls(d)


def sq_dist(a, b) -> np.ndarray:
    """Pairwise squared Euclidean distances, clipped at zero."""
    a = np.atleast_2d(np.asarray(a, dtype=float))
    b = np.atleast_2d(np.asarray(b, dtype=float))
    d = (a * a).sum(1)[:, None] + (b * b).sum(1)[None, :] - 2.0 * a @ b.T
    np.maximum(d, 0.0, out=d)
    return d


@dataclass(frozen=True)
class DistanceSpec:
    """How distances in the exploration space are obtained.

    ``squared_euclidean`` works on vectors; ``precomputed`` wraps a
    :class:`DissimilarityMatrix` and is addressed by item index.
    """

    kind: str = "squared_euclidean"
    matrix: Optional[DissimilarityMatrix] = None

    def __post_init__(self):
        if self.kind not in ("squared_euclidean", "precomputed"):
            raise ConfigError(f"unknown distance kind {self.kind!r}")
        if self.kind == "precomputed" and self.matrix is None:
            raise ConfigError("precomputed distance needs a dissimilarity matrix")

    def to_prototypes(self, x, prototypes) -> np.ndarray:
        """Distances from one vector ``x`` to each prototype row."""
        if self.kind != "squared_euclidean":
            raise ConfigError("vector distances need kind='squared_euclidean'")
        x = np.asarray(x, dtype=float)
        w = np.asarray(prototypes, dtype=float)
        if w.ndim != 2 or x.shape != (w.shape[1],):
            raise ShapeError(f"vector of shape {x.shape} vs prototypes of shape {w.shape}")
        diff = w - x
        return np.einsum("ij,ij->i", diff, diff)

    def pairwise(self, points=None) -> np.ndarray:
        """Full N x N distance matrix among the data items."""
        if self.kind == "precomputed":
            return np.array(self.matrix.values)
        if points is None:
            raise ConfigError("squared_euclidean pairwise distances need points")
        x = points.points if isinstance(points, Dataset) else np.asarray(points, dtype=float)
        d = sq_dist(x, x)
        np.fill_diagonal(d, 0.0)
        return d


SQUARED_EUCLIDEAN = DistanceSpec()


# --------------------------------------------------------------------------
# Lattice and prototypes
# --------------------------------------------------------------------------

TOPOLOGIES = ("rectangular", "hexagonal", "explicit")


@dataclass(frozen=True, eq=False)
class Lattice:
    """Fixed node coordinates in the ordering space plus their distance cache."""

    nodes: np.ndarray
    topology: str = "explicit"
    dist: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        if self.topology not in TOPOLOGIES:
            raise ConfigError(f"unknown topology {self.topology!r}")
        r = np.asarray(self.nodes, dtype=float)
        if r.ndim == 1:
            r = r[:, None]
        if r.ndim != 2 or r.shape[0] < 2:
            raise ConfigError(f"a lattice needs at least 2 nodes, got shape {r.shape}")
        if not np.all(np.isfinite(r)):
            raise DomainError("node coordinates contain NaN or Inf")
        d = sq_dist(r, r)
        d = 0.5 * (d + d.T)
        np.fill_diagonal(d, 0.0)
        object.__setattr__(self, "nodes", _frozen(r))
        object.__setattr__(self, "dist", _frozen(d))

    @property
    def m(self) -> int:
        return self.nodes.shape[0]

    @property
    def dim(self) -> int:
        return self.nodes.shape[1]

    def __len__(self):
        return self.m

    def extent(self) -> float:
        """Largest coordinate range over the lattice axes."""
        return float(np.ptp(self.nodes, axis=0).max())


def build_lattice(rows: int, cols: int, topology: str = "rectangular") -> Lattice:
    """Regular 2-D grid with unit spacing.

    Node ``(i, j)`` is stored at row-major index ``i * cols + j``.  The
    hexagonal layout shifts odd rows by half a unit and compresses the row
    pitch to sqrt(3)/2 so that all six neighbours sit at unit distance.
    """
    rows, cols = int(rows), int(cols)
    if rows < 1 or cols < 1 or rows * cols < 2:
        raise ConfigError(f"lattice {rows}x{cols} needs rows, cols >= 1 and at least 2 nodes")
    ii, jj = np.meshgrid(np.arange(rows, dtype=float), np.arange(cols, dtype=float), indexing="ij")
    if topology == "rectangular":
        nodes = np.column_stack([ii.ravel(), jj.ravel()])
    elif topology == "hexagonal":
        shift = 0.5 * (ii % 2)
        nodes = np.column_stack([ii.ravel() * math.sqrt(3) / 2, (jj + shift).ravel()])
    else:
        raise ConfigError(f"build_lattice supports rectangular or hexagonal, got {topology!r}")
    return Lattice(nodes, topology)


def load_lattice(path, delimiter: Optional[str] = None) -> Lattice:
    """Explicit node layout: one coordinate row per line."""
    rows = _read_numeric_rows(path, delimiter=delimiter, header=False)
    return Lattice(np.array(rows, dtype=float), "explicit")


@dataclass(frozen=True, eq=False)
class PrototypeSet:
    """M prototype vectors, row j paired with node j of ``lattice``."""

    weights: np.ndarray
    lattice: Lattice

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.ndim != 2 or w.shape[0] != self.lattice.m:
            raise ShapeError(f"expected {self.lattice.m} prototype rows, got shape {w.shape}")
        if not np.all(np.isfinite(w)):
            raise DomainError("prototypes contain NaN or Inf")
        object.__setattr__(self, "weights", _frozen(w))

    @property
    def m(self) -> int:
        return self.weights.shape[0]

    @property
    def dim(self) -> int:
        return self.weights.shape[1]


# --------------------------------------------------------------------------
# Training configuration
# --------------------------------------------------------------------------

METHODS = ("xim", "t-xim", "c-xim", "som", "batch-xim", "median-xim", "pca")
METHOD_KERNEL = {"xim": "gaussian", "t-xim": "student_t", "c-xim": "cauchy_lorentz", "som": "gaussian"}
BEST_MATCH_RULES = ("min_distance", "heskes", "gkl")
BANDWIDTH_MODES = ("global", "knn", "perplexity")
INIT_POLICIES = ("sample", "pca")


def _pair(value, name):
    if value is None:
        return None
    if np.isscalar(value):
        value = (value, value)
    a, b = (float(v) for v in value)
    if not (a > 0 and b > 0) or not (math.isfinite(a) and math.isfinite(b)):
        raise ConfigError(f"{name} schedule endpoints must be positive and finite, got {(a, b)}")
    return (a, b)


@dataclass(frozen=True)
class TrainConfig:
    """Everything a training run needs besides data and lattice.

    Schedules are ``(start, end)`` pairs annealed exponentially; ``None``
    for ``sigma`` or ``gamma`` means "derive a default from the lattice or
    the data" (see :func:`xim.train_online.resolve_schedules`).

    ``h_family`` overrides the neighbourhood family implied by ``method``.
    ``weighting`` is ``"eta"`` for the (1 - eta, eta) force balance or
    ``"unweighted"`` for plain h - g.  ``prefactor`` keeps the 1/gamma**2
    step factor of the exact gradient.
    """

    method: str = "c-xim"
    t_max: int = 10_000
    epsilon: tuple = (0.9, 0.01)
    sigma: Optional[tuple] = None
    gamma: Optional[tuple] = None
    eta: float = 0.3
    h_family: Optional[str] = None
    g_family: str = "gaussian"
    best_match: str = "min_distance"
    bandwidth: str = "global"
    k: tuple = (10.0, 3.0)
    perplexity: float = 10.0
    weighting: str = "eta"
    prefactor: bool = False
    seed: int = 0
    init: str = "sample"
    log_stride: int = 100
    damping: float = 0.5
    max_iters: int = 100
    tol: float = 1e-8
    anneal_iters: Optional[int] = None

    def __post_init__(self):
        if self.method not in METHODS:
            raise ConfigError(f"unknown method {self.method!r}; expected one of {METHODS}")
        if int(self.t_max) < 1:
            raise ConfigError(f"t_max must be >= 1, got {self.t_max}")
        object.__setattr__(self, "t_max", int(self.t_max))
        object.__setattr__(self, "epsilon", _pair(self.epsilon, "epsilon"))
        object.__setattr__(self, "sigma", _pair(self.sigma, "sigma"))
        object.__setattr__(self, "gamma", _pair(self.gamma, "gamma"))
        object.__setattr__(self, "k", _pair(self.k, "k"))
        if not 0.0 <= float(self.eta) <= 1.0:
            raise ConfigError(f"eta must lie in [0, 1], got {self.eta}")
        if self.best_match not in BEST_MATCH_RULES:
            raise ConfigError(f"unknown best-match rule {self.best_match!r}")
        if self.bandwidth not in BANDWIDTH_MODES:
            raise ConfigError(f"unknown bandwidth mode {self.bandwidth!r}")
        if self.weighting not in ("eta", "unweighted"):
            raise ConfigError(f"unknown weighting {self.weighting!r}")
        if self.init not in INIT_POLICIES:
            raise ConfigError(f"unknown init policy {self.init!r}")
        if not 0.0 < float(self.damping) <= 1.0:
            raise ConfigError(f"damping must lie in (0, 1], got {self.damping}")
        if int(self.log_stride) < 1:
            raise ConfigError("log_stride must be >= 1")
        if int(self.max_iters) < 0:
            raise ConfigError("max_iters must be >= 0")
        if not float(self.tol) > 0:
            raise ConfigError("tol must be positive")
        if not float(self.perplexity) > 1:
            raise ConfigError("perplexity must exceed 1")
        from .kernels import FAMILIES

        if self.h_family is not None and self.h_family not in FAMILIES:
            raise ConfigError(f"unknown kernel family {self.h_family!r}")
        if self.g_family not in FAMILIES:
            raise ConfigError(f"unknown kernel family {self.g_family!r}")

    @property
    def kernel_family(self) -> str:
        if self.h_family is not None:
            return self.h_family
        return METHOD_KERNEL.get(self.method, "gaussian")

    def replace(self, **changes) -> "TrainConfig":
        from dataclasses import replace

        return replace(self, **changes)


# --------------------------------------------------------------------------
# Text I/O
# --------------------------------------------------------------------------


def _split(line: str, delimiter: Optional[str]):
    if delimiter is None:
        delimiter = "," if "," in line else None
    cells = line.split(delimiter)
    return [c.strip() for c in cells]


def _data_lines(path):
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line and not line.startswith("#"):
                yield line


def _read_numeric_rows(path, delimiter=None, header=False):
    rows = []
    width = None
    for r, line in enumerate(_data_lines(path)):
        if header and r == 0:
            continue
        row_idx = len(rows)
        cells = _split(line, delimiter)
        if width is None:
            width = len(cells)
        elif len(cells) != width:
            raise StructureError(f"row {row_idx} has {len(cells)} columns, expected {width}")
        vals = []
        for c, cell in enumerate(cells):
            try:
                vals.append(float(cell))
            except ValueError:
                raise ParseError(row_idx, c, cell, path) from None
        rows.append(vals)
    if not rows:
        raise StructureError(f"no data rows in {path}")
    return rows


def load_dataset(
    path,
    delimiter: Optional[str] = None,
    header: bool = False,
    label_column: Optional[int] = None,
    id_column: Optional[int] = None,
) -> Dataset:
    """Read a delimited numeric matrix.

    Parameters
    ----------
    path : path-like
        Comma- or whitespace-delimited text; ``#`` lines are ignored.
    delimiter : str, optional
        Cell separator; autodetected per line (comma if present, else
        whitespace) when omitted.
    header : bool
        Skip the first non-comment line.
    label_column, id_column : int, optional
        Raw column indices (negative counts from the end) holding integer
        class labels and text row ids.  Both are removed from the features.
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(path)
    points, labels, ids = [], [], []
    width = None
    for r, line in enumerate(_data_lines(path)):
        if header and r == 0:
            continue
        row_idx = len(points)
        cells = _split(line, delimiter)
        if width is None:
            width = len(cells)
        elif len(cells) != width:
            raise StructureError(f"row {row_idx} has {len(cells)} columns, expected {width}")
        special = {}
        for name, col in (("label", label_column), ("id", id_column)):
            if col is not None:
                if not -width <= col < width:
                    raise ConfigError(f"{name} column {col} out of range for {width} columns")
                special[name] = col % width
        if "label" in special:
            cell = cells[special["label"]]
            try:
                labels.append(int(float(cell)))
            except ValueError:
                raise ParseError(row_idx, special["label"], cell, path) from None
        if "id" in special:
            ids.append(cells[special["id"]])
        vals = []
        for c, cell in enumerate(cells):
            if c in special.values():
                continue
            try:
                vals.append(float(cell))
            except ValueError:
                raise ParseError(row_idx, c, cell, path) from None
        points.append(vals)
    if not points:
        raise StructureError(f"no data rows in {path}")
    return Dataset(
        np.array(points, dtype=float),
        labels=np.array(labels) if label_column is not None else None,
        ids=ids if id_column is not None else None,
    )


def format_float(v: float) -> str:
    """Shortest text that round-trips a double (at most 17 significant digits)."""
    return repr(float(v))


def save_dataset(data: Dataset, path, delimiter: str = ",") -> None:
    """Write features (then the label column, if any) so that
    ``load_dataset(path, label_column=-1 if labelled)`` restores them exactly."""
    with open(path, "w", encoding="utf-8") as fh:
        for i, row in enumerate(data.points):
            cells = [format_float(v) for v in row]
            if data.labels is not None:
                cells.append(str(int(data.labels[i])))
            fh.write(delimiter.join(cells) + "\n")


def load_dissimilarity(path, delimiter: Optional[str] = None) -> DissimilarityMatrix:
    """Read a square delimited dissimilarity matrix."""
    rows = _read_numeric_rows(path, delimiter=delimiter)
    v = np.array(rows, dtype=float)
    if v.shape[0] != v.shape[1]:
        raise StructureError(f"dissimilarity matrix must be square, got {v.shape}")
    return DissimilarityMatrix(v)
