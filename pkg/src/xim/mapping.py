"""Explicit data-to-embedding mapping through (prototype, node) reference pairs."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .core import SQUARED_EUCLIDEAN, ConfigError, Dataset, DistanceSpec, PrototypeSet, ShapeError, sq_dist

EXACT_HIT = 1e-12


@dataclass(frozen=True, eq=False)
class ReferencePairs:
    sources: np.ndarray
    targets: np.ndarray

    def __post_init__(self):
        s = np.atleast_2d(np.asarray(self.sources, dtype=float))
        t = np.atleast_2d(np.asarray(self.targets, dtype=float))
        if s.shape[0] != t.shape[0]:
            raise ShapeError(f"{s.shape[0]} sources vs {t.shape[0]} targets")
        if s.shape[0] == 0:
            raise ConfigError("no reference pairs")
        if not (np.all(np.isfinite(s)) and np.all(np.isfinite(t))):
            raise ConfigError("reference pairs must be finite")
        object.__setattr__(self, "sources", s)
        object.__setattr__(self, "targets", t)

    @classmethod
    def from_prototypes(cls, protos: PrototypeSet) -> "ReferencePairs":
        return cls(protos.weights, protos.lattice.nodes)


@dataclass(eq=False)
class EmbeddingResult:
    coords: np.ndarray
    method: str = ""
    config: dict = field(default_factory=dict)
    seed: Optional[int] = None


def shepard_weights(d2, power: float = 2.0, top_q: Optional[int] = None) -> np.ndarray:
    """Row-normalised inverse-distance weights from squared distances.

    Rows containing an exact hit (d2 < 1e-12) put all weight on the first
    such reference.
    """
    d2 = np.atleast_2d(np.asarray(d2, dtype=float))
    if not power > 0:
        raise ConfigError(f"power must be positive, got {power}")
    hit = d2 < EXACT_HIT
    has_hit = hit.any(axis=1)
    with np.errstate(divide="ignore"):
        u = np.where(hit, 0.0, d2 ** (-power / 2.0))
    if top_q is not None and top_q < d2.shape[1]:
        far = np.argsort(d2, axis=1, kind="stable")[:, top_q:]
        np.put_along_axis(u, far, 0.0, axis=1)
    with np.errstate(invalid="ignore"):
        u /= u.sum(axis=1, keepdims=True)
    if has_hit.any():
        rows = np.flatnonzero(has_hit)
        u[rows] = 0.0
        u[rows, np.argmax(hit[rows], axis=1)] = 1.0
    return u


def _pair_dists(points, pairs: ReferencePairs, dist: DistanceSpec):
    if dist.kind != "squared_euclidean":
        raise ConfigError("Shepard mapping of vectors needs squared Euclidean distances")
    if points.shape[1] != pairs.sources.shape[1]:
        raise ShapeError(f"data dimension {points.shape[1]} vs reference dimension {pairs.sources.shape[1]}")
    return sq_dist(points, pairs.sources)


def shepard_embed(
    x, pairs: ReferencePairs, power: float = 2.0, dist: DistanceSpec = SQUARED_EUCLIDEAN, top_q=None
) -> np.ndarray:
    """Inverse-distance interpolation of node targets for one sample.

    Weights are Euclidean distance to the ``-power``; the result is a convex
    combination of the targets, or exactly r_k when x coincides with w_k.
    """
    x = np.asarray(x, dtype=float)[None, :]
    u = shepard_weights(_pair_dists(x, pairs, dist), power, top_q)
    return (u @ pairs.targets)[0]


def embed_dataset(
    data, pairs, power: float = 2.0, dist: DistanceSpec = SQUARED_EUCLIDEAN, top_q=None, method: str = "", seed=None
) -> EmbeddingResult:
    """Map every row of ``data`` (training or out-of-sample) to the ordering space."""
    if isinstance(pairs, PrototypeSet):
        pairs = ReferencePairs.from_prototypes(pairs)
    x = data.points if isinstance(data, Dataset) else np.atleast_2d(np.asarray(data, dtype=float))
    u = shepard_weights(_pair_dists(x, pairs, dist), power, top_q)
    return EmbeddingResult(u @ pairs.targets, method, {"power": power, "top_q": top_q}, seed)


def embed_from_distances(d2, targets, power: float = 2.0) -> np.ndarray:
    """Shepard mapping when distances to the references are already known
    (used for dissimilarity data, where references are median items)."""
    return shepard_weights(d2, power) @ np.asarray(targets, dtype=float)
