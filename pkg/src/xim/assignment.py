"""Best-match node selection.

Three rules are available: plain minimal distance, the Heskes
neighbourhood-weighted distance, and the generalised Kullback-Leibler
mismatch between the node neighbourhood h and the data-space
cooperativity g.  Ties always go to the lowest node index.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import xlogy

from .core import SQUARED_EUCLIDEAN, DistanceSpec, Lattice, PrototypeSet
from .kernels import KernelSpec

G_FLOOR = 1e-300


@dataclass(frozen=True, eq=False)
class NodeScoreVector:
    scores: np.ndarray
    winner: int
    rule: str


def _weights(protos):
    return protos.weights if isinstance(protos, PrototypeSet) else np.asarray(protos, dtype=float)


def _lattice(protos, lattice):
    if lattice is None:
        if not isinstance(protos, PrototypeSet):
            raise TypeError("a lattice is required when prototypes are a plain array")
        return protos.lattice
    return lattice


def _result(scores, rule):
    # np.argmin returns the first minimum, i.e. the lowest index on ties
    return NodeScoreVector(scores, int(np.argmin(scores)), rule)


def gkl_node_scores(h_matrix, g, log_g=None) -> np.ndarray:
    """Generalised KL score of every candidate node.

    ``h_matrix[i, j]`` is the node neighbourhood between candidate i and
    node j; ``g`` holds data-space cooperativities for one sample (shape
    ``(M,)``) or several (shape ``(N, M)``).  Returns
    ``sum_j h_ij ln(h_ij / g_j) - h_ij + g_j`` per candidate.

    Passing ``log_g`` keeps the scores informative when ``g`` underflows
    (narrow bandwidths); otherwise ``g`` is floored at 1e-300 before the log.
    """
    h = np.asarray(h_matrix, dtype=float)
    g = np.asarray(g, dtype=float)
    if log_g is None:
        log_g = np.log(np.maximum(g, G_FLOOR))
    const = (xlogy(h, h) - h).sum(axis=1)
    return const - np.asarray(log_g, dtype=float) @ h.T + g.sum(axis=-1, keepdims=g.ndim > 1)


def best_match_min_distance(x, protos, dist: DistanceSpec = SQUARED_EUCLIDEAN) -> NodeScoreVector:
    """Winner = prototype with the smallest distance to ``x``."""
    scores = dist.to_prototypes(x, _weights(protos))
    return _result(scores, "min_distance")


def best_match_heskes(
    x, protos, lattice: Lattice = None, h: KernelSpec = None, dist: DistanceSpec = SQUARED_EUCLIDEAN
) -> NodeScoreVector:
    """Winner minimises sum_j h(d_O(r_k, r_j)) d_E(x, w_j) over candidate nodes k."""
    lattice = _lattice(protos, lattice)
    d = dist.to_prototypes(x, _weights(protos))
    scores = h(lattice.dist) @ d
    return _result(scores, "heskes")


def best_match_gkl(
    x,
    protos,
    lattice: Lattice = None,
    h: KernelSpec = None,
    g: KernelSpec = None,
    dist: DistanceSpec = SQUARED_EUCLIDEAN,
) -> NodeScoreVector:
    """Winner minimises the generalised KL divergence between h(r_k, .) and g(x, .)."""
    lattice = _lattice(protos, lattice)
    d = dist.to_prototypes(x, _weights(protos))
    scores = gkl_node_scores(h(lattice.dist), g(d), g.log(d))
    return _result(scores, "gkl")


def winners(
    points,
    weights,
    rule: str = "min_distance",
    h_matrix=None,
    g: KernelSpec = None,
    gammas=None,
    dist_to_protos=None,
) -> np.ndarray:
    """Vectorised winners for many samples at once.

    ``dist_to_protos`` (N x M) may be passed to skip the distance
    computation, e.g. for dissimilarity data.  ``gammas`` gives per-sample
    Gaussian bandwidths for the gkl rule in place of ``g``'s bandwidth.
    """
    if dist_to_protos is None:
        from .core import sq_dist

        dist_to_protos = sq_dist(points, weights)
    d = np.asarray(dist_to_protos, dtype=float)
    if rule == "min_distance":
        return np.argmin(d, axis=1)
    if rule == "heskes":
        return np.argmin(d @ np.asarray(h_matrix).T, axis=1)
    if rule == "gkl":
        if gammas is not None:
            lg = -d / (2.0 * np.asarray(gammas, dtype=float)[:, None] ** 2)
        else:
            lg = g.log(d)
        return np.argmin(gkl_node_scores(h_matrix, np.exp(lg), lg), axis=1)
    raise ValueError(f"unknown best-match rule {rule!r}")
