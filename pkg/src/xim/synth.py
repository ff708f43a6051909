"""Synthetic stand-in for the two-cluster gene-expression data."""

from __future__ import annotations

import numpy as np

from .core import ConfigError, Dataset, make_rng


def make_clusters(n=147, dims=79, clusters=(22, 125), separation=6.0, seed=0) -> Dataset:
    """Labelled isotropic Gaussian clusters (unit variance per dimension).

    Cluster centres are placed at mutually equal distance ``separation``
    (a scaled simplex in a random orientation); labels are 0, 1, ...
    The default separation of 6 is the smallest round value at which the
    first principal component splits the 22/125 clusters without error.
    """
    clusters = tuple(int(c) for c in clusters)
    if sum(clusters) != n:
        raise ConfigError(f"cluster sizes {clusters} do not add up to n = {n}")
    if any(c < 1 for c in clusters) or dims < 1:
        raise ConfigError("cluster sizes and dims must be positive")
    k = len(clusters)
    if k > dims:
        raise ConfigError("need dims >= number of clusters")
    rng = make_rng(seed)
    basis, _ = np.linalg.qr(rng.standard_normal((dims, k)))
    # simplex vertices e_c - mean have pairwise distance sqrt(2)
    simplex = np.eye(k) - 1.0 / k
    centres = separation / np.sqrt(2.0) * simplex @ basis.T
    points = np.concatenate([centres[c] + rng.standard_normal((size, dims)) for c, size in enumerate(clusters)])
    labels = np.repeat(np.arange(k), clusters)
    return Dataset(points, labels)
