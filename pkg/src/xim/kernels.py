"""Neighbourhood cooperativity kernels and per-sample bandwidths.

Distances handed to a kernel are already squared (squared Euclidean in
both spaces), so no square root is taken anywhere in here.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import SQUARED_EUCLIDEAN, ConfigError, Dataset, DistanceSpec, DomainError

FAMILIES = ("gaussian", "student_t", "cauchy_lorentz")

KNN_FLOOR = 1e-12


def _check_bandwidth(b):
    b = float(b)
    if not b > 0 or not math.isfinite(b):
        raise ConfigError(f"kernel bandwidth must be positive, got {b}")
    return b


def _eval(family, b, d):
    # student_t and cauchy_lorentz share the power form so that b = 1 gives
    # bit-identical values for both.
    if family == "gaussian":
        return np.exp(-d / (2.0 * b * b))
    if family == "student_t":
        return np.power(1.0 + d / b, -(b + 1.0) / 2.0)
    if family == "cauchy_lorentz":
        return np.power(1.0 + d / (b * b), -1.0)
    raise ConfigError(f"unknown kernel family {family!r}")


def _log_eval(family, b, d):
    if family == "gaussian":
        return -d / (2.0 * b * b)
    if family == "student_t":
        return -(b + 1.0) / 2.0 * np.log1p(d / b)
    if family == "cauchy_lorentz":
        return -np.log1p(d / (b * b))
    raise ConfigError(f"unknown kernel family {family!r}")


@dataclass(frozen=True)
class KernelSpec:
    """A cooperativity function with its bandwidth.

    ``gaussian``: exp(-d / 2b^2); ``student_t``: (1 + d/b)^(-(b+1)/2) with
    b acting as the degrees of freedom; ``cauchy_lorentz``: 1 / (1 + d/b^2).
    """

    family: str = "gaussian"
    bandwidth: float = 1.0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ConfigError(f"unknown kernel family {self.family!r}; expected one of {FAMILIES}")
        object.__setattr__(self, "bandwidth", _check_bandwidth(self.bandwidth))

    def __call__(self, dist):
        """Vectorised evaluation without domain checks (hot path)."""
        return _eval(self.family, self.bandwidth, np.asarray(dist, dtype=float))

    def log(self, dist):
        """Natural log of the kernel, computed without forming the kernel value."""
        return _log_eval(self.family, self.bandwidth, np.asarray(dist, dtype=float))

    def with_bandwidth(self, b) -> "KernelSpec":
        return KernelSpec(self.family, b)


def kernel_eval(spec: KernelSpec, dist):
    """Evaluate ``spec`` at nonnegative ``dist`` (scalar or array).

    Returns values in (0, 1], equal to 1 at ``dist == 0``.
    """
    d = np.asarray(dist, dtype=float)
    if np.any(d < 0) or np.any(np.isnan(d)):
        raise DomainError("kernel distance must be nonnegative")
    out = spec(d)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class BandwidthPolicy:
    """How the data-space bandwidth gamma is chosen.

    ``global`` anneals a single gamma; ``knn`` ties gamma_i to the distance
    of the k-th neighbour (k itself may be annealed); ``perplexity`` fixes
    gamma_i by an entropy target.
    """

    mode: str = "global"
    k: Optional[float] = None
    perplexity: Optional[float] = None
    gammas: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.mode not in ("global", "knn", "perplexity"):
            raise ConfigError(f"unknown bandwidth mode {self.mode!r}")
        if self.gammas is not None:
            g = np.array(self.gammas, dtype=float)
            if np.any(~(g > 0)):
                raise DomainError("per-sample bandwidths must be positive")
            g.setflags(write=False)
            object.__setattr__(self, "gammas", g)


def _pairwise(data, dist: DistanceSpec):
    if isinstance(data, Dataset) or dist.kind == "squared_euclidean":
        return dist.pairwise(data)
    return dist.pairwise()


def sorted_neighbor_distances(data, dist: DistanceSpec = SQUARED_EUCLIDEAN) -> np.ndarray:
    """Row i holds distances from item i to all others, ascending.

    Column ``k - 1`` is the k-th nearest neighbour distance.
    """
    d = _pairwise(data, dist).astype(float, copy=True)
    n = d.shape[0]
    d[np.arange(n), np.arange(n)] = np.inf
    d.sort(axis=1)
    return d[:, : n - 1]


def bandwidths_knn(data, dist: DistanceSpec = SQUARED_EUCLIDEAN, k: int = 10) -> np.ndarray:
    """Distance from each item to its k-th nearest neighbour (itself excluded).

    Values are floored at 1e-12 so duplicated points keep a usable bandwidth.
    """
    nd = sorted_neighbor_distances(data, dist)
    n = nd.shape[0]
    k = int(k)
    if not 1 <= k <= n - 1:
        raise ConfigError(f"k must lie in [1, {n - 1}], got {k}")
    return np.maximum(nd[:, k - 1], KNN_FLOOR)


def _entropy_bits(d_row, beta):
    """Shannon entropy (bits) and probabilities of p_j ∝ exp(-beta * d_j)."""
    shifted = d_row - d_row.min()
    p = np.exp(-beta * shifted)
    s = p.sum()
    p /= s
    # H = ln s + beta * <shifted>, in nats
    h = math.log(s) + beta * float(np.dot(p, shifted))
    return h / math.log(2.0), p


def bandwidths_perplexity(
    data,
    dist: DistanceSpec = SQUARED_EUCLIDEAN,
    perplexity: float = 30.0,
    tol: float = 1e-4,
    max_steps: int = 64,
    return_converged: bool = False,
):
    """Per-sample Gaussian bandwidths matching a target perplexity.

    For each item i the affinities p(j|i) ∝ exp(-d_ij / 2 gamma_i^2), j != i,
    are tuned by bisection on log(gamma_i) until |2^H_i - perplexity| <= tol.
    Items that do not reach the tolerance within ``max_steps`` bisection
    steps keep the last iterate; a :class:`RuntimeWarning` is emitted and
    the flags are available through ``return_converged``.
    """
    d = _pairwise(data, dist)
    n = d.shape[0]
    perplexity = float(perplexity)
    if not 1.0 < perplexity < n:
        raise ConfigError(f"perplexity must lie in (1, {n}), got {perplexity}")
    gammas = np.empty(n)
    converged = np.zeros(n, dtype=bool)
    target = perplexity
    for i in range(n):
        row = np.delete(d[i], i)
        spread = row.max() - row.min()
        if spread <= 0:
            # all neighbours equidistant: affinities are uniform for any gamma
            gammas[i] = math.sqrt(max(float(row.mean()), KNN_FLOOR))
            converged[i] = abs((n - 1) - target) <= tol
            continue
        # perplexity decreases as beta grows; bracket in log(beta)
        scale = spread
        lo, hi = math.log(1e-12 / scale), math.log(1e12 / scale)
        log_beta = 0.5 * (lo + hi)
        for _ in range(max_steps):
            h, _ = _entropy_bits(row, math.exp(log_beta))
            perp = 2.0**h
            if abs(perp - target) <= tol:
                converged[i] = True
                break
            if perp > target:
                lo = log_beta
            else:
                hi = log_beta
            log_beta = 0.5 * (lo + hi)
        gammas[i] = math.sqrt(1.0 / (2.0 * math.exp(log_beta)))
    if not converged.all():
        warnings.warn(
            f"perplexity search did not converge for {int((~converged).sum())} of {n} items",
            RuntimeWarning,
            stacklevel=2,
        )
    if return_converged:
        return gammas, converged
    return gammas
