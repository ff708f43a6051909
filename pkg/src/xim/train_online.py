"""Online training: XIM family and SOM updates, annealing, training loop."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .assignment import gkl_node_scores
from .core import (
    SQUARED_EUCLIDEAN,
    ConfigError,
    Dataset,
    DistanceSpec,
    Lattice,
    PrototypeSet,
    ShapeError,
    TrainConfig,
    make_rng,
    sq_dist,
)
from .kernels import KernelSpec, bandwidths_perplexity, sorted_neighbor_distances

# --------------------------------------------------------------------------
# Annealing
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class AnnealSchedule:
    """Exponential decay from ``start`` at t = 0 to ``end`` at t = t_max."""

    start: float
    end: float
    t_max: int

    def __post_init__(self):
        if not (self.start > 0 and self.end > 0):
            raise ConfigError(f"schedule endpoints must be positive, got {self.start}, {self.end}")
        if self.t_max < 1:
            raise ConfigError("schedule needs t_max >= 1")

    def __call__(self, t):
        return anneal(self, t)

    def values(self, n: Optional[int] = None) -> np.ndarray:
        """Schedule sampled at t = 0..n-1 (default n = t_max + 1)."""
        n = self.t_max + 1 if n is None else n
        t = np.arange(n, dtype=float)
        v = self.start * (self.end / self.start) ** (t / self.t_max)
        v[t == 0] = self.start
        v[t == self.t_max] = self.end
        return v


def anneal(sched: AnnealSchedule, t) -> float:
    if not 0 <= t <= sched.t_max:
        raise ConfigError(f"t = {t} outside [0, {sched.t_max}]")
    if t == 0:
        return float(sched.start)
    if t == sched.t_max:
        return float(sched.end)
    return float(sched.start * (sched.end / sched.start) ** (t / sched.t_max))


# --------------------------------------------------------------------------
# Single-sample updates
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class DivergenceGradient:
    """Derivative of a divergence summand with respect to the data-space measure g."""

    name: str
    fn: Callable = field(compare=False)

    def __call__(self, h, g):
        return self.fn(h, g)


GKL = DivergenceGradient("gkl", lambda h, g: 1.0 - h / g)


def _as_weights(protos):
    if isinstance(protos, PrototypeSet):
        return protos.weights, protos.lattice
    return np.asarray(protos, dtype=float), None


def _wrap(new, protos):
    if isinstance(protos, PrototypeSet):
        return PrototypeSet(new, protos.lattice)
    return new


def _check(x, w):
    x = np.asarray(x, dtype=float)
    if w.ndim != 2 or x.shape != (w.shape[1],):
        raise ShapeError(f"sample of shape {x.shape} vs prototypes of shape {w.shape}")
    return x


def xim_delta(x, w, h_row, gamma, eta=0.3, weighting="eta", prefactor=False):
    """XIM update vectors Δw_j (the prototypes move by -epsilon * Δw_j).

    ``h_row`` is the ordering-space neighbourhood of the winner; g is the
    Gaussian data-space cooperativity with bandwidth ``gamma``.  With
    ``weighting="eta"``: Δw_j = -((1 - eta) h_j - eta g_j)(x - w_j); with
    ``"unweighted"``: Δw_j = -(h_j - g_j)(x - w_j).  ``prefactor`` scales by
    1/gamma^2 as in the exact gradient.
    """
    diff = x - w
    g = np.exp(-np.einsum("ij,ij->i", diff, diff) / (2.0 * gamma * gamma))
    if weighting == "eta":
        coef = (1.0 - eta) * h_row - eta * g
    else:
        coef = h_row - g
    if prefactor:
        coef = coef / (gamma * gamma)
    return -coef[:, None] * diff


def xim_step(
    x,
    protos,
    lattice: Lattice,
    winner: int,
    h: KernelSpec,
    g: KernelSpec,
    epsilon: float,
    eta: float = 0.3,
    weighting: str = "eta",
    prefactor: bool = False,
):
    """One online XIM update; returns new prototypes (input left untouched).

    ``g`` must be Gaussian; its bandwidth is gamma.
    """
    if g.family != "gaussian":
        raise ConfigError("the XIM update is derived for a Gaussian data-space kernel")
    w, _ = _as_weights(protos)
    x = _check(x, w)
    h_row = h(lattice.dist[winner])
    delta = xim_delta(x, w, h_row, g.bandwidth, eta, weighting, prefactor)
    return _wrap(w - epsilon * delta, protos)


def xim_step_general(
    x,
    protos,
    lattice: Lattice,
    winner: int,
    h: KernelSpec,
    g: KernelSpec,
    dist: DistanceSpec = SQUARED_EUCLIDEAN,
    div: DivergenceGradient = GKL,
    epsilon: float = 0.1,
):
    """Update w_j <- w_j - epsilon * div(h_j, g_j) * dg_j/dw_j.

    With a Gaussian g over squared Euclidean distances,
    dg_j/dw_j = -g_j / (2 gamma^2) * (-2 (x - w_j)) = g_j (x - w_j) / gamma^2.
    """
    if g.family != "gaussian":
        raise ConfigError("only a Gaussian data-space kernel is differentiated")
    if dist.kind != "squared_euclidean":
        raise ConfigError("the general update needs squared Euclidean vector data")
    w, _ = _as_weights(protos)
    x = _check(x, w)
    delta = divergence_delta(x, w, h(lattice.dist[winner]), g.bandwidth, div)
    return _wrap(w - epsilon * delta, protos)


def divergence_delta(x, w, h_row, gamma, div: DivergenceGradient = GKL):
    diff = x - w
    d = np.einsum("ij,ij->i", diff, diff)
    g = np.exp(-d / (2.0 * gamma * gamma))
    dg_dw = (g / (gamma * gamma))[:, None] * diff
    return np.asarray(div(h_row, g), dtype=float)[:, None] * dg_dw


def som_step(x, protos, lattice: Lattice, winner: int, h: KernelSpec, epsilon: float):
    """Kohonen update: w_j <- w_j + epsilon h(d_O(r*, r_j)) (x - w_j)."""
    w, _ = _as_weights(protos)
    x = _check(x, w)
    coef = epsilon * h(lattice.dist[winner])
    return _wrap(w + coef[:, None] * (x - w), protos)


# --------------------------------------------------------------------------
# Initialisation and default schedules
# --------------------------------------------------------------------------


def init_prototypes(data, lattice: Lattice, policy: str = "sample", rng=None) -> np.ndarray:
    """Initial prototypes.

    ``sample``: random data rows plus Gaussian jitter of 1e-3 times the
    per-dimension standard deviation.  ``pca``: nodes spread over the plane
    of the top two principal components, scaled to the data's spread along
    them.
    """
    x = data.points if isinstance(data, Dataset) else np.asarray(data, dtype=float)
    rng = make_rng(0) if rng is None else rng
    n, dim = x.shape
    m = lattice.m
    if policy == "sample":
        idx = rng.choice(n, size=m, replace=m > n)
        scale = 1e-3 * x.std(axis=0)
        return x[idx] + rng.standard_normal((m, dim)) * scale
    if policy == "pca":
        from .analysis import pca_embed

        q = min(2, dim, max(n - 1, 1))
        res = pca_embed(x, q)
        comps = res.components
        sd = res.coords.std(axis=0)
        r = lattice.nodes[:, :q]
        span = np.ptp(r, axis=0)
        span[span == 0] = 1.0
        u = (r - r.min(axis=0)) / span * 2.0 - 1.0
        return x.mean(axis=0) + (u * 2.0 * sd[:q]) @ comps[:q]
    raise ConfigError(f"unknown init policy {policy!r}")


def default_sigma(lattice: Lattice) -> tuple:
    return (max(lattice.extent() / 2.0, 0.5), 0.5)


def default_gamma(points) -> tuple:
    """gamma^2 runs from (data diameter)^2 / 8 down to the median squared
    nearest-neighbour distance."""
    d = sq_dist(points, points)
    np.fill_diagonal(d, np.inf)
    nn = float(np.median(d.min(axis=1)))
    np.fill_diagonal(d, 0.0)
    start = float(d.max()) / 8.0
    if start <= 0:
        start = 1.0
    end = min(nn, start) if nn > 0 else start * 1e-6
    return (float(np.sqrt(start)), float(np.sqrt(end)))


@dataclass(frozen=True)
class Schedules:
    epsilon: tuple
    sigma: tuple
    gamma: tuple


def resolve_schedules(data, lattice: Lattice, config: TrainConfig) -> Schedules:
    """Fill in default sigma/gamma schedules where the config leaves them open."""
    x = data.points if isinstance(data, Dataset) else np.asarray(data, dtype=float)
    sigma = config.sigma or default_sigma(lattice)
    gamma = config.gamma
    if gamma is None and config.bandwidth == "global":
        gamma = default_gamma(x)
    return Schedules(config.epsilon, sigma, gamma or (1.0, 1.0))


# --------------------------------------------------------------------------
# Training loop
# --------------------------------------------------------------------------


LOG_FIELDS = ("t", "epsilon", "sigma", "gamma", "winner")


@dataclass(eq=False)
class TrainResult:
    prototypes: PrototypeSet
    log: np.ndarray
    config: TrainConfig
    schedules: Schedules

    @property
    def final_sigma(self) -> float:
        return self.schedules.sigma[1]

    @property
    def final_gamma(self) -> float:
        return self.schedules.gamma[1]


def _gamma_source(x, config: TrainConfig, sched: Schedules):
    """Return gamma(t, i) as a callable: per-step and per-sample bandwidth."""
    t_max = config.t_max
    if config.bandwidth == "global":
        gvals = AnnealSchedule(*sched.gamma, t_max).values(t_max)
        return lambda t, i: gvals[t]
    if config.bandwidth == "perplexity":
        n = x.shape[0]
        perp = min(config.perplexity, n - 1 - 1e-6)
        gam = bandwidths_perplexity(x, SQUARED_EUCLIDEAN, perp)
        return lambda t, i: gam[i]
    # knn: gamma_i^2 equals the squared distance to the annealed k-th neighbour
    nd = np.sqrt(np.maximum(sorted_neighbor_distances(x), 1e-12))
    kmax = nd.shape[1]
    kvals = AnnealSchedule(*config.k, t_max).values(t_max)
    kint = np.clip(np.rint(kvals).astype(int), 1, kmax)
    return lambda t, i: nd[i, kint[t] - 1]


def train(data, lattice: Lattice, config: TrainConfig, init=None) -> TrainResult:
    """Online training of the XIM family (``xim``, ``t-xim``, ``c-xim``) or SOM.

    Each of the ``t_max`` steps draws one sample uniformly at random,
    selects its best-match node, then applies the XIM (or SOM) update with
    epsilon, sigma and gamma annealed exponentially.  Fully determined by
    ``config.seed``.
    """
    if config.method not in ("xim", "t-xim", "c-xim", "som"):
        raise ConfigError(f"online training does not handle method {config.method!r}")
    if config.g_family != "gaussian":
        raise ConfigError("the XIM update is derived for a Gaussian data-space kernel")
    x = data.points if isinstance(data, Dataset) else np.asarray(data, dtype=float)
    n = x.shape[0]
    rng = make_rng(config.seed)
    sched = resolve_schedules(x, lattice, config)
    t_max = config.t_max

    if init is None:
        w = init_prototypes(x, lattice, config.init, rng)
    else:
        w = np.array(init.weights if isinstance(init, PrototypeSet) else init, dtype=float)
        if w.shape != (lattice.m, x.shape[1]):
            raise ShapeError(f"initial prototypes of shape {w.shape}, expected {(lattice.m, x.shape[1])}")
    draws = rng.integers(0, n, size=t_max)

    eps = AnnealSchedule(*sched.epsilon, t_max).values(t_max)
    sig = AnnealSchedule(*sched.sigma, t_max).values(t_max)
    gamma_at = _gamma_source(x, config, sched)
    family = config.kernel_family
    dist_o = lattice.dist
    som = config.method == "som"
    rule = config.best_match
    eta = config.eta
    weighted = config.weighting == "eta"
    stride = config.log_stride
    log = []

    for t in range(t_max):
        i = draws[t]
        xi = x[i]
        diff = xi - w
        d = np.einsum("ij,ij->i", diff, diff)
        h = KernelSpec(family, sig[t])
        gam = gamma_at(t, i)
        if rule == "min_distance":
            win = int(np.argmin(d))
        elif rule == "heskes":
            win = int(np.argmin(h(dist_o) @ d))
        else:
            log_g = -d / (2.0 * gam * gam)
            win = int(np.argmin(gkl_node_scores(h(dist_o), np.exp(log_g), log_g)))
        h_row = h(dist_o[win])
        if som:
            coef = -eps[t] * h_row
        else:
            g = np.exp(-d / (2.0 * gam * gam))
            coef = (1.0 - eta) * h_row - eta * g if weighted else h_row - g
            if config.prefactor:
                coef = coef / (gam * gam)
            coef = -eps[t] * coef
        # w <- w - eps * Δw with Δw = -coef' (x - w)
        w -= coef[:, None] * diff
        if t % stride == 0 or t == t_max - 1:
            log.append((t, eps[t], sig[t], gam, win))

    log_arr = np.array(log, dtype=[("t", "i8"), ("epsilon", "f8"), ("sigma", "f8"), ("gamma", "f8"), ("winner", "i8")])
    if config.bandwidth != "global":
        gam_end = float(np.median([gamma_at(t_max - 1, j) for j in range(n)]))
        sched = Schedules(sched.epsilon, sched.sigma, (sched.gamma[0], gam_end))
    return TrainResult(PrototypeSet(w, lattice), log_arr, config, sched)
