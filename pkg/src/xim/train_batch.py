"""Batch XIM fixed-point training and median XIM for dissimilarity data."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .assignment import gkl_node_scores, winners
from .core import (
    ConfigError,
    Dataset,
    DissimilarityMatrix,
    Lattice,
    PrototypeSet,
    ShapeError,
    TrainConfig,
    make_rng,
    sq_dist,
)
from .kernels import KernelSpec
from .train_online import AnnealSchedule, default_gamma, default_sigma, init_prototypes

DENOM_GUARD = 1e-9


@dataclass(eq=False)
class BatchState:
    """Prototypes plus bookkeeping of the last fixed-point iteration.

    ``frozen`` flags nodes whose weight sum fell below the guard and were
    therefore left in place.
    """

    prototypes: np.ndarray
    iteration: int = 0
    residual: float = float("inf")
    denominators: Optional[np.ndarray] = None
    frozen: Optional[np.ndarray] = None
    winners: Optional[np.ndarray] = None


def _points(data):
    return data.points if isinstance(data, Dataset) else np.asarray(data, dtype=float)


def _weights(x, w, lattice, h, g, eta, weighting, rule, fixed_winners=None):
    """Winners and the N x M force weights f_ij."""
    d = sq_dist(x, w)
    hm = h(lattice.dist)
    if fixed_winners is None:
        win = winners(x, w, rule, h_matrix=hm, g=g, dist_to_protos=d)
    else:
        win = np.asarray(fixed_winners)
    hv, gv = hm[win], g(d)
    if weighting == "eta":
        f = (1.0 - eta) * hv - eta * gv
    else:
        f = hv - gv
    return win, f, gv, hm


def _apply(w, num, den, damping):
    frozen = np.abs(den) < DENOM_GUARD
    target = w.copy()
    ok = ~frozen
    target[ok] = num[ok] / den[ok, None]
    new = (1.0 - damping) * w + damping * target
    residual = float(np.max(np.linalg.norm(new - w, axis=1))) if len(w) else 0.0
    return new, frozen, residual


def batch_xim_iterate(
    data,
    state: BatchState,
    lattice: Lattice,
    h: KernelSpec,
    g: KernelSpec,
    eta: float = 0.3,
    damping: float = 0.5,
    rule: str = "min_distance",
    weighting: str = "eta",
    fixed_winners=None,
) -> BatchState:
    """One damped fixed-point step w_j <- sum_i f_ij x_i / sum_i f_ij."""
    x = _points(data)
    w = np.asarray(state.prototypes, dtype=float)
    if w.shape[1] != x.shape[1] or w.shape[0] != lattice.m:
        raise ShapeError(f"prototypes {w.shape} vs data dim {x.shape[1]} and {lattice.m} nodes")
    win, f, _, _ = _weights(x, w, lattice, h, g, eta, weighting, rule, fixed_winners)
    num = f.T @ x
    den = f.sum(axis=0)
    new, frozen, residual = _apply(w, num, den, damping)
    return BatchState(new, state.iteration + 1, residual, den, frozen, win)


def voronoi_batch_step(
    data,
    state: BatchState,
    lattice: Lattice,
    h: KernelSpec,
    g: KernelSpec,
    eta: float = 0.3,
    damping: float = 0.5,
    rule: str = "min_distance",
    weighting: str = "eta",
    fixed_winners=None,
) -> BatchState:
    """Same step as :func:`batch_xim_iterate`, with the h-weighted part
    aggregated over Voronoi cells (h depends only on the winner's cell)."""
    x = _points(data)
    w = np.asarray(state.prototypes, dtype=float)
    if w.shape[1] != x.shape[1] or w.shape[0] != lattice.m:
        raise ShapeError(f"prototypes {w.shape} vs data dim {x.shape[1]} and {lattice.m} nodes")
    d = sq_dist(x, w)
    hm = h(lattice.dist)
    if fixed_winners is None:
        win = winners(x, w, rule, h_matrix=hm, g=g, dist_to_protos=d)
    else:
        win = np.asarray(fixed_winners)
    m = lattice.m
    counts = np.bincount(win, minlength=m).astype(float)
    sums = np.zeros((m, x.shape[1]))
    np.add.at(sums, win, x)
    gv = g(d)
    a, b = (1.0 - eta, eta) if weighting == "eta" else (1.0, 1.0)
    # hm is symmetric: sum over cells c of h(c, j) * cell quantity
    num = a * (hm.T @ sums) - b * (gv.T @ x)
    den = a * (hm.T @ counts) - b * gv.sum(axis=0)
    new, frozen, residual = _apply(w, num, den, damping)
    return BatchState(new, state.iteration + 1, residual, den, frozen, win)


def stationarity_residual(data, prototypes, lattice, h, g, eta=0.3, rule="min_distance", weighting="eta") -> float:
    """max_j || sum_i f_ij (x_i - w_j) || / N, the empirical mean update direction."""
    x = _points(data)
    w = np.asarray(prototypes, dtype=float)
    _, f, _, _ = _weights(x, w, lattice, h, g, eta, weighting, rule)
    v = f.T @ x - f.sum(axis=0)[:, None] * w
    return float(np.max(np.linalg.norm(v, axis=1)) / x.shape[0])


@dataclass(eq=False)
class BatchReport:
    prototypes: PrototypeSet
    converged: bool
    iterations: int
    residual: float
    stationarity: float
    frozen: np.ndarray
    history: list = field(default_factory=list)


def _anneal_values(pair, n):
    if n <= 0 or pair[0] == pair[1]:
        return lambda it: pair[1] if n <= 0 else pair[0]
    sched = AnnealSchedule(pair[0], pair[1], n)
    return lambda it: sched(min(it, n))


def batch_xim_train(
    data,
    lattice: Lattice,
    config: TrainConfig,
    tol: Optional[float] = None,
    max_iters: Optional[int] = None,
    init=None,
    voronoi: bool = True,
) -> BatchReport:
    """Iterate the damped batch step until the prototype change drops below ``tol``.

    sigma and gamma are annealed over the first ``config.anneal_iters``
    iterations (default: half of ``max_iters``) and held at their end values
    afterwards; convergence is only declared once annealing has finished.
    """
    x = _points(data)
    tol = config.tol if tol is None else float(tol)
    max_iters = config.max_iters if max_iters is None else int(max_iters)
    if not tol > 0:
        raise ConfigError("tol must be positive")
    rng = make_rng(config.seed)
    if init is None:
        w = init_prototypes(x, lattice, config.init, rng)
    else:
        w = np.array(init.weights if isinstance(init, PrototypeSet) else init, dtype=float)
    sigma = config.sigma or default_sigma(lattice)
    gamma = config.gamma or default_gamma(x)
    n_anneal = config.anneal_iters if config.anneal_iters is not None else max_iters // 2
    sig_at, gam_at = _anneal_values(sigma, n_anneal), _anneal_values(gamma, n_anneal)
    family = config.kernel_family
    step = voronoi_batch_step if voronoi else batch_xim_iterate
    state = BatchState(w)
    converged = False
    history = []
    frozen = np.zeros(lattice.m, dtype=bool)
    for it in range(max_iters):
        h = KernelSpec(family, sig_at(it))
        g = KernelSpec("gaussian", gam_at(it))
        state = step(x, state, lattice, h, g, config.eta, config.damping, config.best_match, config.weighting)
        frozen = state.frozen
        history.append(state.residual)
        annealed = it + 1 >= n_anneal or (sigma[0] == sigma[1] and gamma[0] == gamma[1])
        if annealed and state.residual < tol:
            converged = True
            break
    it_final = max(state.iteration, 0)
    h = KernelSpec(family, sig_at(it_final))
    g = KernelSpec("gaussian", gam_at(it_final))
    stat = stationarity_residual(x, state.prototypes, lattice, h, g, config.eta, config.best_match, config.weighting)
    return BatchReport(
        PrototypeSet(state.prototypes, lattice), converged, state.iteration, state.residual, stat, frozen, history
    )


# --------------------------------------------------------------------------
# Median XIM
# --------------------------------------------------------------------------


@dataclass(eq=False)
class MedianState:
    """Per-node median item, its weighted cost, and the final winners.

    ``cycled`` is set when the alternation revisited an earlier median
    assignment after annealing (possible with restricted candidate sets)
    and was stopped there without converging.
    """

    medians: np.ndarray
    costs: np.ndarray
    winners: np.ndarray
    iterations: int
    converged: bool
    cost_trace: list = field(default_factory=list)
    cycled: bool = False


def median_force(win, diss_to_medians, lattice: Lattice, h: KernelSpec, g: KernelSpec) -> np.ndarray:
    """f(i, j) = h(d_O(r*(i), r_j)) - g(diss[i, median(j)])."""
    return h(lattice.dist)[win] - g(diss_to_medians)


def weighted_median(f, diss, candidates=None):
    """For each node j, the candidate c minimising sum_i f[i, j] * diss[i, c].

    Returns (indices, costs); ties go to the lowest item index.
    """
    costs_all = f.T @ diss  # (M, N)
    if candidates is None:
        idx = np.argmin(costs_all, axis=1)
        return idx, costs_all[np.arange(len(idx)), idx]
    idx = np.empty(f.shape[1], dtype=int)
    cost = np.empty(f.shape[1])
    for j, cand in enumerate(candidates):
        cand = np.unique(cand)
        k = int(np.argmin(costs_all[j, cand]))
        idx[j], cost[j] = cand[k], costs_all[j, cand[k]]
    return idx, cost


def median_xim_train(
    diss: DissimilarityMatrix,
    lattice: Lattice,
    config: TrainConfig,
    max_iters: Optional[int] = None,
    candidates: str = "all",
    init=None,
) -> MedianState:
    """Alternate best-match assignment and f-weighted generalised medians.

    Winners use the rule in ``config.best_match`` (``gkl`` or
    ``min_distance``) with g evaluated on the dissimilarity between each
    item and the node's current median.  ``candidates="voronoi"`` restricts
    node j's median search to items won by j or its lattice neighbours
    (d_O <= 1), plus the current median.  Stops when the medians no longer
    change after annealing has finished, or when a post-annealing
    assignment repeats (reported through ``cycled``).
    """
    v = np.asarray(diss.values if isinstance(diss, DissimilarityMatrix) else diss, dtype=float)
    n = v.shape[0]
    if n < 1:
        raise ConfigError("empty dataset")
    if candidates not in ("all", "voronoi"):
        raise ConfigError(f"unknown candidate policy {candidates!r}")
    max_iters = 100 if max_iters is None else int(max_iters)
    m = lattice.m
    rng = make_rng(config.seed)
    if init is not None:
        med = np.asarray(init, dtype=int).copy()
    else:
        med = rng.choice(n, size=m, replace=m > n)
    sigma = config.sigma or default_sigma(lattice)
    if config.gamma is not None:
        gamma = config.gamma
    else:
        off = v[~np.eye(n, dtype=bool)]
        off = off[off > 0]
        scale = float(np.sqrt(np.median(off))) if off.size else 1.0
        gamma = (scale, scale / 4.0)
    n_anneal = config.anneal_iters if config.anneal_iters is not None else max_iters // 2
    sig_at, gam_at = _anneal_values(sigma, n_anneal), _anneal_values(gamma, n_anneal)
    family = config.kernel_family
    rule = config.best_match if config.best_match != "heskes" else "min_distance"

    win = np.zeros(n, dtype=int)
    costs = np.zeros(m)
    converged = False
    trace = []
    seen = set()
    cycled = False
    it = 0
    for it in range(1, max_iters + 1):
        h = KernelSpec(family, sig_at(it - 1))
        g = KernelSpec("gaussian", gam_at(it - 1))
        d_med = v[:, med]
        hm = h(lattice.dist)
        if rule == "gkl":
            win = np.argmin(gkl_node_scores(hm, g(d_med), g.log(d_med)), axis=1)
        else:
            win = np.argmin(d_med, axis=1)
        f = hm[win] - g(d_med)
        cand = None
        if candidates == "voronoi":
            near = lattice.dist <= 1.0
            cand = [np.concatenate([np.flatnonzero(near[j][win]), [med[j]]]) for j in range(m)]
        old_cost = np.einsum("ij,ij->j", f, d_med)
        new_med, costs = weighted_median(f, v, cand)
        trace.append((old_cost, costs))
        annealed = it >= n_anneal or (sigma[0] == sigma[1] and gamma[0] == gamma[1])
        changed = not np.array_equal(new_med, med)
        med = new_med
        if annealed and not changed:
            converged = True
            break
        if annealed:
            key = med.tobytes()
            if key in seen:
                cycled = True
                break
            seen.add(key)
    return MedianState(med, costs, win, it, converged, trace, cycled)
