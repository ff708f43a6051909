"""Embedding quality metrics, the XIM cost, a PCA baseline and the
subsampled multi-run evaluation protocol."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.spatial.distance import pdist, squareform
from scipy.stats import rankdata

from .assignment import gkl_node_scores
from .core import (
    SQUARED_EUCLIDEAN,
    ConfigError,
    Dataset,
    DistanceSpec,
    DomainError,
    Lattice,
    PrototypeSet,
    TrainConfig,
    build_lattice,
    make_rng,
    sq_dist,
)
from .kernels import KernelSpec
from .mapping import EmbeddingResult

METRICS = ("sammon", "spearman", "trustworthiness", "continuity")


def _points(data):
    return data.points if isinstance(data, Dataset) else np.asarray(data, dtype=float)


# --------------------------------------------------------------------------
# Cost
# --------------------------------------------------------------------------


@dataclass(eq=False)
class CostBreakdown:
    total: float
    winners: np.ndarray
    scores: np.ndarray


def xim_cost(
    data, protos, lattice: Lattice = None, h: KernelSpec = None, g: KernelSpec = None, dist: DistanceSpec = SQUARED_EUCLIDEAN
) -> CostBreakdown:
    """Empirical XIM cost: each sample contributes the generalised KL score
    of its best-match node (the minimum over nodes)."""
    w = protos.weights if isinstance(protos, PrototypeSet) else np.asarray(protos, dtype=float)
    lattice = lattice if lattice is not None else protos.lattice
    x = _points(data)
    if dist.kind != "squared_euclidean":
        raise ConfigError("xim_cost works on vector data")
    d = sq_dist(x, w)
    all_scores = gkl_node_scores(h(lattice.dist), g(d), g.log(d))
    win = np.argmin(all_scores, axis=1)
    s = all_scores[np.arange(len(win)), win]
    return CostBreakdown(float(s.sum()), win, s)


# --------------------------------------------------------------------------
# Distance-preservation metrics
# --------------------------------------------------------------------------


def pair_distances(points) -> np.ndarray:
    """Euclidean distances over pairs i < j, in pdist order."""
    return pdist(np.atleast_2d(np.asarray(points, dtype=float)))


def sammon_error(high, low) -> float:
    """Normalised Sammon stress between matching pair-distance lists.

    Pairs whose high-space distance is below 1e-12 are skipped.
    """
    high = np.asarray(high, dtype=float)
    low = np.asarray(low, dtype=float)
    if high.shape != low.shape:
        raise ValueError("distance lists differ in length")
    keep = high >= 1e-12
    if not keep.any():
        raise DomainError("all high-space distances are zero")
    dh, dl = high[keep], low[keep]
    return float(np.sum((dh - dl) ** 2 / dh) / dh.sum())


def spearman_rho(high, low) -> float:
    """Spearman rank correlation (average ranks on ties)."""
    high = np.asarray(high, dtype=float)
    low = np.asarray(low, dtype=float)
    if high.shape != low.shape or high.size < 2:
        raise ValueError("need two equal-length lists with at least 2 entries")
    ra, rb = rankdata(high), rankdata(low)
    ra -= ra.mean()
    rb -= rb.mean()
    den = math.sqrt(float(ra @ ra) * float(rb @ rb))
    if den == 0:
        raise DomainError("correlation undefined for a constant list")
    return float(np.clip((ra @ rb) / den, -1.0, 1.0))


# --------------------------------------------------------------------------
# Trustworthiness and continuity
# --------------------------------------------------------------------------


def neighbor_ranks(points) -> np.ndarray:
    """``R[i, j]`` = rank of j among the neighbours of i (1 = nearest, self = 0).

    Equal distances are ranked by item index.
    """
    x = np.atleast_2d(np.asarray(points, dtype=float))
    d = squareform(pdist(x)) if x.shape[0] > 1 else np.zeros((1, 1))
    n = d.shape[0]
    np.fill_diagonal(d, -1.0)
    order = np.argsort(d, axis=1, kind="stable")
    ranks = np.empty_like(order)
    np.put_along_axis(ranks, order, np.arange(n)[None, :].repeat(n, 0), axis=1)
    return ranks


def _check_k(n, k):
    k = int(k)
    if not 1 <= k <= (n - 1) // 2 or k >= n:
        raise ConfigError(f"k must lie in [1, {(n - 1) // 2}] for N = {n}, got {k}")
    return k


def _rank_penalty(rank_a, rank_b, n, k):
    # points in b's k-neighbourhood that are not in a's, penalised by their a-rank
    intruders = (rank_b <= k) & (rank_b > 0) & (rank_a > k)
    pen = np.where(intruders, rank_a - k, 0).sum()
    return 1.0 - 2.0 / (n * k * (2 * n - 3 * k - 1)) * pen


def trustworthiness(data, embedding, k: int) -> float:
    """Venna-Kaski trustworthiness: penalises embedding neighbours that are
    far in data space."""
    x, y = _points(data), _coords(embedding)
    n = x.shape[0]
    k = _check_k(n, k)
    return float(_rank_penalty(neighbor_ranks(x), neighbor_ranks(y), n, k))


def continuity(data, embedding, k: int) -> float:
    """Venna-Kaski continuity: penalises data neighbours lost in the embedding."""
    x, y = _points(data), _coords(embedding)
    n = x.shape[0]
    k = _check_k(n, k)
    return float(_rank_penalty(neighbor_ranks(y), neighbor_ranks(x), n, k))


def trust_cont_curves(data, embedding, ks):
    """Trustworthiness and continuity for each k in ``ks`` (ranks computed once)."""
    x, y = _points(data), _coords(embedding)
    n = x.shape[0]
    rh, rl = neighbor_ranks(x), neighbor_ranks(y)
    t = np.array([_rank_penalty(rh, rl, n, _check_k(n, k)) for k in ks])
    c = np.array([_rank_penalty(rl, rh, n, _check_k(n, k)) for k in ks])
    return t, c


def _coords(embedding):
    if isinstance(embedding, EmbeddingResult):
        return embedding.coords
    return np.asarray(embedding, dtype=float)


# --------------------------------------------------------------------------
# PCA baseline
# --------------------------------------------------------------------------


@dataclass(eq=False)
class PCAResult(EmbeddingResult):
    explained_variance: np.ndarray = None
    components: np.ndarray = None
    mean: np.ndarray = None


def _top_eigvec(c, basis, tol, max_iter):
    """Power iteration on symmetric PSD ``c`` within the complement of ``basis``."""
    dim = c.shape[0]

    def project(v):
        for b in basis:
            v = v - (b @ v) * b
        return v

    norms = np.linalg.norm(c, axis=0)
    v = project(c[:, int(np.argmax(norms))].copy())
    if np.linalg.norm(v) < 1e-300:
        v = np.zeros(dim)
    for e in np.eye(dim):
        if np.linalg.norm(v) > 1e-8:
            break
        v = project(e)
    v /= np.linalg.norm(v)
    for _ in range(max_iter):
        cv = project(c @ v)
        nrm = np.linalg.norm(cv)
        if nrm < 1e-300:
            break  # remaining spectrum is zero; any orthonormal direction will do
        nv = cv / nrm
        if nv @ v < 0:
            nv = -nv
        done = np.linalg.norm(nv - v) < tol
        v = nv
        if done:
            break
    return v, float(v @ c @ v)


def pca_embed(data, d: int = 2, tol: float = 1e-10, max_iter: int = 100_000) -> PCAResult:
    """Project centred data on the top-``d`` covariance eigenvectors.

    Eigenvectors come from power iteration with deflation; each one's
    sign makes its largest-magnitude entry positive.
    """
    x = _points(data)
    n, dim = x.shape
    d = int(d)
    if not 1 <= d <= min(max(n - 1, 1), dim):
        raise ConfigError(f"target dimension must lie in [1, {min(n - 1, dim)}], got {d}")
    mean = x.mean(axis=0)
    xc = x - mean
    c = xc.T @ xc / max(n - 1, 1)
    work = c.copy()
    comps, lams = [], []
    for _ in range(d):
        v, lam = _top_eigvec(work, comps, tol, max_iter)
        v = v * (1.0 if v[np.argmax(np.abs(v))] > 0 else -1.0)
        comps.append(v)
        lams.append(lam)
        work = work - lam * np.outer(v, v)
    comps = np.array(comps)
    return PCAResult(
        coords=xc @ comps.T,
        method="pca",
        config={"d": d},
        explained_variance=np.array(lams),
        components=comps,
        mean=mean,
    )


# --------------------------------------------------------------------------
# Fitting any method and the evaluation protocol
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class MethodSpec:
    """A named method configuration plus lattice shape (ignored for PCA)."""

    name: str
    config: TrainConfig
    rows: int = 10
    cols: int = 10
    topology: str = "rectangular"
    power: float = 2.0


def fit_embed(points, spec: MethodSpec, seed: Optional[int] = None) -> EmbeddingResult:
    """Train ``spec`` on ``points`` and return the Shepard (or PCA) embedding."""
    from .mapping import embed_dataset, embed_from_distances
    from .train_batch import batch_xim_train, median_xim_train
    from .train_online import train

    cfg = spec.config if seed is None else spec.config.replace(seed=seed)
    x = _points(points)
    if cfg.method == "pca":
        return pca_embed(x, 2)
    lattice = build_lattice(spec.rows, spec.cols, spec.topology)
    if cfg.method in ("xim", "t-xim", "c-xim", "som"):
        protos = train(x, lattice, cfg).prototypes
    elif cfg.method == "batch-xim":
        protos = batch_xim_train(x, lattice, cfg).prototypes
    elif cfg.method == "median-xim":
        from .core import DissimilarityMatrix

        diss = DissimilarityMatrix.from_points(x)
        state = median_xim_train(diss, lattice, cfg)
        coords = embed_from_distances(diss.values[:, state.medians], lattice.nodes, spec.power)
        return EmbeddingResult(coords, cfg.method, {"power": spec.power}, cfg.seed)
    else:
        raise ConfigError(f"cannot fit method {cfg.method!r}")
    return embed_dataset(x, protos, spec.power, method=cfg.method, seed=cfg.seed)


def quality_metrics(data, embedding, ks) -> dict:
    """Sammon, Spearman and k-averaged trustworthiness/continuity."""
    x, y = _points(data), _coords(embedding)
    dh, dl = pair_distances(x), pair_distances(y)
    t, c = trust_cont_curves(x, y, ks)
    try:
        rho = spearman_rho(dh, dl)
    except DomainError:
        rho = float("nan")
    return {
        "sammon": sammon_error(dh, dl),
        "spearman": rho,
        "trustworthiness": float(t.mean()),
        "continuity": float(c.mean()),
    }


@dataclass(eq=False)
class QualityReport:
    """Per-metric mean and population standard deviation over runs."""

    method: str
    raw: np.ndarray
    runs: int
    fraction: float
    k_range: tuple
    notes: list = field(default_factory=list)

    @property
    def mean(self) -> dict:
        return {m: float(v) for m, v in zip(METRICS, self.raw.mean(axis=0))}

    @property
    def std(self) -> dict:
        return {m: float(v) for m, v in zip(METRICS, self.raw.std(axis=0, ddof=0))}


def evaluate_protocol(
    data, spec: MethodSpec, runs: int = 10, fraction: float = 0.95, k_range=(1, 50), seed: int = 0
) -> QualityReport:
    """Repeated subsample / train / embed / score loop.

    Run ``r`` draws ``round(fraction * N)`` points without replacement from
    a generator seeded with ``seed + r`` and trains with that same seed.
    The upper k is clipped to the normalisation-valid bound (N_sub - 1) // 2.
    """
    if runs < 1:
        raise ConfigError("runs must be >= 1")
    if not 0 < fraction <= 1:
        raise ConfigError(f"fraction must lie in (0, 1], got {fraction}")
    x = _points(data)
    n = x.shape[0]
    n_sub = max(int(round(fraction * n)), 2)
    k_lo, k_hi = int(k_range[0]), int(k_range[1])
    notes = []
    bound = (n_sub - 1) // 2
    if k_hi > bound:
        msg = f"k range clipped from {k_hi} to {bound} for subsample size {n_sub}"
        warnings.warn(msg, RuntimeWarning, stacklevel=2)
        notes.append(msg)
        k_hi = bound
    if k_lo < 1 or k_lo > k_hi:
        raise ConfigError(f"empty k range [{k_lo}, {k_hi}]")
    ks = range(k_lo, k_hi + 1)
    raw = np.empty((runs, len(METRICS)))
    for r in range(runs):
        rng = make_rng(seed + r)
        idx = np.sort(rng.choice(n, size=n_sub, replace=False)) if n_sub < n else np.arange(n)
        sub = x[idx]
        emb = fit_embed(sub, spec, seed=seed + r)
        q = quality_metrics(sub, emb, ks)
        raw[r] = [q[m] for m in METRICS]
    return QualityReport(spec.name, raw, runs, fraction, (k_lo, k_hi), notes)


def evaluate_grid(data, specs, **protocol) -> dict:
    """Evaluate several configurations and keep, per metric, the best one.

    Returns ``{metric: (spec name, mean, std)}``; lower is better for Sammon,
    higher for the rest.
    """
    reports = [evaluate_protocol(data, s, **protocol) for s in specs]
    best = {}
    for m in METRICS:
        key = (lambda rep: rep.mean[m]) if m == "sammon" else (lambda rep: -rep.mean[m])
        rep = min(reports, key=key)
        best[m] = (rep.method, rep.mean[m], rep.std[m])
    return best


def format_table(reports) -> str:
    """Human table: one row per method, cells ``mean (std)``."""
    head = ["Method", "Sammon", "Spearman", "Trustworthiness", "Continuity"]
    rows = [head]
    for rep in reports:
        mu, sd = rep.mean, rep.std
        rows.append([rep.method] + [f"{mu[m]:.2f} ({sd[m]:.2f})" for m in METRICS])
    widths = [max(len(r[i]) for r in rows) for i in range(len(head))]
    lines = ["# cells: mean (std) over runs; std uses the population divisor"]
    for r in rows:
        lines.append(" | ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip())
    return "\n".join(lines) + "\n"


def format_keyvalue(reports) -> str:
    """Machine-readable variant: one ``method.metric.stat=value`` line per cell."""
    from .core import format_float

    lines = []
    for rep in reports:
        lines.append(f"{rep.method}.runs={rep.runs}")
        lines.append(f"{rep.method}.fraction={format_float(rep.fraction)}")
        lines.append(f"{rep.method}.k_range={rep.k_range[0]}-{rep.k_range[1]}")
        for m in METRICS:
            lines.append(f"{rep.method}.{m}.mean={format_float(rep.mean[m])}")
            lines.append(f"{rep.method}.{m}.std={format_float(rep.std[m])}")
    return "\n".join(lines) + "\n"
