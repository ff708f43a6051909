"""Topographic embedding with divergence-based prototype learning (XIM family)."""

from .analysis import (
    CostBreakdown,
    MethodSpec,
    PCAResult,
    QualityReport,
    continuity,
    evaluate_grid,
    evaluate_protocol,
    fit_embed,
    pca_embed,
    quality_metrics,
    sammon_error,
    spearman_rho,
    trust_cont_curves,
    trustworthiness,
    xim_cost,
)
from .assignment import NodeScoreVector, best_match_gkl, best_match_heskes, best_match_min_distance
from .core import (
    ConfigError,
    Dataset,
    DissimilarityMatrix,
    DistanceSpec,
    DomainError,
    Lattice,
    ParseError,
    PrototypeSet,
    ShapeError,
    StructureError,
    TrainConfig,
    XimError,
    build_lattice,
    load_dataset,
    load_dissimilarity,
    load_lattice,
    save_dataset,
)
from .kernels import BandwidthPolicy, KernelSpec, bandwidths_knn, bandwidths_perplexity, kernel_eval
from .mapping import EmbeddingResult, ReferencePairs, embed_dataset, embed_from_distances, shepard_embed
from .synth import make_clusters
from .train_batch import BatchState, MedianState, batch_xim_iterate, batch_xim_train, median_xim_train, voronoi_batch_step
from .train_online import (
    GKL,
    AnnealSchedule,
    DivergenceGradient,
    anneal,
    som_step,
    train,
    xim_step,
    xim_step_general,
)

__version__ = "0.1.0"
