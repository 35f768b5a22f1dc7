"""Neighborhood-aware optimal-transport transfer learning over
precomputed sentence embeddings."""

__version__ = "0.1.0"

from .config import BASELINES, K_GRID, OT_VARIANTS, TRAIN_MODES, TrainConfig
from .data import (
    Dataset,
    LabeledInstance,
    load_dataset,
    make_uniform_measure,
    normalize_embeddings,
    save_dataset,
    synth_generate,
)
from .metrics import (
    EvalReport,
    aggregate_runs,
    f1_hate,
    mcnemar,
    representation_knn_analysis,
)
from .neighbors import (
    NeighborIndex,
    NeighborSet,
    build_index,
    compute_neighbor_sets,
    knn_ranking_predict,
    neighborhood_mask,
    preselect_sources,
    query_topk,
    weighted_knn_predict,
)
from .solver import (
    OTParams,
    TransportPlan,
    brute_force_balanced,
    ot_objective,
    sinkhorn_balanced,
    sinkhorn_unbalanced,
    squared_l2_cost,
)
from .trainer import (
    BatchPair,
    LossBreakdown,
    ModelParams,
    TrainResult,
    classify,
    encode,
    gamma_step,
    grad_check,
    jdot_cost,
    load_model,
    mixed_loss,
    model_step,
    predict_labels,
    save_model,
    total_loss,
    train,
)

__all__ = [
    "__version__",
    "BASELINES",
    "K_GRID",
    "OT_VARIANTS",
    "TRAIN_MODES",
    "TrainConfig",
    "Dataset",
    "LabeledInstance",
    "load_dataset",
    "make_uniform_measure",
    "normalize_embeddings",
    "save_dataset",
    "synth_generate",
    "EvalReport",
    "aggregate_runs",
    "f1_hate",
    "mcnemar",
    "representation_knn_analysis",
    "NeighborIndex",
    "NeighborSet",
    "build_index",
    "compute_neighbor_sets",
    "knn_ranking_predict",
    "neighborhood_mask",
    "preselect_sources",
    "query_topk",
    "weighted_knn_predict",
    "OTParams",
    "TransportPlan",
    "brute_force_balanced",
    "ot_objective",
    "sinkhorn_balanced",
    "sinkhorn_unbalanced",
    "squared_l2_cost",
    "BatchPair",
    "LossBreakdown",
    "ModelParams",
    "TrainResult",
    "classify",
    "encode",
    "gamma_step",
    "grad_check",
    "jdot_cost",
    "load_model",
    "mixed_loss",
    "model_step",
    "predict_labels",
    "save_model",
    "total_loss",
    "train",
]
