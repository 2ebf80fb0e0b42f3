"""Semi-supervised multi-class and hierarchical linear classifiers trained by
alternating between a weight step and a label-count-constrained assignment step."""

from .data import (
    Dataset,
    DataFormatError,
    LabelCounts,
    SparseVector,
    Taxonomy,
    derive_label_counts,
    load_dataset,
    load_taxonomy,
    save_dataset,
    split_dataset,
)
from .losses import CostMatrix, LossKind, cost_matrix
from .model import WeightVector, predict, score, score_all
from .solver import SolverConfig, TrainResult, objective, train

__version__ = "0.1.0"

__all__ = [
    "CostMatrix",
    "DataFormatError",
    "Dataset",
    "LabelCounts",
    "LossKind",
    "SolverConfig",
    "SparseVector",
    "Taxonomy",
    "TrainResult",
    "WeightVector",
    "cost_matrix",
    "derive_label_counts",
    "load_dataset",
    "load_taxonomy",
    "objective",
    "predict",
    "save_dataset",
    "score",
    "score_all",
    "split_dataset",
    "train",
]
