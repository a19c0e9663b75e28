"""Hierarchical classification over class DAGs.

Conditional per-node Bernoulli estimators are trained with a hierarchical
label encoding and a sibling-restricted loss mask, then combined at
prediction time by recursive noisy-OR marginalization.
"""

from hierdag.errors import (
    CycleDetected,
    DimensionMismatch,
    DuplicateName,
    EmptyCandidateSet,
    EmptyDataset,
    GridMismatch,
    HierdagError,
    IndexOutOfRange,
    InvalidConfig,
    LabelNotInHierarchy,
    LengthMismatch,
    ParseError,
    SelfLoop,
    ShapeMismatch,
    UnknownName,
)
from hierdag.hierarchy import Hierarchy, build, format_hierarchy, parse_hierarchy
from hierdag.encoding import TargetTable, encode_label, loss_mask
from hierdag.loss import LossValue, hierarchical_loss, onehot_loss
from hierdag.inference import marginals, predict, prediction_scores

__all__ = [
    "CycleDetected",
    "DimensionMismatch",
    "DuplicateName",
    "EmptyCandidateSet",
    "EmptyDataset",
    "GridMismatch",
    "Hierarchy",
    "HierdagError",
    "IndexOutOfRange",
    "InvalidConfig",
    "LabelNotInHierarchy",
    "LengthMismatch",
    "LossValue",
    "ParseError",
    "SelfLoop",
    "ShapeMismatch",
    "TargetTable",
    "UnknownName",
    "build",
    "encode_label",
    "format_hierarchy",
    "hierarchical_loss",
    "loss_mask",
    "marginals",
    "onehot_loss",
    "parse_hierarchy",
    "predict",
    "prediction_scores",
]

__version__ = "0.1.0"
