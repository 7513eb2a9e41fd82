"""Sparse K-means clustering with hard-thresholding and other center penalties."""

from .data import (
    DataMatrix,
    LabeledDataset,
    SimConfig,
    load_banknote,
    load_csv,
    load_iris,
    load_labels,
    simulate_dataset,
    standardize,
)
from .exceptions import ConfigError, DataError, EmptyClusterError, HTKMeansError, NumericalError
from .metrics import adjusted_rand_index, penalized_objective, wcss
from .penalties import Family, PenaltySpec, update_centers
from .selection import (
    Method,
    SelectionReport,
    aic,
    bic,
    clustering_distance,
    gap_deltas,
    select,
    select_gap,
    select_stability,
)
from .solver import FitResult, PathResult, default_grid, fit, kmeans, lambda_path, lloyd_regularized

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "DataError",
    "DataMatrix",
    "EmptyClusterError",
    "Family",
    "FitResult",
    "HTKMeansError",
    "LabeledDataset",
    "Method",
    "NumericalError",
    "PathResult",
    "PenaltySpec",
    "SelectionReport",
    "SimConfig",
    "adjusted_rand_index",
    "aic",
    "bic",
    "clustering_distance",
    "default_grid",
    "fit",
    "gap_deltas",
    "kmeans",
    "lambda_path",
    "lloyd_regularized",
    "load_banknote",
    "load_csv",
    "load_iris",
    "load_labels",
    "penalized_objective",
    "select",
    "select_gap",
    "select_stability",
    "simulate_dataset",
    "standardize",
    "update_centers",
    "wcss",
]
