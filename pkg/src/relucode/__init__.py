"""Activation codes, cells, and tessellations of ReLU networks.

A ReLU network splits its input space into polyhedral cells, one per
activation-sign pattern. This package extracts those patterns as packed
binary codes, computes (truncated) Hamming distances between them, builds
the H-representation of any cell, certifies cell adjacency with facet
witnesses, and runs census/tessellation analyses over training checkpoints.
"""

__version__ = "0.1.0"

from .codes import (
    Code,
    CodeDistance,
    adjacency_distance,
    code_of,
    codes_of_batch,
    hamming,
    load_codes,
    load_codes_text,
    near_boundary,
    save_codes,
    save_codes_text,
    truncated_hamming,
)
from .errors import (
    FormatError,
    IncompatibleCodesError,
    InvalidThresholdError,
    NumericalFailureError,
    PreconditionError,
    SeriesError,
    ShapeError,
    TrainingDivergedError,
    ValidationError,
)
from .network import (
    AffineLayer,
    ReluNetwork,
    forward,
    forward_batch,
    load_network,
    random_network,
    save_network,
    validate,
)
from .polyhedra import (
    HPolyhedron,
    chebyshev_center,
    contains,
    facet_witness,
    prune_redundant,
    region_of,
    region_of_code,
)
from .tessellation import (
    AdjacencyGraph,
    CellCensus,
    GridTessellation,
    adjacency_graph,
    census,
    census_series,
    distance_matrix,
    grid_tessellation,
)
from .trainer import (
    MlpClassifier,
    TrainConfig,
    gaussian_blobs,
    gradient_check,
    load_train_config,
    train,
    two_moons,
)
from .verify import duality_suite

__all__ = [
    "AdjacencyGraph",
    "AffineLayer",
    "CellCensus",
    "Code",
    "CodeDistance",
    "FormatError",
    "GridTessellation",
    "HPolyhedron",
    "IncompatibleCodesError",
    "InvalidThresholdError",
    "MlpClassifier",
    "NumericalFailureError",
    "PreconditionError",
    "ReluNetwork",
    "SeriesError",
    "ShapeError",
    "TrainConfig",
    "TrainingDivergedError",
    "ValidationError",
    "adjacency_distance",
    "adjacency_graph",
    "census",
    "census_series",
    "chebyshev_center",
    "code_of",
    "codes_of_batch",
    "contains",
    "distance_matrix",
    "duality_suite",
    "facet_witness",
    "forward",
    "forward_batch",
    "gaussian_blobs",
    "gradient_check",
    "grid_tessellation",
    "hamming",
    "load_codes",
    "load_codes_text",
    "load_network",
    "load_train_config",
    "near_boundary",
    "prune_redundant",
    "random_network",
    "region_of",
    "region_of_code",
    "save_codes",
    "save_codes_text",
    "save_network",
    "train",
    "truncated_hamming",
    "two_moons",
    "validate",
    "__version__",
]
