"""
polyjoin: parallel filter-and-refine spatial joins over triangulated polyhedra.

Supports within-distance, intersection and k-nearest-neighbor joins between
two prepared datasets, with a brute-force oracle for verification.
"""

__version__ = "0.1.0"

from .config import JoinSpec, PreprocessOptions, QueryType, RefineConfig, load_config
from .engine import JoinOutcome, JoinResultRecord, SpatialJoin, oracle_join, run_join
from .errors import BoundsViolationError, ParameterError
from .index import PreparedDataset, load_index, prepare_dataset, save_index

__all__ = [
    "BoundsViolationError",
    "JoinOutcome",
    "JoinResultRecord",
    "JoinSpec",
    "ParameterError",
    "PreparedDataset",
    "PreprocessOptions",
    "QueryType",
    "RefineConfig",
    "SpatialJoin",
    "load_config",
    "load_index",
    "oracle_join",
    "prepare_dataset",
    "run_join",
    "save_index",
]
