"""
Join engine: parallel primitives, filtering, refinement, k-NN resolution,
orchestration and the brute-force oracle.
"""

from .candidates import (
    CandidateSet,
    Interval,
    JoinResultRecord,
    PairStatus,
    lod_stage,
    prune_within,
)
from .filter import (
    VoxelBounds,
    VoxelPairList,
    chunked_filter,
    mbb_filter_knn,
    mbb_filter_within,
    pack_chunks,
    voxel_pair_bounds,
    voxel_pair_compact,
)
from .join import JoinOutcome, SpatialJoin, run_join
from .knn import KnnState, knn_prune_round, knn_resolve, resolve_to_fixpoint
from .oracle import mesh_distance, oracle_join
from .parcore import (
    PairSpace,
    ParallelContext,
    ScanOp,
    block_reduce_min,
    compact,
    configure_parallelism,
    decode_pair,
    exclusive_scan,
    get_parallel_context,
    inclusive_scan,
)
from .refine import VoxelPairBatch, aggregate_object_bounds, gather_facet_data, refine_kernel, refine_loop
from .stats import StageRecord, StageStats

__all__ = [
    "CandidateSet",
    "Interval",
    "JoinOutcome",
    "JoinResultRecord",
    "KnnState",
    "PairSpace",
    "PairStatus",
    "ParallelContext",
    "ScanOp",
    "SpatialJoin",
    "StageRecord",
    "StageStats",
    "VoxelBounds",
    "VoxelPairBatch",
    "VoxelPairList",
    "aggregate_object_bounds",
    "block_reduce_min",
    "chunked_filter",
    "compact",
    "configure_parallelism",
    "decode_pair",
    "exclusive_scan",
    "gather_facet_data",
    "get_parallel_context",
    "inclusive_scan",
    "knn_prune_round",
    "knn_resolve",
    "lod_stage",
    "mbb_filter_knn",
    "mbb_filter_within",
    "mesh_distance",
    "oracle_join",
    "pack_chunks",
    "prune_within",
    "refine_kernel",
    "refine_loop",
    "resolve_to_fixpoint",
    "run_join",
    "voxel_pair_bounds",
    "voxel_pair_compact",
]
