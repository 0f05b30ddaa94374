"""
Offline index: voxels, anchors, prepared datasets, the R-tree and the
container format.
"""

from .anchors import compute_object_anchor, nearest_vertex
from .container import (
    IndexFormatError,
    IndexVersionError,
    dump_index,
    index_summary,
    load_index,
    parse_index,
    save_index,
)
from .prepared import PreparedDataset, PreparedObject, prepare_dataset, prepare_object
from .rtree import RTree, RTreeNode, build_rtree
from .voxels import (
    DEFAULT_VOXEL_RATIO,
    VoxelSet,
    assign_voxels_across_lods,
    compute_voxel_anchor,
    default_voxel_count,
    voxelize,
)

__all__ = [
    "DEFAULT_VOXEL_RATIO",
    "IndexFormatError",
    "IndexVersionError",
    "PreparedDataset",
    "PreparedObject",
    "RTree",
    "RTreeNode",
    "VoxelSet",
    "assign_voxels_across_lods",
    "build_rtree",
    "compute_object_anchor",
    "compute_voxel_anchor",
    "default_voxel_count",
    "dump_index",
    "index_summary",
    "load_index",
    "nearest_vertex",
    "parse_index",
    "prepare_dataset",
    "prepare_object",
    "save_index",
    "voxelize",
]
