"""
Preprocessed objects and datasets.

A ``PreparedDataset`` keeps the per-object products together with flattened
views used by the engine: object boxes and anchors as ``(n, 3)`` arrays and
all voxels concatenated with an object-to-voxel offset table.
"""

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..geometry import Aabb
from ..mesh import DEFAULT_LODS, LodLadder, Mesh, build_lod_ladder
from ..mesh.bounds import DEFAULT_HD_GRID
from .anchors import compute_object_anchor, nearest_vertex
from .rtree import RTree, build_rtree
from .voxels import (
    DEFAULT_VOXEL_RATIO,
    VoxelSet,
    assign_voxels_across_lods,
    default_voxel_count,
    voxelize,
)

logger = logging.getLogger(__name__)


@dataclass(eq=False)
class PreparedObject:
    """
    Everything the join needs about one object.

    Attributes:
        id: Position of the object in its dataset
        name: Source name (file stem)
        mbb: Bounding box of the original mesh
        anchor: MBB center when inside the solid, else the nearest vertex
        surface_anchor: Vertex nearest the MBB center
        ladder: LoD ladder, coarse to fine
        voxels: Voxel partition consistent across levels
    """

    id: int
    name: str
    mbb: Aabb
    anchor: np.ndarray
    surface_anchor: np.ndarray
    ladder: LodLadder
    voxels: VoxelSet

    @property
    def mesh(self) -> Mesh:
        return self.ladder.finest.mesh

    @property
    def anchor_inside(self) -> bool:
        return not np.array_equal(self.anchor, self.surface_anchor)


def object_seed(seed: int, object_id: int) -> np.random.SeedSequence:
    """Per-object seed, independent of worker scheduling."""
    return np.random.SeedSequence([int(seed), int(object_id)])


def prepare_object(
    object_id: int,
    mesh: Mesh,
    name: str = "",
    lods: Sequence[int] = DEFAULT_LODS,
    voxel_ratio: float = DEFAULT_VOXEL_RATIO,
    hd_grid: int = DEFAULT_HD_GRID,
    seed: int = 0,
) -> PreparedObject:
    """
    Run the offline pipeline for one object.

    Args:
        object_id: Dataset position
        mesh: Original mesh
        name: Label used in logs and the container
        lods: LoD schedule
        voxel_ratio: Voxels per original facet
        hd_grid: Barycentric grid level for ``hd``
        seed: Dataset seed

    Returns:
        PreparedObject
    """
    label = name or f"object-{object_id}"
    ladder = build_lod_ladder(mesh, lods, hd_grid=hd_grid, name=label)
    k = default_voxel_count(mesh.n_facets, voxel_ratio)
    labels = voxelize(ladder.coarsest, k, object_seed(seed, object_id))
    voxels = assign_voxels_across_lods(ladder, labels)
    mbb = mesh.bounding_box()
    anchor = compute_object_anchor(mesh)
    surface = nearest_vertex(mesh, mbb.center)
    logger.debug(
        f"{label}: {mesh.n_facets} facets, {voxels.n_voxels} voxels, levels {ladder.schedule}"
    )
    return PreparedObject(object_id, label, mbb, anchor, surface, ladder, voxels)


def _prepare_job(job: Tuple[int, str, Mesh, Dict[str, Any]]) -> PreparedObject:
    object_id, name, mesh, options = job
    return prepare_object(object_id, mesh, name, **options)


def prepare_dataset(
    meshes: Sequence[Tuple[str, Mesh]],
    lods: Sequence[int] = DEFAULT_LODS,
    voxel_ratio: float = DEFAULT_VOXEL_RATIO,
    hd_grid: int = DEFAULT_HD_GRID,
    seed: int = 0,
    workers: Optional[int] = 1,
) -> "PreparedDataset":
    """
    Prepare named meshes in order; object ids follow the input order.

    Objects are processed in parallel across ``workers`` processes. Results
    do not depend on the worker count.
    """
    options = {"lods": list(lods), "voxel_ratio": voxel_ratio, "hd_grid": hd_grid, "seed": seed}
    jobs = [(i, name, mesh, options) for i, (name, mesh) in enumerate(meshes)]
    if (workers is not None and workers <= 1) or len(jobs) <= 1:
        objects = [_prepare_job(job) for job in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            objects = list(pool.map(_prepare_job, jobs, chunksize=max(1, len(jobs) // 64)))
    metadata = {
        "voxel_ratio": float(voxel_ratio),
        "hd_grid": int(hd_grid),
        "seed": int(seed),
        "lods": [int(level) for level in lods],
    }
    logger.info(f"Prepared {len(objects)} objects")
    return PreparedDataset(objects, metadata)


@dataclass(eq=False)
class PreparedDataset:
    """
    Ordered collection of prepared objects sharing one LoD schedule.

    Attributes:
        objects: Objects indexed by id
        metadata: Preprocessing parameters
        mbb_lo, mbb_hi: ``(n, 3)`` object boxes
        anchors, surface_anchors: ``(n, 3)`` anchor points
        o2v: ``(n + 1,)`` offsets into the flat voxel arrays
        voxel_lo, voxel_hi, voxel_anchors: ``(V, 3)`` flat voxel records
        voxel_owner: ``(V,)`` object id of each flat voxel
    """

    objects: List[PreparedObject]
    metadata: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not self.objects:
            raise ValueError("A dataset needs at least one object")
        schedules = {tuple(obj.ladder.schedule) for obj in self.objects}
        if len(schedules) != 1:
            raise ValueError(f"Objects use different LoD schedules: {sorted(schedules)}")
        for i, obj in enumerate(self.objects):
            if obj.id != i:
                raise ValueError(f"Object at position {i} has id {obj.id}")
        self.schedule: List[int] = list(schedules.pop())
        self.mbb_lo = np.array([obj.mbb.lo for obj in self.objects])
        self.mbb_hi = np.array([obj.mbb.hi for obj in self.objects])
        self.anchors = np.array([obj.anchor for obj in self.objects])
        self.surface_anchors = np.array([obj.surface_anchor for obj in self.objects])

        counts = np.array([obj.voxels.n_voxels for obj in self.objects], dtype=np.int64)
        self.o2v = np.concatenate([[0], np.cumsum(counts)]).astype(np.int64)
        self.voxel_lo = np.concatenate([obj.voxels.lo for obj in self.objects])
        self.voxel_hi = np.concatenate([obj.voxels.hi for obj in self.objects])
        self.voxel_anchors = np.concatenate([obj.voxels.anchors for obj in self.objects])
        self.voxel_owner = np.repeat(np.arange(len(self.objects)), counts)
        self._rtree: Optional[RTree] = None

    def __len__(self) -> int:
        return len(self.objects)

    @property
    def voxel_counts(self) -> np.ndarray:
        return np.diff(self.o2v)

    @property
    def n_facets(self) -> int:
        return sum(obj.mesh.n_facets for obj in self.objects)

    @property
    def rtree(self) -> RTree:
        """R-tree over object boxes, built on first use."""
        if self._rtree is None:
            self._rtree = build_rtree(self.mbb_lo, self.mbb_hi)
        return self._rtree
