"""
Voxelization of an object's facets and its consistent mapping across levels.

Voxels are k-means clusters of coarsest-level facet centroids. Every finer
facet inherits the cluster of its coarsest ancestor, so the partition is the
same at every level; voxel boxes and anchors are taken from the original
(level 100) facets.
"""

import logging
import math
import warnings
from dataclasses import dataclass, field
from typing import Dict, Optional, Tuple

import numpy as np
from sklearn.cluster import KMeans
from sklearn.exceptions import ConvergenceWarning

from ..errors import ParameterError
from ..geometry import mindist_boxes
from ..mesh import LodLadder, LodMesh, Mesh

logger = logging.getLogger(__name__)

KMEANS_ROUNDS = 2
DEFAULT_VOXEL_RATIO = 0.02


def default_voxel_count(n_facets: int, ratio: float = DEFAULT_VOXEL_RATIO) -> int:
    """Voxels requested for an object: ``ceil(ratio * facets)``, at least 1."""
    return max(1, int(math.ceil(ratio * n_facets)))


def voxelize(coarsest: LodMesh, k: int, seed: Optional[int] = None) -> np.ndarray:
    """
    Cluster coarsest-level facets into at most ``k`` voxels.

    Initial centers are vertices drawn uniformly with a seeded generator, then
    exactly two Lloyd update rounds run through scikit-learn. KMeans reseeds a
    cluster that empties mid-run; clusters still empty at the end are dropped
    and the remaining labels compacted in ascending cluster order.

    Args:
        coarsest: Coarsest level of the ladder
        k: Requested voxel count, clamped to the facet count
        seed: Generator seed (an int or anything ``default_rng`` accepts)

    Returns:
        ``(n_facets,)`` voxel label per coarsest facet

    Raises:
        ParameterError: If ``k`` is not positive
    """
    if k <= 0:
        raise ParameterError(f"voxel count must be positive, got {k}")
    centroids = coarsest.mesh.centroids()
    k = min(k, centroids.shape[0])
    rng = np.random.default_rng(seed)
    vertices = coarsest.mesh.vertices
    pick = rng.choice(vertices.shape[0], size=k, replace=k > vertices.shape[0])
    centers = vertices[np.sort(pick)].copy()

    kmeans = KMeans(n_clusters=k, init=centers, n_init=1, max_iter=KMEANS_ROUNDS, tol=0.0, random_state=0)
    with warnings.catch_warnings():
        # tiny coarse levels can have fewer distinct centroids than clusters
        warnings.simplefilter("ignore", ConvergenceWarning)
        labels = kmeans.fit(centroids).labels_

    used = np.unique(labels)
    return np.searchsorted(used, labels).astype(np.int64)


def compute_voxel_anchor(center: np.ndarray, facet_ids: np.ndarray, mesh: Mesh) -> np.ndarray:
    """
    Vertex of the voxel's facets nearest to the voxel box center.

    Ties resolve to the lowest vertex id.

    Raises:
        RuntimeError: If the voxel has no facets
    """
    if len(facet_ids) == 0:
        raise RuntimeError("Empty voxel reached anchor selection")
    vids = np.unique(mesh.facets[facet_ids])
    d = np.linalg.norm(mesh.vertices[vids] - np.asarray(center), axis=1)
    return mesh.vertices[vids[int(np.argmin(d))]].copy()


@dataclass(eq=False)
class VoxelSet:
    """
    Per-object voxels.

    Attributes:
        lo, hi: ``(nv, 3)`` box corners enclosing each voxel's original facets
        anchors: ``(nv, 3)`` voxel anchors (original-mesh vertices)
        facet_voxels: Level -> voxel id of every facet at that level
        dropped: Voxels removed for having no original facets
    """

    lo: np.ndarray
    hi: np.ndarray
    anchors: np.ndarray
    facet_voxels: Dict[int, np.ndarray]
    dropped: int = 0
    _groups: Dict[int, Tuple[np.ndarray, np.ndarray]] = field(default_factory=dict, repr=False)

    @property
    def n_voxels(self) -> int:
        return int(self.lo.shape[0])

    def grouping(self, level: int) -> Tuple[np.ndarray, np.ndarray]:
        """
        Facets of a level ordered by voxel, with an offset table.

        Returns:
            (order, offsets): facets of voxel ``v`` are
            ``order[offsets[v]:offsets[v + 1]]``
        """
        if level not in self._groups:
            labels = self.facet_voxels[level]
            order = np.argsort(labels, kind="stable")
            offsets = np.searchsorted(labels[order], np.arange(self.n_voxels + 1))
            self._groups[level] = (order, offsets)
        return self._groups[level]

    def members(self, level: int, voxel: int) -> np.ndarray:
        order, offsets = self.grouping(level)
        return order[offsets[voxel] : offsets[voxel + 1]]


def _boxes(labels: np.ndarray, triangles: np.ndarray, n: int) -> Tuple[np.ndarray, np.ndarray]:
    lo = np.full((n, 3), np.inf)
    hi = np.full((n, 3), -np.inf)
    np.minimum.at(lo, labels, triangles.min(axis=1))
    np.maximum.at(hi, labels, triangles.max(axis=1))
    return lo, hi


def assign_voxels_across_lods(ladder: LodLadder, coarse_assignment: np.ndarray) -> VoxelSet:
    """
    Propagate the coarsest-level voxel labels to every level.

    Args:
        ladder: Object ladder with total ancestor maps
        coarse_assignment: Voxel label per coarsest facet

    Returns:
        VoxelSet with boxes and anchors computed on the original mesh
    """
    coarse = ladder.coarsest
    original = ladder.finest.mesh
    through_coarse = np.asarray(coarse_assignment)[coarse.ancestor_of_original]
    facet_voxels = {lod.level: through_coarse[lod.source_facets] for lod in ladder.levels}
    n = int(np.asarray(coarse_assignment).max()) + 1

    finest_labels = facet_voxels[100]
    counts = np.bincount(finest_labels, minlength=n)
    lo, hi = _boxes(finest_labels, original.triangles, n)
    dropped = int(np.count_nonzero(counts == 0))
    if dropped:
        keep = np.flatnonzero(counts > 0)
        relabel = np.full(n, -1, dtype=np.int64)
        relabel[keep] = np.arange(keep.size)
        lo, hi = lo[keep], hi[keep]
        for lod in ladder.levels:
            labels = relabel[facet_voxels[lod.level]]
            orphans = np.flatnonzero(labels < 0)
            if orphans.size:
                centroids = lod.mesh.centroids()[orphans]
                gaps = mindist_boxes(centroids[:, None, :], centroids[:, None, :], lo[None], hi[None])
                labels[orphans] = np.argmin(gaps, axis=1)
            facet_voxels[lod.level] = labels
        logger.info(f"Dropped {dropped} voxels without original facets")
        n = keep.size

    voxels = VoxelSet(lo, hi, np.empty((n, 3)), facet_voxels, dropped)
    centers = (lo + hi) * 0.5
    for v in range(n):
        voxels.anchors[v] = compute_voxel_anchor(centers[v], voxels.members(100, v), original)
    return voxels
