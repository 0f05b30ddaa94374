"""
Brute-force reference join.

Distances are evaluated over every pair of original facets with the exact
triangle kernel; nothing from the filtering or refinement stages is used.
"""

import logging
from typing import Dict, List, Optional, Tuple

import numpy as np

from ..config import JoinSpec, QueryType
from ..geometry import mindist_aabb, tri_tri_distance_batch
from ..index import PreparedDataset
from ..mesh import Mesh
from .candidates import EXACT_STAGE, JoinResultRecord

logger = logging.getLogger(__name__)

ORACLE_BLOCK = 262_144


def mesh_distance(a: Mesh, b: Mesh, block: int = ORACLE_BLOCK) -> float:
    """Minimum distance between two triangle meshes over all facet pairs."""
    ta, tb = a.triangles, b.triangles
    if ta.shape[0] == 0 or tb.shape[0] == 0:
        return float("inf")
    rows = max(1, block // tb.shape[0])
    best = np.inf
    for start in range(0, ta.shape[0], rows):
        chunk = ta[start : start + rows]
        t1 = np.repeat(chunk, tb.shape[0], axis=0)
        t2 = np.tile(tb, (chunk.shape[0], 1, 1))
        best = min(best, float(tri_tri_distance_batch(t1, t2).min()))
    return best


def oracle_distances(
    R: PreparedDataset,
    S: PreparedDataset,
    self_join: bool = False,
    cutoff: Optional[float] = None,
) -> Dict[Tuple[int, int], float]:
    """
    Exact distances of object pairs.

    Args:
        R, S: Datasets (only the original meshes are read)
        self_join: Skip pairs of an object with itself
        cutoff: Skip pairs whose bounding boxes are farther apart than this

    Returns:
        (r, s) -> distance for every evaluated pair
    """
    distances: Dict[Tuple[int, int], float] = {}
    for r_obj in R.objects:
        for s_obj in S.objects:
            if self_join and r_obj.id == s_obj.id:
                continue
            if cutoff is not None and mindist_aabb(r_obj.mbb, s_obj.mbb) > cutoff:
                continue
            distances[(r_obj.id, s_obj.id)] = mesh_distance(r_obj.mesh, s_obj.mesh)
    logger.debug(f"Oracle evaluated {len(distances)} object pairs")
    return distances


def oracle_within(
    R: PreparedDataset, S: PreparedDataset, tau: float, self_join: bool = False
) -> List[JoinResultRecord]:
    """Pairs at distance ``<= tau``, ordered by (r, s)."""
    distances = oracle_distances(R, S, self_join, cutoff=tau)
    return [
        JoinResultRecord(r, s, d, d, EXACT_STAGE)
        for (r, s), d in sorted(distances.items())
        if d <= tau
    ]


def oracle_knn(
    R: PreparedDataset, S: PreparedDataset, k: int, self_join: bool = False
) -> List[JoinResultRecord]:
    """The ``k`` nearest S objects of each R object, ties broken by id."""
    distances = oracle_distances(R, S, self_join)
    records: List[JoinResultRecord] = []
    for r in range(len(R)):
        row = sorted((d, s) for (rr, s), d in distances.items() if rr == r)
        for rank, (d, s) in enumerate(row[:k], start=1):
            records.append(JoinResultRecord(r, s, d, d, EXACT_STAGE, rank))
    return records


def oracle_join(R: PreparedDataset, S: PreparedDataset, spec: JoinSpec) -> List[JoinResultRecord]:
    """Reference answer for ``spec`` in the join output order."""
    if spec.query_type is QueryType.KNN:
        return oracle_knn(R, S, int(spec.k), spec.self_join)
    return oracle_within(R, S, float(spec.threshold), spec.self_join)
