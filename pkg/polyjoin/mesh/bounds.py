"""
Per-facet deviation bounds between a simplified level and the original mesh.

``hd`` inflates facet distances into upper bounds on the original distance and
``ph`` deflates them into lower bounds. Both are computed offline once per
level and stored next to the level's facets.
"""

from functools import lru_cache
from typing import Optional, Protocol

import numpy as np
from scipy.spatial import cKDTree

from ..geometry import point_triangle_distance_batch, points_to_triangles_min
from .model import Mesh

DEFAULT_HD_GRID = 8


class LodMeshLike(Protocol):
    mesh: Mesh
    ancestor_of_original: np.ndarray


@lru_cache(maxsize=16)
def barycentric_weights(grid_level: int) -> np.ndarray:
    """
    Barycentric weights of a level-``n`` triangle grid, ``(n+1)(n+2)/2`` rows.
    """
    if grid_level < 1:
        raise ValueError("grid level must be >= 1")
    rows = []
    for i in range(grid_level + 1):
        for j in range(grid_level + 1 - i):
            rows.append((i, j, grid_level - i - j))
    weights = np.array(rows, dtype=np.float64) / grid_level
    weights.setflags(write=False)
    return weights


def sample_triangle(triangle: np.ndarray, grid_level: int) -> np.ndarray:
    return barycentric_weights(grid_level) @ np.asarray(triangle, dtype=np.float64)


def covering_radius(triangle: np.ndarray, grid_level: int) -> float:
    """
    Radius within which every point of the triangle has a grid sample.

    Each grid cell is a copy of the triangle scaled by ``1/n``, so any point is
    within the longest cell edge of a cell corner.
    """
    tri = np.asarray(triangle, dtype=np.float64)
    edges = tri[[1, 2, 0]] - tri
    return float(np.sqrt(np.einsum("ij,ij->i", edges, edges)).max()) / grid_level


class SurfaceLocator:
    """
    Exact point-to-surface distances over one mesh.

    A KD-tree over the referenced vertices gives each query point a distance
    ceiling (vertices lie on the surface). A second tree over facet centroids
    then returns every facet that can beat the ceiling: a facet within ``d``
    of a point has its centroid within ``d + reach``, where ``reach`` is the
    largest centroid-to-corner distance of the mesh.
    """

    def __init__(self, mesh: Mesh):
        if mesh.n_facets == 0:
            raise ValueError("Cannot locate points on an empty mesh")
        self.triangles = mesh.triangles
        centroids = self.triangles.mean(axis=1)
        self.reach = float(np.linalg.norm(self.triangles - centroids[:, None, :], axis=2).max())
        self.vertex_tree = cKDTree(mesh.vertices[np.unique(mesh.facets)])
        self.centroid_tree = cKDTree(centroids)

    def distances(self, points: np.ndarray, hint: Optional[np.ndarray] = None) -> np.ndarray:
        """
        Distance from each point to the surface.

        Args:
            points: ``(P, 3)`` query points
            hint: Optional facet ids expected to be close; they tighten the
                ceiling before the candidate search

        Returns:
            ``(P,)`` distances
        """
        points = np.asarray(points, dtype=np.float64)
        ceiling, _ = self.vertex_tree.query(points)
        if hint is not None and len(hint) > 0:
            ceiling = np.minimum(ceiling, points_to_triangles_min(points, self.triangles[hint]))
        radius = ceiling + self.reach
        hits = self.centroid_tree.query_ball_point(points, radius * (1.0 + 1e-9) + 1e-12)
        near = np.unique(np.concatenate([np.asarray(h, dtype=np.int64) for h in hits]))
        return np.minimum(ceiling, points_to_triangles_min(points, self.triangles[near]))


def compute_facet_hd(
    f_prime: np.ndarray,
    original: Mesh,
    grid_level: int = DEFAULT_HD_GRID,
    hint: Optional[np.ndarray] = None,
    locator: Optional[SurfaceLocator] = None,
) -> float:
    """
    Conservative upper bound on how far a facet strays from the original surface.

    Args:
        f_prime: ``(3, 3)`` simplified facet
        original: Original mesh
        grid_level: Barycentric subdivisions per edge
        hint: Optional original facet ids expected to be close to ``f_prime``
        locator: Prebuilt locator over ``original``, reused across facets

    Returns:
        Sampled max distance-to-surface plus the grid covering radius
    """
    samples = sample_triangle(f_prime, grid_level)
    rho = covering_radius(f_prime, grid_level)
    locator = locator or SurfaceLocator(original)
    return float(locator.distances(samples, hint).max()) + rho


def compute_level_ph(
    level_triangles: np.ndarray, ancestor_of_original: np.ndarray, original: Mesh
) -> np.ndarray:
    """
    Proxy deviation for every facet of a level.

    Distance to a triangle is convex, so the farthest point of an original facet
    from its ancestor is one of its vertices.

    Returns:
        ``(n_level_facets,)`` array, zero for facets with no mapped deviation
    """
    anc = np.asarray(ancestor_of_original, dtype=np.int64)
    target = level_triangles[anc]
    ph = np.zeros(level_triangles.shape[0], dtype=np.float64)
    for corner in range(3):
        d = point_triangle_distance_batch(
            original.triangles[:, corner], target[:, 0], target[:, 1], target[:, 2]
        )
        np.maximum.at(ph, anc, d)
    return ph


def compute_facet_ph(f_prime_id: int, lod: LodMeshLike, original: Mesh) -> float:
    """Proxy deviation of a single facet of ``lod`` (see :func:`compute_level_ph`)."""
    anc = np.asarray(lod.ancestor_of_original)
    mapped = np.flatnonzero(anc == f_prime_id)
    if mapped.size == 0:
        return 0.0
    tri = lod.mesh.triangles[f_prime_id]
    pts = original.triangles[mapped].reshape(-1, 3)
    d = point_triangle_distance_batch(pts, tri[0], tri[1], tri[2])
    return float(d.max())


def compute_level_hd(
    level_mesh: Mesh,
    ancestor_of_original: np.ndarray,
    original: Mesh,
    grid_level: int = DEFAULT_HD_GRID,
    locator: Optional[SurfaceLocator] = None,
) -> np.ndarray:
    """``hd`` for every facet of a level, seeding each with its mapped originals."""
    anc = np.asarray(ancestor_of_original, dtype=np.int64)
    order = np.argsort(anc, kind="stable")
    bounds = np.searchsorted(anc[order], np.arange(level_mesh.n_facets + 1))
    triangles = level_mesh.triangles
    locator = locator or SurfaceLocator(original)
    hd = np.empty(level_mesh.n_facets, dtype=np.float64)
    for f in range(level_mesh.n_facets):
        hint = order[bounds[f] : bounds[f + 1]]
        hd[f] = compute_facet_hd(triangles[f], original, grid_level, hint=hint, locator=locator)
    return hd
