"""
Object anchors: representative points whose pairwise distance bounds the
surface distance from above.
"""

import logging

import numpy as np

from ..geometry import Containment, point_in_polyhedron
from ..mesh import Mesh

logger = logging.getLogger(__name__)


def nearest_vertex(mesh: Mesh, point: np.ndarray) -> np.ndarray:
    """Mesh vertex closest to ``point``; ties go to the lowest vertex id."""
    if mesh.n_vertices == 0:
        raise ValueError("Mesh has no vertices")
    used = np.unique(mesh.facets) if mesh.n_facets else np.arange(mesh.n_vertices)
    d = np.linalg.norm(mesh.vertices[used] - point, axis=1)
    return mesh.vertices[used[int(np.argmin(d))]].copy()


def compute_object_anchor(mesh: Mesh) -> np.ndarray:
    """
    Anchor of an object: its MBB center when that lies inside the solid,
    otherwise the vertex nearest the center.

    An indeterminate containment answer is treated as outside, which always
    yields a point on the surface.
    """
    center = mesh.bounding_box().center
    status = point_in_polyhedron(center, mesh.triangles)
    if status is Containment.INSIDE:
        return center
    if status is Containment.INDETERMINATE:
        logger.debug("Containment indeterminate for anchor, using nearest vertex")
    return nearest_vertex(mesh, center)
