"""
Geometric primitives: points, triangles, boxes and exact distance kernels.
"""

from .containment import Containment, point_in_polyhedron
from .primitives import (
    Aabb,
    as_point,
    as_triangle,
    mindist_aabb,
    mindist_boxes,
    point_triangle_distance,
    point_triangle_distance_batch,
    points_to_triangles_min,
    segment_segment_distance,
    segment_segment_distance_batch,
    tri_tri_distance,
    tri_tri_distance_batch,
)

__all__ = [
    "Aabb",
    "Containment",
    "as_point",
    "as_triangle",
    "mindist_aabb",
    "mindist_boxes",
    "point_in_polyhedron",
    "point_triangle_distance",
    "point_triangle_distance_batch",
    "points_to_triangles_min",
    "segment_segment_distance",
    "segment_segment_distance_batch",
    "tri_tri_distance",
    "tri_tri_distance_batch",
]
