"""
Procedural closed meshes used as builtin dataset seeds and test fixtures.
"""

import math
from typing import Dict, List, Sequence, Tuple

import numpy as np

from .model import Mesh


def box_mesh(lo: Sequence[float] = (0.0, 0.0, 0.0), hi: Sequence[float] = (1.0, 1.0, 1.0)) -> Mesh:
    """Axis-aligned box as 8 vertices and 12 outward-facing triangles."""
    x0, y0, z0 = lo
    x1, y1, z1 = hi
    vertices = [
        (x0, y0, z0), (x1, y0, z0), (x1, y1, z0), (x0, y1, z0),
        (x0, y0, z1), (x1, y0, z1), (x1, y1, z1), (x0, y1, z1),
    ]
    quads = [
        (0, 3, 2, 1), (4, 5, 6, 7), (0, 1, 5, 4),
        (1, 2, 6, 5), (2, 3, 7, 6), (3, 0, 4, 7),
    ]
    facets = []
    for a, b, c, d in quads:
        facets.append((a, b, c))
        facets.append((a, c, d))
    return Mesh(np.array(vertices, dtype=np.float64), np.array(facets))


def icosphere(subdivisions: int = 2, radius: float = 1.0) -> Mesh:
    """Geodesic sphere with ``20 * 4**subdivisions`` facets."""
    t = (1.0 + math.sqrt(5.0)) / 2.0
    verts: List[Tuple[float, float, float]] = [
        (-1, t, 0), (1, t, 0), (-1, -t, 0), (1, -t, 0),
        (0, -1, t), (0, 1, t), (0, -1, -t), (0, 1, -t),
        (t, 0, -1), (t, 0, 1), (-t, 0, -1), (-t, 0, 1),
    ]
    faces = [
        (0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11),
        (1, 5, 9), (5, 11, 4), (11, 10, 2), (10, 7, 6), (7, 1, 8),
        (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8), (3, 8, 9),
        (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1),
    ]
    points = [np.array(v, dtype=np.float64) for v in verts]

    for _ in range(subdivisions):
        cache: Dict[Tuple[int, int], int] = {}

        def midpoint(a: int, b: int) -> int:
            key = (a, b) if a < b else (b, a)
            if key not in cache:
                points.append((points[a] + points[b]) / 2.0)
                cache[key] = len(points) - 1
            return cache[key]

        refined = []
        for a, b, c in faces:
            ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
            refined.extend([(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)])
        faces = refined

    arr = np.array(points)
    arr = arr / np.linalg.norm(arr, axis=1, keepdims=True) * radius
    return Mesh(arr, np.array(faces))


def _grid_facets(rows: int, cols: int, wrap_rows: bool, offset: int = 0) -> List[Tuple[int, int, int]]:
    """Two triangles per cell of a ``rows x cols`` vertex grid wrapping in columns."""
    facets = []
    last = rows if wrap_rows else rows - 1
    for i in range(last):
        i2 = (i + 1) % rows
        for j in range(cols):
            j2 = (j + 1) % cols
            a = offset + i * cols + j
            b = offset + i * cols + j2
            c = offset + i2 * cols + j2
            d = offset + i2 * cols + j
            facets.append((a, b, c))
            facets.append((a, c, d))
    return facets


def uv_sphere(n_facets: int = 300, radius: float = 1.0) -> Mesh:
    """Latitude/longitude sphere with roughly ``n_facets`` facets."""
    bands = max(2, round(math.sqrt(n_facets / 4.0)))
    segments = max(3, round(n_facets / (2.0 * bands)))
    rings = bands - 1
    vertices = [(0.0, 0.0, radius)]
    for i in range(1, bands):
        theta = math.pi * i / bands
        for j in range(segments):
            phi = 2.0 * math.pi * j / segments
            vertices.append(
                (radius * math.sin(theta) * math.cos(phi),
                 radius * math.sin(theta) * math.sin(phi),
                 radius * math.cos(theta))
            )
    vertices.append((0.0, 0.0, -radius))
    south = len(vertices) - 1

    facets = []
    for j in range(segments):
        facets.append((0, 1 + j, 1 + (j + 1) % segments))
    facets.extend(_grid_facets(rings, segments, wrap_rows=False, offset=1))
    base = 1 + (rings - 1) * segments
    for j in range(segments):
        facets.append((south, base + (j + 1) % segments, base + j))
    return Mesh(np.array(vertices), np.array(facets))


def torus(n_facets: int = 400, major: float = 1.0, minor: float = 0.35) -> Mesh:
    """Ring torus around the z axis with roughly ``n_facets`` facets."""
    tube_segments = max(3, round(math.sqrt(n_facets / 4.0)))
    ring_segments = max(3, round(n_facets / (2.0 * tube_segments)))
    vertices = []
    for i in range(ring_segments):
        u = 2.0 * math.pi * i / ring_segments
        for j in range(tube_segments):
            v = 2.0 * math.pi * j / tube_segments
            r = major + minor * math.cos(v)
            vertices.append((r * math.cos(u), r * math.sin(u), minor * math.sin(v)))
    facets = _grid_facets(ring_segments, tube_segments, wrap_rows=True)
    return Mesh(np.array(vertices), np.array(facets))


def tube(n_facets: int = 600, length: float = 6.0, radius: float = 0.4, bend: float = 0.8) -> Mesh:
    """
    Capped tube along a gently bent centerline, a vessel-like seed shape.
    """
    segments = max(6, round(math.sqrt(n_facets / 4.0)))
    sections = max(1, round((n_facets - 2 * segments) / (2.0 * segments)))
    vertices = []
    for i in range(sections + 1):
        x = length * i / sections
        y = bend * math.sin(math.pi * x / length)
        for j in range(segments):
            phi = 2.0 * math.pi * j / segments
            vertices.append((x, y + radius * math.cos(phi), radius * math.sin(phi)))
    facets = _grid_facets(sections + 1, segments, wrap_rows=False)
    start = len(vertices)
    vertices.append((0.0, 0.0, 0.0))
    end = len(vertices)
    vertices.append((length, 0.0, 0.0))
    last = sections * segments
    for j in range(segments):
        j2 = (j + 1) % segments
        facets.append((start, j2, j))
        facets.append((end, last + j, last + j2))
    return Mesh(np.array(vertices), np.array(facets))


BUILTIN_SHAPES = {"sphere": uv_sphere, "torus": torus, "tube": tube}
