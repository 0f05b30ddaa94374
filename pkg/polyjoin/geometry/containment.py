"""
Point-in-polyhedron classification by ray-casting parity.
"""

import logging
from collections import Counter
from enum import Enum

import numpy as np

logger = logging.getLogger(__name__)

MAX_RETRIES = 8
GRAZE_TOL = 1e-9

# Ray directions tried in order on grazing hits.
_JITTER_DIRECTIONS = np.array(
    [
        [0.5773502691896258, 0.5773502691896257, 0.5773502691896259],
        [0.8017837257372732, -0.2672612419124244, 0.5345224838248488],
        [-0.3015113445777636, 0.9045340337332909, 0.3015113445777636],
        [0.2182178902359924, 0.4364357804719848, -0.8728715609439696],
        [-0.7071067811865476, -0.5, 0.5000000000000001],
        [0.1230914909793327, -0.9847319278346618, 0.1230914909793327],
        [0.6396021490668313, 0.6396021490668313, -0.4264014327112209],
        [-0.4082482904638631, 0.4082482904638631, -0.8164965809277261],
    ]
)


class Containment(str, Enum):
    """Outcome of a point-in-polyhedron test."""

    INSIDE = "inside"
    OUTSIDE = "outside"
    INDETERMINATE = "indeterminate"


def is_watertight(facets: np.ndarray) -> bool:
    """
    Check that every undirected edge is shared by an even number of facets.

    Vertices are matched by exact coordinates, so this works on a bare
    triangle soup.

    Args:
        facets: ``(F, 3, 3)`` triangle array

    Returns:
        True when no boundary edge is found
    """
    if facets.shape[0] == 0:
        return False
    keys = [tuple(v) for v in facets.reshape(-1, 3).tolist()]
    edges: Counter = Counter()
    for f in range(facets.shape[0]):
        tri = keys[3 * f : 3 * f + 3]
        for i in range(3):
            a, b = tri[i], tri[(i + 1) % 3]
            if a == b:
                continue
            edges[(a, b) if a < b else (b, a)] += 1
    return all(count % 2 == 0 for count in edges.values())


def _cast(point: np.ndarray, direction: np.ndarray, facets: np.ndarray):
    """
    Count ray/facet crossings with a Moller-Trumbore test.

    Returns:
        (crossings, degenerate) where degenerate flags a grazing hit
    """
    v0 = facets[:, 0]
    e1 = facets[:, 1] - v0
    e2 = facets[:, 2] - v0
    h = np.cross(direction, e2)
    det = np.einsum("ij,ij->i", e1, h)
    scale = np.linalg.norm(e1, axis=1) * np.linalg.norm(e2, axis=1)
    parallel = np.abs(det) <= GRAZE_TOL * np.maximum(scale, 1e-300)
    safe = np.where(parallel, 1.0, det)
    s = point - v0
    u = np.einsum("ij,ij->i", s, h) / safe
    q = np.cross(s, e1)
    v = (q @ direction) / safe
    t = np.einsum("ij,ij->i", e2, q) / safe

    w = 1.0 - u - v
    in_span = (u >= -GRAZE_TOL) & (v >= -GRAZE_TOL) & (w >= -GRAZE_TOL) & (t >= -GRAZE_TOL)
    hit = ~parallel & in_span
    near_edge = (np.abs(u) <= GRAZE_TOL) | (np.abs(v) <= GRAZE_TOL) | (np.abs(w) <= GRAZE_TOL)
    on_surface = np.abs(t) <= GRAZE_TOL
    degenerate = bool(np.any(hit & (near_edge | on_surface)))
    return int(np.count_nonzero(hit)), degenerate


def point_in_polyhedron(point: np.ndarray, facets: np.ndarray) -> Containment:
    """
    Classify a point against a closed triangle surface.

    The ray direction is redrawn from a fixed sequence whenever a hit grazes an
    edge, a vertex or the point itself lies on the surface.

    Args:
        point: ``(3,)`` query point
        facets: ``(F, 3, 3)`` triangles of a closed surface

    Returns:
        INSIDE, OUTSIDE, or INDETERMINATE for open input or persistent grazing
    """
    facets = np.asarray(facets, dtype=np.float64).reshape(-1, 3, 3)
    point = np.asarray(point, dtype=np.float64)
    if not is_watertight(facets):
        return Containment.INDETERMINATE

    for attempt in range(MAX_RETRIES):
        crossings, degenerate = _cast(point, _JITTER_DIRECTIONS[attempt], facets)
        if degenerate:
            logger.debug(f"Grazing ray on attempt {attempt}, retrying")
            continue
        return Containment.INSIDE if crossings % 2 == 1 else Containment.OUTSIDE
    return Containment.INDETERMINATE
