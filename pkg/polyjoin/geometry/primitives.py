"""
Low-level geometric primitives for the join engine.

Points are ``(3,)`` float64 arrays, triangles ``(3, 3)`` arrays (one vertex per
row) and boxes are :class:`Aabb` instances. Every distance kernel has a batched
form operating on stacked arrays; the scalar functions are thin wrappers around
them so that both paths share a single implementation.
"""

from dataclasses import dataclass
from typing import Iterable, Union

import numpy as np

Point3 = np.ndarray
Triangle = np.ndarray

_EPS = 1e-300


def as_point(value: Iterable[float]) -> Point3:
    """
    Convert a coordinate triple into a finite float64 point.

    Args:
        value: Any three-element sequence

    Returns:
        Point as a ``(3,)`` array

    Raises:
        ValueError: If the value is not a finite coordinate triple
    """
    point = np.asarray(value, dtype=np.float64).reshape(-1)
    if point.shape != (3,):
        raise ValueError(f"Expected 3 coordinates, got {point.shape[0]}")
    if not np.all(np.isfinite(point)):
        raise ValueError("Point coordinates must be finite")
    return point


def as_triangle(value: Iterable[Iterable[float]]) -> Triangle:
    """Convert three vertices into a finite ``(3, 3)`` triangle array."""
    tri = np.asarray(value, dtype=np.float64)
    if tri.shape != (3, 3):
        raise ValueError(f"Expected a (3, 3) triangle, got {tri.shape}")
    if not np.all(np.isfinite(tri)):
        raise ValueError("Triangle vertices must be finite")
    return tri


@dataclass(frozen=True, eq=False)
class Aabb:
    """Axis-aligned box given by its min and max corners."""

    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self) -> None:
        lo = as_point(self.lo)
        hi = as_point(self.hi)
        if np.any(lo > hi):
            raise ValueError("Box min corner exceeds max corner")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @classmethod
    def from_points(cls, points: np.ndarray) -> "Aabb":
        pts = np.asarray(points, dtype=np.float64).reshape(-1, 3)
        if pts.shape[0] == 0:
            raise ValueError("Cannot bound an empty point set")
        return cls(pts.min(axis=0), pts.max(axis=0))

    @property
    def center(self) -> Point3:
        return (self.lo + self.hi) * 0.5

    @property
    def extent(self) -> np.ndarray:
        return self.hi - self.lo

    def contains_box(self, other: "Aabb") -> bool:
        return bool(np.all(self.lo <= other.lo) and np.all(other.hi <= self.hi))

    def as_array(self) -> np.ndarray:
        """Six-coordinate layout: min corner followed by max corner."""
        return np.concatenate([self.lo, self.hi])

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Aabb):
            return NotImplemented
        return bool(np.array_equal(self.lo, other.lo) and np.array_equal(self.hi, other.hi))

    def __repr__(self) -> str:
        return f"Aabb(lo={self.lo.tolist()}, hi={self.hi.tolist()})"


def mindist_boxes(
    lo_a: np.ndarray, hi_a: np.ndarray, lo_b: np.ndarray, hi_b: np.ndarray
) -> np.ndarray:
    """
    Batched MINDIST between boxes; inputs broadcast over leading axes.

    Returns:
        Array of Euclidean gaps (zero where boxes overlap or touch)
    """
    gap = np.maximum(np.maximum(lo_a - hi_b, lo_b - hi_a), 0.0)
    return np.sqrt(np.einsum("...d,...d->...", gap, gap))


def mindist_aabb(a: Aabb, b: Aabb) -> float:
    """Minimum distance between two boxes; 0 iff they overlap or touch."""
    return float(mindist_boxes(a.lo, a.hi, b.lo, b.hi))


def _dot(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    return np.einsum("...d,...d->...", u, v)


def point_segment_distance_batch(p: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Distance from points to closed segments ``[a, b]`` (zero-length allowed)."""
    d = b - a
    dd = _dot(d, d)
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(dd > _EPS, _dot(p - a, d) / np.where(dd > _EPS, dd, 1.0), 0.0)
    t = np.clip(t, 0.0, 1.0)
    diff = p - (a + d * t[..., None])
    return np.sqrt(_dot(diff, diff))


def point_triangle_distance_batch(
    p: np.ndarray, a: np.ndarray, b: np.ndarray, c: np.ndarray
) -> np.ndarray:
    """
    Exact distance from points to closed triangles.

    When the orthogonal projection of ``p`` falls inside the triangle the plane
    distance is returned; otherwise the nearest point is on the boundary and the
    minimum over the three edges applies. Degenerate triangles have no interior
    and reduce to the edge fallback.
    """
    ab = b - a
    ac = c - a
    n = np.cross(ab, ac)
    nn = _dot(n, n)
    ap = p - a

    # barycentric coordinates of the projection
    d00 = _dot(ab, ab)
    d01 = _dot(ab, ac)
    d11 = _dot(ac, ac)
    d20 = _dot(ap, ab)
    d21 = _dot(ap, ac)
    denom = d00 * d11 - d01 * d01
    ok = (nn > _EPS) & (denom > _EPS)
    safe = np.where(ok, denom, 1.0)
    v = (d11 * d20 - d01 * d21) / safe
    w = (d00 * d21 - d01 * d20) / safe
    u = 1.0 - v - w
    inside = ok & (u >= 0.0) & (v >= 0.0) & (w >= 0.0)
    plane = np.abs(_dot(ap, n)) / np.sqrt(np.where(ok, nn, 1.0))

    edges = np.minimum(
        np.minimum(point_segment_distance_batch(p, a, b), point_segment_distance_batch(p, b, c)),
        point_segment_distance_batch(p, c, a),
    )
    return np.where(inside, np.minimum(plane, edges), edges)


def _closest_params(
    p1: np.ndarray, q1: np.ndarray, p2: np.ndarray, q2: np.ndarray
) -> np.ndarray:
    """Distance between segments [p1,q1] and [p2,q2] via clamped closest parameters."""
    d1 = q1 - p1
    d2 = q2 - p2
    r = p1 - p2
    a = _dot(d1, d1)
    e = _dot(d2, d2)
    f = _dot(d2, r)
    c = _dot(d1, r)
    b = _dot(d1, d2)

    a_ok = a > _EPS
    e_ok = e > _EPS
    a_safe = np.where(a_ok, a, 1.0)
    e_safe = np.where(e_ok, e, 1.0)

    denom = a * e - b * b
    general = a_ok & e_ok
    nonparallel = general & (denom > 1e-12 * a * e)
    s = np.where(nonparallel, np.clip((b * f - c * e) / np.where(nonparallel, denom, 1.0), 0.0, 1.0), 0.0)
    t = (b * s + f) / e_safe

    # first segment degenerate: closest point on second to p1
    t = np.where(~a_ok, np.clip(f / e_safe, 0.0, 1.0), t)
    s = np.where(~a_ok, 0.0, s)
    # second segment degenerate
    s = np.where(a_ok & ~e_ok, np.clip(-c / a_safe, 0.0, 1.0), s)
    t = np.where(~e_ok, 0.0, t)

    low = general & (t < 0.0)
    high = general & (t > 1.0)
    s = np.where(low, np.clip(-c / a_safe, 0.0, 1.0), s)
    s = np.where(high, np.clip((b - c) / a_safe, 0.0, 1.0), s)
    t = np.where(general, np.clip(t, 0.0, 1.0), t)

    diff = (p1 + d1 * s[..., None]) - (p2 + d2 * t[..., None])
    return np.sqrt(_dot(diff, diff))


def segment_segment_distance_batch(
    a0: np.ndarray, a1: np.ndarray, b0: np.ndarray, b1: np.ndarray
) -> np.ndarray:
    """Exact distance between closed segments; symmetric in the two segments."""
    return np.minimum(_closest_params(a0, a1, b0, b1), _closest_params(b0, b1, a0, a1))


def _edge_crossing_distance(
    p: np.ndarray, q: np.ndarray, a: np.ndarray, b: np.ndarray, c: np.ndarray
) -> np.ndarray:
    """
    Distance from the point where segment [p,q] crosses the triangle plane to the
    triangle, or +inf when the segment does not cross the plane.
    """
    n = np.cross(b - a, c - a)
    nn = _dot(n, n)
    sp = _dot(p - a, n)
    sq = _dot(q - a, n)
    crosses = (nn > _EPS) & (sp * sq <= 0.0) & (sp != sq)
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(crosses, sp / np.where(crosses, sp - sq, 1.0), 0.0)
    x = p + (q - p) * t[..., None]
    dist = point_triangle_distance_batch(x, a, b, c)
    return np.where(crosses, dist, np.inf)


def tri_tri_distance_batch(t1: np.ndarray, t2: np.ndarray) -> np.ndarray:
    """
    Exact minimum distance between stacked triangle pairs.

    Args:
        t1: ``(N, 3, 3)`` triangles
        t2: ``(N, 3, 3)`` triangles

    Returns:
        ``(N,)`` distances

    The classic 15 candidates (6 vertex-to-triangle, 9 edge-to-edge) are
    completed by the 6 edge-plane crossing points, which detect interpenetration
    where all 15 candidates stay positive. Candidate sets are symmetric, so the
    result does not depend on argument order.
    """
    t1 = np.asarray(t1, dtype=np.float64)
    t2 = np.asarray(t2, dtype=np.float64)
    a = [t1[:, i, :] for i in range(3)]
    b = [t2[:, i, :] for i in range(3)]

    best = np.full(t1.shape[0], np.inf)
    for i in range(3):
        best = np.minimum(best, point_triangle_distance_batch(a[i], b[0], b[1], b[2]))
        best = np.minimum(best, point_triangle_distance_batch(b[i], a[0], a[1], a[2]))
    for i in range(3):
        i2 = (i + 1) % 3
        for j in range(3):
            j2 = (j + 1) % 3
            best = np.minimum(best, segment_segment_distance_batch(a[i], a[i2], b[j], b[j2]))
    for i in range(3):
        i2 = (i + 1) % 3
        best = np.minimum(best, _edge_crossing_distance(a[i], a[i2], b[0], b[1], b[2]))
        best = np.minimum(best, _edge_crossing_distance(b[i], b[i2], a[0], a[1], a[2]))
    return best


def point_triangle_distance(p: Union[Point3, Iterable[float]], t: Triangle) -> float:
    """Exact distance from a point to a closed triangle."""
    tri = np.asarray(t, dtype=np.float64)
    pt = np.asarray(p, dtype=np.float64)
    return float(point_triangle_distance_batch(pt[None], tri[None, 0], tri[None, 1], tri[None, 2])[0])


def segment_segment_distance(a0: Point3, a1: Point3, b0: Point3, b1: Point3) -> float:
    """Exact distance between two closed segments."""
    arr = [np.asarray(x, dtype=np.float64)[None] for x in (a0, a1, b0, b1)]
    return float(segment_segment_distance_batch(*arr)[0])


def tri_tri_distance(t1: Triangle, t2: Triangle) -> float:
    """Exact minimum distance between two closed triangles."""
    return float(tri_tri_distance_batch(np.asarray(t1)[None], np.asarray(t2)[None])[0])


def points_to_triangles_min(points: np.ndarray, triangles: np.ndarray) -> np.ndarray:
    """
    Distance from each point to the nearest of a set of triangles.

    Args:
        points: ``(P, 3)``
        triangles: ``(T, 3, 3)``

    Returns:
        ``(P,)`` distances (+inf when there are no triangles)
    """
    if triangles.shape[0] == 0:
        return np.full(points.shape[0], np.inf)
    p = points[:, None, :]
    d = point_triangle_distance_batch(
        p, triangles[None, :, 0], triangles[None, :, 1], triangles[None, :, 2]
    )
    return d.min(axis=1)
