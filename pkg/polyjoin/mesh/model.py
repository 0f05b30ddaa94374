"""
Triangle mesh container.
"""

from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np

from ..geometry import Aabb


@dataclass(eq=False)
class Mesh:
    """
    Indexed triangle mesh.

    Attributes:
        vertices: ``(V, 3)`` float64 coordinates
        facets: ``(F, 3)`` int64 vertex indices
    """

    vertices: np.ndarray
    facets: np.ndarray
    _triangles: Optional[np.ndarray] = field(default=None, repr=False)
    _facet_boxes: Optional[Tuple[np.ndarray, np.ndarray]] = field(default=None, repr=False)

    def __post_init__(self) -> None:
        self.vertices = np.ascontiguousarray(self.vertices, dtype=np.float64).reshape(-1, 3)
        self.facets = np.ascontiguousarray(self.facets, dtype=np.int64).reshape(-1, 3)
        if self.facets.size and (
            self.facets.min() < 0 or self.facets.max() >= self.vertices.shape[0]
        ):
            raise ValueError("Facet index out of range")

    @property
    def n_vertices(self) -> int:
        return int(self.vertices.shape[0])

    @property
    def n_facets(self) -> int:
        return int(self.facets.shape[0])

    @property
    def triangles(self) -> np.ndarray:
        """``(F, 3, 3)`` facet coordinates, computed once."""
        if self._triangles is None:
            self._triangles = self.vertices[self.facets]
        return self._triangles

    @property
    def facet_boxes(self) -> Tuple[np.ndarray, np.ndarray]:
        """Per-facet ``(lo, hi)`` corner arrays, computed once."""
        if self._facet_boxes is None:
            tri = self.triangles
            self._facet_boxes = (tri.min(axis=1), tri.max(axis=1))
        return self._facet_boxes

    def centroids(self) -> np.ndarray:
        return self.triangles.mean(axis=1)

    def bounding_box(self) -> Aabb:
        return Aabb.from_points(self.vertices)

    def translated(self, offset: np.ndarray) -> "Mesh":
        return Mesh(self.vertices + np.asarray(offset, dtype=np.float64), self.facets.copy())

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Mesh):
            return NotImplemented
        return bool(
            np.array_equal(self.vertices, other.vertices)
            and np.array_equal(self.facets, other.facets)
        )
