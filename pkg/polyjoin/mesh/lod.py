"""
Level-of-detail ladders built by deterministic shortest-edge collapse.

Every collapse keeps the lower-id endpoint in place and removes the facets
shared by the edge. Each removed facet records a parent among the surviving
facets, so every original facet can be traced to exactly one facet at every
coarser level.
"""

import heapq
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Set, Tuple

import numpy as np

from .bounds import DEFAULT_HD_GRID, SurfaceLocator, compute_level_hd, compute_level_ph
from .model import Mesh

logger = logging.getLogger(__name__)

DEFAULT_LODS = (20, 40, 60, 80, 100)
MIN_CLOSED_FACETS = 4


@dataclass(eq=False)
class LodMesh:
    """
    One level of a ladder.

    Attributes:
        level: Percentage of the original facet count
        mesh: Simplified mesh (the input mesh itself at level 100)
        hd: Per-facet upper deviation bound
        ph: Per-facet proxy deviation bound
        ancestor_of_original: Original facet id -> facet index at this level
        source_facets: Original facet id of each facet at this level
        target: Requested facet count
        clamped: True when the simplifier could not reach ``target``
    """

    level: int
    mesh: Mesh
    hd: np.ndarray
    ph: np.ndarray
    ancestor_of_original: np.ndarray
    source_facets: np.ndarray
    target: int
    clamped: bool = False

    @property
    def n_facets(self) -> int:
        return self.mesh.n_facets


@dataclass(eq=False)
class LodLadder:
    """Levels ordered coarse to fine; the last level is the original mesh."""

    levels: List[LodMesh] = field(default_factory=list)

    @property
    def coarsest(self) -> LodMesh:
        return self.levels[0]

    @property
    def finest(self) -> LodMesh:
        return self.levels[-1]

    @property
    def schedule(self) -> List[int]:
        return [lod.level for lod in self.levels]

    @property
    def clamps(self) -> Dict[int, int]:
        """Levels that could not reach their target, with the achieved count."""
        return {lod.level: lod.n_facets for lod in self.levels if lod.clamped}

    def at(self, level: int) -> LodMesh:
        for lod in self.levels:
            if lod.level == level:
                return lod
        raise KeyError(f"No level {level} in ladder {self.schedule}")


class EdgeCollapseSimplifier:
    """
    Shortest-edge-first half-edge collapse with facet correspondence tracking.

    Edges are ordered by (length, lower vertex id, higher vertex id). Because the
    surviving endpoint never moves, edge lengths never change and stale heap
    entries only need an existence check.
    """

    def __init__(self, mesh: Mesh):
        self.positions = mesh.vertices
        self.faces: Dict[int, List[int]] = {
            i: list(f) for i, f in enumerate(mesh.facets.tolist())
        }
        self.incident: List[Set[int]] = [set() for _ in range(mesh.n_vertices)]
        for fid, face in self.faces.items():
            for v in face:
                self.incident[v].add(fid)
        self.parent = np.full(mesh.n_facets, -1, dtype=np.int64)
        self._heap: List = []
        seen = set()
        for face in self.faces.values():
            for i in range(3):
                a, b = face[i], face[(i + 1) % 3]
                key = (min(a, b), max(a, b))
                if a != b and key not in seen:
                    seen.add(key)
                    self._push(*key)

    @property
    def n_facets(self) -> int:
        return len(self.faces)

    def _push(self, a: int, b: int) -> None:
        lo, hi = (a, b) if a < b else (b, a)
        length = float(np.linalg.norm(self.positions[hi] - self.positions[lo]))
        heapq.heappush(self._heap, (length, lo, hi))

    def _centroid(self, fid: int) -> np.ndarray:
        return self.positions[self.faces[fid]].mean(axis=0)

    def _neighbors(self, v: int) -> Set[int]:
        out: Set[int] = set()
        for fid in self.incident[v]:
            out.update(self.faces[fid])
        out.discard(v)
        return out

    def _try_collapse(self, u: int, v: int) -> bool:
        shared = self.incident[u] & self.incident[v]
        if not shared:
            return False
        if self.n_facets - len(shared) < MIN_CLOSED_FACETS:
            return False
        # link condition keeps the surface manifold
        if len(self._neighbors(u) & self._neighbors(v)) != len(shared):
            return False

        removed = sorted(shared)
        removed_centroids = {fid: self._centroid(fid) for fid in removed}
        for fid in removed:
            for w in self.faces[fid]:
                self.incident[w].discard(fid)
            del self.faces[fid]

        touched: Set[int] = set()
        for fid in sorted(self.incident[v]):
            face = self.faces[fid]
            self.faces[fid] = [u if w == v else w for w in face]
            self.incident[u].add(fid)
            touched.update(face)
        self.incident[v] = set()
        touched.discard(v)
        touched.discard(u)
        for w in sorted(touched):
            self._push(u, w)

        candidates = sorted(self.incident[u]) or sorted(self.faces)
        cand_centroids = np.array([self._centroid(fid) for fid in candidates])
        for fid in removed:
            d = np.linalg.norm(cand_centroids - removed_centroids[fid], axis=1)
            # argmin returns the first minimum, i.e. the lowest facet id
            self.parent[fid] = candidates[int(np.argmin(d))]
        return True

    def collapse_until(self, target: int) -> bool:
        """
        Collapse edges until at most ``target`` facets remain.

        Returns:
            False when no valid collapse is left before reaching the target
        """
        while self.n_facets > target:
            if not self._heap:
                return False
            _, u, v = heapq.heappop(self._heap)
            self._try_collapse(u, v)
        return True

    def resolve_ancestors(self) -> np.ndarray:
        """Map every original facet id to its currently alive representative."""
        alive = np.zeros(self.parent.shape[0], dtype=bool)
        alive[list(self.faces)] = True
        rep = np.arange(self.parent.shape[0], dtype=np.int64)
        pending = ~alive[rep]
        while np.any(pending):
            rep[pending] = self.parent[rep[pending]]
            pending = ~alive[rep]
        return rep

    def snapshot(self) -> Tuple[Mesh, np.ndarray, np.ndarray]:
        """
        Current mesh with compacted vertices.

        Returns:
            (mesh, source_facets, ancestor_of_original)
        """
        alive = np.array(sorted(self.faces), dtype=np.int64)
        faces = np.array([self.faces[f] for f in alive.tolist()], dtype=np.int64).reshape(-1, 3)
        used = np.unique(faces)
        remap = np.full(self.positions.shape[0], -1, dtype=np.int64)
        remap[used] = np.arange(used.shape[0])
        mesh = Mesh(self.positions[used], remap[faces])
        ancestor = np.searchsorted(alive, self.resolve_ancestors())
        return mesh, alive, ancestor


def level_target(level: int, n_facets: int) -> int:
    return max(1, int(math.floor(level * n_facets / 100)))


def validate_schedule(levels: Sequence[int]) -> List[int]:
    levels = [int(x) for x in levels]
    if not levels or levels[-1] != 100:
        raise ValueError("LoD schedule must end at 100")
    if any(b <= a for a, b in zip(levels, levels[1:])) or levels[0] <= 0:
        raise ValueError(f"LoD schedule must be strictly ascending percentages: {levels}")
    return levels


def build_lod_ladder(
    mesh: Mesh,
    levels: Sequence[int] = DEFAULT_LODS,
    hd_grid: int = DEFAULT_HD_GRID,
    name: Optional[str] = None,
) -> LodLadder:
    """
    Build the LoD ladder of a mesh, coarse to fine, with per-facet bounds.

    Args:
        mesh: Original mesh (non-empty)
        levels: Ascending percentages ending at 100
        hd_grid: Barycentric grid level used for ``hd``
        name: Object name used in log messages

    Returns:
        Ladder whose last level is ``mesh`` itself with zero bounds
    """
    levels = validate_schedule(levels)
    if mesh.n_facets == 0:
        raise ValueError("Cannot build a ladder for an empty mesh")
    n = mesh.n_facets
    label = name or "mesh"

    simplifier = EdgeCollapseSimplifier(mesh)
    locator = SurfaceLocator(mesh)
    coarse: List[LodMesh] = []
    for level in reversed(levels[:-1]):
        target = level_target(level, n)
        reached = simplifier.collapse_until(target)
        lod_mesh, source, ancestor = simplifier.snapshot()
        clamped = not reached
        if clamped:
            logger.warning(
                f"{label}: level {level}% clamped at {lod_mesh.n_facets} facets (target {target})"
            )
        hd = compute_level_hd(lod_mesh, ancestor, mesh, hd_grid, locator)
        ph = compute_level_ph(lod_mesh.triangles, ancestor, mesh)
        coarse.append(
            LodMesh(level, lod_mesh, hd, ph, ancestor, source, target, clamped)
        )

    identity = np.arange(n, dtype=np.int64)
    finest = LodMesh(100, mesh, np.zeros(n), np.zeros(n), identity, identity.copy(), n)
    return LodLadder(list(reversed(coarse)) + [finest])
