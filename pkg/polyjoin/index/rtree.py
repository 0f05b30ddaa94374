"""
Sort-tile-recursive bulk-loaded R-tree over object bounding boxes.
"""

import heapq
import itertools
import logging
import math
from dataclasses import dataclass, field
from typing import Iterator, List, Optional, Tuple

import numpy as np

from ..geometry import mindist_boxes

logger = logging.getLogger(__name__)

DEFAULT_FANOUT = 16


@dataclass(eq=False)
class RTreeNode:
    """
    A tree node. Leaves hold entry ids; inner nodes hold child nodes.

    ``child_lo``/``child_hi`` stack the boxes of whatever the node holds so
    MINDIST against all of them is one vectorized call.
    """

    lo: np.ndarray
    hi: np.ndarray
    child_lo: np.ndarray
    child_hi: np.ndarray
    children: List["RTreeNode"] = field(default_factory=list)
    entries: Optional[np.ndarray] = None

    @property
    def is_leaf(self) -> bool:
        return self.entries is not None

    def __len__(self) -> int:
        return len(self.entries) if self.is_leaf else len(self.children)


def str_partition(centers: np.ndarray, fanout: int) -> List[np.ndarray]:
    """
    Group item indices into runs of at most ``fanout`` by STR tiling.

    Items are sliced along x, then y within a slab, then z within a run.
    Sorts are stable with the item index as the final key.
    """
    n = centers.shape[0]
    n_groups = math.ceil(n / fanout)
    slices = max(1, math.ceil(n_groups ** (1.0 / 3.0)))
    idx = np.arange(n)

    def ordered(members: np.ndarray, axis: int) -> np.ndarray:
        return members[np.lexsort((members, centers[members, axis]))]

    groups: List[np.ndarray] = []
    slab_size = fanout * slices * slices
    by_x = ordered(idx, 0)
    for s in range(0, n, slab_size):
        slab = ordered(by_x[s : s + slab_size], 1)
        run_size = fanout * slices
        for r in range(0, slab.size, run_size):
            run = ordered(slab[r : r + run_size], 2)
            for g in range(0, run.size, fanout):
                groups.append(run[g : g + fanout])
    return groups


class RTree:
    """
    Immutable R-tree over ``n`` boxes, safe for concurrent readers.

    Attributes:
        root: Root node (a leaf when ``n <= fanout``)
        height: Number of node levels, leaves included
        entry_lo, entry_hi: ``(n, 3)`` boxes of the indexed entries
    """

    def __init__(self, lo: np.ndarray, hi: np.ndarray, fanout: int = DEFAULT_FANOUT):
        if fanout < 2:
            raise ValueError(f"fanout must be at least 2, got {fanout}")
        self.entry_lo = np.asarray(lo, dtype=np.float64)
        self.entry_hi = np.asarray(hi, dtype=np.float64)
        if self.entry_lo.shape[0] == 0:
            raise ValueError("Cannot build an R-tree over zero entries")
        self.fanout = fanout

        level_nodes = [
            RTreeNode(
                self.entry_lo[g].min(axis=0),
                self.entry_hi[g].max(axis=0),
                self.entry_lo[g],
                self.entry_hi[g],
                entries=g,
            )
            for g in str_partition((self.entry_lo + self.entry_hi) * 0.5, fanout)
        ]
        self.height = 1
        while len(level_nodes) > 1:
            nlo = np.array([node.lo for node in level_nodes])
            nhi = np.array([node.hi for node in level_nodes])
            parents = []
            for g in str_partition((nlo + nhi) * 0.5, fanout):
                parents.append(
                    RTreeNode(
                        nlo[g].min(axis=0),
                        nhi[g].max(axis=0),
                        nlo[g],
                        nhi[g],
                        children=[level_nodes[i] for i in g],
                    )
                )
            level_nodes = parents
            self.height += 1
        self.root = level_nodes[0]
        logger.debug(f"Built R-tree over {len(self)} entries, height {self.height}")

    def __len__(self) -> int:
        return int(self.entry_lo.shape[0])

    def nodes(self) -> Iterator[RTreeNode]:
        stack = [self.root]
        while stack:
            node = stack.pop()
            yield node
            stack.extend(reversed(node.children))

    def leaf_entries(self) -> List[np.ndarray]:
        return [node.entries for node in self.nodes() if node.is_leaf]

    def search_within(
        self, lo: np.ndarray, hi: np.ndarray, tau: float
    ) -> Tuple[List[int], int]:
        """
        Depth-first search for entries whose box is within ``tau`` of a query box.

        Returns:
            (entry ids in traversal order, number of nodes visited)
        """
        found: List[int] = []
        visited = 0
        stack = [self.root]
        while stack:
            node = stack.pop()
            visited += 1
            close = mindist_boxes(lo, hi, node.child_lo, node.child_hi) <= tau
            if node.is_leaf:
                found.extend(int(e) for e in node.entries[close])
            else:
                stack.extend(node.children[i] for i in reversed(np.flatnonzero(close)))
        return found, visited

    def nearest(self, lo: np.ndarray, hi: np.ndarray) -> Iterator[Tuple[float, int]]:
        """
        Best-first traversal yielding ``(mindist, entry id)`` in ascending order.

        Ties in MINDIST come out in insertion order, which is deterministic.
        The consumer stops iterating once the keys exceed its threshold.
        """
        counter = itertools.count()
        heap: List[tuple] = [(0.0, next(counter), self.root, -1)]
        while heap:
            key, _, node, entry = heapq.heappop(heap)
            if node is None:
                yield key, entry
                continue
            gaps = mindist_boxes(lo, hi, node.child_lo, node.child_hi)
            if node.is_leaf:
                for gap, e in zip(gaps, node.entries):
                    heapq.heappush(heap, (float(gap), next(counter), None, int(e)))
            else:
                for gap, child in zip(gaps, node.children):
                    heapq.heappush(heap, (float(gap), next(counter), child, -1))


def build_rtree(lo: np.ndarray, hi: np.ndarray, fanout: int = DEFAULT_FANOUT) -> RTree:
    """Bulk load an R-tree over boxes ``lo``/``hi`` of shape ``(n, 3)``."""
    return RTree(lo, hi, fanout)
