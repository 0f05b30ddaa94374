"""
Data-parallel primitives on a CPU worker pool: pair-space flattening, scans,
min-reductions and three-phase stream compaction.

Work is split into contiguous partitions, one per worker. Every primitive
returns the same values as its sequential fold whatever the worker count.
"""

import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
from typing import Callable, List, Optional, Sequence, Tuple, TypeVar

import numpy as np

logger = logging.getLogger(__name__)

T = TypeVar("T")

# Partitions smaller than this are not worth a task.
MIN_PARTITION = 4096


class ScanOp(str, Enum):
    """Associative operators supported by the scans."""

    ADD = "add"
    MIN = "min"
    MAX = "max"

    @property
    def ufunc(self) -> np.ufunc:
        return {ScanOp.ADD: np.add, ScanOp.MIN: np.minimum, ScanOp.MAX: np.maximum}[self]

    def identity(self, dtype: np.dtype) -> object:
        if self is ScanOp.ADD:
            return dtype.type(0)
        if np.issubdtype(dtype, np.floating):
            return dtype.type(np.inf if self is ScanOp.MIN else -np.inf)
        info = np.iinfo(dtype)
        return dtype.type(info.max if self is ScanOp.MIN else info.min)


class ParallelContext:
    """
    Worker pool shared by all primitives.

    Args:
        workers: Number of worker threads; 1 runs everything inline
    """

    def __init__(self, workers: Optional[int] = None):
        self.workers = max(1, int(workers or os.cpu_count() or 1))
        self._pool = ThreadPoolExecutor(max_workers=self.workers) if self.workers > 1 else None

    def partitions(self, n: int, min_size: int = MIN_PARTITION) -> List[Tuple[int, int]]:
        """Split ``range(n)`` into at most ``workers`` contiguous partitions."""
        if n == 0:
            return []
        count = max(1, min(self.workers, math.ceil(n / min_size)))
        bounds = np.linspace(0, n, count + 1).astype(np.int64)
        return [(int(a), int(b)) for a, b in zip(bounds[:-1], bounds[1:])]

    def map(self, fn: Callable[..., T], items: Sequence) -> List[T]:
        """Apply ``fn`` to each item, returning results in item order."""
        if self._pool is None or len(items) <= 1:
            return [fn(item) for item in items]
        return list(self._pool.map(fn, items))

    def close(self) -> None:
        if self._pool is not None:
            self._pool.shutdown(wait=True)
            self._pool = None


# Singleton instance
_parallel_context = None


def get_parallel_context() -> ParallelContext:
    """Get the process-wide parallel context, creating it on first use."""
    global _parallel_context
    if _parallel_context is None:
        _parallel_context = ParallelContext()
    return _parallel_context


def configure_parallelism(workers: Optional[int]) -> ParallelContext:
    """Replace the process-wide context with one using ``workers`` threads."""
    global _parallel_context
    if _parallel_context is not None:
        _parallel_context.close()
    _parallel_context = ParallelContext(workers)
    logger.debug(f"Parallel context configured with {_parallel_context.workers} workers")
    return _parallel_context


@dataclass(frozen=True)
class PairSpace:
    """Row-major flattening of an ``n_a x n_b`` pair grid."""

    n_a: int
    n_b: int

    @property
    def total(self) -> int:
        return self.n_a * self.n_b

    def decode(self, t: int) -> Tuple[int, int]:
        if not 0 <= t < self.total:
            raise ValueError(f"pair index {t} outside [0, {self.total})")
        return decode_pair(t, self.n_b)

    def indices(self) -> Tuple[np.ndarray, np.ndarray]:
        """All pairs as two index arrays in flattened order."""
        return decode_pairs(np.arange(self.total, dtype=np.int64), self.n_b)


def decode_pair(t: int, n_b: int) -> Tuple[int, int]:
    """Map flat index ``t`` to ``(t // n_b, t % n_b)``."""
    if n_b <= 0 or t < 0:
        raise ValueError(f"cannot decode pair index {t} with n_b={n_b}")
    return divmod(int(t), int(n_b))


def decode_pairs(t: np.ndarray, n_b) -> Tuple[np.ndarray, np.ndarray]:
    """Vectorized :func:`decode_pair`; ``n_b`` may be a scalar or per-element."""
    return np.divmod(t, n_b)


def _scan_partition(op: ScanOp, values: np.ndarray, ctx: ParallelContext) -> np.ndarray:
    ufunc = op.ufunc
    # Float sums are not associative in floating point, keep them sequential.
    if op is ScanOp.ADD and np.issubdtype(values.dtype, np.floating):
        parts = [(0, values.size)]
    else:
        parts = ctx.partitions(values.size)
    locals_ = ctx.map(lambda ab: ufunc.accumulate(values[ab[0] : ab[1]]), parts)
    if len(locals_) == 1:
        return locals_[0]
    carries = [op.identity(values.dtype)]
    for block in locals_[:-1]:
        carries.append(ufunc(carries[-1], block[-1]))
    out = ctx.map(lambda pair: ufunc(pair[0], pair[1]), list(zip(locals_, carries)))
    return np.concatenate(out)


def inclusive_scan(
    values: np.ndarray, op: ScanOp = ScanOp.ADD, ctx: Optional[ParallelContext] = None
) -> np.ndarray:
    """
    Inclusive prefix fold: position ``p`` holds ``op`` over ``values[0..p]``.

    Args:
        values: 1-D array
        op: Associative operator
        ctx: Parallel context (the process-wide one by default)

    Returns:
        Array of the same length and dtype
    """
    values = np.asarray(values)
    if values.size == 0:
        return values.copy()
    return _scan_partition(ScanOp(op), values, ctx or get_parallel_context()).astype(
        values.dtype, copy=False
    )


def exclusive_scan(
    values: np.ndarray, op: ScanOp = ScanOp.ADD, ctx: Optional[ParallelContext] = None
) -> np.ndarray:
    """
    Exclusive prefix fold with the identity at position 0.

    Integer sums subtract each input from the inclusive result; everything
    else shifts the inclusive result by one.
    """
    values = np.asarray(values)
    op = ScanOp(op)
    inclusive = inclusive_scan(values, op, ctx)
    if values.size == 0:
        return inclusive
    if op is ScanOp.ADD and np.issubdtype(values.dtype, np.integer):
        return inclusive - values
    out = np.empty_like(inclusive)
    out[0] = op.identity(values.dtype)
    out[1:] = inclusive[:-1]
    return out


def block_reduce_min(values: np.ndarray, ctx: Optional[ParallelContext] = None):
    """
    Exact minimum of a non-empty array.

    Raises:
        ValueError: If ``values`` is empty
    """
    values = np.asarray(values)
    if values.size == 0:
        raise ValueError("block_reduce_min of an empty array")
    ctx = ctx or get_parallel_context()
    partials = ctx.map(lambda ab: values[ab[0] : ab[1]].min(), ctx.partitions(values.size))
    return min(partials)


def segment_reduce_min(values: np.ndarray, offsets: np.ndarray) -> np.ndarray:
    """
    Minimum of each segment ``values[offsets[i]:offsets[i + 1]]``.

    Empty segments yield ``+inf``.
    """
    offsets = np.asarray(offsets, dtype=np.int64)
    lens = np.diff(offsets)
    out = np.full(lens.size, np.inf)
    nonempty = np.flatnonzero(lens > 0)
    if nonempty.size:
        out[nonempty] = np.minimum.reduceat(values[: offsets[-1]], offsets[:-1][nonempty])
    return out


def compact(
    items: np.ndarray, keep: np.ndarray, ctx: Optional[ParallelContext] = None
) -> np.ndarray:
    """
    Stable stream compaction of ``items`` by boolean mask ``keep``.

    Runs as three phases: per-partition survivor counts, an exclusive scan of
    the counts into write offsets, and a parallel scatter.
    """
    items = np.asarray(items)
    keep = np.asarray(keep, dtype=bool)
    if items.shape[0] != keep.shape[0]:
        raise ValueError("compact: items and mask lengths differ")
    ctx = ctx or get_parallel_context()
    parts = ctx.partitions(keep.size)
    if not parts:
        return items[:0].copy()

    counts = np.array(ctx.map(lambda ab: int(np.count_nonzero(keep[ab[0] : ab[1]])), parts))
    offsets = exclusive_scan(counts, ScanOp.ADD, ctx)
    total = int(offsets[-1] + counts[-1])
    out = np.empty((total,) + items.shape[1:], dtype=items.dtype)

    def scatter(p: int) -> None:
        a, b = parts[p]
        start = int(offsets[p])
        out[start : start + int(counts[p])] = items[a:b][keep[a:b]]

    ctx.map(scatter, list(range(len(parts))))
    return out


def compact_indices(keep: np.ndarray, ctx: Optional[ParallelContext] = None) -> np.ndarray:
    """Indices of true entries in ``keep``, by :func:`compact`."""
    keep = np.asarray(keep, dtype=bool)
    return compact(np.arange(keep.size, dtype=np.int64), keep, ctx)
