"""
Filtering stage: MBB filtering over the R-tree of S, voxel-pair bounding,
object-pair pruning and voxel-pair compaction under chunked streaming.
"""

import heapq
import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from ..errors import ParameterError
from ..geometry import mindist_boxes
from ..index import PreparedDataset
from ..logging import get_event_logger
from .candidates import (
    MBB_STAGE,
    VOXEL_STAGE,
    CandidateSet,
    JoinResultRecord,
    PairStatus,
    prune_within,
)
from .parcore import (
    ParallelContext,
    compact_indices,
    decode_pairs,
    exclusive_scan,
    get_parallel_context,
    segment_reduce_min,
)
from .stats import StageStats
from .streaming import TwoSlotPipeline

logger = logging.getLogger(__name__)


@dataclass
class VoxelPairList:
    """
    Surviving voxel pairs, ordered by candidate pair.

    Attributes:
        pair: Candidate index of each voxel pair
        vr: Voxel id within the R object
        vs: Voxel id within the S object
    """

    pair: np.ndarray
    vr: np.ndarray
    vs: np.ndarray

    def __len__(self) -> int:
        return int(self.pair.size)

    @classmethod
    def empty(cls) -> "VoxelPairList":
        z = np.zeros(0, dtype=np.int64)
        return cls(z, z.copy(), z.copy())

    @classmethod
    def concat(cls, parts: Sequence["VoxelPairList"]) -> "VoxelPairList":
        if not parts:
            return cls.empty()
        return cls(
            np.concatenate([p.pair for p in parts]),
            np.concatenate([p.vr for p in parts]),
            np.concatenate([p.vs for p in parts]),
        )

    def take(self, idx: np.ndarray) -> "VoxelPairList":
        return VoxelPairList(self.pair[idx], self.vr[idx], self.vs[idx])

    def equals(self, other: "VoxelPairList") -> bool:
        return (
            np.array_equal(self.pair, other.pair)
            and np.array_equal(self.vr, other.vr)
            and np.array_equal(self.vs, other.vs)
        )


@dataclass
class VoxelBounds:
    """
    Voxel-pair bounds of one chunk.

    Voxel pairs of ``pairs[i]`` occupy ``offsets[i]:offsets[i + 1]`` in the
    flat arrays, in row-major order over (voxel of r, voxel of s).
    """

    pairs: np.ndarray
    offsets: np.ndarray
    vr: np.ndarray
    vs: np.ndarray
    lb: np.ndarray
    ub: np.ndarray
    op_lb: np.ndarray
    op_ub: np.ndarray

    @property
    def pair_of(self) -> np.ndarray:
        """Chunk-local pair position of every voxel pair."""
        return np.repeat(np.arange(self.pairs.size), np.diff(self.offsets))


def anchor_upper_bounds(
    R: PreparedDataset, r: int, S: PreparedDataset, s_ids: np.ndarray
) -> np.ndarray:
    """
    Upper bounds ``|anchor_r - anchor_s|`` for one query object.

    Pairs where one MBB contains the other use the surface anchors of both
    objects, since an interior anchor of a nested object bounds nothing.
    """
    s_ids = np.asarray(s_ids, dtype=np.int64)
    r_lo, r_hi = R.mbb_lo[r], R.mbb_hi[r]
    s_lo, s_hi = S.mbb_lo[s_ids], S.mbb_hi[s_ids]
    r_holds_s = np.all((r_lo <= s_lo) & (s_hi <= r_hi), axis=1)
    s_holds_r = np.all((s_lo <= r_lo) & (r_hi <= s_hi), axis=1)
    nested = r_holds_s | s_holds_r
    a_r = np.where(nested[:, None], R.surface_anchors[r], R.anchors[r])
    a_s = np.where(nested[:, None], S.surface_anchors[s_ids], S.anchors[s_ids])
    return np.linalg.norm(a_r - a_s, axis=1)


def _pair_total(R: PreparedDataset, S: PreparedDataset, self_join: bool) -> int:
    return len(R) * len(S) - (min(len(R), len(S)) if self_join else 0)


def mbb_filter_within(
    R: PreparedDataset,
    S: PreparedDataset,
    tau: float,
    self_join: bool = False,
    ctx: Optional[ParallelContext] = None,
    stats: Optional[StageStats] = None,
) -> Tuple[List[JoinResultRecord], CandidateSet]:
    """
    MBB filtering for within-``tau`` joins.

    Each query object searches the R-tree of S with MINDIST pruning. Pairs
    with anchor distance ``<= tau`` are confirmed right away; the rest become
    undecided candidates.

    Args:
        R, S: Prepared datasets
        tau: Distance threshold (0 for intersection)
        self_join: Skip pairs of an object with itself
        ctx: Parallel context
        stats: Stage counters to update

    Returns:
        (confirmed records, candidate set holding confirmed and undecided pairs)

    Raises:
        ParameterError: If ``tau`` is negative
    """
    if tau < 0:
        raise ParameterError(f"tau must be non-negative, got {tau}")
    ctx = ctx or get_parallel_context()
    stats = stats or StageStats()
    tree = S.rtree

    def search(r: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        found, _ = tree.search_within(R.mbb_lo[r], R.mbb_hi[r], tau)
        ids = np.sort(np.asarray(found, dtype=np.int64))
        if self_join:
            ids = ids[ids != r]
        lb = mindist_boxes(R.mbb_lo[r], R.mbb_hi[r], S.mbb_lo[ids], S.mbb_hi[ids])
        return ids, lb, anchor_upper_bounds(R, r, S, ids)

    with stats.timed(MBB_STAGE) as record:
        per_r = ctx.map(search, list(range(len(R))))
        r_ids = np.concatenate([np.full(p[0].size, r, dtype=np.int64) for r, p in enumerate(per_r)])
        s_ids = np.concatenate([p[0] for p in per_r])
        lb = np.concatenate([p[1] for p in per_r])
        ub = np.concatenate([p[2] for p in per_r])
        keep = lb <= tau
        status = np.where(ub[keep] <= tau, PairStatus.CONFIRMED, PairStatus.UNDECIDED)
        tags = [MBB_STAGE if st == PairStatus.CONFIRMED else "" for st in status.tolist()]
        cands = CandidateSet(len(R), r_ids[keep], s_ids[keep], lb[keep], ub[keep], status, tags)

        record.pairs_in = _pair_total(R, S, self_join)
        record.confirmed = int(np.count_nonzero(cands.status == PairStatus.CONFIRMED))
        record.pairs_out = len(cands.undecided())
        record.removed = record.pairs_in - record.confirmed - record.pairs_out
    results = cands.records()
    get_event_logger().log_stage(
        MBB_STAGE,
        "filter",
        {"query": "within", "tau": tau, "confirmed": record.confirmed, "candidates": record.pairs_out},
    )
    return results, cands


def mbb_filter_knn(
    R: PreparedDataset,
    S: PreparedDataset,
    k: int,
    self_join: bool = False,
    ctx: Optional[ParallelContext] = None,
    stats: Optional[StageStats] = None,
) -> CandidateSet:
    """
    Best-first MBB filtering for k-NN joins.

    Objects come out of the R-tree in ascending MINDIST. The threshold
    ``theta`` is the k-th smallest anchor upper bound seen so far; the search
    stops once MINDIST exceeds it and candidates with ``lb > theta`` are
    discarded.

    Raises:
        ParameterError: If ``k`` is not positive
    """
    if k <= 0:
        raise ParameterError(f"k must be positive, got {k}")
    ctx = ctx or get_parallel_context()
    stats = stats or StageStats()
    tree = S.rtree

    def search(r: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        ids: List[int] = []
        lbs: List[float] = []
        ubs: List[float] = []
        best: List[float] = []
        theta = np.inf
        for key, s in tree.nearest(R.mbb_lo[r], R.mbb_hi[r]):
            if key > theta:
                break
            if self_join and s == r:
                continue
            ub = float(anchor_upper_bounds(R, r, S, np.array([s]))[0])
            ids.append(s)
            lbs.append(key)
            ubs.append(ub)
            heapq.heappush(best, -ub)
            if len(best) > k:
                heapq.heappop(best)
            if len(best) == k:
                theta = -best[0]
        ids_arr, lb_arr, ub_arr = np.array(ids, dtype=np.int64), np.array(lbs), np.array(ubs)
        keep = lb_arr <= theta
        return ids_arr[keep], lb_arr[keep], ub_arr[keep]

    with stats.timed(MBB_STAGE) as record:
        per_r = ctx.map(search, list(range(len(R))))
        r_ids = np.concatenate([np.full(p[0].size, r, dtype=np.int64) for r, p in enumerate(per_r)])
        cands = CandidateSet(
            len(R),
            r_ids,
            np.concatenate([p[0] for p in per_r]),
            np.concatenate([p[1] for p in per_r]),
            np.concatenate([p[2] for p in per_r]),
        )
        record.pairs_in = _pair_total(R, S, self_join)
        record.pairs_out = len(cands)
        record.removed = record.pairs_in - record.pairs_out
    get_event_logger().log_stage(MBB_STAGE, "filter", {"query": "knn", "k": k, "candidates": len(cands)})
    return cands


def voxel_pair_bounds(
    cands: CandidateSet, idx: np.ndarray, R: PreparedDataset, S: PreparedDataset
) -> VoxelBounds:
    """
    Bound every voxel pair of the object pairs ``idx``.

    A voxel pair's lower bound is the MINDIST of its boxes and its upper
    bound the distance between the voxel anchors; object-pair bounds are the
    minima over each pair's voxel pairs.
    """
    idx = np.asarray(idx, dtype=np.int64)
    r_obj, s_obj = cands.r[idx], cands.s[idx]
    n_r = R.voxel_counts[r_obj]
    n_s = S.voxel_counts[s_obj]
    counts = n_r * n_s
    starts = exclusive_scan(counts)
    offsets = np.append(starts, starts[-1] + counts[-1] if counts.size else 0).astype(np.int64)
    total = int(offsets[-1])

    pair_of = np.repeat(np.arange(idx.size), counts)
    local = np.arange(total, dtype=np.int64) - offsets[:-1][pair_of]
    vr, vs = decode_pairs(local, n_s[pair_of])
    gr = R.o2v[r_obj][pair_of] + vr
    gs = S.o2v[s_obj][pair_of] + vs
    lb = mindist_boxes(R.voxel_lo[gr], R.voxel_hi[gr], S.voxel_lo[gs], S.voxel_hi[gs])
    ub = np.linalg.norm(R.voxel_anchors[gr] - S.voxel_anchors[gs], axis=1)
    return VoxelBounds(
        idx,
        offsets,
        vr,
        vs,
        lb,
        ub,
        segment_reduce_min(lb, offsets),
        segment_reduce_min(ub, offsets),
    )


def voxel_pair_compact(
    bounds: VoxelBounds, cands: CandidateSet, ctx: Optional[ParallelContext] = None
) -> VoxelPairList:
    """
    Keep voxel pairs whose lower bound does not exceed their object pair's
    upper bound. Pairs that are no longer live are skipped entirely.
    """
    pair_of = bounds.pair_of
    live = cands.live_mask()[bounds.pairs]
    keep = live[pair_of] & (bounds.lb <= cands.ub[bounds.pairs][pair_of])
    survivors = compact_indices(keep, ctx)
    return VoxelPairList(bounds.pairs[pair_of[survivors]], bounds.vr[survivors], bounds.vs[survivors])


def pack_chunks(counts: np.ndarray, budget: int) -> Tuple[List[np.ndarray], int]:
    """
    Greedily group consecutive items while their count sum fits ``budget``.

    An item larger than the budget gets a chunk of its own.

    Returns:
        (chunks of item positions, number of oversized chunks)
    """
    chunks: List[np.ndarray] = []
    oversized = 0
    start, running = 0, 0
    for i, c in enumerate(np.asarray(counts).tolist()):
        if running and running + c > budget:
            chunks.append(np.arange(start, i))
            start, running = i, 0
        running += c
        if c > budget:
            oversized += 1
    if start < len(counts):
        chunks.append(np.arange(start, len(counts)))
    return chunks, oversized


def chunked_filter(
    cands: CandidateSet,
    R: PreparedDataset,
    S: PreparedDataset,
    budget: int,
    pipeline: bool = True,
    tau: Optional[float] = None,
    ctx: Optional[ParallelContext] = None,
    stats: Optional[StageStats] = None,
) -> VoxelPairList:
    """
    Voxel-level filtering of all live candidate pairs in bounded chunks.

    Each chunk is bounded, pruned against ``tau`` (threshold queries only) and
    compacted. With ``pipeline`` on, the drain of one chunk overlaps the
    compute of the next.

    Args:
        cands: Candidates after MBB filtering; updated in place
        R, S: Prepared datasets
        budget: Maximum voxel pairs per chunk
        pipeline: Enable the two-slot pipeline
        tau: Threshold, or None for k-NN
        ctx: Parallel context
        stats: Stage counters to update

    Returns:
        Surviving voxel pairs in candidate order

    Raises:
        ParameterError: If ``budget`` is not positive
    """
    if budget <= 0:
        raise ParameterError(f"filter chunk budget must be positive, got {budget}")
    stats = stats or StageStats()
    events = get_event_logger()
    active = cands.active()
    counts = R.voxel_counts[cands.r[active]] * S.voxel_counts[cands.s[active]]
    chunks, oversized = pack_chunks(counts, budget)
    if oversized:
        logger.info(f"{oversized} object pairs exceed the filter budget and run in their own chunk")

    parts: List[Optional[VoxelPairList]] = [None] * len(chunks)
    with stats.timed(VOXEL_STAGE) as record:
        record.pairs_in = int(np.count_nonzero(cands.status[active] == PairStatus.UNDECIDED))

        def compute(chunk: np.ndarray, slot: int) -> VoxelPairList:
            idx = active[chunk]
            bounds = voxel_pair_bounds(cands, idx, R, S)
            cands.tighten(idx, bounds.op_lb, bounds.op_ub, VOXEL_STAGE)
            if tau is not None:
                decided = prune_within(cands, idx, tau, VOXEL_STAGE)
                record.confirmed += decided["confirmed"]
                record.removed += decided["removed"]
            survivors = voxel_pair_compact(bounds, cands, ctx)
            record.voxel_pairs_generated += int(bounds.lb.size)
            record.voxel_pairs_pruned += int(bounds.lb.size) - len(survivors)
            return survivors

        def drain(index: int, survivors: VoxelPairList) -> None:
            parts[index] = survivors
            events.log_chunk(VOXEL_STAGE, index, {"voxel_pairs": len(survivors)})

        record.chunks += TwoSlotPipeline(compute, drain, enabled=pipeline).run(chunks)
        record.oversized_chunks += oversized
        record.pairs_out = record.pairs_in - record.confirmed - record.removed

    vpairs = VoxelPairList.concat([p for p in parts if p is not None])
    events.log_stage(
        VOXEL_STAGE,
        "filter",
        {
            "chunks": len(chunks),
            "voxel_pairs": record.voxel_pairs_generated,
            "surviving": len(vpairs),
            "confirmed": record.confirmed,
            "removed": record.removed,
        },
    )
    return vpairs
