"""
Facet-level refinement over the LoD schedule.

For every level, surviving voxel pairs of live candidates are gathered into
batches of deduplicated facet segments, bounded facet pair by facet pair, and
aggregated into object-pair intervals once the whole level has run.
"""

import logging
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np

from ..config import RefineConfig
from ..geometry import tri_tri_distance_batch
from ..index import PreparedDataset
from ..logging import get_event_logger
from .candidates import CandidateSet, PairStatus, lod_stage
from .filter import VoxelPairList
from .parcore import ParallelContext, decode_pairs, exclusive_scan, get_parallel_context
from .stats import StageStats
from .streaming import Prefetcher

logger = logging.getLogger(__name__)

PruneHook = Callable[[np.ndarray, str], Dict[str, int]]


@dataclass
class FacetSegments:
    """
    Facets of unique voxels at one level, packed contiguously.

    Voxel ``u`` owns ``triangles[offsets[u]:offsets[u + 1]]``.
    """

    triangles: np.ndarray
    hd: np.ndarray
    ph: np.ndarray
    offsets: np.ndarray


@dataclass
class VoxelPairBatch:
    """
    Refinement work for one chunk of voxel pairs at one level.

    Attributes:
        level: LoD percentage
        r_side, s_side: Deduplicated facet segments of each dataset
        r_seg, s_seg: Segment index of each voxel pair on either side
        pair: Candidate index each voxel pair belongs to
    """

    level: int
    r_side: FacetSegments
    s_side: FacetSegments
    r_seg: np.ndarray
    s_seg: np.ndarray
    pair: np.ndarray

    def __len__(self) -> int:
        return int(self.pair.size)

    def descriptors(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """(r_offset, r_len, s_offset, s_len) per voxel pair."""
        r_off = self.r_side.offsets[self.r_seg]
        s_off = self.s_side.offsets[self.s_seg]
        r_len = self.r_side.offsets[self.r_seg + 1] - r_off
        s_len = self.s_side.offsets[self.s_seg + 1] - s_off
        return r_off, r_len, s_off, s_len


def _gather_side(
    dataset: PreparedDataset, objects: np.ndarray, voxels: np.ndarray, level: int
) -> Tuple[FacetSegments, np.ndarray]:
    flat = dataset.o2v[objects] + voxels
    unique, inverse = np.unique(flat, return_inverse=True)
    tris: List[np.ndarray] = []
    hds: List[np.ndarray] = []
    phs: List[np.ndarray] = []
    lengths = np.zeros(unique.size, dtype=np.int64)
    for u, g in enumerate(unique.tolist()):
        owner = int(dataset.voxel_owner[g])
        obj = dataset.objects[owner]
        lod = obj.ladder.at(level)
        facets = obj.voxels.members(level, g - int(dataset.o2v[owner]))
        tris.append(lod.mesh.triangles[facets])
        hds.append(lod.hd[facets])
        phs.append(lod.ph[facets])
        lengths[u] = facets.size
    offsets = np.concatenate([[0], np.cumsum(lengths)]).astype(np.int64)
    segments = FacetSegments(
        np.concatenate(tris) if tris else np.zeros((0, 3, 3)),
        np.concatenate(hds) if hds else np.zeros(0),
        np.concatenate(phs) if phs else np.zeros(0),
        offsets,
    )
    return segments, inverse.reshape(-1).astype(np.int64)


def gather_facet_data(
    vpairs: VoxelPairList,
    level: int,
    cands: CandidateSet,
    R: PreparedDataset,
    S: PreparedDataset,
) -> VoxelPairBatch:
    """
    Collect level-``level`` facets of the voxels referenced by ``vpairs``.

    Every distinct voxel is stored once per side; voxel pairs reference their
    segments through descriptors.
    """
    r_side, r_seg = _gather_side(R, cands.r[vpairs.pair], vpairs.vr, level)
    s_side, s_seg = _gather_side(S, cands.s[vpairs.pair], vpairs.vs, level)
    return VoxelPairBatch(level, r_side, s_side, r_seg, s_seg, vpairs.pair.copy())


def stage_in(batch: VoxelPairBatch) -> VoxelPairBatch:
    """Copy a prepared batch into fresh compute buffers."""

    def copy_side(side: FacetSegments) -> FacetSegments:
        return FacetSegments(
            np.array(side.triangles, copy=True),
            np.array(side.hd, copy=True),
            np.array(side.ph, copy=True),
            side.offsets,
        )

    return VoxelPairBatch(
        batch.level, copy_side(batch.r_side), copy_side(batch.s_side), batch.r_seg, batch.s_seg, batch.pair
    )


def refine_kernel(
    batch: VoxelPairBatch,
    facet_budget: int = 1_048_576,
    ctx: Optional[ParallelContext] = None,
) -> Tuple[np.ndarray, np.ndarray, int]:
    """
    Facet-level bounds of every voxel pair in ``batch``.

    For facet pair distance ``d`` the lower bound is
    ``max(0, d - ph_r - ph_s)`` and the upper bound ``d + hd_r + hd_s``; the
    voxel-pair bounds are the minima over its facet pairs. Facet pairs are
    evaluated in windows of at most ``facet_budget``.

    Returns:
        (vp_lb, vp_ub, facet pairs evaluated); empty voxel pairs get ``+inf``
    """
    ctx = ctx or get_parallel_context()
    r_off, r_len, s_off, s_len = batch.descriptors()
    counts = r_len * s_len
    starts = exclusive_scan(counts)
    total = int(starts[-1] + counts[-1]) if counts.size else 0
    vp_lb = np.full(counts.size, np.inf)
    vp_ub = np.full(counts.size, np.inf)
    if total == 0:
        return vp_lb, vp_ub, 0

    rs, ss = batch.r_side, batch.s_side

    def window(bounds: Tuple[int, int]) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        lo, hi = bounds
        t = np.arange(lo, hi, dtype=np.int64)
        vp = np.searchsorted(starts, t, side="right") - 1
        i, j = decode_pairs(t - starts[vp], s_len[vp])
        fr = r_off[vp] + i
        fs = s_off[vp] + j
        d = tri_tri_distance_batch(rs.triangles[fr], ss.triangles[fs])
        lb = np.maximum(d - rs.ph[fr] - ss.ph[fs], 0.0)
        ub = d + rs.hd[fr] + ss.hd[fs]
        heads = np.flatnonzero(np.r_[True, vp[1:] != vp[:-1]])
        return vp[heads], np.minimum.reduceat(lb, heads), np.minimum.reduceat(ub, heads)

    windows = [(a, min(a + facet_budget, total)) for a in range(0, total, facet_budget)]
    for vps, lbs, ubs in ctx.map(window, windows):
        vp_lb[vps] = np.minimum(vp_lb[vps], lbs)
        vp_ub[vps] = np.minimum(vp_ub[vps], ubs)
    return vp_lb, vp_ub, total


def aggregate_object_bounds(
    vp_lb: np.ndarray,
    vp_ub: np.ndarray,
    pair: np.ndarray,
    cands: CandidateSet,
    stage: str,
) -> np.ndarray:
    """
    Fold voxel-pair bounds into object-pair intervals.

    The candidate interval of a pair is (min vp_lb, min vp_ub) over its voxel
    pairs, intersected with the running interval.

    Returns:
        Candidate indices that were updated
    """
    touched = np.unique(pair)
    if touched.size == 0:
        return touched
    order = np.argsort(pair, kind="stable")
    heads = np.searchsorted(pair[order], touched)
    lb = np.minimum.reduceat(vp_lb[order], heads)
    ub = np.minimum.reduceat(vp_ub[order], heads)
    cands.tighten(touched, lb, ub, stage)
    return touched


def refine_loop(
    cands: CandidateSet,
    vpairs: VoxelPairList,
    R: PreparedDataset,
    S: PreparedDataset,
    config: RefineConfig,
    prune: PruneHook,
    ctx: Optional[ParallelContext] = None,
    stats: Optional[StageStats] = None,
) -> VoxelPairList:
    """
    Refine live candidates level by level until none remain.

    Args:
        cands: Candidate set, updated in place
        vpairs: Surviving voxel pairs from filtering
        R, S: Prepared datasets
        config: Schedule, chunk sizes and pipeline switch
        prune: Called with updated pair indices and the stage tag after each
            level; returns decision counts
        ctx: Parallel context
        stats: Stage counters to update

    Returns:
        Voxel pairs still live after the last level
    """
    ctx = ctx or get_parallel_context()
    stats = stats or StageStats()
    events = get_event_logger()
    if list(config.lods) != R.schedule or list(config.lods) != S.schedule:
        raise ValueError(
            f"Refinement schedule {list(config.lods)} does not match the indices "
            f"({R.schedule}, {S.schedule})"
        )

    for level in config.lods:
        stage = lod_stage(level)
        vpairs = vpairs.take(np.flatnonzero(cands.live_mask()[vpairs.pair]))
        with stats.timed(stage) as record:
            live = cands.active()
            record.pairs_in = int(np.count_nonzero(cands.status[live] == PairStatus.UNDECIDED))
            if len(vpairs) == 0:
                record.pairs_out = record.pairs_in
                logger.debug(f"{stage}: nothing left to refine")
                continue

            level_lb: List[np.ndarray] = []
            level_ub: List[np.ndarray] = []
            chunk = config.refine_chunk
            slices = [
                vpairs.take(np.arange(a, min(a + chunk, len(vpairs))))
                for a in range(0, len(vpairs), chunk)
            ]
            producers = [
                (lambda part=part: gather_facet_data(part, level, cands, R, S)) for part in slices
            ]
            for batch in Prefetcher(producers, depth=2, enabled=config.pipeline):
                staged = stage_in(batch)
                vp_lb, vp_ub, evaluated = refine_kernel(staged, config.kernel_facet_pairs, ctx)
                level_lb.append(vp_lb)
                level_ub.append(vp_ub)
                record.facet_pairs += evaluated
                record.chunks += 1

            touched = aggregate_object_bounds(
                np.concatenate(level_lb), np.concatenate(level_ub), vpairs.pair, cands, stage
            )
            decided = prune(touched, stage)
            record.confirmed += decided.get("confirmed", 0)
            record.removed += decided.get("removed", 0)
            record.pairs_out = record.pairs_in - record.confirmed - record.removed
        events.log_stage(
            stage,
            "refine",
            {
                "voxel_pairs": len(vpairs),
                "facet_pairs": record.facet_pairs,
                "confirmed": record.confirmed,
                "removed": record.removed,
            },
        )
    return vpairs.take(np.flatnonzero(cands.live_mask()[vpairs.pair]))
