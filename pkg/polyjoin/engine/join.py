"""
End-to-end join: MBB filtering, chunked voxel filtering and progressive
refinement, with k-NN resolution for nearest-neighbor queries.
"""

import logging
from dataclasses import dataclass
from typing import Dict, List, Optional

import numpy as np

from ..config import JoinSpec, QueryType
from ..errors import BoundsViolationError, ParameterError
from ..index import PreparedDataset
from ..logging import get_event_logger
from .candidates import MBB_STAGE, VOXEL_STAGE, CandidateSet, JoinResultRecord, prune_within
from .filter import VoxelPairList, chunked_filter, mbb_filter_knn, mbb_filter_within
from .knn import KnnState, knn_resolve, resolve_to_fixpoint
from .parcore import ParallelContext, get_parallel_context
from .refine import PruneHook, refine_loop
from .stats import StageStats

logger = logging.getLogger(__name__)


@dataclass
class JoinOutcome:
    """Records in output order plus run statistics."""

    records: List[JoinResultRecord]
    stats: StageStats
    candidates: CandidateSet


def check_compatible(R: PreparedDataset, S: PreparedDataset) -> None:
    """
    Raises:
        ParameterError: If the datasets were built with different schedules
    """
    if R.schedule != S.schedule:
        raise ParameterError(f"Indices use different LoD schedules: {R.schedule} vs {S.schedule}")


class SpatialJoin:
    """
    Filter-and-refine join between two prepared datasets.

    Args:
        R: Query dataset
        S: Target dataset (indexed by its R-tree)
        spec: Validated join request
        ctx: Parallel context (the process-wide one by default)
    """

    def __init__(
        self,
        R: PreparedDataset,
        S: PreparedDataset,
        spec: JoinSpec,
        ctx: Optional[ParallelContext] = None,
    ):
        check_compatible(R, S)
        if list(spec.refine.lods) != R.schedule:
            if "lods" in spec.refine.model_fields_set:
                raise ParameterError(
                    f"Requested LoDs {spec.refine.lods} differ from the index schedule {R.schedule}"
                )
            refine = spec.refine.model_copy(update={"lods": R.schedule})
            spec = spec.model_copy(update={"refine": refine})
        self.R = R
        self.S = S
        self.spec = spec
        self.ctx = ctx or get_parallel_context()
        self.stats = StageStats()
        self.events = get_event_logger()

    def _refine(self, cands: CandidateSet, vpairs: VoxelPairList, prune: PruneHook) -> None:
        refine_loop(cands, vpairs, self.R, self.S, self.spec.refine, prune, self.ctx, self.stats)

    def _run_threshold(self) -> JoinOutcome:
        tau = float(self.spec.threshold)
        _, cands = mbb_filter_within(self.R, self.S, tau, self.spec.self_join, self.ctx, self.stats)
        cands.track_confirmed = self.spec.exact
        vpairs = chunked_filter(
            cands, self.R, self.S, self.spec.filter_chunk, self.spec.pipeline, tau, self.ctx, self.stats
        )
        self._refine(cands, vpairs, lambda idx, stage: prune_within(cands, idx, tau, stage))
        records = cands.records()
        return JoinOutcome(records, self.stats, cands)

    def _run_knn(self) -> JoinOutcome:
        k = int(self.spec.k)
        cands = mbb_filter_knn(self.R, self.S, k, self.spec.self_join, self.ctx, self.stats)
        cands.track_confirmed = self.spec.exact
        state = KnnState.for_candidates(k, cands)
        decided = resolve_to_fixpoint(state, cands, MBB_STAGE, self.ctx)
        self._shift_mbb_counts(decided)
        vpairs = chunked_filter(
            cands, self.R, self.S, self.spec.filter_chunk, self.spec.pipeline, None, self.ctx, self.stats
        )
        voxel = self.stats.stage(VOXEL_STAGE)
        decided = resolve_to_fixpoint(state, cands, VOXEL_STAGE, self.ctx)
        voxel.confirmed += decided["confirmed"]
        voxel.removed += decided["removed"]
        voxel.pairs_out = voxel.pairs_in - voxel.confirmed - voxel.removed
        records = knn_resolve(state, cands, lambda prune: self._refine(cands, vpairs, prune), self.ctx)
        return JoinOutcome(records, self.stats, cands)

    def _shift_mbb_counts(self, decided: Dict[str, int]) -> None:
        record = self.stats.stage(MBB_STAGE)
        record.confirmed += decided["confirmed"]
        record.removed += decided["removed"]
        record.pairs_out -= decided["confirmed"] + decided["removed"]

    def run(self) -> JoinOutcome:
        """
        Execute the join.

        Raises:
            BoundsViolationError: If refinement detects crossing bounds
        """
        self.events.log_configuration(
            "Join started",
            {
                "query": self.spec.query_type.value,
                "tau": self.spec.tau,
                "k": self.spec.k,
                "r_objects": len(self.R),
                "s_objects": len(self.S),
                "workers": self.ctx.workers,
                "pipeline": self.spec.pipeline,
            },
        )
        try:
            if self.spec.query_type is QueryType.KNN:
                outcome = self._run_knn()
            else:
                outcome = self._run_threshold()
        except BoundsViolationError as e:
            self.events.log_soundness_violation(str(e), {"pair": list(e.pair), "lb": e.lb, "ub": e.ub})
            raise
        self.stats.count_results(outcome.records)
        self.events.log_event(
            "result",
            f"{len(outcome.records)} results",
            {
                "results": len(outcome.records),
                "filtering_effectiveness": self.stats.filtering_effectiveness,
                "seconds": self.stats.total_seconds,
            },
        )
        return outcome


def run_join(
    R: PreparedDataset, S: PreparedDataset, spec: JoinSpec, ctx: Optional[ParallelContext] = None
) -> JoinOutcome:
    """Convenience wrapper around :class:`SpatialJoin`."""
    return SpatialJoin(R, S, spec, ctx).run()


def result_pairs(records: List[JoinResultRecord]) -> np.ndarray:
    """``(n, 2)`` array of (r, s) ids."""
    return np.array([(rec.r, rec.s) for rec in records], dtype=np.int64).reshape(-1, 2)
