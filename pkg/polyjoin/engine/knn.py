"""
Progressive k-NN resolution.

After every bounds update each query object's undecided candidates are
classified against a snapshot of the intervals: a candidate is confirmed
when fewer than ``kLeft`` competitors could be at least as close, and removed
when ``kLeft`` competitors are certainly closer. Inequalities are strict, so
ties survive until exact distances separate them by object id.
"""

import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np

from ..logging import get_event_logger
from .candidates import EXACT_STAGE, CandidateSet, JoinResultRecord, PairStatus
from .parcore import ParallelContext, get_parallel_context

logger = logging.getLogger(__name__)


@dataclass
class KnnState:
    """
    Per-query bookkeeping.

    Attributes:
        k: Neighbors requested per query object
        num_confirmed: Confirmed candidates per query object
        rounds: Pruning rounds run so far
    """

    k: int
    num_confirmed: np.ndarray
    rounds: int = 0
    history: List[Dict[str, object]] = field(default_factory=list)

    @classmethod
    def for_candidates(cls, k: int, cands: CandidateSet) -> "KnnState":
        return cls(k, cands.num_confirmed())

    def k_left(self, r: int) -> int:
        left = self.k - int(self.num_confirmed[r])
        if left < 0:
            raise RuntimeError(f"query {r} has {self.num_confirmed[r]} confirmed for k={self.k}")
        return left


def classify(lb: np.ndarray, ub: np.ndarray, k_left: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    Confirm/remove masks for one query's undecided candidates.

    ``farther(m)`` counts competitors with ``lb > ub(m)`` and ``closer(m)``
    those with ``ub < lb(m)``; a candidate never counts against itself since
    its own ``lb <= ub``.
    """
    n = lb.size
    sorted_lb = np.sort(lb)
    sorted_ub = np.sort(ub)
    farther = n - np.searchsorted(sorted_lb, ub, side="right")
    closer = np.searchsorted(sorted_ub, lb, side="left")
    confirm = (n - 1) - farther < k_left
    remove = ~confirm & (closer >= k_left)
    return confirm, remove


def knn_prune_round(
    state: KnnState, cands: CandidateSet, ctx: Optional[ParallelContext] = None
) -> Tuple[np.ndarray, np.ndarray]:
    """
    One pruning round over every query object, against a status snapshot.

    Returns:
        (candidate indices to confirm, candidate indices to remove)
    """
    ctx = ctx or get_parallel_context()
    snapshot = cands.status.copy()
    lb, ub = cands.lb.copy(), cands.ub.copy()

    def per_query(r: int) -> Tuple[np.ndarray, np.ndarray]:
        span = cands.pairs_of(r)
        undecided = span.start + np.flatnonzero(snapshot[span] == PairStatus.UNDECIDED)
        if undecided.size == 0:
            return undecided, undecided
        confirm, remove = classify(lb[undecided], ub[undecided], state.k_left(r))
        return undecided[confirm], undecided[remove]

    deltas = ctx.map(per_query, list(range(cands.n_r)))
    empty = np.zeros(0, dtype=np.int64)
    confirm = np.concatenate([d[0] for d in deltas]) if deltas else empty
    remove = np.concatenate([d[1] for d in deltas]) if deltas else empty
    return confirm.astype(np.int64), remove.astype(np.int64)


def resolve_to_fixpoint(
    state: KnnState,
    cands: CandidateSet,
    stage: str,
    ctx: Optional[ParallelContext] = None,
) -> Dict[str, int]:
    """
    Repeat pruning rounds until no status changes.

    Returns:
        Counts of pairs confirmed and removed at ``stage``
    """
    totals = {"confirmed": 0, "removed": 0}
    while True:
        confirm, remove = knn_prune_round(state, cands, ctx)
        state.rounds += 1
        if confirm.size == 0 and remove.size == 0:
            break
        cands.decide(confirm, PairStatus.CONFIRMED, stage)
        cands.decide(remove, PairStatus.REMOVED, stage)
        state.num_confirmed = cands.num_confirmed()
        totals["confirmed"] += int(confirm.size)
        totals["removed"] += int(remove.size)
    state.history.append({"stage": stage, **totals})
    return totals


def finalize_exact(state: KnnState, cands: CandidateSet) -> Dict[str, int]:
    """
    Fill the remaining slots of each query from exact distances.

    Undecided candidates are ranked by (distance, object id); the first
    ``kLeft`` are confirmed and the rest removed.
    """
    totals = {"confirmed": 0, "removed": 0}
    for r in range(cands.n_r):
        span = cands.pairs_of(r)
        undecided = span.start + np.flatnonzero(cands.status[span] == PairStatus.UNDECIDED)
        if undecided.size == 0:
            continue
        order = undecided[np.lexsort((cands.s[undecided], cands.ub[undecided]))]
        left = state.k_left(r)
        cands.decide(order[:left], PairStatus.CONFIRMED, EXACT_STAGE)
        cands.decide(order[left:], PairStatus.REMOVED, EXACT_STAGE)
        totals["confirmed"] += min(left, order.size)
        totals["removed"] += max(0, order.size - left)
    state.num_confirmed = cands.num_confirmed()
    return totals


def ranked_records(cands: CandidateSet) -> List[JoinResultRecord]:
    """Confirmed pairs per query ranked by (ub, object id), ordered by (r, rank)."""
    records: List[JoinResultRecord] = []
    for r in range(cands.n_r):
        span = cands.pairs_of(r)
        confirmed = span.start + np.flatnonzero(cands.status[span] == PairStatus.CONFIRMED)
        order = confirmed[np.lexsort((cands.s[confirmed], cands.ub[confirmed]))]
        for rank, i in enumerate(order.tolist(), start=1):
            records.append(
                JoinResultRecord(
                    r, int(cands.s[i]), float(cands.lb[i]), float(cands.ub[i]), cands.decided_at[i], rank
                )
            )
    return records


def knn_resolve(
    state: KnnState,
    cands: CandidateSet,
    refine: Callable[[Callable[[np.ndarray, str], Dict[str, int]]], object],
    ctx: Optional[ParallelContext] = None,
) -> List[JoinResultRecord]:
    """
    Drive refinement with a fixpoint prune after every level, then settle
    the remaining slots by exact distance.

    Args:
        state: Query bookkeeping
        cands: Candidates after filtering
        refine: Runs the refinement levels, calling its argument after each
        ctx: Parallel context

    Returns:
        Ranked records, exactly ``min(k, candidates)`` per query object
    """
    refine(lambda idx, stage: resolve_to_fixpoint(state, cands, stage, ctx))
    leftovers = finalize_exact(state, cands)
    if leftovers["confirmed"] or leftovers["removed"]:
        logger.debug(f"Exact tie-break settled {leftovers}")
    records = ranked_records(cands)
    get_event_logger().log_event(
        "knn", "k-NN resolved", {"k": state.k, "rounds": state.rounds, "results": len(records)}
    )
    return records
