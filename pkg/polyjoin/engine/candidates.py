"""
Candidate object pairs, their running distance intervals and statuses.
"""

import json
import logging
from dataclasses import asdict, dataclass
from enum import IntEnum
from typing import Any, Dict, List, Optional

import numpy as np

from ..errors import BoundsViolationError

logger = logging.getLogger(__name__)

# Crossings up to this size are rounding noise and get collapsed.
CROSSING_TOLERANCE = 1e-9

MBB_STAGE = "mbb"
VOXEL_STAGE = "voxel"
EXACT_STAGE = "exact"


def lod_stage(level: int) -> str:
    """Stage tag for refinement at ``level`` percent."""
    return EXACT_STAGE if level >= 100 else f"lod-{level}"


class PairStatus(IntEnum):
    UNDECIDED = 0
    CONFIRMED = 1
    REMOVED = 2


@dataclass(frozen=True)
class Interval:
    """Closed distance interval ``[lb, ub]`` with ``0 <= lb <= ub``."""

    lb: float
    ub: float

    def __post_init__(self) -> None:
        if not (0.0 <= self.lb <= self.ub):
            raise ValueError(f"invalid interval [{self.lb}, {self.ub}]")

    def intersect(self, other: "Interval") -> "Interval":
        return Interval(max(self.lb, other.lb), min(self.ub, other.ub))

    @property
    def width(self) -> float:
        return self.ub - self.lb


@dataclass(frozen=True)
class JoinResultRecord:
    """
    One output row.

    ``rank`` is set for k-NN results only.
    """

    r: int
    s: int
    lb: float
    ub: float
    decided_at: str
    rank: Optional[int] = None

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        if self.rank is None:
            del data["rank"]
        return data

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), separators=(",", ":"))

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "JoinResultRecord":
        return cls(
            int(data["r"]),
            int(data["s"]),
            float(data["lb"]),
            float(data["ub"]),
            str(data["decided_at"]),
            None if data.get("rank") is None else int(data["rank"]),
        )


class CandidateSet:
    """
    Object pairs grouped contiguously by query object.

    Attributes:
        r, s: ``(P,)`` object ids of each pair
        lb, ub: ``(P,)`` running interval bounds
        status: ``(P,)`` PairStatus codes
        decided_at: Stage tag per pair ('' while undecided)
        r2op: ``(n_r + 1,)`` offsets; pairs of query ``i`` are ``r2op[i]:r2op[i+1]``
        track_confirmed: Keep refining confirmed pairs to their exact distance
    """

    def __init__(
        self,
        n_r: int,
        r: np.ndarray,
        s: np.ndarray,
        lb: np.ndarray,
        ub: np.ndarray,
        status: Optional[np.ndarray] = None,
        decided_at: Optional[List[str]] = None,
    ):
        r = np.asarray(r, dtype=np.int64)
        order = np.lexsort((np.asarray(s, dtype=np.int64), r))
        self.n_r = n_r
        self.r = r[order]
        self.s = np.asarray(s, dtype=np.int64)[order]
        self.lb = np.asarray(lb, dtype=np.float64)[order]
        self.ub = np.asarray(ub, dtype=np.float64)[order]
        if status is None:
            self.status = np.full(self.r.size, PairStatus.UNDECIDED, dtype=np.int8)
        else:
            self.status = np.asarray(status, dtype=np.int8)[order]
        tags = decided_at if decided_at is not None else [""] * self.r.size
        self.decided_at = [tags[i] for i in order.tolist()]
        self.r2op = np.searchsorted(self.r, np.arange(n_r + 1)).astype(np.int64)
        self.track_confirmed = False

    def __len__(self) -> int:
        return int(self.r.size)

    def pairs_of(self, r: int) -> slice:
        return slice(int(self.r2op[r]), int(self.r2op[r + 1]))

    def indices(self, status: PairStatus) -> np.ndarray:
        return np.flatnonzero(self.status == status)

    def undecided(self) -> np.ndarray:
        return self.indices(PairStatus.UNDECIDED)

    def active(self) -> np.ndarray:
        """Pairs that still need bounds."""
        return np.flatnonzero(self.live_mask())

    def live_mask(self) -> np.ndarray:
        live = self.status == PairStatus.UNDECIDED
        if self.track_confirmed:
            live |= self.status == PairStatus.CONFIRMED
        return live

    def counts(self) -> Dict[str, int]:
        return {
            status.name.lower(): int(np.count_nonzero(self.status == status))
            for status in PairStatus
        }

    def num_confirmed(self) -> np.ndarray:
        """Confirmed pairs per query object."""
        confirmed = self.status == PairStatus.CONFIRMED
        return np.bincount(self.r[confirmed], minlength=self.n_r).astype(np.int64)

    def tighten(self, idx: np.ndarray, lb: np.ndarray, ub: np.ndarray, stage: str) -> None:
        """
        Intersect the running intervals of pairs ``idx`` with ``[lb, ub]``.

        Infinite candidate bounds carry no information and are skipped.
        Crossings within ``CROSSING_TOLERANCE`` collapse to their midpoint.

        Raises:
            BoundsViolationError: If a lower bound exceeds its upper bound
                beyond tolerance
        """
        idx = np.asarray(idx, dtype=np.int64)
        new_lb = np.where(np.isfinite(lb), np.maximum(self.lb[idx], lb), self.lb[idx])
        new_ub = np.minimum(self.ub[idx], ub)
        crossed = new_lb > new_ub
        if np.any(crossed):
            gap = new_lb - new_ub
            worst = int(np.argmax(gap))
            if gap[worst] > CROSSING_TOLERANCE:
                p = int(idx[worst])
                raise BoundsViolationError(
                    f"lower bound {new_lb[worst]!r} exceeds upper bound {new_ub[worst]!r} "
                    f"for pair ({self.r[p]}, {self.s[p]}) at stage {stage}",
                    pair=(int(self.r[p]), int(self.s[p])),
                    lb=float(new_lb[worst]),
                    ub=float(new_ub[worst]),
                )
            mid = (new_lb[crossed] + new_ub[crossed]) * 0.5
            new_lb[crossed] = mid
            new_ub[crossed] = mid
        self.lb[idx] = new_lb
        self.ub[idx] = new_ub

    def decide(self, idx: np.ndarray, status: PairStatus, stage: str) -> None:
        """Move undecided pairs ``idx`` to ``status`` at ``stage``."""
        idx = np.asarray(idx, dtype=np.int64)
        if idx.size == 0:
            return
        if np.any(self.status[idx] != PairStatus.UNDECIDED):
            raise RuntimeError("Only undecided pairs can change status")
        self.status[idx] = status
        for i in idx.tolist():
            self.decided_at[i] = stage

    def records(self, idx: Optional[np.ndarray] = None) -> List[JoinResultRecord]:
        """Result records of confirmed pairs, ordered by (r, s)."""
        if idx is None:
            idx = self.indices(PairStatus.CONFIRMED)
        return [
            JoinResultRecord(
                int(self.r[i]), int(self.s[i]), float(self.lb[i]), float(self.ub[i]), self.decided_at[i]
            )
            for i in np.asarray(idx).tolist()
        ]


def prune_within(cands: CandidateSet, idx: np.ndarray, tau: float, stage: str) -> Dict[str, int]:
    """
    Classify undecided pairs among ``idx`` against threshold ``tau``.

    ``ub <= tau`` confirms, ``lb > tau`` removes, everything else stays
    undecided.

    Returns:
        Counts of pairs confirmed and removed
    """
    idx = np.asarray(idx, dtype=np.int64)
    idx = idx[cands.status[idx] == PairStatus.UNDECIDED]
    confirm = idx[cands.ub[idx] <= tau]
    remove = idx[cands.lb[idx] > tau]
    cands.decide(confirm, PairStatus.CONFIRMED, stage)
    cands.decide(remove, PairStatus.REMOVED, stage)
    return {"confirmed": int(confirm.size), "removed": int(remove.size)}
