"""
Tests for candidate sets, intervals and result records.
"""

import json

import numpy as np
import pytest

from polyjoin.engine.candidates import (
    CandidateSet,
    Interval,
    JoinResultRecord,
    PairStatus,
    lod_stage,
    prune_within,
)
from polyjoin.engine.stats import StageStats
from polyjoin.errors import BoundsViolationError


def _cands():
    # Deliberately unsorted input.
    return CandidateSet(
        3,
        r=[2, 0, 0, 1],
        s=[0, 4, 1, 3],
        lb=[0.0, 0.0, 0.0, 0.0],
        ub=[np.inf, np.inf, np.inf, np.inf],
    )


class TestInterval:
    """Test suite for distance intervals."""

    def test_valid(self):
        """Test construction and intersection."""
        iv = Interval(0.5, 2.0).intersect(Interval(1.0, 3.0))
        assert iv == Interval(1.0, 2.0)
        assert iv.width == 1.0

    @pytest.mark.parametrize("lb,ub", [(-0.1, 1.0), (2.0, 1.0)])
    def test_invalid(self, lb, ub):
        """Test that malformed intervals are rejected."""
        with pytest.raises(ValueError):
            Interval(lb, ub)


class TestCandidateSet:
    """Test suite for the candidate set."""

    def test_grouping(self):
        """Test that pairs are sorted by (r, s) with offsets per query."""
        cands = _cands()
        assert cands.r.tolist() == [0, 0, 1, 2]
        assert cands.s.tolist() == [1, 4, 3, 0]
        assert cands.r2op.tolist() == [0, 2, 3, 4]
        assert cands.pairs_of(0) == slice(0, 2)

    def test_tighten(self):
        """Test interval intersection."""
        cands = _cands()
        cands.tighten(np.array([0, 1]), np.array([0.2, 0.5]), np.array([1.0, 0.9]), "mbb")
        cands.tighten(np.array([0, 1]), np.array([0.1, 0.6]), np.array([2.0, 0.8]), "voxel")
        assert cands.lb[:2].tolist() == [0.2, 0.6]
        assert cands.ub[:2].tolist() == [1.0, 0.8]

    def test_infinite_lower_bound_skipped(self):
        """Test that an infinite lower bound leaves the interval unchanged."""
        cands = _cands()
        cands.tighten(np.array([0]), np.array([np.inf]), np.array([np.inf]), "voxel")
        assert cands.lb[0] == 0.0

    def test_crossing_collapse(self):
        """Test that a crossing within tolerance collapses to the midpoint."""
        cands = _cands()
        cands.tighten(np.array([2]), np.array([1.0]), np.array([1.0]), "lod-25")
        cands.tighten(np.array([2]), np.array([1.0 + 1e-12]), np.array([1.0]), "lod-50")
        assert cands.lb[2] == cands.ub[2]

    def test_violation(self):
        """Test that a real crossing raises with the pair."""
        cands = _cands()
        cands.tighten(np.array([3]), np.array([0.0]), np.array([1.0]), "mbb")
        with pytest.raises(BoundsViolationError) as exc:
            cands.tighten(np.array([3]), np.array([1.5]), np.array([2.0]), "lod-50")
        assert exc.value.pair == (2, 0)
        assert "lod-50" in str(exc.value)

    def test_decide(self):
        """Test status transitions and counts."""
        cands = _cands()
        cands.decide(np.array([0]), PairStatus.CONFIRMED, "mbb")
        cands.decide(np.array([3]), PairStatus.REMOVED, "voxel")
        assert cands.counts() == {"undecided": 2, "confirmed": 1, "removed": 1}
        assert cands.num_confirmed().tolist() == [1, 0, 0]
        assert cands.undecided().tolist() == [1, 2]
        with pytest.raises(RuntimeError):
            cands.decide(np.array([0]), PairStatus.REMOVED, "voxel")

    def test_live_mask(self):
        """Test that tracking keeps confirmed pairs live."""
        cands = _cands()
        cands.decide(np.array([0]), PairStatus.CONFIRMED, "mbb")
        assert cands.active().tolist() == [1, 2, 3]
        cands.track_confirmed = True
        assert cands.active().tolist() == [0, 1, 2, 3]

    def test_prune_within(self):
        """Test threshold classification."""
        cands = _cands()
        cands.tighten(np.arange(4), np.array([0.0, 0.2, 0.6, 0.0]), np.array([0.4, 0.7, 0.9, 0.5]), "mbb")
        counts = prune_within(cands, np.arange(4), 0.5, "mbb")
        assert counts == {"confirmed": 2, "removed": 1}
        assert cands.status.tolist() == [1, 0, 2, 1]
        assert [rec.s for rec in cands.records()] == [1, 0]


class TestRecords:
    """Test suite for result records and stage counters."""

    def test_json(self):
        """Test the JSON Lines form."""
        rec = JoinResultRecord(1, 2, 0.5, 0.75, "voxel")
        data = json.loads(rec.to_json())
        assert data == {"r": 1, "s": 2, "lb": 0.5, "ub": 0.75, "decided_at": "voxel"}
        assert JoinResultRecord.from_dict(data) == rec
        ranked = JoinResultRecord(1, 2, 0.5, 0.5, "exact", rank=3)
        assert JoinResultRecord.from_dict(ranked.to_dict()).rank == 3

    def test_stage_tags(self):
        """Test stage naming."""
        assert lod_stage(25) == "lod-25"
        assert lod_stage(100) == "exact"

    def test_effectiveness(self):
        """Test the decided-before-exact fraction."""
        stats = StageStats()
        stats.count_results(
            [JoinResultRecord(0, 1, 0, 0, "mbb"), JoinResultRecord(0, 2, 0, 0, "exact")]
        )
        assert stats.filtering_effectiveness == 0.5
        assert StageStats().filtering_effectiveness == 0.0

    def test_stage_balance(self):
        """Test the stage record balance check."""
        stats = StageStats()
        with stats.timed("voxel") as rec:
            rec.pairs_in, rec.confirmed, rec.removed, rec.pairs_out = 10, 3, 4, 3
        assert stats.stage("voxel").balanced
        assert stats.to_dict()["stages"][0]["name"] == "voxel"
