"""
Tests for progressive k-NN resolution.
"""

import numpy as np
import pytest

from polyjoin.engine.candidates import CandidateSet, PairStatus
from polyjoin.engine.knn import (
    KnnState,
    classify,
    finalize_exact,
    knn_prune_round,
    knn_resolve,
    ranked_records,
    resolve_to_fixpoint,
)


def _exact_cands(distances):
    """One query object whose candidates already have exact intervals."""
    n = len(distances)
    return CandidateSet(1, [0] * n, list(range(n)), distances, distances)


class TestClassify:
    """Test suite for the per-query classification."""

    def test_distinct(self):
        """Test exact intervals with k=2."""
        lb = ub = np.array([1.0, 2.0, 3.0])
        confirm, remove = classify(lb, ub, 2)
        assert confirm.tolist() == [True, True, False]
        assert remove.tolist() == [False, False, True]

    def test_ties_stay_undecided(self):
        """Test that equal distances are neither confirmed nor removed."""
        lb = ub = np.array([1.0, 1.0, 1.0])
        confirm, remove = classify(lb, ub, 1)
        assert not confirm.any()
        assert not remove.any()

    def test_overlapping(self):
        """Test that overlapping intervals keep both candidates."""
        confirm, remove = classify(np.array([0.0, 0.5, 4.0]), np.array([1.0, 2.0, 5.0]), 1)
        assert confirm.tolist() == [False, False, False]
        assert remove.tolist() == [False, False, True]

    def test_k_left_covers_all(self):
        """Test that every candidate is confirmed when kLeft reaches their count."""
        confirm, _ = classify(np.array([0.0, 1.0]), np.array([3.0, 4.0]), 2)
        assert confirm.all()

    def test_permutation_invariance(self, rng):
        """Test that classification does not depend on candidate order."""
        lb = rng.uniform(0, 5, size=40)
        ub = lb + rng.uniform(0, 1, size=40)
        confirm, remove = classify(lb, ub, 5)
        perm = rng.permutation(40)
        p_confirm, p_remove = classify(lb[perm], ub[perm], 5)
        assert np.array_equal(p_confirm, confirm[perm])
        assert np.array_equal(p_remove, remove[perm])


class TestResolution:
    """Test suite for fixpoint rounds and the exact tie-break."""

    def test_fixpoint_and_tie_break(self):
        """Test that ties at the boundary are settled by object id."""
        cands = _exact_cands([1.0, 2.0, 2.0, 5.0])
        state = KnnState.for_candidates(2, cands)
        totals = resolve_to_fixpoint(state, cands, "lod-50")
        assert totals == {"confirmed": 1, "removed": 1}
        assert cands.status.tolist() == [1, 0, 0, 2]
        assert state.rounds == 2
        finalize_exact(state, cands)
        assert cands.status.tolist() == [1, 1, 2, 2]
        records = ranked_records(cands)
        assert [(rec.s, rec.rank) for rec in records] == [(0, 1), (1, 2)]
        assert [rec.decided_at for rec in records] == ["lod-50", "exact"]

    def test_snapshot_round(self):
        """Test that one round reads a snapshot and changes nothing itself."""
        cands = _exact_cands([1.0, 2.0, 3.0])
        state = KnnState.for_candidates(1, cands)
        confirm, remove = knn_prune_round(state, cands)
        assert confirm.tolist() == [0]
        assert remove.tolist() == [1, 2]
        assert cands.status.tolist() == [0, 0, 0]

    def test_too_few_candidates(self):
        """Test that fewer candidates than k are all confirmed."""
        cands = _exact_cands([3.0, 1.0])
        state = KnnState.for_candidates(5, cands)
        resolve_to_fixpoint(state, cands, "mbb")
        finalize_exact(state, cands)
        assert [rec.s for rec in ranked_records(cands)] == [1, 0]

    def test_overconfirmed(self):
        """Test that more confirmations than k is reported."""
        cands = _exact_cands([1.0, 2.0])
        cands.decide(np.array([0, 1]), PairStatus.CONFIRMED, "mbb")
        state = KnnState.for_candidates(1, cands)
        with pytest.raises(RuntimeError):
            state.k_left(0)

    def test_resolve_driver(self):
        """Test the refine callback protocol."""
        cands = CandidateSet(2, [0, 0, 1, 1], [0, 1, 0, 1], [0.0, 0.0, 1.0, 3.0], [5.0, 5.0, 2.0, 4.0])
        state = KnnState.for_candidates(1, cands)
        stages = []

        def refine(prune):
            cands.tighten(np.arange(4), np.array([2.0, 1.0, 1.5, 3.0]), np.array([2.0, 1.0, 1.5, 3.0]), "exact")
            stages.append("exact")
            prune(np.arange(4), "exact")

        records = knn_resolve(state, cands, refine)
        assert stages == ["exact"]
        assert [(rec.r, rec.s, rec.rank) for rec in records] == [(0, 1, 1), (1, 0, 1)]
        assert state.history[-1]["stage"] == "exact"
