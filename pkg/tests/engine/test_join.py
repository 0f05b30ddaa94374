"""
End-to-end join tests against the brute-force oracle.
"""

from unittest.mock import patch

import numpy as np
import pytest

from polyjoin.config import JoinSpec, QueryType, RefineConfig
from polyjoin.engine import SpatialJoin, oracle_join, run_join
from polyjoin.engine.join import result_pairs
from polyjoin.engine.oracle import oracle_distances
from polyjoin.engine.parcore import ParallelContext
from polyjoin.errors import BoundsViolationError, ParameterError
from polyjoin.mesh.shapes import icosphere

TOL = 1e-9


def _pairs(records):
    return {(rec.r, rec.s) for rec in records}


@pytest.fixture(scope="module")
def exact(grid_dataset, scattered_dataset):
    return oracle_distances(grid_dataset, scattered_dataset)


class TestWithinJoin:
    """Test suite for threshold joins."""

    @pytest.mark.parametrize("tau", [0.0, 0.1, 0.5, 1.0])
    def test_matches_oracle(self, grid_dataset, scattered_dataset, exact, tau):
        """Test set equality with the oracle and sound reported intervals."""
        spec = JoinSpec(query_type=QueryType.WITHIN, tau=tau)
        outcome = run_join(grid_dataset, scattered_dataset, spec)
        expected = oracle_join(grid_dataset, scattered_dataset, spec)
        assert _pairs(outcome.records) == _pairs(expected)
        for rec in outcome.records:
            d = exact[(rec.r, rec.s)]
            assert rec.lb - TOL <= d <= rec.ub + TOL
            assert rec.ub <= tau
        assert [(rec.r, rec.s) for rec in outcome.records] == sorted(_pairs(outcome.records))

    def test_intersect(self, grid_dataset, scattered_dataset):
        """Test that intersect behaves as within zero."""
        spec = JoinSpec(query_type=QueryType.INTERSECT)
        outcome = run_join(grid_dataset, scattered_dataset, spec)
        assert _pairs(outcome.records) == _pairs(oracle_join(grid_dataset, scattered_dataset, spec))
        assert all(rec.ub == 0.0 for rec in outcome.records)

    def test_self_join(self, grid_dataset):
        """Test a self join against the oracle."""
        spec = JoinSpec(query_type=QueryType.WITHIN, tau=1.0, self_join=True)
        outcome = run_join(grid_dataset, grid_dataset, spec)
        assert _pairs(outcome.records) == _pairs(oracle_join(grid_dataset, grid_dataset, spec))
        assert all(rec.r != rec.s for rec in outcome.records)

    def test_exact_flag(self, grid_dataset, scattered_dataset, exact):
        """Test that the exact flag reports exact distances."""
        spec = JoinSpec(query_type=QueryType.WITHIN, tau=1.0, exact=True)
        outcome = run_join(grid_dataset, scattered_dataset, spec)
        assert outcome.records
        for rec in outcome.records:
            assert rec.lb == pytest.approx(exact[(rec.r, rec.s)], abs=TOL)
            assert rec.ub == pytest.approx(exact[(rec.r, rec.s)], abs=TOL)

    def test_far_apart(self, grid_dataset, make_dataset):
        """Test that distant populations die at the MBB stage."""
        far = make_dataset([icosphere(1).translated(np.array([1000.0 + 3 * i, 0.0, 0.0])) for i in range(3)])
        outcome = run_join(grid_dataset, far, JoinSpec(query_type=QueryType.WITHIN, tau=0.0))
        assert outcome.records == []
        mbb = outcome.stats.stage("mbb")
        assert mbb.removed == 18
        assert mbb.pairs_out == 0

    def test_nested(self, nested_dataset):
        """Test that concentric shells do not intersect."""
        spec = JoinSpec(query_type=QueryType.INTERSECT, self_join=True)
        assert run_join(nested_dataset, nested_dataset, spec).records == []
        assert oracle_join(nested_dataset, nested_dataset, spec) == []

    def test_stats(self, grid_dataset, scattered_dataset):
        """Test that every stage balances and results are counted."""
        outcome = run_join(grid_dataset, scattered_dataset, JoinSpec(tau=0.5))
        stats = outcome.stats
        assert all(record.balanced for record in stats.stages.values())
        assert stats.results == len(outcome.records)
        assert 0.0 <= stats.filtering_effectiveness <= 1.0
        assert list(stats.stages)[:2] == ["mbb", "voxel"]


class TestKnnJoin:
    """Test suite for k-NN joins."""

    @pytest.mark.parametrize("k", [1, 3])
    def test_matches_oracle(self, grid_dataset, scattered_dataset, k):
        """Test set equality with the oracle."""
        spec = JoinSpec(query_type=QueryType.KNN, k=k)
        outcome = run_join(grid_dataset, scattered_dataset, spec)
        assert _pairs(outcome.records) == _pairs(oracle_join(grid_dataset, scattered_dataset, spec))
        assert len(outcome.records) == k * len(grid_dataset)
        assert all(record.balanced for record in outcome.stats.stages.values())

    def test_exact_ranks(self, grid_dataset, scattered_dataset):
        """Test that exact k-NN ranks and distances agree with the oracle."""
        spec = JoinSpec(query_type=QueryType.KNN, k=3, exact=True)
        outcome = run_join(grid_dataset, scattered_dataset, spec)
        expected = oracle_join(grid_dataset, scattered_dataset, spec)
        assert [(rec.r, rec.s, rec.rank) for rec in outcome.records] == [
            (rec.r, rec.s, rec.rank) for rec in expected
        ]
        for got, want in zip(outcome.records, expected):
            assert got.ub == pytest.approx(want.ub, abs=TOL)

    def test_one_neighbor(self, scattered_dataset, grid_dataset):
        """Test that k=1 yields one rank-1 record per query object."""
        outcome = run_join(scattered_dataset, grid_dataset, JoinSpec(query_type=QueryType.KNN, k=1))
        assert len(outcome.records) == len(scattered_dataset)
        assert {rec.rank for rec in outcome.records} == {1}
        assert [rec.r for rec in outcome.records] == list(range(len(scattered_dataset)))

    def test_self_join(self, nested_dataset):
        """Test that a self k-NN join never returns the query object."""
        spec = JoinSpec(query_type=QueryType.KNN, k=1, self_join=True)
        outcome = run_join(nested_dataset, nested_dataset, spec)
        assert result_pairs(outcome.records).tolist() == [[0, 1], [1, 0]]
        expected = oracle_join(nested_dataset, nested_dataset, spec)
        for got, want in zip(outcome.records, expected):
            assert got.lb - TOL <= want.ub <= got.ub + TOL


class TestDeterminism:
    """Test suite for schedule independence."""

    @pytest.mark.parametrize(
        "spec",
        [
            JoinSpec(query_type=QueryType.WITHIN, tau=0.5),
            JoinSpec(query_type=QueryType.KNN, k=2),
        ],
    )
    def test_chunks_pipeline_workers(self, grid_dataset, scattered_dataset, spec):
        """Test that budgets, the pipeline switch and worker counts leave results unchanged."""
        base = run_join(grid_dataset, scattered_dataset, spec, ParallelContext(1)).records
        variants = [
            (spec.model_copy(update={"filter_chunk": 1, "pipeline": False}), 1),
            (spec.model_copy(update={"refine": RefineConfig(lods=grid_dataset.schedule, refine_chunk=2)}), 4),
            (
                spec.model_copy(
                    update={"refine": RefineConfig(lods=grid_dataset.schedule, refine_chunk=5, pipeline=False)}
                ),
                8,
            ),
        ]
        for variant, workers in variants:
            ctx = ParallelContext(workers)
            assert run_join(grid_dataset, scattered_dataset, variant, ctx).records == base
            ctx.close()


class TestSchedules:
    """Test suite for LoD schedule handling."""

    def test_adopts_index_schedule(self, grid_dataset):
        """Test that an unset schedule follows the index."""
        join = SpatialJoin(grid_dataset, grid_dataset, JoinSpec(tau=0.1))
        assert join.spec.refine.lods == grid_dataset.schedule

    def test_explicit_mismatch(self, grid_dataset):
        """Test that an explicit schedule must match the index."""
        spec = JoinSpec(tau=0.1, refine=RefineConfig(lods=[50, 100]))
        with pytest.raises(ParameterError):
            SpatialJoin(grid_dataset, grid_dataset, spec)

    def test_incompatible_indices(self, grid_dataset, make_dataset):
        """Test that indices with different schedules cannot be joined."""
        other = make_dataset([icosphere(1)], lods=[50, 100])
        with pytest.raises(ParameterError):
            SpatialJoin(grid_dataset, other, JoinSpec(tau=0.1))

    def test_violation_reported(self, grid_dataset):
        """Test that a bounds violation is logged as an event and re-raised."""
        error = BoundsViolationError("crossed", pair=(0, 1), lb=2.0, ub=1.0)
        with patch("polyjoin.engine.join.mbb_filter_within", side_effect=error):
            join = SpatialJoin(grid_dataset, grid_dataset, JoinSpec(tau=0.1))
            with patch.object(join.events, "log_soundness_violation") as logged:
                with pytest.raises(BoundsViolationError):
                    join.run()
        logged.assert_called_once()
        assert logged.call_args[0][1]["pair"] == [0, 1]
