"""
Tests for facet-level refinement.
"""

import numpy as np
import pytest

from polyjoin.config import RefineConfig
from polyjoin.engine.candidates import CandidateSet, PairStatus, prune_within
from polyjoin.engine.filter import VoxelPairList, chunked_filter, mbb_filter_within
from polyjoin.engine.oracle import oracle_distances
from polyjoin.engine.refine import (
    FacetSegments,
    VoxelPairBatch,
    aggregate_object_bounds,
    gather_facet_data,
    refine_kernel,
    refine_loop,
)
from polyjoin.engine.stats import StageStats
from polyjoin.geometry import tri_tri_distance


TRI_A = np.array([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])


def _segments(tris, hd=0.0, ph=0.0):
    tris = np.asarray(tris, dtype=np.float64).reshape(-1, 3, 3)
    n = tris.shape[0]
    return FacetSegments(tris, np.full(n, hd), np.full(n, ph), np.array([0, n]))


class TestRefineKernel:
    """Test suite for the facet-pair kernel."""

    def test_exact_level(self):
        """Test that zero deviation gives the exact distance on both sides."""
        tri_b = TRI_A + np.array([0.0, 0.0, 3.0])
        batch = VoxelPairBatch(100, _segments(TRI_A), _segments(tri_b), np.array([0]), np.array([0]), np.array([0]))
        lb, ub, evaluated = refine_kernel(batch)
        assert lb[0] == ub[0] == pytest.approx(3.0)
        assert evaluated == 1

    def test_deviation(self):
        """Test that hd widens the upper and ph lowers the lower bound."""
        tri_b = TRI_A + np.array([0.0, 0.0, 3.0])
        batch = VoxelPairBatch(
            50,
            _segments(TRI_A, hd=0.25, ph=0.5),
            _segments(tri_b, hd=0.25, ph=0.5),
            np.array([0]),
            np.array([0]),
            np.array([0]),
        )
        lb, ub, _ = refine_kernel(batch)
        assert lb[0] == pytest.approx(2.0)
        assert ub[0] == pytest.approx(3.5)

    def test_lower_bound_clamped(self):
        """Test that lower bounds never go negative."""
        batch = VoxelPairBatch(
            50, _segments(TRI_A, ph=5.0), _segments(TRI_A, ph=5.0), np.array([0]), np.array([0]), np.array([0])
        )
        lb, _, _ = refine_kernel(batch)
        assert lb[0] == 0.0

    def test_windows(self, rng):
        """Test that the facet budget does not change the minima."""
        tris_a = rng.normal(size=(7, 3, 3))
        tris_b = rng.normal(size=(5, 3, 3)) + 4.0
        r_side = FacetSegments(tris_a, np.zeros(7), np.zeros(7), np.array([0, 3, 7]))
        s_side = FacetSegments(tris_b, np.zeros(5), np.zeros(5), np.array([0, 2, 5]))
        batch = VoxelPairBatch(100, r_side, s_side, np.array([0, 1, 1]), np.array([1, 0, 1]), np.array([0, 0, 1]))
        whole = refine_kernel(batch, facet_budget=1_000)
        small = refine_kernel(batch, facet_budget=4)
        assert np.array_equal(whole[0], small[0])
        assert np.array_equal(whole[1], small[1])
        assert whole[2] == 3 * 3 + 4 * 2 + 4 * 3
        expected = min(tri_tri_distance(a, b) for a in tris_a[:3] for b in tris_b[2:])
        assert whole[1][0] == pytest.approx(expected)

    def test_empty_voxel(self):
        """Test that a voxel pair without facets gets infinite bounds."""
        empty = FacetSegments(np.zeros((0, 3, 3)), np.zeros(0), np.zeros(0), np.array([0, 0]))
        batch = VoxelPairBatch(100, empty, _segments(TRI_A), np.array([0]), np.array([0]), np.array([0]))
        lb, ub, evaluated = refine_kernel(batch)
        assert np.isinf(lb[0]) and np.isinf(ub[0])
        assert evaluated == 0


class TestAggregation:
    """Test suite for folding voxel-pair bounds into object pairs."""

    def test_fold(self):
        """Test per-pair minima intersected with the running interval."""
        cands = CandidateSet(1, [0, 0], [0, 1], [0.0, 0.0], [10.0, 10.0])
        touched = aggregate_object_bounds(
            np.array([1.0, 2.0, 0.5]), np.array([3.0, 2.5, 4.0]), np.array([0, 0, 1]), cands, "lod-50"
        )
        assert touched.tolist() == [0, 1]
        assert cands.lb.tolist() == [1.0, 0.5]
        assert cands.ub.tolist() == [2.5, 4.0]

    def test_nothing(self):
        """Test an empty fold."""
        cands = CandidateSet(1, [0], [0], [0.0], [1.0])
        empty = np.zeros(0)
        assert aggregate_object_bounds(empty, empty, np.zeros(0, dtype=np.int64), cands, "exact").size == 0


class TestRefineLoop:
    """Test suite for the level loop."""

    @pytest.fixture
    def filtered(self, grid_dataset, scattered_dataset):
        _, cands = mbb_filter_within(grid_dataset, scattered_dataset, 1.0)
        cands.track_confirmed = True
        vpairs = chunked_filter(cands, grid_dataset, scattered_dataset, 256)
        return cands, vpairs

    def test_dedup(self, grid_dataset, scattered_dataset, filtered):
        """Test that each voxel's facets are gathered once per side."""
        cands, vpairs = filtered
        batch = gather_facet_data(vpairs, 50, cands, grid_dataset, scattered_dataset)
        flat = grid_dataset.o2v[cands.r[vpairs.pair]] + vpairs.vr
        assert batch.r_side.offsets.size == np.unique(flat).size + 1
        r_off, r_len, s_off, s_len = batch.descriptors()
        assert np.all(r_off + r_len <= batch.r_side.triangles.shape[0])
        assert np.all(s_off + s_len <= batch.s_side.triangles.shape[0])

    @pytest.mark.parametrize("chunk,pipeline", [(3, True), (500_000, False)])
    def test_exact_at_finest(self, grid_dataset, scattered_dataset, filtered, chunk, pipeline):
        """Test that intervals collapse to the exact distance at level 100."""
        cands, vpairs = filtered
        config = RefineConfig(lods=grid_dataset.schedule, refine_chunk=chunk, pipeline=pipeline)
        stats = StageStats()
        refine_loop(
            cands, vpairs, grid_dataset, scattered_dataset, config, lambda idx, stage: {}, stats=stats
        )
        exact = oracle_distances(grid_dataset, scattered_dataset)
        for i in range(len(cands)):
            d = exact[(int(cands.r[i]), int(cands.s[i]))]
            assert cands.lb[i] == pytest.approx(d, abs=1e-9)
            assert cands.ub[i] == pytest.approx(d, abs=1e-9)
        assert stats.stage("exact").facet_pairs > 0
        assert all(record.balanced for record in stats.stages.values())

    @pytest.mark.parametrize("tau", [0.0, 0.3, 1.0])
    def test_bounds_hold_at_every_level(self, grid_dataset, scattered_dataset, tau):
        """Test lb <= d <= ub at every level with intervals that only narrow."""
        _, cands = mbb_filter_within(grid_dataset, scattered_dataset, tau)
        vpairs = chunked_filter(cands, grid_dataset, scattered_dataset, 64, tau=tau)
        exact = oracle_distances(grid_dataset, scattered_dataset)
        d = np.array([exact[(int(r), int(s))] for r, s in zip(cands.r, cands.s)])
        previous = [cands.lb.copy(), cands.ub.copy()]
        seen = []

        def checked_prune(idx, stage):
            assert np.all(cands.lb[idx] <= d[idx] + 1e-9), stage
            assert np.all(d[idx] <= cands.ub[idx] + 1e-9), stage
            assert np.all(cands.lb >= previous[0]), stage
            assert np.all(cands.ub <= previous[1]), stage
            previous[:] = [cands.lb.copy(), cands.ub.copy()]
            seen.append(stage)
            return prune_within(cands, idx, tau, stage)

        config = RefineConfig(lods=grid_dataset.schedule, refine_chunk=2)
        refine_loop(cands, vpairs, grid_dataset, scattered_dataset, config, checked_prune)
        if len(vpairs):
            assert seen and all(stage.startswith("lod-") or stage == "exact" for stage in seen)
        assert not np.any(cands.status == PairStatus.UNDECIDED)

    def test_schedule_mismatch(self, grid_dataset, scattered_dataset, filtered):
        """Test that refinement refuses a schedule the indices were not built with."""
        cands, vpairs = filtered
        with pytest.raises(ValueError):
            refine_loop(
                cands,
                vpairs,
                grid_dataset,
                scattered_dataset,
                RefineConfig(lods=[50, 100]),
                lambda idx, stage: {},
            )

    def test_nothing_live(self, grid_dataset, scattered_dataset):
        """Test that an empty voxel-pair list passes through every level."""
        cands = CandidateSet(len(grid_dataset), [], [], [], [])
        stats = StageStats()
        out = refine_loop(
            cands,
            VoxelPairList.empty(),
            grid_dataset,
            scattered_dataset,
            RefineConfig(lods=grid_dataset.schedule),
            lambda idx, stage: {},
            stats=stats,
        )
        assert len(out) == 0
        assert list(stats.stages) == ["lod-25", "lod-50", "exact"]
