"""
Tests for level-of-detail ladders.
"""

import numpy as np
import pytest

from polyjoin.mesh import Mesh, build_lod_ladder, validate_schedule
from polyjoin.mesh.lod import level_target
from polyjoin.mesh.shapes import box_mesh, icosphere


class TestSchedule:
    """Test suite for schedule validation."""

    def test_valid(self):
        """Test that valid schedules pass through."""
        assert validate_schedule([20, 40, 60, 80, 100]) == [20, 40, 60, 80, 100]
        assert validate_schedule([100]) == [100]

    @pytest.mark.parametrize("levels", [[], [20, 40], [40, 20, 100], [0, 100], [50, 50, 100]])
    def test_invalid(self, levels):
        """Test that malformed schedules are rejected."""
        with pytest.raises(ValueError):
            validate_schedule(levels)

    def test_level_target(self):
        """Test the facet target of a level."""
        assert level_target(20, 80) == 16
        assert level_target(1, 10) == 1


class TestLodLadder:
    """Test suite for ladder construction."""

    @pytest.fixture(scope="class")
    def ladder(self):
        return build_lod_ladder(icosphere(2), [20, 50, 100], hd_grid=4)

    def test_levels(self, ladder):
        """Test schedule order and facet counts."""
        assert ladder.schedule == [20, 50, 100]
        counts = [lod.n_facets for lod in ladder.levels]
        assert counts == sorted(counts)
        for lod in ladder.levels[:-1]:
            assert lod.clamped or lod.n_facets <= lod.target

    def test_finest_is_original(self, ladder):
        """Test that level 100 is the input mesh with zero deviations."""
        original = icosphere(2)
        assert ladder.finest.mesh == original
        assert not np.any(ladder.finest.hd)
        assert not np.any(ladder.finest.ph)
        assert np.array_equal(ladder.finest.ancestor_of_original, np.arange(original.n_facets))

    def test_ancestor_maps_total(self, ladder):
        """Test that every original facet maps to a facet at every level."""
        n = ladder.finest.n_facets
        for lod in ladder.levels:
            anc = lod.ancestor_of_original
            assert anc.shape == (n,)
            assert anc.min() >= 0
            assert anc.max() < lod.n_facets
            assert lod.source_facets.shape == (lod.n_facets,)
            # a surviving facet is its own ancestor
            assert np.array_equal(anc[lod.source_facets], np.arange(lod.n_facets))

    def test_bounds_non_negative(self, ladder):
        """Test deviation arrays."""
        for lod in ladder.levels:
            assert lod.hd.shape == (lod.n_facets,)
            assert np.all(lod.hd >= 0)
            assert np.all(lod.ph >= 0)

    def test_deterministic(self, ladder):
        """Test that rebuilding yields identical levels."""
        again = build_lod_ladder(icosphere(2), [20, 50, 100], hd_grid=4)
        for a, b in zip(ladder.levels, again.levels):
            assert a.mesh == b.mesh
            assert np.array_equal(a.hd, b.hd)
            assert np.array_equal(a.ancestor_of_original, b.ancestor_of_original)

    def test_clamped(self):
        """Test that an unreachable target is clamped with a warning flag."""
        ladder = build_lod_ladder(box_mesh(), [10, 100], hd_grid=2)
        assert ladder.coarsest.clamped
        assert ladder.clamps == {10: ladder.coarsest.n_facets}
        assert ladder.coarsest.n_facets >= 4

    def test_at(self, ladder):
        """Test level lookup."""
        assert ladder.at(50).level == 50
        with pytest.raises(KeyError):
            ladder.at(30)

    def test_empty_mesh(self):
        """Test that empty meshes are rejected."""
        with pytest.raises(ValueError):
            build_lod_ladder(Mesh(np.zeros((0, 3)), np.zeros((0, 3))), [100])
