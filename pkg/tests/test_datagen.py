"""
Tests for synthetic dataset generation.
"""

import json

import numpy as np
import pytest

from polyjoin.datagen import (
    builtin_seed,
    discover_off_files,
    generate_dataset,
    grid_dims,
    grid_offsets,
    load_meshes,
    place_meshes,
    read_manifest_extent,
)
from polyjoin.errors import ParameterError
from polyjoin.geometry import Aabb
from polyjoin.mesh import save_off
from polyjoin.mesh.shapes import box_mesh, icosphere


def _boxes_disjoint(meshes):
    boxes = [m.bounding_box() for m in meshes]
    for i, a in enumerate(boxes):
        for b in boxes[i + 1 :]:
            if np.all(a.lo <= b.hi) and np.all(b.lo <= a.hi):
                return False
    return True


class TestPlacement:
    """Test suite for grid and scatter placement."""

    @pytest.mark.parametrize("count,dims", [(1, (1, 1, 1)), (6, (2, 2, 2)), (8, (2, 2, 2)), (9, (3, 3, 1))])
    def test_grid_dims(self, count, dims):
        """Test the near-cubic grid."""
        nx, ny, nz = grid_dims(count)
        assert (nx, ny, nz) == dims
        assert nx * ny * nz >= count

    def test_single_centered_seed(self):
        """Test that one replica of an origin-centered seed stays in place."""
        seed = icosphere(1)
        [(index, mesh, offset)] = place_meshes([seed], 1)
        assert index == 0
        assert np.allclose(offset, 0.0)
        assert np.allclose(mesh.vertices, seed.vertices)

    @pytest.mark.parametrize("count", [2, 8, 27])
    def test_single_matches_first_cell(self, count):
        """Test that one replica lands where the first cell of any larger grid lands."""
        seed = box_mesh((2.0, 3.0, 4.0), (3.0, 5.0, 5.0))
        [(_, single, single_offset)] = place_meshes([seed], 1, spacing=4.0)
        _, first, first_offset = place_meshes([seed], count, spacing=4.0)[0]
        assert np.allclose(single_offset, first_offset)
        assert np.allclose(single.bounding_box().center, 0.0)
        assert np.allclose(first.bounding_box().center, 0.0)

    def test_disjoint_boxes(self):
        """Test that the default spacing separates replicas."""
        placed = place_meshes([icosphere(1)], 8, jitter=0.1, rng_seed=4)
        assert len(placed) == 8
        assert _boxes_disjoint([mesh for _, mesh, _ in placed])

    def test_spacing_too_small(self):
        """Test that overlapping grids are refused unless allowed."""
        with pytest.raises(ParameterError):
            grid_offsets([box_mesh()], 4, spacing=1.0)
        assert len(grid_offsets([box_mesh()], 4, spacing=1.0, allow_overlap=True)) == 4

    @pytest.mark.parametrize("kwargs", [{"count": 0}, {"count": 2, "jitter": -1.0}, {"count": 2, "spacing": -3.0}])
    def test_invalid(self, kwargs):
        """Test parameter checks."""
        with pytest.raises(ParameterError):
            grid_offsets([box_mesh()], **kwargs)

    def test_deterministic(self):
        """Test that placement depends only on the seed."""
        a = place_meshes([icosphere(1)], 5, jitter=0.3, rng_seed=11)
        b = place_meshes([icosphere(1)], 5, jitter=0.3, rng_seed=11)
        assert all(np.array_equal(x[2], y[2]) for x, y in zip(a, b))

    def test_round_robin(self):
        """Test that several seeds alternate."""
        placed = place_meshes([box_mesh(), icosphere(0)], 4, spacing=5.0)
        assert [index for index, _, _ in placed] == [0, 1, 0, 1]

    def test_scatter(self):
        """Test that scattered centers fall inside the extent."""
        extent = Aabb(np.zeros(3), np.full(3, 10.0))
        placed = place_meshes([icosphere(1, radius=0.5)], 20, rng_seed=3, scatter_within=extent)
        centers = np.array([mesh.bounding_box().center for _, mesh, _ in placed])
        assert np.all(centers >= -1e-12) and np.all(centers <= 10.0 + 1e-12)

    def test_builtin_seed(self):
        """Test builtin shape lookup."""
        assert builtin_seed("torus", 200).n_facets > 0
        with pytest.raises(ParameterError):
            builtin_seed("teapot", 200)
        with pytest.raises(ParameterError):
            builtin_seed("sphere", 0)


class TestGenerateDataset:
    """Test suite for written datasets."""

    def test_manifest(self, tmp_path):
        """Test files, totals and extent of a generated population."""
        manifest = generate_dataset(tmp_path / "grid", shape="sphere", facets=100, count=8, rng_seed=1)
        assert manifest["count"] == 8
        assert manifest["total_facets"] == sum(entry["facets"] for entry in manifest["objects"])
        on_disk = json.loads((tmp_path / "grid" / "manifest.json").read_text())
        assert on_disk == manifest
        files = discover_off_files(tmp_path / "grid")
        assert [f.name for f in files] == [f"obj_{i:05d}.off" for i in range(8)]
        meshes = load_meshes(tmp_path / "grid")
        assert _boxes_disjoint([mesh for _, mesh in meshes])
        extent = read_manifest_extent(tmp_path / "grid")
        assert np.allclose(extent.lo, np.min([e["lo"] for e in manifest["objects"]], axis=0))

    def test_scatter_within(self, tmp_path):
        """Test a second population scattered in the first one's extent."""
        generate_dataset(tmp_path / "big", facets=100, count=4)
        manifest = generate_dataset(
            tmp_path / "small", facets=60, count=6, rng_seed=2, scatter_within=tmp_path / "big"
        )
        extent = read_manifest_extent(tmp_path / "big")
        for entry in manifest["objects"]:
            center = (np.array(entry["lo"]) + np.array(entry["hi"])) / 2
            assert np.all(center >= extent.lo - 1e-9) and np.all(center <= extent.hi + 1e-9)

    def test_seed_off(self, tmp_path):
        """Test replicating a seed OFF file."""
        save_off(tmp_path / "cube.off", box_mesh())
        manifest = generate_dataset(tmp_path / "cubes", seed_offs=[tmp_path / "cube.off"], count=3)
        assert manifest["total_facets"] == 36
        assert {entry["source"] for entry in manifest["objects"]} == {"cube.off"}

    def test_plain_directory(self, tmp_path):
        """Test discovery without a manifest."""
        save_off(tmp_path / "b.off", box_mesh())
        save_off(tmp_path / "a.off", box_mesh())
        assert [f.name for f in discover_off_files(tmp_path)] == ["a.off", "b.off"]
        with pytest.raises(ParameterError):
            discover_off_files(tmp_path / "nothing")
