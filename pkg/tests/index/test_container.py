"""
Tests for prepared datasets and the index container.
"""

import numpy as np
import pytest

from polyjoin.index import (
    IndexFormatError,
    IndexVersionError,
    PreparedDataset,
    dump_index,
    index_summary,
    load_index,
    parse_index,
    prepare_dataset,
    prepare_object,
    save_index,
)
from polyjoin.mesh.shapes import box_mesh, icosphere, torus


class TestPreparedDataset:
    """Test suite for the flattened dataset views."""

    def test_flat_views(self, grid_dataset):
        """Test offsets, owners and box arrays."""
        ds = grid_dataset
        assert len(ds) == 6
        assert ds.o2v[0] == 0 and ds.o2v[-1] == ds.voxel_lo.shape[0]
        assert np.array_equal(np.diff(ds.o2v), ds.voxel_counts)
        for obj in ds.objects:
            owned = np.flatnonzero(ds.voxel_owner == obj.id)
            assert owned.tolist() == list(range(ds.o2v[obj.id], ds.o2v[obj.id + 1]))
            assert np.array_equal(ds.mbb_lo[obj.id], obj.mbb.lo)
        assert ds.schedule == [25, 50, 100]
        assert ds.metadata["lods"] == [25, 50, 100]

    def test_voxel_boxes_inside_object_box(self, grid_dataset):
        """Test that voxel boxes nest in their object's box."""
        ds = grid_dataset
        owner = ds.voxel_owner
        assert np.all(ds.voxel_lo >= ds.mbb_lo[owner])
        assert np.all(ds.voxel_hi <= ds.mbb_hi[owner])

    def test_rtree(self, grid_dataset):
        """Test the lazily built object R-tree."""
        assert grid_dataset.rtree is grid_dataset.rtree
        assert len(grid_dataset.rtree) == len(grid_dataset)

    def test_validation(self):
        """Test dataset construction errors."""
        with pytest.raises(ValueError):
            PreparedDataset([])
        a = prepare_object(0, box_mesh(), lods=[50, 100], hd_grid=2)
        b = prepare_object(1, box_mesh(), lods=[25, 100], hd_grid=2)
        with pytest.raises(ValueError):
            PreparedDataset([a, b])
        with pytest.raises(ValueError):
            PreparedDataset([b])

    def test_anchor_kinds(self):
        """Test interior and surface anchors."""
        sphere = prepare_object(0, icosphere(1), lods=[50, 100], hd_grid=2)
        ring = prepare_object(0, torus(120), lods=[50, 100], hd_grid=2)
        assert sphere.anchor_inside
        assert not ring.anchor_inside

    def test_worker_independence(self):
        """Test that the process pool gives the same index as a serial run."""
        meshes = [(f"m{i}", icosphere(1).translated(np.array([3.0 * i, 0.0, 0.0]))) for i in range(3)]
        serial = prepare_dataset(meshes, [50, 100], 0.1, 2, seed=5, workers=1)
        pooled = prepare_dataset(meshes, [50, 100], 0.1, 2, seed=5, workers=2)
        assert dump_index(serial) == dump_index(pooled)


class TestContainer:
    """Test suite for the binary container."""

    def test_round_trip(self, grid_dataset):
        """Test that parsing and re-serializing reproduces the bytes."""
        data = dump_index(grid_dataset)
        assert data.startswith(b"3DPJ1")
        again = parse_index(data)
        assert dump_index(again) == data
        assert again.schedule == grid_dataset.schedule
        assert np.array_equal(again.voxel_anchors, grid_dataset.voxel_anchors)

    def test_files(self, grid_dataset, tmp_path):
        """Test saving and loading through a file."""
        path = tmp_path / "grid.3dpj"
        size = save_index(path, grid_dataset)
        assert path.stat().st_size == size
        loaded = load_index(path)
        assert index_summary(loaded) == index_summary(grid_dataset)

    def test_deterministic(self, make_dataset):
        """Test that preprocessing twice with one seed gives identical bytes."""
        meshes = [icosphere(1), torus(120).translated(np.array([4.0, 0.0, 0.0]))]
        assert dump_index(make_dataset(meshes, seed=9)) == dump_index(make_dataset(meshes, seed=9))

    def test_bad_magic(self):
        """Test that foreign data is rejected."""
        with pytest.raises(IndexFormatError) as exc:
            parse_index(b"NOTANINDEX")
        assert exc.value.section == "header"

    def test_version(self, grid_dataset):
        """Test that another format version is reported as such."""
        data = b"3DPJ9" + dump_index(grid_dataset)[5:]
        with pytest.raises(IndexVersionError):
            parse_index(data)

    def test_truncated(self, grid_dataset):
        """Test that truncation names the damaged section."""
        data = dump_index(grid_dataset)
        with pytest.raises(IndexFormatError) as exc:
            parse_index(data[:-7])
        assert exc.value.section.startswith("object 5")

    def test_trailing_bytes(self, grid_dataset):
        """Test that trailing garbage is rejected."""
        with pytest.raises(IndexFormatError) as exc:
            parse_index(dump_index(grid_dataset) + b"\x00")
        assert exc.value.section == "trailer"

    def test_voxel_ids_out_of_range(self, make_dataset):
        """Test that a voxel label beyond the voxel count is a format error."""
        dataset = make_dataset([icosphere(1), icosphere(1).translated(np.array([4.0, 0.0, 0.0]))])
        labels = dataset.objects[1].voxels.facet_voxels
        labels[100] = labels[100] + dataset.objects[1].voxels.n_voxels
        with pytest.raises(IndexFormatError) as exc:
            parse_index(dump_index(dataset))
        assert exc.value.section == "object 1 voxels"

    def test_ancestor_out_of_range(self, make_dataset):
        """Test that an ancestor map pointing past its level is a format error."""
        dataset = make_dataset([icosphere(1)])
        coarse = dataset.objects[0].ladder.coarsest
        coarse.ancestor_of_original = coarse.ancestor_of_original + coarse.n_facets
        with pytest.raises(IndexFormatError) as exc:
            parse_index(dump_index(dataset))
        assert exc.value.section == f"object 0 level {coarse.level}"

    def test_bound_length_mismatch(self, make_dataset):
        """Test that per-facet bounds must cover every facet of their level."""
        dataset = make_dataset([icosphere(1)])
        coarse = dataset.objects[0].ladder.coarsest
        coarse.hd = coarse.hd[:-1]
        with pytest.raises(IndexFormatError) as exc:
            parse_index(dump_index(dataset))
        assert exc.value.section == f"object 0 level {coarse.level}"
