import numpy as np
import pytest

from polyjoin import logging as pj_logging
from polyjoin.datagen import place_meshes
from polyjoin.engine import parcore
from polyjoin.geometry import Aabb
from polyjoin.index import prepare_dataset
from polyjoin.mesh.shapes import icosphere

# Small ladders keep preprocessing fast; the schedule still has coarse levels.
TEST_LODS = [25, 50, 100]
TEST_HD_GRID = 4
TEST_VOXEL_RATIO = 0.1


@pytest.fixture(autouse=True)
def reset_singletons(monkeypatch):
    """Reset singleton caches between tests for isolation."""
    monkeypatch.setattr(parcore, "_parallel_context", None, raising=False)
    monkeypatch.setattr(pj_logging, "_event_logger", None, raising=False)
    yield


def build_dataset(meshes, lods=TEST_LODS, voxel_ratio=TEST_VOXEL_RATIO, seed=0):
    named = [(f"obj_{i:03d}", mesh) for i, mesh in enumerate(meshes)]
    return prepare_dataset(named, lods, voxel_ratio, TEST_HD_GRID, seed, workers=1)


@pytest.fixture(scope="session")
def sphere_mesh():
    """80-facet unit icosphere."""
    return icosphere(1)


@pytest.fixture(scope="session")
def grid_dataset():
    """Six jittered unit spheres on a grid with pitch 2.6."""
    placed = place_meshes([icosphere(1)], 6, spacing=2.6, jitter=0.2, rng_seed=1)
    return build_dataset([mesh for _, mesh, _ in placed])


@pytest.fixture(scope="session")
def scattered_dataset(grid_dataset):
    """Ten small spheres scattered inside the grid population's extent."""
    extent = Aabb(grid_dataset.mbb_lo.min(axis=0), grid_dataset.mbb_hi.max(axis=0))
    placed = place_meshes([icosphere(1, radius=0.45)], 10, rng_seed=2, scatter_within=extent)
    return build_dataset([mesh for _, mesh, _ in placed])


@pytest.fixture(scope="session")
def nested_dataset():
    """A large sphere and a small sphere sharing the same center."""
    return build_dataset([icosphere(1, radius=2.0), icosphere(1, radius=0.5)])


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def make_dataset():
    """Factory preparing a dataset from a list of meshes with the test settings."""
    return build_dataset
