"""
Synthetic dataset generation.

Seed meshes (builtin procedural shapes or OFF files) are replicated onto a
regular 3D grid with seeded jitter, or scattered uniformly inside the extent
of an existing population. Each object is written as an OFF file next to a
``manifest.json`` describing the population.
"""

import json
import logging
import math
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from .errors import ParameterError
from .geometry import Aabb
from .mesh import Mesh, read_off, save_off
from .mesh.shapes import BUILTIN_SHAPES

logger = logging.getLogger(__name__)

MANIFEST_NAME = "manifest.json"
OBJECTS_DIR = "objects"
DEFAULT_SPACING_FACTOR = 1.5


def builtin_seed(shape: str, facets: int) -> Mesh:
    """
    Procedural seed mesh.

    Raises:
        ParameterError: For unknown shapes or non-positive facet counts
    """
    if shape not in BUILTIN_SHAPES:
        raise ParameterError(f"Unknown shape {shape!r}; choose from {sorted(BUILTIN_SHAPES)}")
    if facets <= 0:
        raise ParameterError(f"facets must be positive, got {facets}")
    return BUILTIN_SHAPES[shape](facets)


def grid_dims(count: int) -> Tuple[int, int, int]:
    """Smallest near-cubic grid holding ``count`` cells, x varying fastest."""
    side = 1
    while side**3 < count:
        side += 1
    nx = min(side, count)
    ny = min(side, max(1, math.ceil(count / nx)))
    nz = max(1, math.ceil(count / (nx * ny)))
    return nx, ny, nz


def _max_extent(seeds: Sequence[Mesh]) -> np.ndarray:
    return np.max([seed.bounding_box().extent for seed in seeds], axis=0)


def grid_offsets(
    seeds: Sequence[Mesh],
    count: int,
    spacing: Optional[float] = None,
    jitter: float = 0.0,
    rng: Optional[np.random.Generator] = None,
    allow_overlap: bool = False,
) -> List[np.ndarray]:
    """
    Translation of every replica on the grid.

    Replica ``i`` uses seed ``i % len(seeds)``. Every replica is centered on its
    grid cell, and cell zero sits at the world origin whatever ``count`` is, so a
    seed centered at the origin stays in place in the first cell when ``jitter``
    is zero.

    Raises:
        ParameterError: If the spacing is too small for disjoint boxes and
            overlap was not allowed
    """
    if count < 1:
        raise ParameterError(f"count must be at least 1, got {count}")
    if jitter < 0:
        raise ParameterError(f"jitter must be non-negative, got {jitter}")
    extent = _max_extent(seeds)
    needed = float(extent.max()) + 2.0 * jitter
    if spacing is None:
        spacing = DEFAULT_SPACING_FACTOR * float(extent.max()) + 2.0 * jitter
    if spacing <= 0:
        raise ParameterError(f"spacing must be positive, got {spacing}")
    if not allow_overlap and count > 1 and spacing <= needed:
        raise ParameterError(
            f"spacing {spacing} does not separate boxes of extent {extent.max():.6g} "
            f"with jitter {jitter}; use a spacing above {needed:.6g} or allow overlap"
        )
    rng = rng or np.random.default_rng(0)
    nx, ny, _ = grid_dims(count)
    offsets = []
    for i in range(count):
        cell = np.array([i % nx, (i // nx) % ny, i // (nx * ny)], dtype=np.float64)
        shift = rng.uniform(-jitter, jitter, size=3) if jitter > 0 else np.zeros(3)
        center = seeds[i % len(seeds)].bounding_box().center
        offsets.append(cell * spacing + shift - center)
    return offsets


def scatter_offsets(
    seeds: Sequence[Mesh], count: int, extent: Aabb, rng: np.random.Generator
) -> List[np.ndarray]:
    """Translations placing each replica's box center uniformly in ``extent``."""
    if count < 1:
        raise ParameterError(f"count must be at least 1, got {count}")
    offsets = []
    for i in range(count):
        target = rng.uniform(extent.lo, extent.hi)
        offsets.append(target - seeds[i % len(seeds)].bounding_box().center)
    return offsets


def read_manifest_extent(path: Union[str, Path]) -> Aabb:
    """Population extent recorded in a manifest (file or its directory)."""
    path = Path(path)
    if path.is_dir():
        path = path / MANIFEST_NAME
    with open(path, "r") as f:
        manifest = json.load(f)
    try:
        return Aabb(manifest["extent"]["lo"], manifest["extent"]["hi"])
    except KeyError as e:
        raise ParameterError(f"{path}: manifest has no extent") from e


def place_meshes(
    seeds: Sequence[Mesh],
    count: int,
    spacing: Optional[float] = None,
    jitter: float = 0.0,
    rng_seed: int = 0,
    allow_overlap: bool = False,
    scatter_within: Optional[Aabb] = None,
) -> List[Tuple[int, Mesh, np.ndarray]]:
    """
    Replicate ``seeds`` in memory.

    Returns:
        (seed index, placed mesh, offset) per replica
    """
    if not seeds:
        raise ParameterError("At least one seed mesh is required")
    rng = np.random.default_rng(rng_seed)
    if scatter_within is not None:
        offsets = scatter_offsets(seeds, count, scatter_within, rng)
    else:
        offsets = grid_offsets(seeds, count, spacing, jitter, rng, allow_overlap)
    placed = []
    for i, offset in enumerate(offsets):
        seed_index = i % len(seeds)
        seed = seeds[seed_index]
        mesh = seed if not np.any(offset) else seed.translated(offset)
        placed.append((seed_index, mesh, offset))
    return placed


def generate_dataset(
    out_dir: Union[str, Path],
    shape: str = "sphere",
    facets: int = 300,
    seed_offs: Sequence[Union[str, Path]] = (),
    count: int = 8,
    spacing: Optional[float] = None,
    jitter: float = 0.0,
    rng_seed: int = 0,
    allow_overlap: bool = False,
    scatter_within: Optional[Union[str, Path]] = None,
) -> Dict[str, Any]:
    """
    Generate a population and write it to ``out_dir``.

    Args:
        out_dir: Output directory (created if needed)
        shape: Builtin shape used when no seed OFF is given
        facets: Facet count of the builtin shape
        seed_offs: Seed OFF files, replicated round-robin
        count: Number of objects
        spacing: Grid pitch (default: 1.5x the largest seed extent plus jitter)
        jitter: Maximum per-axis random shift
        rng_seed: Seed of the placement generator
        allow_overlap: Skip the disjoint-box check
        scatter_within: Manifest of a population whose extent receives
            uniformly scattered replicas instead of a grid

    Returns:
        The manifest that was written
    """
    if seed_offs:
        seeds = [read_off(path) for path in seed_offs]
        sources = [str(Path(path).name) for path in seed_offs]
    else:
        seeds = [builtin_seed(shape, facets)]
        sources = [f"builtin:{shape}:{facets}"]
    extent = read_manifest_extent(scatter_within) if scatter_within else None
    placed = place_meshes(seeds, count, spacing, jitter, rng_seed, allow_overlap, extent)

    out = Path(out_dir)
    objects_dir = out / OBJECTS_DIR
    objects_dir.mkdir(parents=True, exist_ok=True)
    width = max(5, len(str(count - 1)))
    entries = []
    boxes = []
    for i, (seed_index, mesh, offset) in enumerate(placed):
        name = f"obj_{i:0{width}d}.off"
        save_off(objects_dir / name, mesh)
        box = mesh.bounding_box()
        boxes.append(box)
        entries.append(
            {
                "id": i,
                "file": f"{OBJECTS_DIR}/{name}",
                "source": sources[seed_index],
                "offset": [float(v) for v in offset],
                "facets": mesh.n_facets,
                "lo": [float(v) for v in box.lo],
                "hi": [float(v) for v in box.hi],
            }
        )

    lo = np.min([box.lo for box in boxes], axis=0)
    hi = np.max([box.hi for box in boxes], axis=0)
    manifest = {
        "count": len(entries),
        "total_facets": sum(entry["facets"] for entry in entries),
        "extent": {"lo": [float(v) for v in lo], "hi": [float(v) for v in hi]},
        "parameters": {
            "sources": sources,
            "spacing": spacing,
            "jitter": jitter,
            "rng_seed": rng_seed,
            "allow_overlap": allow_overlap,
            "scatter_within": str(scatter_within) if scatter_within else None,
        },
        "objects": entries,
    }
    with open(out / MANIFEST_NAME, "w") as f:
        json.dump(manifest, f, indent=2)
    logger.info(f"Generated {len(entries)} objects ({manifest['total_facets']} facets) in {out}")
    return manifest


def discover_off_files(path: Union[str, Path]) -> List[Path]:
    """
    OFF files of a dataset directory in object-id order.

    A directory with a manifest lists its objects in manifest order; any
    other directory contributes its ``*.off`` files sorted by name.

    Raises:
        ParameterError: If no OFF file is found
    """
    path = Path(path)
    manifest_path = path / MANIFEST_NAME
    if manifest_path.exists():
        with open(manifest_path, "r") as f:
            manifest = json.load(f)
        files = [path / entry["file"] for entry in manifest["objects"]]
    else:
        files = sorted(path.glob("*.off"))
        if not files and (path / OBJECTS_DIR).is_dir():
            files = sorted((path / OBJECTS_DIR).glob("*.off"))
    if not files:
        raise ParameterError(f"No OFF files found in {path}")
    return files


def load_meshes(path: Union[str, Path]) -> List[Tuple[str, Mesh]]:
    """Read every OFF file of a dataset directory as (name, mesh)."""
    return [(file.stem, read_off(file)) for file in discover_off_files(path)]
