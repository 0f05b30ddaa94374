"""
Meshes, OFF I/O, level-of-detail ladders and per-facet deviation bounds.
"""

from .bounds import compute_facet_hd, compute_facet_ph, compute_level_hd, compute_level_ph
from .lod import DEFAULT_LODS, LodLadder, LodMesh, build_lod_ladder, validate_schedule
from .model import Mesh
from .off import OffParseError, parse_off, read_off, save_off, write_off

__all__ = [
    "DEFAULT_LODS",
    "LodLadder",
    "LodMesh",
    "Mesh",
    "OffParseError",
    "build_lod_ladder",
    "compute_facet_hd",
    "compute_facet_ph",
    "compute_level_hd",
    "compute_level_ph",
    "parse_off",
    "read_off",
    "save_off",
    "validate_schedule",
    "write_off",
]
