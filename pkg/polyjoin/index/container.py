"""
Binary index container.

Layout (little-endian)::

    magic        b"3DPJ1"
    header       u32 length + UTF-8 JSON (sorted keys)
    object count u32
    objects      u64 length + object section, repeated

Each object section holds the id, name, MBB, anchors, every ladder level
(vertices, facets, source facets, ancestor map, hd, ph) and the voxel set.
Arrays are written as a u32 element count followed by raw values.
"""

import json
import logging
import struct
from pathlib import Path
from typing import Any, Dict, List, Tuple, Union

import numpy as np

from ..geometry import Aabb
from ..mesh import LodLadder, LodMesh, Mesh
from .prepared import PreparedDataset, PreparedObject
from .voxels import VoxelSet

logger = logging.getLogger(__name__)

MAGIC = b"3DPJ1"
MAGIC_FAMILY = b"3DPJ"


class IndexFormatError(ValueError):
    """The container is truncated or corrupt."""

    def __init__(self, message: str, section: str):
        super().__init__(f"{section}: {message}")
        self.section = section


class IndexVersionError(ValueError):
    """The container was written by an incompatible format version."""


class _Writer:
    def __init__(self) -> None:
        self.parts: List[bytes] = []

    def u8(self, value: int) -> None:
        self.parts.append(struct.pack("<B", value))

    def u32(self, value: int) -> None:
        self.parts.append(struct.pack("<I", value))

    def u64(self, value: int) -> None:
        self.parts.append(struct.pack("<Q", value))

    def text(self, value: str) -> None:
        raw = value.encode("utf-8")
        self.u32(len(raw))
        self.parts.append(raw)

    def array(self, values: np.ndarray, dtype: str) -> None:
        arr = np.ascontiguousarray(values, dtype=dtype)
        self.u32(arr.size)
        self.parts.append(arr.tobytes())

    def getvalue(self) -> bytes:
        return b"".join(self.parts)


class _Reader:
    def __init__(self, data: bytes, section: str):
        self.data = data
        self.pos = 0
        self.section = section

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise IndexFormatError(
                f"truncated (need {n} bytes at offset {self.pos}, have {len(self.data) - self.pos})",
                self.section,
            )
        chunk = self.data[self.pos : self.pos + n]
        self.pos += n
        return chunk

    def u8(self) -> int:
        return struct.unpack("<B", self.take(1))[0]

    def u32(self) -> int:
        return struct.unpack("<I", self.take(4))[0]

    def u64(self) -> int:
        return struct.unpack("<Q", self.take(8))[0]

    def text(self) -> str:
        try:
            return self.take(self.u32()).decode("utf-8")
        except UnicodeDecodeError as e:
            raise IndexFormatError(f"invalid text: {e}", self.section) from e

    def array(self, dtype: str, width: int = 1) -> np.ndarray:
        n = self.u32()
        item = np.dtype(dtype).itemsize
        arr = np.frombuffer(self.take(n * item), dtype=dtype)
        native = arr.astype(np.dtype(dtype).newbyteorder("="))
        if width > 1:
            if n % width:
                raise IndexFormatError(f"array of {n} values is not a multiple of {width}", self.section)
            native = native.reshape(-1, width)
        return native

    def done(self) -> None:
        if self.pos != len(self.data):
            raise IndexFormatError(f"{len(self.data) - self.pos} trailing bytes", self.section)


def _write_object(obj: PreparedObject) -> bytes:
    w = _Writer()
    w.u32(obj.id)
    w.text(obj.name)
    w.array(obj.mbb.as_array(), "<f8")
    w.array(obj.anchor, "<f8")
    w.array(obj.surface_anchor, "<f8")
    w.u32(len(obj.ladder.levels))
    for lod in obj.ladder.levels:
        w.u32(lod.level)
        w.u32(lod.target)
        w.u8(int(lod.clamped))
        w.array(lod.mesh.vertices, "<f8")
        w.array(lod.mesh.facets, "<i8")
        w.array(lod.source_facets, "<i8")
        w.array(lod.ancestor_of_original, "<i8")
        w.array(lod.hd, "<f8")
        w.array(lod.ph, "<f8")
    voxels = obj.voxels
    w.u32(voxels.dropped)
    w.array(voxels.lo, "<f8")
    w.array(voxels.hi, "<f8")
    w.array(voxels.anchors, "<f8")
    for lod in obj.ladder.levels:
        w.array(voxels.facet_voxels[lod.level], "<i8")
    return w.getvalue()


def _check_length(values: np.ndarray, n: int, what: str, section: str) -> None:
    if values.shape[0] != n:
        raise IndexFormatError(f"{what} holds {values.shape[0]} entries, expected {n}", section)


def _check_ids(values: np.ndarray, limit: int, what: str, section: str) -> None:
    if values.size and (values.min() < 0 or values.max() >= limit):
        raise IndexFormatError(
            f"{what} ids must lie in [0, {limit}), found [{values.min()}, {values.max()}]", section
        )


def _check_ladder(levels: List[LodMesh], position: int) -> None:
    n_original = levels[-1].n_facets
    for lod in levels:
        section = f"object {position} level {lod.level}"
        n = lod.n_facets
        _check_length(lod.hd, n, "hd", section)
        _check_length(lod.ph, n, "ph", section)
        _check_length(lod.source_facets, n, "source facet map", section)
        _check_ids(lod.source_facets, n_original, "source facet", section)
        _check_length(lod.ancestor_of_original, n_original, "ancestor map", section)
        _check_ids(lod.ancestor_of_original, n, "ancestor", section)


def _check_voxels(
    lo: np.ndarray,
    hi: np.ndarray,
    anchors: np.ndarray,
    facet_voxels: Dict[int, np.ndarray],
    levels: List[LodMesh],
    section: str,
) -> None:
    n_voxels = lo.shape[0]
    if n_voxels == 0:
        raise IndexFormatError("object has no voxels", section)
    _check_length(hi, n_voxels, "voxel box", section)
    _check_length(anchors, n_voxels, "voxel anchor", section)
    for lod in levels:
        labels = facet_voxels[lod.level]
        _check_length(labels, lod.n_facets, f"level {lod.level} voxel map", section)
        _check_ids(labels, n_voxels, f"level {lod.level} voxel", section)


def _read_object(data: bytes, position: int) -> PreparedObject:
    r = _Reader(data, f"object {position}")
    object_id = r.u32()
    name = r.text()
    box = r.array("<f8")
    if box.size != 6:
        raise IndexFormatError("MBB must hold 6 values", r.section)
    anchor = r.array("<f8")
    surface = r.array("<f8")
    if anchor.size != 3 or surface.size != 3:
        raise IndexFormatError("anchors must hold 3 values", r.section)

    levels: List[LodMesh] = []
    for _ in range(r.u32()):
        level = r.u32()
        r.section = f"object {position} level {level}"
        target = r.u32()
        clamped = bool(r.u8())
        vertices = r.array("<f8", 3)
        facets = r.array("<i8", 3)
        source = r.array("<i8")
        ancestor = r.array("<i8")
        hd = r.array("<f8")
        ph = r.array("<f8")
        try:
            mesh = Mesh(vertices, facets)
        except ValueError as e:
            raise IndexFormatError(str(e), r.section) from e
        levels.append(LodMesh(level, mesh, hd, ph, ancestor, source, target, clamped))
    if not levels or levels[-1].level != 100:
        raise IndexFormatError("ladder must end at level 100", f"object {position}")
    _check_ladder(levels, position)
    ladder = LodLadder(levels)

    r.section = f"object {position} voxels"
    dropped = r.u32()
    lo = r.array("<f8", 3)
    hi = r.array("<f8", 3)
    anchors = r.array("<f8", 3)
    facet_voxels = {lod.level: r.array("<i8") for lod in levels}
    r.done()
    _check_voxels(lo, hi, anchors, facet_voxels, levels, r.section)
    voxels = VoxelSet(lo, hi, anchors, facet_voxels, dropped)
    return PreparedObject(object_id, name, Aabb(box[:3], box[3:]), anchor, surface, ladder, voxels)


def dump_index(dataset: PreparedDataset) -> bytes:
    """Serialize a dataset; equal datasets give identical bytes."""
    w = _Writer()
    w.parts.append(MAGIC)
    w.text(json.dumps(dataset.metadata, sort_keys=True, separators=(",", ":")))
    w.u32(len(dataset.objects))
    for obj in dataset.objects:
        section = _write_object(obj)
        w.u64(len(section))
        w.parts.append(section)
    return w.getvalue()


def parse_index(data: bytes) -> PreparedDataset:
    """
    Deserialize a container.

    Raises:
        IndexVersionError: If the magic names another format version
        IndexFormatError: If any section is truncated or malformed
    """
    if not data.startswith(MAGIC):
        if data.startswith(MAGIC_FAMILY):
            found = data[: len(MAGIC)].decode("ascii", errors="replace")
            raise IndexVersionError(f"Unsupported index version {found!r}, expected {MAGIC.decode()!r}")
        raise IndexFormatError("bad magic", "header")
    r = _Reader(data, "header")
    r.take(len(MAGIC))
    try:
        metadata: Dict[str, Any] = json.loads(r.text())
    except json.JSONDecodeError as e:
        raise IndexFormatError(f"invalid JSON: {e}", "header") from e
    count = r.u32()
    objects = []
    for position in range(count):
        r.section = f"object {position}"
        size = r.u64()
        objects.append(_read_object(r.take(size), position))
    r.section = "trailer"
    r.done()
    try:
        return PreparedDataset(objects, metadata)
    except ValueError as e:
        raise IndexFormatError(str(e), "dataset") from e


def save_index(path: Union[str, Path], dataset: PreparedDataset) -> int:
    """Write a dataset to ``path``; returns the byte count."""
    data = dump_index(dataset)
    Path(path).write_bytes(data)
    logger.info(f"Wrote index with {len(dataset)} objects to {path} ({len(data)} bytes)")
    return len(data)


def load_index(path: Union[str, Path]) -> PreparedDataset:
    """Read a dataset from ``path``."""
    dataset = parse_index(Path(path).read_bytes())
    logger.info(f"Loaded index with {len(dataset)} objects from {path}")
    return dataset


def index_summary(dataset: PreparedDataset) -> Tuple[int, int, int]:
    """(objects, original facets, voxels) of a dataset."""
    return len(dataset), dataset.n_facets, int(dataset.o2v[-1])
