"""
Object File Format (OFF) reading and writing.
"""

import logging
from pathlib import Path
from typing import List, Optional, Tuple, Union

import numpy as np

from .model import Mesh

logger = logging.getLogger(__name__)


class OffParseError(ValueError):
    """Malformed OFF input; ``line`` is the 1-based source line."""

    def __init__(self, message: str, line: int, source: Optional[str] = None):
        prefix = f"{source}: " if source else ""
        super().__init__(f"{prefix}line {line}: {message}")
        self.reason = message
        self.line = line
        self.source = source


def _content_lines(text: str) -> List[Tuple[int, List[str]]]:
    lines = []
    for number, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.split("#", 1)[0].strip()
        if stripped:
            lines.append((number, stripped.split()))
    return lines


def parse_off(data: Union[bytes, str]) -> Mesh:
    """
    Parse an OFF document into a triangle mesh.

    Polygons with more than three vertices are fan-triangulated as
    ``(v0, vi, vi+1)``. Comments and blank lines are skipped.

    Args:
        data: OFF document as bytes or text

    Returns:
        Parsed mesh

    Raises:
        OffParseError: On a malformed header, bad counts, out-of-range indices
            or non-numeric tokens
    """
    text = data.decode("utf-8") if isinstance(data, bytes) else data
    lines = _content_lines(text)
    if not lines:
        raise OffParseError("empty document", 1)

    number, tokens = lines[0]
    if tokens[0] != "OFF":
        raise OffParseError(f"expected 'OFF' header, got '{tokens[0]}'", number)
    cursor = 1
    counts = tokens[1:]
    if not counts:
        if len(lines) < 2:
            raise OffParseError("missing counts line", number)
        number, counts = lines[1]
        cursor = 2
    try:
        n_vertices, n_faces = int(counts[0]), int(counts[1])
    except (ValueError, IndexError):
        raise OffParseError("counts line must hold vertex and face counts", number) from None
    if n_vertices < 0 or n_faces < 0:
        raise OffParseError("negative element count", number)

    if len(lines) - cursor < n_vertices + n_faces:
        last = lines[-1][0]
        raise OffParseError(
            f"count mismatch: expected {n_vertices} vertices and {n_faces} faces", last
        )

    vertices = np.empty((n_vertices, 3), dtype=np.float64)
    for i in range(n_vertices):
        number, tokens = lines[cursor + i]
        if len(tokens) < 3:
            raise OffParseError("vertex line needs 3 coordinates", number)
        try:
            vertices[i] = [float(t) for t in tokens[:3]]
        except ValueError:
            raise OffParseError(f"non-numeric vertex token in {tokens[:3]}", number) from None
        if not np.all(np.isfinite(vertices[i])):
            raise OffParseError("non-finite vertex coordinate", number)
    cursor += n_vertices

    facets: List[Tuple[int, int, int]] = []
    for i in range(n_faces):
        number, tokens = lines[cursor + i]
        try:
            size = int(tokens[0])
            indices = [int(t) for t in tokens[1 : 1 + size]]
        except ValueError:
            raise OffParseError("non-numeric face token", number) from None
        if size < 3 or len(indices) != size:
            raise OffParseError(f"face declares {size} vertices, found {len(indices)}", number)
        for index in indices:
            if index < 0 or index >= n_vertices:
                raise OffParseError(
                    f"vertex index {index} out of range for {n_vertices} vertices", number
                )
        for k in range(1, size - 1):
            facets.append((indices[0], indices[k], indices[k + 1]))

    if len(lines) > cursor + n_faces:
        logger.debug(f"Ignoring {len(lines) - cursor - n_faces} trailing OFF lines")

    return Mesh(vertices, np.array(facets, dtype=np.int64).reshape(-1, 3))


def write_off(mesh: Mesh) -> bytes:
    """
    Serialize a mesh as OFF text.

    Coordinates are written with ``repr`` so parsing them back yields the same
    float64 values.
    """
    out = ["OFF", f"{mesh.n_vertices} {mesh.n_facets} 0"]
    for x, y, z in mesh.vertices.tolist():
        out.append(f"{x!r} {y!r} {z!r}")
    for a, b, c in mesh.facets.tolist():
        out.append(f"3 {a} {b} {c}")
    return ("\n".join(out) + "\n").encode("utf-8")


def read_off(path: Union[str, Path]) -> Mesh:
    """Read an OFF file; parse errors are re-raised with the file name."""
    path = Path(path)
    try:
        return parse_off(path.read_bytes())
    except OffParseError as e:
        raise OffParseError(e.reason, e.line, source=path.name) from None


def save_off(path: Union[str, Path], mesh: Mesh) -> None:
    Path(path).write_bytes(write_off(mesh))
