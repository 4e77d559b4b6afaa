"""Shared reader/writer for the plain-text grid container.

Layout: a header line ``<TAG> v1``, a dimensions line ``<width> <height>``,
then width*height whitespace-separated reals in row-major order.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from ircount._fsutil import write_text_atomic


class GridFormatError(ValueError):
    """A grid file does not follow the expected container layout."""


def read_grid(path: str | Path, tag: str) -> tuple[int, int, np.ndarray]:
    """Read a grid file, returning (width, height, values) with values shaped (height, width)."""
    path = Path(path)
    try:
        text = path.read_text(encoding="ascii")
    except OSError as exc:
        raise GridFormatError(f"cannot read {path}: {exc}") from exc
    lines = text.splitlines()
    if not lines or lines[0].strip() != f"{tag} v1":
        raise GridFormatError(f"{path}: expected header '{tag} v1'")
    if len(lines) < 2:
        raise GridFormatError(f"{path}: missing dimensions line")
    dims = lines[1].split()
    if len(dims) != 2:
        raise GridFormatError(f"{path}: dimensions line must be '<width> <height>'")
    try:
        width, height = int(dims[0]), int(dims[1])
    except ValueError as exc:
        raise GridFormatError(f"{path}: non-integer dimensions {lines[1]!r}") from exc
    if width < 1 or height < 1:
        raise GridFormatError(f"{path}: dimensions must be positive, got {width} x {height}")
    tokens = "\n".join(lines[2:]).split()
    if len(tokens) != width * height:
        raise GridFormatError(
            f"{path}: expected {width * height} values, found {len(tokens)}"
        )
    try:
        values = np.array([float(t) for t in tokens], dtype=np.float64)
    except ValueError as exc:
        raise GridFormatError(f"{path}: non-numeric grid value: {exc}") from exc
    return width, height, values.reshape(height, width)


def format_grid(tag: str, values: np.ndarray) -> str:
    """Render a (height, width) array in the grid container format.

    Floats are rendered with repr so a read-back is bit-exact.
    """
    values = np.asarray(values, dtype=np.float64)
    height, width = values.shape
    rows = [f"{tag} v1", f"{width} {height}"]
    rows.extend(" ".join(repr(v) for v in row) for row in values.tolist())
    return "\n".join(rows) + "\n"


def write_grid(path: str | Path, tag: str, values: np.ndarray) -> None:
    """Write a grid file atomically (temp file + rename)."""
    write_text_atomic(path, format_grid(tag, values), encoding="ascii")
