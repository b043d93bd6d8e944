"""FLD1 snapshot format: text header + raw little-endian complex samples.

Layout::

    FLD1\n
    <nx> <ny>\n
    <a> <b> <c> <d>\n
    <time>\n
    <nx*ny little-endian float64 pairs (re, im), row-major in j then k>

nx = J+1 and ny = K+1 count nodes per axis, x varies slowest.  Header floats
are written with repr precision so a write/read round trip is exact.
"""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np

from .grid import ComplexField, Grid2D

__all__ = ["Fld1Header", "write_field", "read_field", "read_header"]

_MAGIC = b"FLD1"


@dataclass(frozen=True)
class Fld1Header:
    nx: int
    ny: int
    bounds: tuple[float, float, float, float]
    time: float


class Fld1FormatError(ValueError):
    """Raised on malformed FLD1 files."""


def write_field(path, field: ComplexField, time: float) -> None:
    """Write a field snapshot taken at the given time."""
    g = field.grid
    header = "\n".join(
        [
            "FLD1",
            f"{g.J + 1} {g.K + 1}",
            f"{g.a!r} {g.b!r} {g.c!r} {g.d!r}",
            f"{float(time)!r}",
            "",
        ]
    )
    data = np.ascontiguousarray(field.values, dtype="<c16")
    with open(path, "wb") as fh:
        fh.write(header.encode("ascii"))
        fh.write(data.tobytes())


def _read_line(fh: io.BufferedReader) -> str:
    raw = fh.readline()
    if not raw:
        raise Fld1FormatError("truncated FLD1 header")
    return raw.decode("ascii").strip()


def read_header(path) -> Fld1Header:
    with open(path, "rb") as fh:
        return _parse_header(fh)


def _parse_header(fh) -> Fld1Header:
    if _read_line(fh) != "FLD1":
        raise Fld1FormatError("missing FLD1 magic line")
    try:
        nx, ny = (int(v) for v in _read_line(fh).split())
        bounds = tuple(float(v) for v in _read_line(fh).split())
        time = float(_read_line(fh))
    except ValueError as exc:
        raise Fld1FormatError(f"bad FLD1 header: {exc}") from None
    if len(bounds) != 4 or nx < 2 or ny < 2:
        raise Fld1FormatError("bad FLD1 header dimensions")
    return Fld1Header(nx=nx, ny=ny, bounds=bounds, time=time)


def read_field(path, grid: Grid2D | None = None):
    """Read a snapshot.

    Returns (values, header) where values is a complex (nx, ny) array.  When a
    grid is supplied the shape and bounds are checked against it and the values
    are wrapped in a ComplexField on that grid.
    """
    with open(path, "rb") as fh:
        header = _parse_header(fh)
        count = header.nx * header.ny
        data = np.frombuffer(fh.read(count * 16), dtype="<c16")
    if data.size != count:
        raise Fld1FormatError(f"expected {count} samples, file holds {data.size}")
    values = data.reshape(header.nx, header.ny).astype(np.complex128)
    if grid is None:
        return values, header
    if (header.nx, header.ny) != grid.shape:
        raise Fld1FormatError(f"snapshot is {header.nx}x{header.ny}, grid is {grid.shape}")
    if any(abs(hv - gv) > 1e-12 for hv, gv in zip(header.bounds, (grid.a, grid.b, grid.c, grid.d))):
        raise Fld1FormatError(f"snapshot bounds {header.bounds} do not match grid")
    return ComplexField(grid, values), header
