"""FLD1 snapshot round trips and malformed-file handling."""

import numpy as np
import pytest

from satnls.fieldio import Fld1FormatError, read_field, read_header, write_field
from satnls.grid import ComplexField, build_grid


def test_round_trip_exact(tmp_path):
    g = build_grid((-2.5, 3.5, 0.0, 1.0), 6, 9, 1.0, 4)
    rng = np.random.default_rng(0)
    vals = rng.standard_normal(g.shape) + 1j * rng.standard_normal(g.shape)
    f = ComplexField(g, vals, project=True)
    path = tmp_path / "snap.fld"
    write_field(path, f, time=0.75)

    header = read_header(path)
    assert (header.nx, header.ny) == g.shape
    assert header.bounds == (-2.5, 3.5, 0.0, 1.0)
    assert header.time == 0.75

    back, header2 = read_field(path, g)
    assert header2 == header
    assert np.array_equal(back.values, f.values)


def test_read_without_grid(tmp_path):
    g = build_grid((0, 1, 0, 1), 4, 4, 1.0, 4)
    f = ComplexField.zeros(g)
    path = tmp_path / "zero.fld"
    write_field(path, f, time=0.0)
    values, header = read_field(path)
    assert values.shape == g.shape and not np.any(values)


def test_grid_mismatch_detected(tmp_path):
    g = build_grid((0, 1, 0, 1), 4, 4, 1.0, 4)
    other = build_grid((0, 1, 0, 1), 5, 4, 1.0, 4)
    path = tmp_path / "snap.fld"
    write_field(path, ComplexField.zeros(g), time=0.0)
    with pytest.raises(Fld1FormatError):
        read_field(path, other)
    shifted = build_grid((0, 2, 0, 1), 4, 4, 1.0, 4)
    with pytest.raises(Fld1FormatError):
        read_field(path, shifted)


def test_corrupt_files_rejected(tmp_path):
    bad_magic = tmp_path / "bad.fld"
    bad_magic.write_bytes(b"NOPE\n4 4\n0 1 0 1\n0.0\n")
    with pytest.raises(Fld1FormatError):
        read_header(bad_magic)

    truncated = tmp_path / "short.fld"
    g = build_grid((0, 1, 0, 1), 4, 4, 1.0, 4)
    write_field(truncated, ComplexField.zeros(g), time=0.0)
    data = truncated.read_bytes()
    truncated.write_bytes(data[:-16])
    with pytest.raises(Fld1FormatError):
        read_field(truncated)
