"""Pulse construction, amplitude law, travelling profile, peak extraction."""

import numpy as np
import pytest

from satnls.grid import ComplexField, build_grid, norm2, norm_p
from satnls.groundstate import AitemConfig, sech_squared_radius_seed, solve_ground_state
from satnls.nonlinearity import PhysicsParams
from satnls.soliton import (
    SolitonParams,
    initial_condition,
    measure_amplitude,
    predicted_amplitude,
    predicted_modulus,
)
from satnls.ssfm import SpectralWorkspace

X0, Y0 = -5.0, 4.5
PAPER_SOL = SolitonParams(A0=1.0, x0=X0, y0=Y0, d1=2.0, d2=-1.8, alpha0=0.0)
PHYS = PhysicsParams(lam=1.0, epsilon=0.01)


@pytest.fixture(scope="module")
def gs_coarse():
    grid = build_grid((-40.0, 40.0, -40.0, 40.0), 160, 160, 5.0, 40)
    ws = SpectralWorkspace(grid)
    gs = solve_ground_state(
        sech_squared_radius_seed(grid, X0, Y0), AitemConfig(target_power=22.5), ws
    )
    return grid, gs


def test_params_validation():
    with pytest.raises(ValueError):
        SolitonParams(A0=0.0)
    with pytest.raises(ValueError):
        SolitonParams(d1=np.inf)
    assert SolitonParams(d1=2.0, d2=-1.8).half_velocity == (1.0, -0.9)


def test_initial_condition_at_rest_is_profile(gs_coarse):
    grid, gs = gs_coarse
    rest = SolitonParams(A0=1.0, x0=X0, y0=Y0, d1=0.0, d2=0.0, alpha0=0.0)
    u0 = initial_condition(gs, rest, grid)
    np.testing.assert_array_equal(u0.values.imag, 0.0)
    np.testing.assert_allclose(u0.values.real, gs.v.values, atol=1e-15)


def test_initial_condition_modulus_and_power(gs_coarse):
    grid, gs = gs_coarse
    u0 = initial_condition(gs, PAPER_SOL, grid)
    np.testing.assert_allclose(np.abs(u0.values), PAPER_SOL.A0 * gs.v.values, atol=1e-13)
    assert norm2(u0) ** 2 == pytest.approx(22.5, rel=1e-6)
    assert norm2(u0) ** 2 == pytest.approx(PAPER_SOL.A0**2 * gs.power, rel=1e-10)

    doubled = SolitonParams(A0=2.0, x0=X0, y0=Y0, d1=2.0, d2=-1.8)
    u2 = initial_condition(gs, doubled, grid)
    assert norm2(u2) ** 2 == pytest.approx(4.0 * gs.power, rel=1e-10)


def test_amplitude_law_limits(gs_coarse):
    grid, gs = gs_coarse
    u0 = initial_condition(gs, PAPER_SOL, grid)
    assert predicted_amplitude(0.0, u0, PAPER_SOL, PHYS) == pytest.approx(1.0, rel=1e-12)
    lossless = PhysicsParams(lam=1.0, epsilon=0.0)
    for t in (0.0, 1.0, 5.0):
        assert predicted_amplitude(t, u0, PAPER_SOL, lossless) == pytest.approx(1.0, rel=1e-14)
    with pytest.raises(ValueError):
        predicted_amplitude(-1.0, u0, PAPER_SOL, PHYS)


def test_amplitude_law_decay_profile(gs_coarse):
    grid, gs = gs_coarse
    u0 = initial_condition(gs, PAPER_SOL, grid)
    times = np.linspace(0, 5, 11)
    amps = [predicted_amplitude(t, u0, PAPER_SOL, PHYS) for t in times]
    assert all(b <= a for a, b in zip(amps, amps[1:]))
    # closed form against the measured launch norms
    ratio = norm_p(u0, 4) ** 4 / norm2(u0) ** 2
    expected = 1.0 / np.sqrt(1 + 2 * PHYS.epsilon * ratio * 5.0)
    assert amps[-1] == pytest.approx(expected, rel=1e-12)


def test_predicted_modulus_matches_initial_condition(gs_coarse):
    grid, gs = gs_coarse
    u0 = initial_condition(gs, PAPER_SOL, grid)
    mod0 = predicted_modulus(gs, PAPER_SOL, PHYS, 0.0)
    np.testing.assert_allclose(mod0.values, np.abs(u0.values), atol=1e-12)


def test_predicted_modulus_travels(gs_coarse):
    grid, gs = gs_coarse
    t = 5.0
    mod = predicted_modulus(gs, PAPER_SOL, PHYS, t)
    j, k = np.unravel_index(np.argmax(mod.values), mod.values.shape)
    cx, cy = PAPER_SOL.center(t)
    assert cx == pytest.approx(5.0) and cy == pytest.approx(-4.5)
    assert abs(grid.a + j * grid.dx - cx) <= grid.dx
    assert abs(grid.c + k * grid.dy - cy) <= grid.dy


def test_predicted_modulus_center_exit_rejected(gs_coarse):
    grid, gs = gs_coarse
    with pytest.raises(ValueError):
        predicted_modulus(gs, PAPER_SOL, PHYS, 30.0)  # center would sit at x=55


def test_measure_amplitude_basics(gs_coarse):
    grid, gs = gs_coarse
    u0 = initial_condition(gs, PAPER_SOL, grid)
    assert measure_amplitude(u0, gs) == pytest.approx(1.0, rel=1e-14)
    u2 = ComplexField(grid, 2.0 * u0.values)
    assert measure_amplitude(u2, gs) == pytest.approx(2.0, rel=1e-14)
    rotated = ComplexField(grid, np.exp(1j * 1.234) * u0.values)
    assert measure_amplitude(rotated, gs) == measure_amplitude(u0, gs)


def test_bilinear_shift_exact_on_lattice(gs_coarse):
    grid, gs = gs_coarse
    # a one-cell lattice shift must reproduce the array shift exactly
    from satnls.soliton import _bilinear_shifted

    shifted = _bilinear_shifted(gs.v.values, grid, grid.dx, 0.0)
    np.testing.assert_allclose(shifted[1:, :], gs.v.values[:-1, :], atol=1e-14)
    # sub-cell shifts interpolate between neighbours
    half = _bilinear_shifted(gs.v.values, grid, 0.5 * grid.dx, 0.0)
    mid = 0.5 * (gs.v.values[1:, :] + gs.v.values[:-1, :])
    np.testing.assert_allclose(half[1:, :], mid, atol=1e-12)
