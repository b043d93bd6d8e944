"""Manufactured-solution catalog against a symbolic differentiation oracle."""

import numpy as np
import pytest
import sympy as sp

from satnls.grid import build_grid
from satnls.mms import mms_case, mms_source
from satnls.nonlinearity import PhysicsParams


def test_unknown_case_rejected():
    grid = build_grid((0, 1, 0, 1), 8, 8, 1.0, 4)
    with pytest.raises(ValueError):
        mms_case("vortex", grid)


def test_zero_amplitude_gives_zero_source():
    grid = build_grid((0, 1, 0, 1), 8, 8, 1.0, 4)
    case = mms_case("sine", grid, amp=0.0)
    src = mms_source(case, PhysicsParams(1.0, 0.5))
    assert not np.any(src(0.3))


def test_sine_case_linear_reduction():
    # with lam = eps = 0 the forcing reduces to i u_t + lap u in closed form
    grid = build_grid((0, 1, 0, 1), 16, 16, 1.0, 8)
    omega = 2.0
    case = mms_case("sine", grid, omega=omega, p=1, q=1)
    src = mms_source(case, PhysicsParams(lam=0.0, epsilon=0.0))
    t = 0.4
    k2 = (np.pi) ** 2 + (np.pi) ** 2
    u = case.solution_values(t)
    expected = (omega - k2) * u  # i*(-i omega)u + (-k2)u
    np.testing.assert_allclose(src(t), expected, atol=1e-12)


def test_sine_case_boundary_zero():
    grid = build_grid((0, 2, -1, 1), 12, 12, 1.0, 8)
    case = mms_case("sine", grid)
    u = case.solution(0.7)
    assert not np.any(u.values[0, :]) and not np.any(u.values[:, -1])


def _sympy_oracle(case_params, grid, phys, pts, t_val):
    """Evaluate i u_t + lap u + lam f(|u|^2) u + i eps |u|^2 u symbolically."""
    x, y, t = sp.symbols("x y t", real=True)
    p = case_params
    ax = p["p"] * sp.pi / (grid.b - grid.a)
    ay = p["q"] * sp.pi / (grid.d - grid.c)
    W = (
        p["amp"]
        * sp.sin(ax * (x - grid.a))
        * sp.sin(ay * (y - grid.c))
        * sp.exp(-p["sigma"] * ((x - p["cx"]) ** 2 + (y - p["cy"]) ** 2))
    )
    T = sp.exp(sp.I * p["omega"] * t) * (1 + p["beta"] * sp.cos(p["nu"] * t))
    u = T * W
    rho = sp.Abs(u) ** 2
    rho = (sp.re(u)) ** 2 + (sp.im(u)) ** 2
    S = (
        sp.I * sp.diff(u, t)
        + sp.diff(u, x, 2)
        + sp.diff(u, y, 2)
        + phys.lam * rho / (1 + rho) * u
        + sp.I * phys.epsilon * rho * u
    )
    fn = sp.lambdify((x, y, t), S, modules="numpy")
    return np.array([fn(px, py, t_val) for px, py in pts], dtype=complex)


def test_gaussian_source_matches_symbolic_oracle():
    grid = build_grid((0.0, 1.0, 0.0, 1.0), 10, 10, 1.0, 8)
    phys = PhysicsParams(lam=1.0, epsilon=0.5)
    case = mms_case("gaussian", grid)
    src = mms_source(case, phys)
    t_val = 0.37
    values = src(t_val)

    rng = np.random.default_rng(12)
    idx = rng.integers(0, grid.J + 1, size=(100, 2))
    pts = [(grid.a + grid.dx * j, grid.c + grid.dy * k) for j, k in idx]
    oracle = _sympy_oracle(case.params, grid, phys, pts, t_val)
    got = np.array([values[j, k] for j, k in idx])
    scale = max(1.0, np.max(np.abs(oracle)))
    assert np.max(np.abs(got - oracle)) <= 1e-12 * scale


def test_gaussian_solution_time_dependence():
    grid = build_grid((0.0, 1.0, 0.0, 1.0), 8, 8, 1.0, 8)
    case = mms_case("gaussian", grid, beta=0.5, nu=1.1, omega=0.7)
    u0 = case.solution_values(0.0)
    u1 = case.solution_values(0.9)
    assert np.max(np.abs(u0 - u1)) > 1e-3  # amplitude genuinely modulates
    # profile is separable: moduli stay proportional
    mask = np.abs(u0) > 1e-12
    ratios = np.abs(u1[mask]) / np.abs(u0[mask])
    assert np.allclose(ratios, ratios.flat[0], rtol=1e-10)
