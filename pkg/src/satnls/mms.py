"""Manufactured solutions: closed-form fields with matching forcing terms.

Each catalog case is a separable profile u(x, y, t) = T(t) * W(x, y) with W
vanishing on the domain boundary.  The forcing that makes u solve the forced
equation is assembled from hand-derived closed forms of T, T', W, and lap W:

    S = i T' W + T lap W + lam * f(|u|^2) u + i eps |u|^2 u,   u = T W.

Cases:

    sine      W = amp * sin(p pi x^) * sin(q pi y^),  T = exp(-i omega t)
    gaussian  W = amp * sin(p pi x^) * sin(q pi y^)
                  * exp(-sigma ((x-cx)^2 + (y-cy)^2)),
              T = exp(i omega t) * (1 + beta cos(nu t))

with x^ = (x-a)/(b-a), y^ = (y-c)/(d-c).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .grid import ComplexField, Grid2D
from .nonlinearity import PhysicsParams, saturable

__all__ = ["MmsCase", "mms_case", "mms_source", "CATALOG"]


@dataclass(frozen=True)
class MmsCase:
    """Closed-form solution descriptor bound to a grid."""

    name: str
    grid: Grid2D
    params: dict = field(default_factory=dict)
    _profile: np.ndarray = None
    _profile_lap: np.ndarray = None
    _T: Callable[[float], complex] = None
    _Tdot: Callable[[float], complex] = None

    def solution_values(self, t: float) -> np.ndarray:
        return self._T(t) * self._profile

    def solution(self, t: float) -> ComplexField:
        return ComplexField(self.grid, self.solution_values(t), project=True)

    def initial_condition(self) -> ComplexField:
        return self.solution(0.0)


def _sine_case(grid: Grid2D, amp=1.0, p=1, q=1, omega=2.0) -> MmsCase:
    X, Y = grid.meshgrid()
    ax = p * np.pi / (grid.b - grid.a)
    ay = q * np.pi / (grid.d - grid.c)
    sx = np.sin(ax * (X - grid.a))
    sy = np.sin(ay * (Y - grid.c))
    profile = amp * sx * sy
    profile_lap = -(ax**2 + ay**2) * profile
    return MmsCase(
        name="sine",
        grid=grid,
        params={"amp": amp, "p": p, "q": q, "omega": omega},
        _profile=profile,
        _profile_lap=profile_lap,
        _T=lambda t: np.exp(-1j * omega * t),
        _Tdot=lambda t: -1j * omega * np.exp(-1j * omega * t),
    )


def _gaussian_case(
    grid: Grid2D,
    amp=1.0,
    p=1,
    q=1,
    sigma=8.0,
    cx=None,
    cy=None,
    omega=1.3,
    beta=0.4,
    nu=0.9,
) -> MmsCase:
    if cx is None:
        cx = grid.a + 0.55 * (grid.b - grid.a)
    if cy is None:
        cy = grid.c + 0.45 * (grid.d - grid.c)
    X, Y = grid.meshgrid()
    ax = p * np.pi / (grid.b - grid.a)
    ay = q * np.pi / (grid.d - grid.c)
    sx, cxs = np.sin(ax * (X - grid.a)), np.cos(ax * (X - grid.a))
    sy, cys = np.sin(ay * (Y - grid.c)), np.cos(ay * (Y - grid.c))
    rx, ry = X - cx, Y - cy
    env = np.exp(-sigma * (rx**2 + ry**2))
    profile = amp * sx * sy * env
    # product rule: lap(S E) = (lap S) E + 2 grad S . grad E + S lap E
    lap_s = -(ax**2 + ay**2) * sx * sy
    grad_dot = -2.0 * sigma * (ax * cxs * sy * rx + ay * sx * cys * ry)
    lap_env_factor = 4.0 * sigma**2 * (rx**2 + ry**2) - 4.0 * sigma
    profile_lap = amp * env * (lap_s + 2.0 * grad_dot + sx * sy * lap_env_factor)

    def T(t):
        return np.exp(1j * omega * t) * (1.0 + beta * np.cos(nu * t))

    def Tdot(t):
        return np.exp(1j * omega * t) * (
            1j * omega * (1.0 + beta * np.cos(nu * t)) - beta * nu * np.sin(nu * t)
        )

    return MmsCase(
        name="gaussian",
        grid=grid,
        params={"amp": amp, "p": p, "q": q, "sigma": sigma, "cx": cx, "cy": cy,
                "omega": omega, "beta": beta, "nu": nu},
        _profile=profile,
        _profile_lap=profile_lap,
        _T=T,
        _Tdot=Tdot,
    )


CATALOG = {"sine": _sine_case, "gaussian": _gaussian_case}


def mms_case(name: str, grid: Grid2D, **overrides) -> MmsCase:
    """Instantiate a catalog case on a grid; unknown names are rejected."""
    try:
        builder = CATALOG[name]
    except KeyError:
        raise ValueError(f"unknown manufactured case {name!r}; catalog has {sorted(CATALOG)}") from None
    return builder(grid, **overrides)


def mms_source(case: MmsCase, phys: PhysicsParams) -> Callable[[float], np.ndarray]:
    """Forcing sampler t -> node array for the forced evolution."""
    profile = case._profile
    profile_lap = case._profile_lap
    w2 = profile * profile  # profiles are real

    def source(t: float) -> np.ndarray:
        T = case._T(t)
        u = T * profile
        rho = (abs(T) ** 2) * w2
        return (
            1j * case._Tdot(t) * profile
            + T * profile_lap
            + phys.lam * saturable(rho) * u
            + 1j * phys.epsilon * rho * u
        )

    return source
