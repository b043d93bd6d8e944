"""Saturable nonlinearity, its potential, midpoint averages, and energies.

The response function is f(s) = s/(1+s) with antiderivative
F(rho) = rho - log(1+rho).  The implicit midpoint scheme couples adjacent
time levels through two symmetric averages of field values z, w:

    sat_average(z, w)   = Q(|z|^2, |w|^2) * (z+w)/2
    cubic_average(z, w) = |(z+w)/2|^2 * (z+w)/2

where Q(a, b) = (F(a)-F(b))/(a-b), extended by continuity (Q(a,a) = f(a)).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import grid as g

__all__ = [
    "PhysicsParams",
    "saturable",
    "saturable_potential",
    "potential_quotient",
    "sat_average",
    "cubic_average",
    "energy",
    "gradient_energy",
]

# Below this relative gap, (F(a)-F(b))/(a-b) switches to the midpoint value
# f((a+b)/2); the midpoint is second-order accurate in (a-b) and avoids the
# cancellation in F(a)-F(b).
QUOTIENT_SWITCH = 1e-7


@dataclass(frozen=True)
class PhysicsParams:
    """Coupling of the saturable term (lam) and cubic-loss coefficient (epsilon >= 0)."""

    lam: float = 1.0
    epsilon: float = 0.01

    def __post_init__(self):
        if not (np.isfinite(self.lam) and np.isfinite(self.epsilon)):
            raise ValueError("physics parameters must be finite")
        if self.epsilon < 0:
            raise ValueError(f"loss coefficient must be >= 0, got {self.epsilon}")


def _maybe_scalar(out: np.ndarray, scalar_in: bool):
    return float(out) if scalar_in else out


def _check_nonnegative(s: np.ndarray, name: str):
    if np.any(s < 0):
        raise ValueError(f"{name} must be >= 0")


def saturable(s):
    """f(s) = s/(1+s) for s >= 0; values lie in [0, 1)."""
    s_arr = np.asarray(s, dtype=np.float64)
    _check_nonnegative(s_arr, "s")
    return _maybe_scalar(s_arr / (1.0 + s_arr), np.isscalar(s) or s_arr.ndim == 0)


def saturable_potential(rho):
    """F(rho) = rho - log(1+rho), evaluated through log1p."""
    r = np.asarray(rho, dtype=np.float64)
    _check_nonnegative(r, "rho")
    return _maybe_scalar(r - np.log1p(r), np.isscalar(rho) or r.ndim == 0)


def potential_quotient(a, b):
    """(F(a)-F(b))/(a-b) with the removable singularity filled by f((a+b)/2).

    Equals the average of f along the segment [b, a]; always within [0, 1).
    Away from the switch region the difference F(a)-F(b) is formed as
    (a-b) - log1p((a-b)/(1+b)), which keeps the cancellation under control.
    """
    a_arr = np.asarray(a, dtype=np.float64)
    b_arr = np.asarray(b, dtype=np.float64)
    _check_nonnegative(a_arr, "a")
    _check_nonnegative(b_arr, "b")
    scalar_in = (np.isscalar(a) or a_arr.ndim == 0) and (np.isscalar(b) or b_arr.ndim == 0)
    a_arr, b_arr = np.broadcast_arrays(a_arr, b_arr)
    diff = a_arr - b_arr
    near = np.abs(diff) <= QUOTIENT_SWITCH * np.maximum(1.0, np.maximum(a_arr, b_arr))
    safe = np.where(near, 1.0, diff)
    with np.errstate(divide="ignore", invalid="ignore"):
        quotient = 1.0 - np.log1p(diff / (1.0 + b_arr)) / safe
    out = np.where(near, saturable((a_arr + b_arr) / 2.0), quotient)
    return _maybe_scalar(out, scalar_in)


def sat_average(z, w):
    """Midpoint average weighted by the potential quotient of the intensities."""
    z_arr = np.asarray(z, dtype=np.complex128)
    w_arr = np.asarray(w, dtype=np.complex128)
    scalar_in = (np.isscalar(z) or z_arr.ndim == 0) and (np.isscalar(w) or w_arr.ndim == 0)
    q = potential_quotient(np.abs(z_arr) ** 2, np.abs(w_arr) ** 2)
    out = q * (z_arr + w_arr) / 2.0
    return complex(out) if scalar_in else out


def cubic_average(z, w):
    """|m|^2 * m with m the midpoint (z+w)/2."""
    z_arr = np.asarray(z, dtype=np.complex128)
    w_arr = np.asarray(w, dtype=np.complex128)
    scalar_in = (np.isscalar(z) or z_arr.ndim == 0) and (np.isscalar(w) or w_arr.ndim == 0)
    m = (z_arr + w_arr) / 2.0
    out = (m.real**2 + m.imag**2) * m
    return complex(out) if scalar_in else out


def energy(u: g.ComplexField, params: PhysicsParams) -> float:
    """Gradient energy minus lam times the mesh L1 norm of F(|u|^2)."""
    pot = saturable_potential(np.abs(u.values) ** 2)
    pot_l1 = u.grid.cell_area * float(np.sum(pot[: u.grid.J, : u.grid.K]))
    return g.seminorm_h1(u) ** 2 - params.lam * pot_l1


def gradient_energy(u: g.ComplexField) -> float:
    """Squared H1 seminorm of the field."""
    return g.seminorm_h1(u) ** 2
