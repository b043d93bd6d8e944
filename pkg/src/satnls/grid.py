"""Uniform rectangular grids, finite-difference stencils, and discrete norms.

Fields live on the (J+1) x (K+1) node lattice of [a,b] x [c,d] and vanish on
the boundary (homogeneous Dirichlet).  All norms and inner products are the
mesh-weighted sums

    (u, v)   = dx*dy * sum_{j=0..J-1, k=0..K-1} u[j,k] * conj(v[j,k])
    <u, v>   = same sum restricted to interior nodes (1..J-1, 1..K-1)

which coincide for fields that vanish on the boundary; both are exposed.
Reductions go through ``np.sum`` on the row-major flattened range, a fixed
pairwise tree, so results are bit-stable from run to run and do not depend
on any threading configuration.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "Grid2D",
    "ComplexField",
    "RealField",
    "build_grid",
    "laplacian",
    "forward_diff",
    "centered_diff",
    "backward_diff",
    "inner",
    "inner_interior",
    "norm2",
    "norm2_interior",
    "norm_p",
    "norm_inf",
    "seminorm_h1",
]


class GridMismatchError(ValueError):
    """Raised when an operation mixes fields from different grids."""


@dataclass(frozen=True)
class Grid2D:
    """Uniform space-time partition of [a,b] x [c,d] x [0,T].

    The spatial lattice has (J+1) x (K+1) nodes at (a + j*dx, c + k*dy);
    time levels are t_n = n*tau with tau = T/N.
    """

    a: float
    b: float
    c: float
    d: float
    J: int
    K: int
    T: float
    N: int

    def __post_init__(self):
        if not (self.b > self.a and self.d > self.c):
            raise ValueError(f"degenerate bounds [{self.a},{self.b}]x[{self.c},{self.d}]")
        if self.T <= 0:
            raise ValueError(f"final time must be positive, got {self.T}")
        if self.J < 2 or self.K < 2 or self.N < 2:
            raise ValueError(f"need J,K,N >= 2, got J={self.J} K={self.K} N={self.N}")

    @property
    def dx(self) -> float:
        return (self.b - self.a) / self.J

    @property
    def dy(self) -> float:
        return (self.d - self.c) / self.K

    @property
    def tau(self) -> float:
        return self.T / self.N

    @property
    def shape(self) -> tuple[int, int]:
        return (self.J + 1, self.K + 1)

    @property
    def cell_area(self) -> float:
        return self.dx * self.dy

    def x(self) -> np.ndarray:
        """Node abscissae a + j*dx, length J+1."""
        return self.a + self.dx * np.arange(self.J + 1)

    def y(self) -> np.ndarray:
        return self.c + self.dy * np.arange(self.K + 1)

    def meshgrid(self) -> tuple[np.ndarray, np.ndarray]:
        """Full node coordinates with x varying along axis 0."""
        return np.meshgrid(self.x(), self.y(), indexing="ij")

    def t(self, n: int) -> float:
        return n * self.tau

    def time_index(self, t: float, rtol: float = 1e-9) -> int:
        """Index n with t_n = t; rejects times off the lattice."""
        n = int(round(t / self.tau))
        if n < 0 or n > self.N or abs(n * self.tau - t) > rtol * max(1.0, self.T):
            raise ValueError(f"t={t} is not a time level of this partition (tau={self.tau})")
        return n


def build_grid(bounds, J: int, K: int, T: float, N: int) -> Grid2D:
    """Grid over bounds=(a,b,c,d) with J,K spatial intervals and N time steps."""
    a, b, c, d = (float(v) for v in bounds)
    return Grid2D(a=a, b=b, c=c, d=d, J=int(J), K=int(K), T=float(T), N=int(N))


def _zero_boundary(values: np.ndarray) -> np.ndarray:
    values[0, :] = 0
    values[-1, :] = 0
    values[:, 0] = 0
    values[:, -1] = 0
    return values


class _Field:
    """Grid samples with zero boundary, shape (J+1, K+1), row-major."""

    dtype: type = np.complex128

    def __init__(self, grid: Grid2D, values: np.ndarray, *, project: bool = False):
        values = np.asarray(values, dtype=self.dtype)
        if values.shape != grid.shape:
            raise GridMismatchError(f"values shape {values.shape} != grid shape {grid.shape}")
        if not np.all(np.isfinite(values.view(np.float64))):
            raise ValueError("field contains non-finite entries")
        if project:
            values = _zero_boundary(values.copy())
        else:
            edges = (values[0, :], values[-1, :], values[:, 0], values[:, -1])
            if any(np.any(e != 0) for e in edges):
                raise ValueError("boundary values must be exactly zero (pass project=True to clip)")
        self.grid = grid
        self.values = values

    @classmethod
    def zeros(cls, grid: Grid2D):
        return cls(grid, np.zeros(grid.shape, dtype=cls.dtype))

    @classmethod
    def from_function(cls, grid: Grid2D, fn):
        """Sample fn(X, Y) on the nodes and clip the boundary to zero."""
        X, Y = grid.meshgrid()
        return cls(grid, np.asarray(fn(X, Y), dtype=cls.dtype), project=True)

    def copy(self):
        return type(self)(self.grid, self.values.copy())

    def interior(self) -> np.ndarray:
        return self.values[1:-1, 1:-1]

    def __repr__(self):
        return f"{type(self).__name__}(grid={self.grid.J}x{self.grid.K})"


class ComplexField(_Field):
    dtype = np.complex128


class RealField(_Field):
    dtype = np.float64

    def __init__(self, grid, values, *, project=False):
        values = np.asarray(values)
        if np.iscomplexobj(values):
            raise ValueError("RealField requires real-valued input")
        super().__init__(grid, values, project=project)


def _same_grid(u: _Field, v: _Field):
    if u.grid is not v.grid and u.grid != v.grid:
        raise GridMismatchError("fields live on different grids")


# ---------------------------------------------------------------------------
# stencils
# ---------------------------------------------------------------------------

def laplacian_values(values: np.ndarray, grid: Grid2D) -> np.ndarray:
    """5-point Laplacian of a raw node array; boundary rows/columns are zero."""
    from ._kernels import laplacian_interior

    return laplacian_interior(
        np.ascontiguousarray(values), 1.0 / grid.dx**2, 1.0 / grid.dy**2
    )


def laplacian(u: _Field) -> _Field:
    """Discrete Laplacian (second differences in x and y) on interior nodes."""
    return type(u)(u.grid, laplacian_values(u.values, u.grid))


def forward_diff_values(values: np.ndarray, grid: Grid2D) -> tuple[np.ndarray, np.ndarray]:
    """Forward quotients; row J of the x part and column K of the y part are zero."""
    gx = np.zeros_like(values)
    gy = np.zeros_like(values)
    gx[:-1, :] = (values[1:, :] - values[:-1, :]) / grid.dx
    gy[:, :-1] = (values[:, 1:] - values[:, :-1]) / grid.dy
    return gx, gy


def forward_diff(u: _Field) -> tuple[np.ndarray, np.ndarray]:
    """Forward difference quotients (x and y components) as raw arrays.

    The outputs do not vanish on the boundary, so they are returned as plain
    arrays rather than fields; norms below only consume indices 0..J-1, 0..K-1.
    """
    return forward_diff_values(u.values, u.grid)


def centered_diff(u: _Field) -> tuple[np.ndarray, np.ndarray]:
    """Centered quotients on interior nodes (unused by the scheme)."""
    gx = np.zeros_like(u.values)
    gy = np.zeros_like(u.values)
    gx[1:-1, :] = (u.values[2:, :] - u.values[:-2, :]) / (2.0 * u.grid.dx)
    gy[:, 1:-1] = (u.values[:, 2:] - u.values[:, :-2]) / (2.0 * u.grid.dy)
    return gx, gy


def backward_diff(u: _Field) -> tuple[np.ndarray, np.ndarray]:
    """Backward quotients for j,k >= 1 (unused by the scheme)."""
    gx = np.zeros_like(u.values)
    gy = np.zeros_like(u.values)
    gx[1:, :] = (u.values[1:, :] - u.values[:-1, :]) / u.grid.dx
    gy[:, 1:] = (u.values[:, 1:] - u.values[:, :-1]) / u.grid.dy
    return gx, gy


# ---------------------------------------------------------------------------
# inner products and norms
#
# All reductions run over the row-major flattened slice [0:J, 0:K] through
# np.sum (fixed pairwise summation), which pins the reduction order.
# ---------------------------------------------------------------------------

def _values_of(u) -> np.ndarray:
    return u.values if isinstance(u, _Field) else np.asarray(u)


def inner(u, v, grid: Grid2D | None = None) -> complex:
    """Mesh inner product dx*dy * sum_{j<J,k<K} u * conj(v)."""
    grid = grid or u.grid
    if isinstance(u, _Field) and isinstance(v, _Field):
        _same_grid(u, v)
    a = _values_of(u)[: grid.J, : grid.K]
    b = _values_of(v)[: grid.J, : grid.K]
    return grid.cell_area * complex(np.sum(a * np.conj(b)))


def inner_interior(u, v, grid: Grid2D | None = None) -> complex:
    """Inner product over interior nodes only; equals inner() on Dirichlet fields."""
    grid = grid or u.grid
    a = _values_of(u)[1 : grid.J, 1 : grid.K]
    b = _values_of(v)[1 : grid.J, 1 : grid.K]
    return grid.cell_area * complex(np.sum(a * np.conj(b)))


def norm2(u, grid: Grid2D | None = None) -> float:
    """Mesh L2 norm over the 0..J-1, 0..K-1 index range."""
    grid = grid or u.grid
    a = _values_of(u)[: grid.J, : grid.K]
    return float(np.sqrt(grid.cell_area * np.sum(np.abs(a) ** 2)))


def norm2_interior(u, grid: Grid2D | None = None) -> float:
    grid = grid or u.grid
    a = _values_of(u)[1 : grid.J, 1 : grid.K]
    return float(np.sqrt(grid.cell_area * np.sum(np.abs(a) ** 2)))


def norm_p(u, p: float, grid: Grid2D | None = None) -> float:
    """Mesh Lp norm, p >= 1."""
    if p < 1:
        raise ValueError(f"p must be >= 1, got {p}")
    grid = grid or u.grid
    a = _values_of(u)[: grid.J, : grid.K]
    return float((grid.cell_area * np.sum(np.abs(a) ** p)) ** (1.0 / p))


def norm_inf(u) -> float:
    """Sup norm over all nodes."""
    return float(np.max(np.abs(_values_of(u))))


def seminorm_h1(u, grid: Grid2D | None = None) -> float:
    """Discrete H1 seminorm: L2 norm of the forward-difference gradient."""
    grid = grid or u.grid
    gx, gy = forward_diff_values(_values_of(u), grid)
    gx = gx[: grid.J, : grid.K]
    gy = gy[: grid.J, : grid.K]
    s = np.sum(np.abs(gx) ** 2) + np.sum(np.abs(gy) ** 2)
    return float(np.sqrt(grid.cell_area * s))
