"""Implicit midpoint (Crank-Nicolson) finite-difference time stepper.

One step advances U^n to U^{n+1} through the nonlinear system

    i (U^{n+1}-U^n)/tau + lap(U^{n+1/2}) + lam*sat_average + i*eps*cubic_average = 0

on interior nodes, linearized by a fixed-point sweep: coefficients are frozen
at the previous sweep iterate, which leaves one complex linear solve

    [i/tau + lap/2 + diag(c)/2] W = [i/tau - lap/2 - diag(c)/2] U^n  (+ forcing)

with c = lam*Q(|U^{n,l}|^2, |U^n|^2) + i*eps*|(U^{n,l}+U^n)/2|^2 per node.
The solve is GMRES, matrix-free through the 5-point stencil, preconditioned
by the constant-coefficient part inverted exactly with fast sine transforms.
The sweep stops once ||U^{n,l+1}-U^{n,l}|| / ||U^{n,l+1}|| <= fp_tol.
"""

from __future__ import annotations

import csv
import time
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.fft as sfft
from scipy.sparse.linalg import LinearOperator, gmres

from .grid import ComplexField, Grid2D, GridMismatchError, laplacian_values, norm2
from .nonlinearity import PhysicsParams, cubic_average, energy, potential_quotient, sat_average

__all__ = [
    "CnfdRunConfig",
    "StepDiagnostics",
    "EvolutionResult",
    "StepSystem",
    "FixedPointError",
    "LinearSolverError",
    "MassMonotonicityWarning",
    "build_step_system",
    "solve_linear",
    "cnfd_residual",
    "cnfd_step",
    "run_cnfd",
    "write_diagnostics_csv",
]


class FixedPointError(RuntimeError):
    """Fixed-point sweep failed to reach fp_tol within fp_max_iters."""

    def __init__(self, message, residual=None, diagnostics=None, snapshots=None):
        super().__init__(message)
        self.residual = residual
        self.diagnostics = diagnostics or []
        self.snapshots = snapshots or []


class LinearSolverError(RuntimeError):
    """Inner Krylov solve failed to reach its residual target."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class MassMonotonicityWarning(UserWarning):
    """Accepted step increased the mass beyond the iteration slack."""


@dataclass(frozen=True)
class CnfdRunConfig:
    """Physics, grid, and solver tolerances for one stepping session."""

    grid: Grid2D
    params: PhysicsParams
    fp_tol: float = 1e-8
    fp_max_iters: int = 50
    lin_tol: float = 1e-10
    lin_max_iters: int = 0  # 0 -> 10 * max(J, K)
    snapshot_times: tuple[float, ...] = ()
    threads: int = 1

    def __post_init__(self):
        if not (0 < self.fp_tol < 1 and 0 < self.lin_tol < 1):
            raise ValueError("tolerances must lie in (0, 1)")
        if self.lin_tol > self.fp_tol / 10:
            raise ValueError("lin_tol must be <= fp_tol/10 so inner solves do not pollute the sweep")
        if self.fp_max_iters < 1 or (self.lin_max_iters < 0):
            raise ValueError("iteration limits must be >= 1")

    @property
    def linear_iteration_cap(self) -> int:
        return self.lin_max_iters or 10 * max(self.grid.J, self.grid.K)


@dataclass
class StepDiagnostics:
    n: int
    t: float
    fp_iters: int
    fp_residual: float
    mass: float
    energy: float
    wall_ms: float
    max_abs: float = 0.0
    lin_iters: int = 0


@dataclass
class EvolutionResult:
    grid: Grid2D
    snapshots: list[tuple[float, ComplexField]] = field(default_factory=list)
    diagnostics: list[StepDiagnostics] = field(default_factory=list)

    def snapshot(self, t: float) -> ComplexField:
        for ts, f in self.snapshots:
            if abs(ts - t) <= 1e-9 * max(1.0, abs(t)):
                return f
        raise KeyError(f"no snapshot stored at t={t}")

    @property
    def times(self) -> list[float]:
        return [ts for ts, _ in self.snapshots]


# ---------------------------------------------------------------------------
# constant-coefficient preconditioner: (i/tau + lap/2 + shift/2) inverted by
# sine transforms, which diagonalize the Dirichlet 5-point Laplacian exactly
# ---------------------------------------------------------------------------

class _SineCache:
    _eigs: dict[tuple, np.ndarray] = {}

    @classmethod
    def laplacian_eigs(cls, grid: Grid2D) -> np.ndarray:
        key = (grid.J, grid.K, grid.dx, grid.dy)
        eig = cls._eigs.get(key)
        if eig is None:
            ex = -4.0 / grid.dx**2 * np.sin(np.arange(1, grid.J) * np.pi / (2 * grid.J)) ** 2
            ey = -4.0 / grid.dy**2 * np.sin(np.arange(1, grid.K) * np.pi / (2 * grid.K)) ** 2
            eig = ex[:, None] + ey[None, :]
            cls._eigs[key] = eig
        return eig


@dataclass
class StepSystem:
    """Frozen-coefficient linear system of one sweep iteration."""

    grid: Grid2D
    tau: float
    diag: np.ndarray  # complex node array, only interior entries are used
    rhs: np.ndarray  # complex node array, zero on the boundary
    threads: int = 1

    def apply(self, w: np.ndarray) -> np.ndarray:
        """Operator action (i/tau) W + lap(W)/2 + diag*W/2 on a node array."""
        out = np.zeros(self.grid.shape, dtype=np.complex128)
        out[1:-1, 1:-1] = self._apply_interior(np.ascontiguousarray(w[1:-1, 1:-1]))
        return out

    def _apply_interior(self, w_int: np.ndarray) -> np.ndarray:
        return cn_operator_interior(
            np.ascontiguousarray(w_int),
            self._diag_interior,
            1.0 / self.grid.dx**2,
            1.0 / self.grid.dy**2,
            1.0 / self.tau,
        )

    @property
    def _diag_interior(self) -> np.ndarray:
        return np.ascontiguousarray(self.diag[1:-1, 1:-1])

    def preconditioner(self):
        """Exact inverse of i/tau + lap/2 + mean(diag)/2 on interior arrays."""
        eig = _SineCache.laplacian_eigs(self.grid)
        shift = complex(np.mean(self.diag[1:-1, 1:-1]))
        denom = 1j / self.tau + 0.5 * (eig + shift)
        workers = self.threads

        def minv(r_int: np.ndarray) -> np.ndarray:
            coef = sfft.dstn(r_int, type=1, workers=workers)
            return sfft.idstn(coef / denom, type=1, workers=workers)

        return minv

    def dense(self) -> tuple[np.ndarray, np.ndarray]:
        """Explicit matrix over row-major interior unknowns; small grids only."""
        J, K = self.grid.J, self.grid.K
        m = (J - 1) * (K - 1)
        if m > 64 * 64:
            raise ValueError(f"dense assembly capped at 64x64 interiors, got {m} unknowns")
        A = np.zeros((m, m), dtype=np.complex128)
        basis = np.zeros((J - 1, K - 1), dtype=np.complex128)
        for idx in range(m):
            basis.flat[idx] = 1.0
            A[:, idx] = self._apply_interior(basis).ravel()
            basis.flat[idx] = 0.0
        return A, self.rhs[1:-1, 1:-1].ravel().copy()


def build_step_system(
    u_prev: ComplexField | np.ndarray,
    u_iter: ComplexField | np.ndarray,
    cfg: CnfdRunConfig,
    forcing: np.ndarray | None = None,
) -> StepSystem:
    """Assemble the sweep system from the step start u_prev and iterate u_iter.

    forcing, when given, is added to the right-hand side (midpoint-in-time
    source evaluation is the caller's responsibility).
    """
    un = u_prev.values if isinstance(u_prev, ComplexField) else u_prev
    ul = u_iter.values if isinstance(u_iter, ComplexField) else u_iter
    if isinstance(u_prev, ComplexField) and u_prev.grid != cfg.grid:
        raise GridMismatchError("u_prev grid does not match config grid")
    if un.shape != cfg.grid.shape or ul.shape != cfg.grid.shape:
        raise GridMismatchError("field shapes do not match config grid")

    quot = potential_quotient(np.abs(ul) ** 2, np.abs(un) ** 2)
    mid = 0.5 * (ul + un)
    diag = cfg.params.lam * quot + 1j * cfg.params.epsilon * (mid.real**2 + mid.imag**2)

    tau = cfg.grid.tau
    rhs = -0.5 * laplacian_values(un, cfg.grid)
    body = rhs[1:-1, 1:-1]
    body += (1j / tau) * un[1:-1, 1:-1]
    body -= 0.5 * diag[1:-1, 1:-1] * un[1:-1, 1:-1]
    if forcing is not None:
        body += forcing[1:-1, 1:-1]
    return StepSystem(grid=cfg.grid, tau=tau, diag=diag, rhs=rhs, threads=cfg.threads)


def solve_linear(
    system: StepSystem,
    tol: float,
    max_iters: int,
    x0: np.ndarray | None = None,
) -> tuple[np.ndarray, int]:
    """Solve the step system to relative residual tol; returns (node array, iters).

    Convergence is verified on the true residual ||A W - b|| / ||b||; GMRES is
    retried with a tighter preconditioned target if the first pass falls short.
    """
    g = system.grid
    b_int = system.rhs[1:-1, 1:-1]
    b_norm = float(np.linalg.norm(b_int))
    out = np.zeros(g.shape, dtype=np.complex128)
    if b_norm == 0.0:
        return out, 0

    shape_int = (g.J - 1, g.K - 1)
    m = shape_int[0] * shape_int[1]
    minv = system.preconditioner()

    def matvec(v):
        return system._apply_interior(v.reshape(shape_int)).ravel()

    def psolve(v):
        return minv(v.reshape(shape_int)).ravel()

    A = LinearOperator((m, m), matvec=matvec, dtype=np.complex128)
    M = LinearOperator((m, m), matvec=psolve, dtype=np.complex128)

    iters = 0

    def count(_):
        nonlocal iters
        iters += 1

    x = x0[1:-1, 1:-1].ravel() if x0 is not None else None
    rtol = 0.1 * tol
    for _ in range(3):
        x, info = gmres(A, b_int.ravel(), x0=x, rtol=rtol, atol=0.0,
                        restart=30, maxiter=max_iters, M=M, callback=count,
                        callback_type="pr_norm")
        residual = float(np.linalg.norm(matvec(x) - b_int.ravel())) / b_norm
        if residual <= tol:
            out[1:-1, 1:-1] = x.reshape(shape_int)
            return out, iters
        if info > 0:
            break
        rtol *= 0.01
    raise LinearSolverError(
        f"linear solve stalled at relative residual {residual:.3e} (target {tol:.1e})",
        residual=residual,
    )


# ---------------------------------------------------------------------------
# residual, step, run
# ---------------------------------------------------------------------------

def cnfd_residual(
    u_next: ComplexField,
    u_prev: ComplexField,
    cfg: CnfdRunConfig,
    forcing: np.ndarray | None = None,
) -> ComplexField:
    """Pointwise defect of the nonlinear step equations; zero on the boundary."""
    if u_next.grid != cfg.grid or u_prev.grid != cfg.grid:
        raise GridMismatchError("residual fields must live on the config grid")
    vn1, vn = u_next.values, u_prev.values
    mid = 0.5 * (vn1 + vn)
    res = laplacian_values(mid, cfg.grid)
    body = res[1:-1, 1:-1]
    body += 1j * (vn1[1:-1, 1:-1] - vn[1:-1, 1:-1]) / cfg.grid.tau
    body += cfg.params.lam * sat_average(vn1[1:-1, 1:-1], vn[1:-1, 1:-1])
    body += 1j * cfg.params.epsilon * cubic_average(vn1[1:-1, 1:-1], vn[1:-1, 1:-1])
    if forcing is not None:
        body -= forcing[1:-1, 1:-1]
    return ComplexField(cfg.grid, res)


def _step_values(
    un: np.ndarray,
    cfg: CnfdRunConfig,
    forcing: np.ndarray | None = None,
) -> tuple[np.ndarray, int, float, int]:
    """One implicit step on raw node arrays; returns (u_next, sweeps, residual, lin_iters)."""
    ul = un
    lin_total = 0
    for sweep in range(1, cfg.fp_max_iters + 1):
        system = build_step_system(un, ul, cfg, forcing=forcing)
        w, lin_iters = solve_linear(system, cfg.lin_tol, cfg.linear_iteration_cap, x0=ul)
        lin_total += lin_iters
        increment = norm2(w - ul, grid=cfg.grid)
        denom = norm2(w, grid=cfg.grid)
        residual = increment / denom if denom > 0 else increment
        ul = w
        if residual <= cfg.fp_tol:
            return ul, sweep, residual, lin_total
    raise FixedPointError(
        f"no fixed-point convergence in {cfg.fp_max_iters} sweeps "
        f"(last residual {residual:.3e}, target {cfg.fp_tol:.1e})",
        residual=residual,
    )


def cnfd_step(
    u_prev: ComplexField,
    cfg: CnfdRunConfig,
    n: int = 0,
    forcing: np.ndarray | None = None,
) -> tuple[ComplexField, StepDiagnostics]:
    """Advance one time level from u_prev (known at t = n*tau)."""
    if u_prev.grid != cfg.grid:
        raise GridMismatchError("field grid does not match config grid")
    started = time.perf_counter()
    vals, sweeps, residual, lin_total = _step_values(u_prev.values, cfg, forcing=forcing)
    out = ComplexField(cfg.grid, vals)
    diag = StepDiagnostics(
        n=n + 1,
        t=cfg.grid.t(n + 1),
        fp_iters=sweeps,
        fp_residual=residual,
        mass=norm2(out) ** 2,
        energy=energy(out, cfg.params),
        wall_ms=1e3 * (time.perf_counter() - started),
        max_abs=float(np.max(np.abs(vals))),
        lin_iters=lin_total,
    )
    return out, diag


def run_cnfd(
    u0: ComplexField,
    cfg: CnfdRunConfig,
    n_steps: int | None = None,
    source=None,
    progress=None,
) -> EvolutionResult:
    """March n_steps levels (grid.N by default), collecting requested snapshots.

    source, when given, is a callable t -> node array; it is sampled at the
    step midpoints t_n + tau/2 and added to the scheme as a forcing term.
    On a step failure the raised error carries the diagnostics and snapshots
    gathered so far.
    """
    if u0.grid != cfg.grid:
        raise GridMismatchError("initial field grid does not match config grid")
    steps = cfg.grid.N if n_steps is None else int(n_steps)
    snap_idx = {cfg.grid.time_index(t) for t in cfg.snapshot_times}

    result = EvolutionResult(grid=cfg.grid)
    if not cfg.snapshot_times or 0 in snap_idx:
        result.snapshots.append((0.0, u0.copy()))
    mass0 = norm2(u0) ** 2
    result.diagnostics.append(
        StepDiagnostics(
            n=0, t=0.0, fp_iters=0, fp_residual=0.0, mass=mass0,
            energy=energy(u0, cfg.params), wall_ms=0.0,
            max_abs=float(np.max(np.abs(u0.values))),
        )
    )

    u = u0.values.copy()
    mass_prev = mass0
    slack = 10.0 * cfg.fp_tol * mass0
    for n in range(steps):
        started = time.perf_counter()
        forcing = None if source is None else source(cfg.grid.t(n) + 0.5 * cfg.grid.tau)
        try:
            u, sweeps, residual, lin_total = _step_values(u, cfg, forcing=forcing)
        except (FixedPointError, LinearSolverError) as exc:
            exc.diagnostics = result.diagnostics
            exc.snapshots = result.snapshots
            raise
        mass = cfg.grid.cell_area * float(np.sum(np.abs(u[: cfg.grid.J, : cfg.grid.K]) ** 2))
        if source is None and mass > mass_prev + slack:
            warnings.warn(
                f"step {n + 1}: mass grew by {mass - mass_prev:.3e}, beyond iteration slack",
                MassMonotonicityWarning,
            )
        diag = StepDiagnostics(
            n=n + 1,
            t=cfg.grid.t(n + 1),
            fp_iters=sweeps,
            fp_residual=residual,
            mass=mass,
            energy=0.0,
            wall_ms=1e3 * (time.perf_counter() - started),
            max_abs=float(np.max(np.abs(u))),
            lin_iters=lin_total,
        )
        field_now = ComplexField(cfg.grid, u.copy()) if (n + 1) in snap_idx else None
        diag.energy = energy(ComplexField(cfg.grid, u), cfg.params)
        if field_now is not None:
            result.snapshots.append((diag.t, field_now))
        result.diagnostics.append(diag)
        mass_prev = mass
        if progress is not None:
            progress(diag)
    return result


def write_diagnostics_csv(path, diagnostics: list[StepDiagnostics]) -> None:
    """One row per step: n, t, fp_iters, residual, mass, energy, wall_ms."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["n", "t", "fp_iters", "residual", "mass", "energy", "wall_ms"])
        for d in diagnostics:
            writer.writerow(
                [d.n, f"{d.t:.17g}", d.fp_iters, f"{d.fp_residual:.17g}",
                 f"{d.mass:.17g}", f"{d.energy:.17g}", f"{d.wall_ms:.3f}"]
            )
