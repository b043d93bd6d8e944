"""Second-order Strang split-step Fourier reference solver.

The grid's interior box [a,b) x [c,d) is treated as one periodic cell of
J x K samples (the identified node row j=J / column k=K is dropped before
transforming and restored as zeros afterwards).  A Strang step composes

    half linear  ->  full nonlinear (+ optional midpoint forcing)  ->  half linear

where the linear flow i u_t + lap u = 0 is advanced exactly in Fourier space
and the pointwise nonlinear/loss flow has the closed-form solution

    rho(dt)   = rho0 / (1 + 2 eps rho0 dt)
    dtheta    = lam/(2 eps) * log1p(2 eps rho0 dt / (1 + rho0))   (eps > 0)
              = lam dt rho0 / (1 + rho0)                          (eps = 0)
    u(dt)     = u0 * sqrt(rho(dt)/rho0) * exp(i dtheta)

with rho0 = |u0|^2.  For localized pulses the periodic/Dirichlet mismatch
lives in the boundary tail, whose magnitude is recorded per step.
"""

from __future__ import annotations

import time

import numpy as np
import scipy.fft as sfft

from .cnfd import CnfdRunConfig, EvolutionResult, StepDiagnostics
from .grid import ComplexField, Grid2D, GridMismatchError, norm2
from .nonlinearity import PhysicsParams, energy

__all__ = [
    "SpectralWorkspace",
    "linear_substep",
    "nonlinear_substep",
    "strang_step",
    "run_ssfm",
]


class SpectralWorkspace:
    """Wavenumbers, cached propagator phases, and transforms for one grid.

    Stateful (phase cache), so a workspace has a single owner; independent
    workspaces on the same grid are fine.
    """

    def __init__(self, grid: Grid2D, threads: int = 1):
        self.grid = grid
        self.threads = threads
        kx = 2.0 * np.pi * sfft.fftfreq(grid.J, d=grid.dx)
        ky = 2.0 * np.pi * sfft.fftfreq(grid.K, d=grid.dy)
        self.k2 = kx[:, None] ** 2 + ky[None, :] ** 2
        kyr = 2.0 * np.pi * sfft.rfftfreq(grid.K, d=grid.dy)
        self.k2r = kx[:, None] ** 2 + kyr[None, :] ** 2
        self._phases: dict[float, np.ndarray] = {}

    def cell(self, values: np.ndarray) -> np.ndarray:
        """Drop the identified boundary row/column."""
        return values[: self.grid.J, : self.grid.K]

    def embed(self, cell: np.ndarray) -> np.ndarray:
        """Restore a periodic-cell array to node shape with a zero boundary."""
        out = np.zeros(self.grid.shape, dtype=cell.dtype)
        out[: self.grid.J, : self.grid.K] = cell
        out[0, :] = 0.0
        out[:, 0] = 0.0
        return out

    def fft2(self, cell: np.ndarray) -> np.ndarray:
        return sfft.fft2(cell, workers=self.threads)

    def ifft2(self, coef: np.ndarray) -> np.ndarray:
        return sfft.ifft2(coef, workers=self.threads)

    def rfft2(self, cell: np.ndarray) -> np.ndarray:
        return sfft.rfft2(cell, workers=self.threads)

    def irfft2(self, coef: np.ndarray) -> np.ndarray:
        return sfft.irfft2(coef, s=(self.grid.J, self.grid.K), workers=self.threads)

    def propagator(self, dt: float) -> np.ndarray:
        """exp(-i |k|^2 dt), cached per dt."""
        phase = self._phases.get(dt)
        if phase is None:
            phase = np.exp(-1j * self.k2 * dt)
            self._phases[dt] = phase
        return phase

    def laplacian_real(self, cell: np.ndarray) -> np.ndarray:
        """Spectral Laplacian of a real cell array."""
        return self.irfft2(-self.k2r * self.rfft2(cell))

    def shifted_inverse_real(self, cell: np.ndarray, shift: float) -> np.ndarray:
        """(shift - lap)^{-1} applied spectrally to a real cell array."""
        return self.irfft2(self.rfft2(cell) / (shift + self.k2r))


def _check_workspace(u: ComplexField, ws: SpectralWorkspace):
    if u.grid != ws.grid:
        raise GridMismatchError("field grid does not match workspace grid")


def linear_substep(u: ComplexField, dt: float, ws: SpectralWorkspace) -> ComplexField:
    """Exact free propagation over dt in the periodic spectral basis."""
    _check_workspace(u, ws)
    cell = ws.ifft2(ws.propagator(dt) * ws.fft2(ws.cell(u.values)))
    return ComplexField(u.grid, ws.embed(cell))


def _nonlinear_cell(cell: np.ndarray, dt: float, params: PhysicsParams) -> np.ndarray:
    rho0 = cell.real**2 + cell.imag**2
    eps = params.epsilon
    growth = 2.0 * eps * rho0 * dt
    if eps > 0:
        dtheta = (params.lam / (2.0 * eps)) * np.log1p(growth / (1.0 + rho0))
    else:
        dtheta = params.lam * dt * rho0 / (1.0 + rho0)
    return cell * np.exp(1j * dtheta) / np.sqrt(1.0 + growth)


def nonlinear_substep(u: ComplexField, dt: float, params: PhysicsParams) -> ComplexField:
    """Exact pointwise saturable-phase and cubic-loss flow over dt."""
    return ComplexField(u.grid, _nonlinear_cell(u.values, dt, params), project=True)


def strang_step(
    u: ComplexField,
    dt: float,
    params: PhysicsParams,
    ws: SpectralWorkspace,
    forcing: np.ndarray | None = None,
) -> ComplexField:
    """Half-linear, full-nonlinear, half-linear composition.

    forcing (node array, already midpoint-sampled in time) enters between the
    half steps as u -> u - i dt * forcing, keeping the step time-symmetric.
    """
    _check_workspace(u, ws)
    cell = ws.ifft2(ws.propagator(0.5 * dt) * ws.fft2(ws.cell(u.values)))
    cell = _nonlinear_cell(cell, dt, params)
    if forcing is not None:
        cell = cell - 1j * dt * ws.cell(forcing)
    cell = ws.ifft2(ws.propagator(0.5 * dt) * ws.fft2(cell))
    return ComplexField(u.grid, ws.embed(cell))


def run_ssfm(
    u0: ComplexField,
    cfg: CnfdRunConfig,
    ws: SpectralWorkspace | None = None,
    n_steps: int | None = None,
    source=None,
    progress=None,
) -> EvolutionResult:
    """March n_steps Strang steps (grid.N by default); same contract as run_cnfd.

    The fixed-point/linear-solver fields of cfg are ignored.  In the per-step
    diagnostics the residual column records the boundary-tail magnitude
    max |u| on the identified boundary before it is zeroed, which quantifies
    the periodic-versus-Dirichlet mismatch.
    """
    if u0.grid != cfg.grid:
        raise GridMismatchError("initial field grid does not match config grid")
    ws = ws or SpectralWorkspace(cfg.grid, threads=cfg.threads)
    _check_workspace(u0, ws)
    steps = cfg.grid.N if n_steps is None else int(n_steps)
    snap_idx = {cfg.grid.time_index(t) for t in cfg.snapshot_times}
    tau = cfg.grid.tau
    params = cfg.params

    result = EvolutionResult(grid=cfg.grid)
    if not cfg.snapshot_times or 0 in snap_idx:
        result.snapshots.append((0.0, u0.copy()))
    result.diagnostics.append(
        StepDiagnostics(
            n=0, t=0.0, fp_iters=0, fp_residual=0.0, mass=norm2(u0) ** 2,
            energy=energy(u0, params), wall_ms=0.0,
            max_abs=float(np.max(np.abs(u0.values))),
        )
    )

    cell = ws.cell(u0.values).copy()
    half = ws.propagator(0.5 * tau)
    for n in range(steps):
        started = time.perf_counter()
        cell = ws.ifft2(half * ws.fft2(cell))
        cell = _nonlinear_cell(cell, tau, params)
        if source is not None:
            cell = cell - 1j * tau * ws.cell(source(cfg.grid.t(n) + 0.5 * tau))
        cell = ws.ifft2(half * ws.fft2(cell))
        tail = max(
            float(np.max(np.abs(cell[0, :]))),
            float(np.max(np.abs(cell[:, 0]))),
        )
        field = ComplexField(cfg.grid, ws.embed(cell))
        diag = StepDiagnostics(
            n=n + 1,
            t=cfg.grid.t(n + 1),
            fp_iters=1,
            fp_residual=tail,
            mass=norm2(field) ** 2,
            energy=energy(field, params),
            wall_ms=1e3 * (time.perf_counter() - started),
            max_abs=float(np.max(np.abs(cell))),
        )
        if (n + 1) in snap_idx:
            result.snapshots.append((diag.t, field))
        result.diagnostics.append(diag)
        if progress is not None:
            progress(diag)
    return result
