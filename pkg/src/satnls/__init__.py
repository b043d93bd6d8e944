"""Solvers and reproduction harness for the 2D saturable NLS equation with cubic loss."""

from .grid import (
    ComplexField,
    Grid2D,
    RealField,
    build_grid,
    inner,
    laplacian,
    norm2,
    norm_inf,
    norm_p,
    seminorm_h1,
)
from .nonlinearity import PhysicsParams
from .cnfd import CnfdRunConfig, cnfd_step, run_cnfd
from .ssfm import SpectralWorkspace, run_ssfm
from .groundstate import AitemConfig, GroundState, solve_ground_state
from .soliton import SolitonParams, initial_condition, measure_amplitude

__version__ = "0.1.0"

__all__ = [
    "ComplexField",
    "Grid2D",
    "RealField",
    "build_grid",
    "inner",
    "laplacian",
    "norm2",
    "norm_inf",
    "norm_p",
    "seminorm_h1",
    "PhysicsParams",
    "CnfdRunConfig",
    "cnfd_step",
    "run_cnfd",
    "SpectralWorkspace",
    "run_ssfm",
    "AitemConfig",
    "GroundState",
    "solve_ground_state",
    "SolitonParams",
    "initial_condition",
    "measure_amplitude",
    "__version__",
]
