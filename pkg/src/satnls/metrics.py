"""Relative error/difference functionals and refinement-rate bookkeeping.

Profile metrics compare modulus fields in the mesh L2 norm and the discrete
H1 seminorm, normalized by the reference:

    e2 = || |u| - ref ||_2 / || ref ||_2
    e1 = |  |u| - ref |_H1 / | ref |_H1

Modulus fields are clipped to zero on the boundary before seminorm
evaluation (the discarded tail is logged).  Observed refinement rates are
log2 ratios of errors under simultaneous halving of h and tau; rates are
computed from full-precision values and only rounded at render time.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field

import numpy as np

from .grid import ComplexField, GridMismatchError, RealField, norm2, seminorm_h1

__all__ = [
    "rel_amp_error",
    "rel_amp_diff",
    "profile_error_l2",
    "profile_error_h1",
    "profile_difference",
    "observed_rate",
    "ConvergenceReport",
]

logger = logging.getLogger(__name__)


def rel_amp_error(a_num: float, a_ref: float) -> float:
    """|a_num - a_ref| / a_ref."""
    if a_ref <= 0:
        raise ValueError(f"reference amplitude must be positive, got {a_ref}")
    return abs(a_num - a_ref) / a_ref


def rel_amp_diff(a_first: float, a_second: float) -> float:
    """|a_first - a_second| / a_second."""
    if a_second <= 0:
        raise ValueError(f"reference amplitude must be positive, got {a_second}")
    return abs(a_first - a_second) / a_second


def _modulus_clipped(u) -> RealField:
    """Modulus field with the boundary ring zeroed; logs the discarded tail."""
    grid = u.grid
    mod = np.abs(u.values)
    tail = grid.cell_area * float(
        np.sum(mod[0, :] ** 2) + np.sum(mod[-1, :] ** 2)
        + np.sum(mod[1:-1, 0] ** 2) + np.sum(mod[1:-1, -1] ** 2)
    )
    if tail > 0:
        logger.debug("boundary tail mass %.3e discarded before seminorm", tail)
    return RealField(grid, mod, project=True)


def profile_error_l2(u_num: ComplexField, reference_mod: RealField) -> float:
    """Mesh-L2 relative error of |u_num| against a reference modulus field."""
    if u_num.grid != reference_mod.grid:
        raise GridMismatchError("fields live on different grids")
    ref_norm = norm2(reference_mod)
    if ref_norm == 0:
        raise ValueError("reference modulus has zero norm")
    return norm2(np.abs(u_num.values) - reference_mod.values, grid=u_num.grid) / ref_norm


def profile_error_h1(u_num: ComplexField, reference_mod: RealField) -> float:
    """H1-seminorm relative error of |u_num| against a reference modulus field."""
    if u_num.grid != reference_mod.grid:
        raise GridMismatchError("fields live on different grids")
    ref_semi = seminorm_h1(reference_mod)
    if ref_semi == 0:
        raise ValueError("reference modulus has zero seminorm")
    diff = _modulus_clipped(u_num).values - reference_mod.values
    return seminorm_h1(diff, grid=u_num.grid) / ref_semi


def profile_difference(u_first: ComplexField, u_second: ComplexField) -> tuple[float, float]:
    """L2 and H1 relative differences of two solver outputs' moduli."""
    if u_first.grid != u_second.grid:
        raise GridMismatchError("fields live on different grids")
    mod_first = _modulus_clipped(u_first)
    mod_second = _modulus_clipped(u_second)
    ref_norm = norm2(u_second)
    ref_semi = seminorm_h1(mod_second)
    if ref_norm == 0 or ref_semi == 0:
        raise ValueError("reference field has zero norm")
    diff = mod_first.values - mod_second.values
    d2 = norm2(diff, grid=u_first.grid) / ref_norm
    d1 = seminorm_h1(diff, grid=u_first.grid) / ref_semi
    return d2, d1


def observed_rate(coarse: float, fine: float) -> float:
    """log2 of the error drop under one halving of (h, tau)."""
    if coarse <= 0 or fine <= 0:
        raise ValueError("rates need positive error values")
    return float(np.log2(coarse / fine))


@dataclass
class ConvergenceReport:
    """Rows of (metric, t, h, tau, value) plus log2 rates between paired rows.

    Rates pair rows that share metric and t, halve h, and keep tau
    proportional to h; each rate is attached to the coarser row.
    """

    rows: list[dict] = field(default_factory=list)
    rates: list[dict] = field(default_factory=list)

    def add(self, metric: str, t: float, h: float, tau: float, value: float) -> None:
        self.rows.append({"metric": metric, "t": t, "h": h, "tau": tau, "value": float(value)})

    def compute_rates(self) -> None:
        self.rates.clear()
        ratios = {round(r["tau"] / r["h"], 12) for r in self.rows}
        if len(ratios) > 1:
            raise ValueError(f"rates need tau proportional to h; found tau/h in {sorted(ratios)}")
        for row in self.rows:
            finer = [
                r for r in self.rows
                if r["metric"] == row["metric"] and r["t"] == row["t"]
                and abs(r["h"] - row["h"] / 2) <= 1e-12 * row["h"]
            ]
            if finer:
                self.rates.append(
                    {
                        "metric": row["metric"],
                        "t": row["t"],
                        "h_pair": (row["h"], finer[0]["h"]),
                        "rate": observed_rate(row["value"], finer[0]["value"]),
                    }
                )

    def _rate_for(self, row) -> float | None:
        for r in self.rates:
            if r["metric"] == row["metric"] and r["t"] == row["t"] and r["h_pair"][0] == row["h"]:
                return r["rate"]
        return None

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["metric", "t", "h", "tau", "value", "rate"])
            for row in sorted(self.rows, key=lambda r: (r["metric"], r["t"], -r["h"])):
                rate = self._rate_for(row)
                writer.writerow(
                    [
                        row["metric"],
                        f"{row['t']:.17g}",
                        f"{row['h']:.17g}",
                        f"{row['tau']:.17g}",
                        f"{row['value']:.17g}",
                        "" if rate is None else f"{rate:.17g}",
                    ]
                )
