"""Pipelines behind the command-line modes.

Every mode writes its artifacts under the configured output directory:
delimited tables and series as CSV, field snapshots as FLD1, colormap
matrices in gnuplot block layout, rendered PNG figures, and a run manifest
(config echo, library versions, stage timings, and the assumptions the run
makes).  Table CSVs are rewritten atomically after every ladder rung so an
interrupted study keeps its completed rungs.
"""

from __future__ import annotations

import csv
import io
import json
import os
import time
import traceback
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .cnfd import CnfdRunConfig, EvolutionResult, cnfd_step, run_cnfd, write_diagnostics_csv
from .config import ExperimentConfig
from .fieldio import write_field
from .grid import ComplexField, Grid2D, norm2, seminorm_h1
from .groundstate import (
    AitemConfig,
    GroundState,
    sech_squared_radius_seed,
    save_ground_state,
    solve_ground_state,
)
from .metrics import (
    ConvergenceReport,
    profile_difference,
    profile_error_h1,
    profile_error_l2,
    rel_amp_diff,
    rel_amp_error,
)
from .mms import mms_case, mms_source
from .nonlinearity import PhysicsParams
from .soliton import initial_condition, measure_amplitude, predicted_amplitude, predicted_modulus
from .ssfm import SpectralWorkspace, run_ssfm

__all__ = ["run_experiment", "write_colormap", "mms_errors"]


# ---------------------------------------------------------------------------
# small output helpers
# ---------------------------------------------------------------------------

def _atomic_write_text(path: Path, text: str) -> None:
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(text)
    os.replace(tmp, path)


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def write_colormap(path, field, stride: int = 1) -> None:
    """Gnuplot block matrix: `x y |u|` rows, blank line between x-scans."""
    grid = field.grid
    mod = np.abs(field.values)[::stride, ::stride]
    xs = grid.x()[::stride]
    ys = grid.y()[::stride]
    blocks = []
    for j, x in enumerate(xs):
        col = np.column_stack((np.full(ys.size, x), ys, mod[j]))
        blocks.append("\n".join(f"{a:.9g} {b:.9g} {c:.17g}" for a, b, c in col))
    _atomic_write_text(Path(path), "\n\n".join(blocks) + "\n")


def _fmt(value: float) -> str:
    return f"{value:.17g}"


class _Stage:
    """Context keeping per-stage wall times for the manifest."""

    def __init__(self):
        self.timings: dict[str, float] = {}

    def run(self, name: str, fn, *args, **kwargs):
        started = time.perf_counter()
        out = fn(*args, **kwargs)
        self.timings[name] = round(time.perf_counter() - started, 3)
        return out


def _write_manifest(out: Path, cfg: ExperimentConfig, timings: dict, notes: list[str], failed=None):
    manifest = {
        "satnls": __version__,
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "mode": cfg.mode,
        "config": {
            "bounds": cfg.bounds,
            "h": cfg.h,
            "tau": cfg.tau,
            "T": cfg.T,
            "lambda": cfg.physics.lam,
            "epsilon": cfg.physics.epsilon,
            "soliton": vars(cfg.soliton) | {"power": cfg.power},
            "fp_tol": cfg.fp_tol,
            "lin_tol": cfg.lin_tol,
            "aitem": {
                "dt": cfg.aitem_dt,
                "c": cfg.aitem_c,
                "tol": cfg.aitem_tol,
                "max_iters": cfg.aitem_max_iters,
            },
            "snapshot_times": cfg.snapshot_times,
            "ladder": cfg.active_ladder(),
            "ladder_times": cfg.ladder_times,
            "threads": cfg.threads,
        },
        "timings_s": timings,
        "notes": notes,
    }
    if failed:
        manifest["failed"] = failed
    _atomic_write_text(out / "manifest.json", json.dumps(manifest, indent=2, default=str) + "\n")


_NOTES = [
    "reference split-step runs reuse the finite-difference run's (h, tau) pair",
    "wall_ms in diagnostics.csv varies run to run; all other CSV output is deterministic",
]


# ---------------------------------------------------------------------------
# shared stages
# ---------------------------------------------------------------------------

def _solve_gs(cfg: ExperimentConfig, grid: Grid2D, ws: SpectralWorkspace) -> GroundState:
    seed = sech_squared_radius_seed(grid, cfg.soliton.x0, cfg.soliton.y0)
    aitem = AitemConfig(
        target_power=cfg.power,
        dt=cfg.aitem_dt,
        c=cfg.aitem_c,
        tol=cfg.aitem_tol,
        max_iters=cfg.aitem_max_iters,
    )
    return solve_ground_state(seed, aitem, ws)


def _run_cfg(cfg: ExperimentConfig, grid: Grid2D, snapshot_times) -> CnfdRunConfig:
    return CnfdRunConfig(
        grid=grid,
        params=cfg.physics,
        fp_tol=cfg.fp_tol,
        fp_max_iters=cfg.fp_max_iters,
        lin_tol=cfg.lin_tol,
        lin_max_iters=cfg.lin_max_iters,
        snapshot_times=tuple(snapshot_times),
        threads=cfg.threads,
    )


def _amplitude_rows(result: EvolutionResult, gs: GroundState, u0, cfg: ExperimentConfig):
    ref = np.sqrt(gs.power)
    rows = []
    for d in result.diagnostics:
        a_num = np.sqrt(d.mass) / ref
        a_th = predicted_amplitude(d.t, u0, cfg.soliton, cfg.physics)
        rows.append((d.n, _fmt(d.t), _fmt(a_num), _fmt(a_th), _fmt(abs(a_num - a_th) / a_th)))
    return rows


def _emit_evolution(out: Path, cfg: ExperimentConfig, result: EvolutionResult,
                    gs: GroundState, u0, tag: str) -> None:
    write_diagnostics_csv(out / f"diagnostics_{tag}.csv", result.diagnostics)
    rows = _amplitude_rows(result, gs, u0, cfg)
    _atomic_write_text(
        out / f"amplitude_{tag}.csv",
        _csv_text(["n", "t", "amplitude", "theory", "rel_error"], rows),
    )
    for t, field in result.snapshots:
        write_field(out / f"snapshot_{tag}_t{t:g}.fld", field, time=t)
        write_colormap(out / f"colormap_{tag}_t{t:g}.dat", field, stride=cfg.colormap_stride)
    if cfg.render_figures:
        from . import plots

        figdir = out / "figures"
        figdir.mkdir(exist_ok=True)
        for t, field in result.snapshots:
            plots.save_modulus_heatmap(field, figdir / f"profile_{tag}_t{t:g}.png", t=t)
        times = [d.t for d in result.diagnostics]
        measured = [np.sqrt(d.mass / gs.power) for d in result.diagnostics]
        theory = [predicted_amplitude(t, u0, cfg.soliton, cfg.physics) for t in times]
        plots.save_amplitude_series(times, measured, theory, figdir / f"amplitude_{tag}.png", label=tag)


# ---------------------------------------------------------------------------
# mode pipelines
# ---------------------------------------------------------------------------

def _mode_groundstate(cfg: ExperimentConfig, out: Path, stage: _Stage):
    grid = cfg.make_grid()
    ws = SpectralWorkspace(grid, threads=cfg.threads)
    gs = stage.run("groundstate", _solve_gs, cfg, grid, ws)
    aitem = AitemConfig(target_power=cfg.power, dt=cfg.aitem_dt, c=cfg.aitem_c,
                        tol=cfg.aitem_tol, max_iters=cfg.aitem_max_iters)
    save_ground_state(out / "ground_state", gs, aitem)
    if cfg.render_figures:
        from . import plots

        (out / "figures").mkdir(exist_ok=True)
        plots.save_modulus_heatmap(
            ComplexField(grid, gs.v.values.astype(complex)), out / "figures" / "ground_state.png"
        )


def _mode_evolve(cfg: ExperimentConfig, out: Path, stage: _Stage, scheme: str):
    grid = cfg.make_grid()
    ws = SpectralWorkspace(grid, threads=cfg.threads)
    gs = stage.run("groundstate", _solve_gs, cfg, grid, ws)
    u0 = initial_condition(gs, cfg.soliton, grid)
    run_cfg = _run_cfg(cfg, grid, cfg.snapshot_times)
    if scheme == "cnfd":
        result = stage.run("evolve", run_cnfd, u0, run_cfg)
    else:
        result = stage.run("evolve", run_ssfm, u0, run_cfg, ws)
    _emit_evolution(out, cfg, result, gs, u0, scheme)


def _compare_rows(cfg, gs, u0, res_c, res_s, times):
    rows = []
    for t in times:
        uc = res_c.snapshot(t)
        us = res_s.snapshot(t)
        mod = predicted_modulus(gs, cfg.soliton, cfg.physics, t)
        a_th = predicted_amplitude(t, u0, cfg.soliton, cfg.physics)
        a_c = measure_amplitude(uc, gs)
        a_s = measure_amplitude(us, gs)
        d2, d1 = profile_difference(uc, us)
        rows.append(
            (
                _fmt(t),
                _fmt(profile_error_l2(uc, mod)),
                _fmt(profile_error_l2(us, mod)),
                _fmt(profile_error_h1(uc, mod)),
                _fmt(profile_error_h1(us, mod)),
                _fmt(d2),
                _fmt(d1),
                _fmt(rel_amp_error(a_c, a_th)),
                _fmt(rel_amp_error(a_s, a_th)),
                _fmt(rel_amp_diff(a_c, a_s)),
            )
        )
    return rows


_COMPARE_HEADER = ["t", "e2_cnfd", "e2_ssfm", "e1_cnfd", "e1_ssfm",
                   "d2", "d1", "ea_cnfd", "ea_ssfm", "d_a"]


def _mode_compare(cfg: ExperimentConfig, out: Path, stage: _Stage):
    grid = cfg.make_grid()
    ws = SpectralWorkspace(grid, threads=cfg.threads)
    gs = stage.run("groundstate", _solve_gs, cfg, grid, ws)
    u0 = initial_condition(gs, cfg.soliton, grid)
    run_cfg = _run_cfg(cfg, grid, cfg.snapshot_times)
    res_c = stage.run("evolve_cnfd", run_cnfd, u0, run_cfg)
    res_s = stage.run("evolve_ssfm", run_ssfm, u0, run_cfg, ws)
    _emit_evolution(out, cfg, res_c, gs, u0, "cnfd")
    _emit_evolution(out, cfg, res_s, gs, u0, "ssfm")
    times = [t for t in cfg.snapshot_times if t > 0]
    rows = _compare_rows(cfg, gs, u0, res_c, res_s, times)
    _atomic_write_text(out / "comparison.csv", _csv_text(_COMPARE_HEADER, rows))


def _mode_convergence_table(cfg: ExperimentConfig, out: Path, stage: _Stage):
    table_errors = ConvergenceReport()
    table_diffs = ConvergenceReport()
    rungs = cfg.active_ladder()
    if not rungs:
        raise ValueError("refinement ladder is empty after the desk-scale cap")
    times = cfg.ladder_times
    for h, tau in rungs:
        label = f"h={h:g}"
        grid = cfg.make_grid(h=h, tau=tau)
        ws = SpectralWorkspace(grid, threads=cfg.threads)
        gs = stage.run(f"groundstate {label}", _solve_gs, cfg, grid, ws)
        u0 = initial_condition(gs, cfg.soliton, grid)
        run_cfg = _run_cfg(cfg, grid, (0.0,) + times)
        res_c = stage.run(f"cnfd {label}", run_cnfd, u0, run_cfg)
        res_s = stage.run(f"ssfm {label}", run_ssfm, u0, run_cfg, ws)
        for t in times:
            uc = res_c.snapshot(t)
            us = res_s.snapshot(t)
            mod = predicted_modulus(gs, cfg.soliton, cfg.physics, t)
            table_errors.add("e2_cnfd", t, h, tau, profile_error_l2(uc, mod))
            table_errors.add("e2_ssfm", t, h, tau, profile_error_l2(us, mod))
            table_errors.add("e1_cnfd", t, h, tau, profile_error_h1(uc, mod))
            table_errors.add("e1_ssfm", t, h, tau, profile_error_h1(us, mod))
            d2, d1 = profile_difference(uc, us)
            table_diffs.add("d2", t, h, tau, d2)
            table_diffs.add("d1", t, h, tau, d1)
        table_diffs.compute_rates()
        table_errors.write_csv(out / "table_errors.csv")
        table_diffs.write_csv(out / "table_differences.csv")

    expected = {(m, t, h) for m in ("d2", "d1") for t in times for h, _ in rungs}
    have = {(r["metric"], r["t"], r["h"]) for r in table_diffs.rows}
    if expected - have:
        raise RuntimeError(f"convergence table missing cells: {sorted(expected - have)}")

    if cfg.render_figures and len(rungs) > 1:
        from . import plots

        (out / "figures").mkdir(exist_ok=True)
        hs = [h for h, _ in rungs]
        t_last = times[-1]
        series = {}
        for metric in ("d2", "d1"):
            series[metric] = [
                next(r["value"] for r in table_diffs.rows
                     if r["metric"] == metric and r["t"] == t_last and r["h"] == h)
                for h in hs
            ]
        plots.save_rate_plot(hs, series, out / "figures" / "difference_rates.png")


def mms_errors(cfg: ExperimentConfig, h: float) -> tuple[float, float]:
    """Worst-over-time L2/H1 errors of the forced run at one mesh size."""
    phys = PhysicsParams(lam=cfg.mms_lam, epsilon=cfg.mms_eps)
    a, b, c, d = cfg.mms_bounds
    tau = cfg.mms_tau_ratio * h
    grid = Grid2D(
        a=a, b=b, c=c, d=d,
        J=int(round((b - a) / h)),
        K=int(round((d - c) / h)),
        T=cfg.mms_T,
        N=int(round(cfg.mms_T / tau)),
    )
    case = mms_case(cfg.mms_case, grid)
    source = mms_source(case, phys)
    run_cfg = CnfdRunConfig(
        grid=grid, params=phys, fp_tol=cfg.fp_tol, fp_max_iters=cfg.fp_max_iters,
        lin_tol=cfg.lin_tol, lin_max_iters=cfg.lin_max_iters, threads=cfg.threads,
    )
    u = case.initial_condition()
    err2 = err1 = 0.0
    for n in range(grid.N):
        u, _ = cnfd_step(u, run_cfg, n=n, forcing=source(grid.t(n) + grid.tau / 2))
        diff = u.values - case.solution_values(grid.t(n + 1))
        err2 = max(err2, norm2(diff, grid=grid))
        err1 = max(err1, seminorm_h1(diff, grid=grid))
    return err2, err1


def _mode_mms_study(cfg: ExperimentConfig, out: Path, stage: _Stage):
    report = ConvergenceReport()
    for h in cfg.mms_hs:
        err2, err1 = stage.run(f"mms h={h:g}", mms_errors, cfg, h)
        report.add("err_l2", cfg.mms_T, h, cfg.mms_tau_ratio * h, err2)
        report.add("err_h1", cfg.mms_T, h, cfg.mms_tau_ratio * h, err1)
        report.compute_rates()
        report.write_csv(out / "mms_errors.csv")

    lines = []
    for r in report.rates:
        lines.append(f"{r['metric']}: order {r['rate']:.4f} between h={r['h_pair'][0]:g} and h={r['h_pair'][1]:g}")
    print("\n".join(lines) if lines else "single rung; no observed orders")
    _atomic_write_text(out / "mms_orders.txt", "\n".join(lines) + "\n")
    if cfg.render_figures and len(cfg.mms_hs) > 1:
        from . import plots

        (out / "figures").mkdir(exist_ok=True)
        hs = list(cfg.mms_hs)
        series = {
            m: [next(r["value"] for r in report.rows if r["metric"] == m and r["h"] == h) for h in hs]
            for m in ("err_l2", "err_h1")
        }
        plots.save_rate_plot(hs, series, out / "figures" / "mms_rates.png")


# ---------------------------------------------------------------------------
# dispatch
# ---------------------------------------------------------------------------

_PIPELINES = {
    "groundstate": _mode_groundstate,
    "evolve-cnfd": lambda cfg, out, stage: _mode_evolve(cfg, out, stage, "cnfd"),
    "evolve-ssfm": lambda cfg, out, stage: _mode_evolve(cfg, out, stage, "ssfm"),
    "compare": _mode_compare,
    "convergence-table": _mode_convergence_table,
    "mms-study": _mode_mms_study,
}


def run_experiment(cfg: ExperimentConfig) -> int:
    """Execute one mode; returns a process exit status (0 success)."""
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    stage = _Stage()
    try:
        _PIPELINES[cfg.mode](cfg, out, stage)
    except Exception as exc:
        diagnostics = getattr(exc, "diagnostics", None)
        if diagnostics:
            write_diagnostics_csv(out / "diagnostics_partial.csv", diagnostics)
        _atomic_write_text(out / "error.txt", f"{exc}\n\n{traceback.format_exc()}")
        _write_manifest(out, cfg, stage.timings, _NOTES, failed=str(exc))
        return 1
    _write_manifest(out, cfg, stage.timings, _NOTES)
    return 0
