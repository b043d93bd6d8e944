"""Experiment pipelines: artifacts, determinism, and the CLI wrapper."""

import csv
import json

import numpy as np
import pytest

from satnls.cli import main
from satnls.config import load_config
from satnls.experiments import run_experiment, write_colormap
from satnls.fieldio import read_field
from satnls.grid import ComplexField, build_grid

# coarse, short variant of the reference experiment: full domain so the pulse
# clears the boundary, four steps, h = 1/2
FAST_RUN = """
[grid]
h = 1/2
tau = 1/16
T = 0.25
[output]
snapshot_times = 0 0.25
render_figures = false
[aitem]
tol = 1e-9
"""


def write(tmp_path, text, name="exp.ini"):
    path = tmp_path / name
    path.write_text(text)
    return path


def rows_of(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


def test_write_colormap_layout(tmp_path):
    grid = build_grid((0, 1, 0, 1), 2, 2, 1.0, 2)
    vals = np.zeros(grid.shape, complex)
    vals[1, 1] = 2.0
    field = ComplexField(grid, vals)
    path = tmp_path / "map.dat"
    write_colormap(path, field)
    blocks = path.read_text().split("\n\n")
    assert len(blocks) == 3  # one block per x scan
    middle = blocks[1].splitlines()
    assert middle[1].split() == ["0.5", "0.5", "2"]


def test_groundstate_mode_artifacts(tmp_path):
    cfg = load_config(write(tmp_path, FAST_RUN), mode="groundstate", out_dir=str(tmp_path / "out"))
    assert run_experiment(cfg) == 0
    out = tmp_path / "out"
    record = (out / "ground_state.txt").read_text()
    assert "mu = 0.162" in record
    assert "target_power=22.5" in record
    values, header = read_field(out / "ground_state.fld")
    assert header.nx == 161
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["mode"] == "groundstate"
    assert "groundstate" in manifest["timings_s"]


def test_evolve_cnfd_mode_artifacts(tmp_path):
    cfg = load_config(write(tmp_path, FAST_RUN), mode="evolve-cnfd", out_dir=str(tmp_path / "out"))
    assert run_experiment(cfg) == 0
    out = tmp_path / "out"
    diag = rows_of(out / "diagnostics_cnfd.csv")
    assert len(diag) == 5  # initial row + 4 steps
    amp = rows_of(out / "amplitude_cnfd.csv")
    assert len(amp) == 5
    assert float(amp[0]["amplitude"]) == pytest.approx(1.0, rel=1e-9)
    assert all(float(r["rel_error"]) < 1e-3 for r in amp)
    for t in ("0", "0.25"):
        assert (out / f"snapshot_cnfd_t{t}.fld").exists()
        assert (out / f"colormap_cnfd_t{t}.dat").exists()


def test_compare_mode_and_determinism(tmp_path):
    cfg = load_config(write(tmp_path, FAST_RUN), mode="compare", out_dir=str(tmp_path / "a"))
    assert run_experiment(cfg) == 0
    comparison = rows_of(tmp_path / "a" / "comparison.csv")
    assert [r["t"] for r in comparison] == ["0.25"]
    row = comparison[0]
    assert 0 < float(row["d2"]) < 0.05
    assert 0 < float(row["d_a"]) < 1e-3
    assert set(row) == {"t", "e2_cnfd", "e2_ssfm", "e1_cnfd", "e1_ssfm",
                        "d2", "d1", "ea_cnfd", "ea_ssfm", "d_a"}

    cfg_b = load_config(write(tmp_path, FAST_RUN), mode="compare", out_dir=str(tmp_path / "b"))
    assert run_experiment(cfg_b) == 0
    for name in ("comparison.csv", "amplitude_cnfd.csv", "amplitude_ssfm.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_convergence_table_mode(tmp_path):
    text = """
[grid]
T = 0.5
[ladder]
pairs = 1/2:1/8 1/4:1/16
times = 0.5
[output]
render_figures = false
[aitem]
tol = 1e-9
"""
    cfg = load_config(write(tmp_path, text), mode="convergence-table", out_dir=str(tmp_path / "out"))
    assert run_experiment(cfg) == 0
    diffs = rows_of(tmp_path / "out" / "table_differences.csv")
    assert {(r["metric"], r["h"]) for r in diffs} == {
        ("d2", "0.5"), ("d2", "0.25"), ("d1", "0.5"), ("d1", "0.25"),
    }
    coarse_rate = next(r["rate"] for r in diffs if r["metric"] == "d2" and r["h"] == "0.5")
    assert coarse_rate != ""
    assert 1.0 < float(coarse_rate) < 3.0  # crude band at these very coarse rungs
    errors = rows_of(tmp_path / "out" / "table_errors.csv")
    assert len(errors) == 8  # 4 metrics x 2 rungs x 1 time


def test_mms_study_mode(tmp_path, capsys):
    text = """
[mms]
case = gaussian
hs = 1/8 1/16
tau_ratio = 1/4
T = 0.25
[output]
render_figures = false
"""
    cfg = load_config(write(tmp_path, text), mode="mms-study", out_dir=str(tmp_path / "out"))
    assert run_experiment(cfg) == 0
    printed = capsys.readouterr().out
    assert "order" in printed
    orders = (tmp_path / "out" / "mms_orders.txt").read_text().splitlines()
    assert len(orders) == 2
    for line in orders:
        rate = float(line.split("order")[1].split()[0])
        assert 1.5 <= rate <= 2.5


def test_failure_keeps_partial_artifacts(tmp_path):
    text = FAST_RUN + "[cnfd]\nfp_max_iters = 1\nfp_tol = 1e-12\nlin_tol = 1e-13\n"
    cfg = load_config(write(tmp_path, text), mode="evolve-cnfd", out_dir=str(tmp_path / "out"))
    assert run_experiment(cfg) == 1
    out = tmp_path / "out"
    assert (out / "error.txt").exists()
    manifest = json.loads((out / "manifest.json").read_text())
    assert "failed" in manifest


def test_figures_rendered_on_request(tmp_path):
    text = FAST_RUN.replace("render_figures = false", "render_figures = true")
    cfg = load_config(write(tmp_path, text), mode="evolve-cnfd", out_dir=str(tmp_path / "out"))
    assert run_experiment(cfg) == 0
    figures = sorted(p.name for p in (tmp_path / "out" / "figures").iterdir())
    assert "amplitude_cnfd.png" in figures
    assert "profile_cnfd_t0.png" in figures


# ---------------------------------------------------------------------------
# command-line wrapper
# ---------------------------------------------------------------------------

def test_cli_runs_groundstate(tmp_path):
    cfg_path = write(tmp_path, FAST_RUN)
    code = main(["groundstate", "--config", str(cfg_path), "--out", str(tmp_path / "out")])
    assert code == 0
    assert (tmp_path / "out" / "ground_state.txt").exists()


def test_cli_rejects_bad_config(tmp_path, capsys):
    cfg_path = write(tmp_path, "[grid]\nh = 0.3\n")
    code = main(["evolve-cnfd", "--config", str(cfg_path), "--out", str(tmp_path / "out")])
    assert code == 2
    assert "grid.h" in capsys.readouterr().err


def test_cli_missing_config_file(tmp_path, capsys):
    code = main(["compare", "--config", str(tmp_path / "nope.ini")])
    assert code == 2


def test_cli_ladder_flags(tmp_path):
    text = """
[grid]
T = 0.25
[ladder]
pairs = 1/2:1/16 1/4:1/32
times = 0.25
[output]
render_figures = false
[aitem]
tol = 1e-9
"""
    cfg_path = write(tmp_path, text)
    code = main([
        "convergence-table", "--config", str(cfg_path),
        "--out", str(tmp_path / "out"), "--ladder-max-h", "1/2",
    ])
    assert code == 0
    diffs = rows_of(tmp_path / "out" / "table_differences.csv")
    assert {r["h"] for r in diffs} == {"0.5"}  # cap dropped the finer rung
