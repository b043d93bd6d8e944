"""Config parsing, defaults, and validation messages."""

import pytest

from satnls.config import ConfigError, load_config, parse_real


def write(tmp_path, text):
    path = tmp_path / "exp.ini"
    path.write_text(text)
    return path


def test_parse_real_forms():
    assert parse_real("0.0625") == 0.0625
    assert parse_real("2^-4") == 2.0**-4
    assert parse_real("1/16") == 1.0 / 16
    assert parse_real("-1.5e2") == -150.0
    with pytest.raises(ConfigError):
        parse_real("2^^3")


def test_empty_file_yields_reference_defaults(tmp_path):
    cfg = load_config(write(tmp_path, ""), mode="evolve-cnfd")
    assert cfg.bounds == (-40.0, 40.0, -40.0, 40.0)
    assert cfg.physics.lam == 1.0 and cfg.physics.epsilon == 0.01
    assert (cfg.soliton.A0, cfg.soliton.x0, cfg.soliton.y0) == (1.0, -5.0, 4.5)
    assert (cfg.soliton.d1, cfg.soliton.d2, cfg.soliton.alpha0) == (2.0, -1.8, 0.0)
    assert cfg.power == 22.5
    assert cfg.T == 5.0 and cfg.h == 2.0**-4 and cfg.tau == 2.0**-7
    assert cfg.snapshot_times == (0.0, 1.0, 2.0, 3.0, 4.0, 5.0)
    grid = cfg.make_grid()
    assert grid.J == grid.K == 1280 and grid.N == 640


def test_no_file_with_mode():
    cfg = load_config(None, mode="groundstate")
    assert cfg.mode == "groundstate"


def test_mode_required_somewhere(tmp_path):
    with pytest.raises(ConfigError, match="run.mode"):
        load_config(write(tmp_path, ""), mode=None)
    cfg = load_config(write(tmp_path, "[run]\nmode = compare\n"))
    assert cfg.mode == "compare"
    with pytest.raises(ConfigError, match="run.mode"):
        load_config(write(tmp_path, "[run]\nmode = compare\n"), mode="groundstate")


def test_unknown_keys_rejected_with_path(tmp_path):
    with pytest.raises(ConfigError, match="grid.meshsize"):
        load_config(write(tmp_path, "[grid]\nmeshsize = 0.5\n"), mode="groundstate")
    with pytest.raises(ConfigError, match="turbo: unknown section"):
        load_config(write(tmp_path, "[turbo]\nx = 1\n"), mode="groundstate")


def test_grid_divisibility_enforced(tmp_path):
    with pytest.raises(ConfigError, match="grid.h"):
        load_config(write(tmp_path, "[grid]\nh = 0.3\n"), mode="evolve-cnfd")
    with pytest.raises(ConfigError, match="grid.tau"):
        load_config(write(tmp_path, "[grid]\ntau = 0.4\n"), mode="evolve-cnfd")


def test_ladder_parsing_and_proportionality(tmp_path):
    cfg = load_config(
        write(tmp_path, "[ladder]\npairs = 2^-2:2^-5 2^-3:2^-6\ntimes = 1 2\n"),
        mode="convergence-table",
    )
    assert cfg.ladder == ((0.25, 2.0**-5), (0.125, 2.0**-6))
    assert cfg.ladder_times == (1.0, 2.0)

    with pytest.raises(ConfigError, match="tau proportional"):
        load_config(
            write(tmp_path, "[ladder]\npairs = 2^-2:2^-5 2^-3:2^-5\n"),
            mode="convergence-table",
        )
    # proportionality only binds when rates are requested
    cfg2 = load_config(
        write(tmp_path, "[ladder]\npairs = 2^-2:2^-5 2^-3:2^-5\n"), mode="evolve-cnfd"
    )
    assert len(cfg2.ladder) == 2


def test_ladder_cap_and_allow_large(tmp_path):
    cfg = load_config(write(tmp_path, ""), mode="convergence-table")
    assert cfg.active_ladder() == cfg.ladder[:3]  # 2^-5 rung held back
    cfg_big = load_config(write(tmp_path, ""), mode="convergence-table", allow_large=True)
    assert cfg_big.active_ladder() == cfg_big.ladder


def test_mms_block(tmp_path):
    text = "[mms]\ncase = sine\nhs = 1/8 1/16\ntau_ratio = 1/4\nT = 0.25\nepsilon = 0.3\n"
    cfg = load_config(write(tmp_path, text), mode="mms-study")
    assert cfg.mms_case == "sine"
    assert cfg.mms_hs == (0.125, 0.0625)
    assert cfg.mms_eps == 0.3
    with pytest.raises(ConfigError, match="mms.case"):
        load_config(write(tmp_path, "[mms]\ncase = unknown\n"), mode="mms-study")


def test_snapshot_times_bounded(tmp_path):
    with pytest.raises(ConfigError, match="snapshot_times"):
        load_config(
            write(tmp_path, "[grid]\nT = 1\ntau = 1/8\n[output]\nsnapshot_times = 0 2\n"),
            mode="evolve-cnfd",
        )


def test_solver_blocks(tmp_path):
    text = (
        "[cnfd]\nfp_tol = 1e-9\nlin_tol = 1e-11\nfp_max_iters = 20\n"
        "[aitem]\ndt = 1.0\nc = 2.0\ntol = 1e-9\nmax_iters = 500\n"
    )
    cfg = load_config(write(tmp_path, text), mode="compare")
    assert cfg.fp_tol == 1e-9 and cfg.lin_tol == 1e-11 and cfg.fp_max_iters == 20
    assert cfg.aitem_dt == 1.0 and cfg.aitem_c == 2.0 and cfg.aitem_max_iters == 500


def test_overrides_win(tmp_path):
    cfg = load_config(
        write(tmp_path, "[run]\nout_dir = from_file\nthreads = 2\n"),
        mode="groundstate",
        out_dir="from_cli",
    )
    assert cfg.out_dir == "from_cli"
    assert cfg.threads == 2
