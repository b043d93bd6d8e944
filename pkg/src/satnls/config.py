"""Experiment configuration: INI-style key-value files with strict validation.

Missing keys fall back to the reference experiment defaults: domain
[-40,40]^2, lam=1, eps=0.01, pulse launched at (-5, 4.5) with velocity
(2, -1.8) and power 22.5, final time 5, mesh h=2^-4, step tau=2^-7.
Real values accept plain floats plus the shorthands "2^-4" and "1/16".
Unknown sections or keys fail with their full key path.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field, replace

from .grid import Grid2D, build_grid
from .nonlinearity import PhysicsParams
from .soliton import SolitonParams

__all__ = ["ConfigError", "ExperimentConfig", "load_config", "parse_real", "MODES"]

MODES = ("groundstate", "evolve-cnfd", "evolve-ssfm", "compare", "convergence-table", "mms-study")

DEFAULT_LADDER = ((2.0**-2, 2.0**-5), (2.0**-3, 2.0**-6), (2.0**-4, 2.0**-7), (2.0**-5, 2.0**-8))

# largest grid run without the explicit large-run flag: h >= 2^-4
DEFAULT_LADDER_CAP = 2.0**-4


class ConfigError(ValueError):
    """Malformed configuration; message carries the offending key path."""


def parse_real(text: str) -> float:
    """Float literal, dyadic power "2^-k", or fraction "p/q"."""
    text = text.strip()
    try:
        if "^" in text:
            base, _, exp = text.partition("^")
            return float(base) ** float(exp)
        if "/" in text:
            num, _, den = text.partition("/")
            return float(num) / float(den)
        return float(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise ConfigError(f"cannot parse real value {text!r}: {exc}") from None


@dataclass(frozen=True)
class ExperimentConfig:
    mode: str
    out_dir: str = "satnls-out"
    threads: int = 1
    # spatial/temporal discretization of single-run modes
    bounds: tuple[float, float, float, float] = (-40.0, 40.0, -40.0, 40.0)
    h: float = 2.0**-4
    T: float = 5.0
    tau: float = 2.0**-7
    physics: PhysicsParams = field(default_factory=PhysicsParams)
    soliton: SolitonParams = field(default_factory=SolitonParams)
    power: float = 22.5
    # inner-solver settings
    fp_tol: float = 1e-8
    fp_max_iters: int = 50
    lin_tol: float = 1e-10
    lin_max_iters: int = 0
    aitem_dt: float = 1.2
    aitem_c: float = 1.5
    aitem_tol: float = 1e-10
    aitem_max_iters: int = 20000
    # outputs
    snapshot_times: tuple[float, ...] = (0.0, 1.0, 2.0, 3.0, 4.0, 5.0)
    colormap_stride: int = 1
    render_figures: bool = True
    # refinement ladder
    ladder: tuple[tuple[float, float], ...] = DEFAULT_LADDER
    ladder_times: tuple[float, ...] = (1.0, 2.0, 3.0, 4.0, 5.0)
    ladder_max_h: float = DEFAULT_LADDER_CAP
    allow_large: bool = False
    # manufactured-solution study
    mms_case: str = "gaussian"
    mms_bounds: tuple[float, float, float, float] = (0.0, 1.0, 0.0, 1.0)
    mms_T: float = 0.5
    mms_hs: tuple[float, ...] = (1.0 / 16, 1.0 / 32, 1.0 / 64)
    mms_tau_ratio: float = 0.25
    mms_lam: float = 1.0
    mms_eps: float = 0.5

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigError(f"run.mode: unknown mode {self.mode!r}; choose from {MODES}")
        a, b, c, d = self.bounds
        if not (b > a and d > c):
            raise ConfigError(f"grid bounds degenerate: {self.bounds}")
        for name, (length, step) in {
            "grid.h": (b - a, self.h),
            "grid.tau": (self.T, self.tau),
        }.items():
            count = length / step
            if abs(count - round(count)) > 1e-9 or round(count) < 2:
                raise ConfigError(f"{name}: {step} does not evenly partition {length}")
        if (d - c) % self.h > 1e-9 * (d - c) and abs((d - c) / self.h - round((d - c) / self.h)) > 1e-9:
            raise ConfigError(f"grid.h: {self.h} does not evenly partition the y extent")
        if self.threads < 1:
            raise ConfigError(f"run.threads: must be >= 1, got {self.threads}")
        if self.colormap_stride < 1:
            raise ConfigError(f"output.colormap_stride: must be >= 1, got {self.colormap_stride}")
        if self.mode in ("evolve-cnfd", "evolve-ssfm", "compare"):
            for t in self.snapshot_times:
                if t < 0 or t > self.T + 1e-12:
                    raise ConfigError(f"output.snapshot_times: {t} outside [0, {self.T}]")
        if self.mode == "convergence-table":
            ratios = {tau / h for h, tau in self.ladder}
            if len(ratios) > 1 and max(ratios) - min(ratios) > 1e-9 * max(ratios):
                raise ConfigError(
                    "ladder.pairs: rates need tau proportional to h across rungs, "
                    f"got tau/h values {sorted(ratios)}"
                )
            for t in self.ladder_times:
                if t <= 0 or t > self.T + 1e-12:
                    raise ConfigError(f"ladder.times: {t} outside (0, {self.T}]")
        if self.mode == "mms-study":
            if self.mms_case not in ("sine", "gaussian"):
                raise ConfigError(f"mms.case: unknown case {self.mms_case!r}")
            if not (0 < self.mms_tau_ratio <= 1):
                raise ConfigError(f"mms.tau_ratio: must lie in (0, 1], got {self.mms_tau_ratio}")

    # -- derived builders ---------------------------------------------------

    def make_grid(self, h: float | None = None, tau: float | None = None) -> Grid2D:
        h = self.h if h is None else h
        tau = self.tau if tau is None else tau
        a, b, c, d = self.bounds
        return build_grid(
            self.bounds,
            int(round((b - a) / h)),
            int(round((d - c) / h)),
            self.T,
            int(round(self.T / tau)),
        )

    def active_ladder(self) -> tuple[tuple[float, float], ...]:
        """Rungs filtered by the desk-scale cap unless large runs are allowed."""
        cap = 0.0 if self.allow_large else self.ladder_max_h
        return tuple((h, tau) for h, tau in self.ladder if h >= cap - 1e-12)


_SCHEMA = {
    "run": {"mode", "out_dir", "threads"},
    "grid": {"a", "b", "c", "d", "h", "T", "tau"},
    "physics": {"lambda", "epsilon"},
    "soliton": {"A0", "x0", "y0", "d1", "d2", "alpha0", "power"},
    "cnfd": {"fp_tol", "fp_max_iters", "lin_tol", "lin_max_iters"},
    "aitem": {"dt", "c", "tol", "max_iters"},
    "output": {"snapshot_times", "colormap_stride", "render_figures"},
    "ladder": {"pairs", "times", "max_h"},
    "mms": {"case", "a", "b", "c", "d", "T", "hs", "tau_ratio", "lambda", "epsilon"},
}


def _reals(text: str) -> tuple[float, ...]:
    return tuple(parse_real(tok) for tok in text.replace(",", " ").split())


def load_config(path=None, mode: str | None = None, **overrides) -> ExperimentConfig:
    """Parse an INI config file; mode comes from the file or the caller.

    Keyword overrides (out_dir, threads, allow_large, ladder_max_h) take
    precedence over file values; they mirror the command-line flags.
    """
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    parser.optionxform = str  # keys are case-sensitive (T vs t)
    if path is not None:
        with open(path) as fh:
            parser.read_file(fh)

    for section in parser.sections():
        if section not in _SCHEMA:
            raise ConfigError(f"{section}: unknown section")
        for key in parser[section]:
            if key not in _SCHEMA[section]:
                raise ConfigError(f"{section}.{key}: unknown key")

    def get(section, key, default=None):
        return parser.get(section, key, fallback=default)

    file_mode = get("run", "mode")
    if mode is None and file_mode is None:
        raise ConfigError("run.mode: mode missing from both config file and command line")
    if mode is not None and file_mode is not None and mode != file_mode:
        raise ConfigError(f"run.mode: file says {file_mode!r} but {mode!r} was requested")
    chosen = mode or file_mode

    kwargs: dict = {"mode": chosen}
    if get("run", "out_dir"):
        kwargs["out_dir"] = get("run", "out_dir")
    if get("run", "threads"):
        kwargs["threads"] = int(get("run", "threads"))

    bounds = tuple(
        parse_real(get("grid", k, str(dflt)))
        for k, dflt in (("a", -40.0), ("b", 40.0), ("c", -40.0), ("d", 40.0))
    )
    kwargs["bounds"] = bounds
    for key, attr in (("h", "h"), ("T", "T"), ("tau", "tau")):
        if get("grid", key):
            kwargs[attr] = parse_real(get("grid", key))

    lam = parse_real(get("physics", "lambda", "1.0"))
    eps = parse_real(get("physics", "epsilon", "0.01"))
    try:
        kwargs["physics"] = PhysicsParams(lam=lam, epsilon=eps)
    except ValueError as exc:
        raise ConfigError(f"physics: {exc}") from None

    try:
        kwargs["soliton"] = SolitonParams(
            A0=parse_real(get("soliton", "A0", "1.0")),
            x0=parse_real(get("soliton", "x0", "-5.0")),
            y0=parse_real(get("soliton", "y0", "4.5")),
            d1=parse_real(get("soliton", "d1", "2.0")),
            d2=parse_real(get("soliton", "d2", "-1.8")),
            alpha0=parse_real(get("soliton", "alpha0", "0.0")),
        )
    except ValueError as exc:
        raise ConfigError(f"soliton: {exc}") from None
    kwargs["power"] = parse_real(get("soliton", "power", "22.5"))

    for key, attr, conv in (
        ("fp_tol", "fp_tol", parse_real),
        ("fp_max_iters", "fp_max_iters", int),
        ("lin_tol", "lin_tol", parse_real),
        ("lin_max_iters", "lin_max_iters", int),
    ):
        if get("cnfd", key):
            kwargs[attr] = conv(get("cnfd", key))
    for key, attr, conv in (
        ("dt", "aitem_dt", parse_real),
        ("c", "aitem_c", parse_real),
        ("tol", "aitem_tol", parse_real),
        ("max_iters", "aitem_max_iters", int),
    ):
        if get("aitem", key):
            kwargs[attr] = conv(get("aitem", key))

    if get("output", "snapshot_times"):
        kwargs["snapshot_times"] = _reals(get("output", "snapshot_times"))
    if get("output", "colormap_stride"):
        kwargs["colormap_stride"] = int(get("output", "colormap_stride"))
    if get("output", "render_figures"):
        kwargs["render_figures"] = parser.getboolean("output", "render_figures")

    if get("ladder", "pairs"):
        pairs = []
        for token in get("ladder", "pairs").replace(",", " ").split():
            if ":" not in token:
                raise ConfigError(f"ladder.pairs: expected h:tau, got {token!r}")
            h_txt, _, tau_txt = token.partition(":")
            pairs.append((parse_real(h_txt), parse_real(tau_txt)))
        kwargs["ladder"] = tuple(pairs)
    if get("ladder", "times"):
        kwargs["ladder_times"] = _reals(get("ladder", "times"))
    if get("ladder", "max_h"):
        kwargs["ladder_max_h"] = parse_real(get("ladder", "max_h"))

    if get("mms", "case"):
        kwargs["mms_case"] = get("mms", "case")
    if parser.has_section("mms"):
        mb = tuple(
            parse_real(get("mms", k, str(dflt)))
            for k, dflt in (("a", 0.0), ("b", 1.0), ("c", 0.0), ("d", 1.0))
        )
        kwargs["mms_bounds"] = mb
        if get("mms", "T"):
            kwargs["mms_T"] = parse_real(get("mms", "T"))
        if get("mms", "hs"):
            kwargs["mms_hs"] = _reals(get("mms", "hs"))
        if get("mms", "tau_ratio"):
            kwargs["mms_tau_ratio"] = parse_real(get("mms", "tau_ratio"))
        if get("mms", "lambda"):
            kwargs["mms_lam"] = parse_real(get("mms", "lambda"))
        if get("mms", "epsilon"):
            kwargs["mms_eps"] = parse_real(get("mms", "epsilon"))

    kwargs.update({k: v for k, v in overrides.items() if v is not None})
    try:
        return ExperimentConfig(**kwargs)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None


def with_overrides(cfg: ExperimentConfig, **changes) -> ExperimentConfig:
    return replace(cfg, **{k: v for k, v in changes.items() if v is not None})
