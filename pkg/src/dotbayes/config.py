"""Run configuration: flat key=value files with sections, plus presets.

The format is INI-style and intentionally flat; every physics and grid
parameter appears explicitly so a config file plus a seed pins a run
byte-for-byte.  ``scenario`` returns ready-made configurations for the
standard demonstration runs.
"""

from __future__ import annotations

import configparser
import io
import math
from dataclasses import dataclass, replace
from pathlib import Path

from .model import (
    ConditionedState,
    DetectorModel,
    QubitHamiltonian,
    SimulationGrid,
    schottky_s_i,
)


class ConfigError(ValueError):
    """Malformed or incomplete run configuration."""


MODES = ("trajectory", "ensemble", "master", "reconstruct", "steer")

_SCHEMA = {
    "hamiltonian": ("epsilon", "h_tunnel", "hbar"),
    "detector": ("i1", "i2", "e_charge", "s_i", "transparency", "gamma_d_extra"),
    "initial": ("s11", "s12_re", "s12_im"),
    "grid": ("dt", "t_final", "window", "seed"),
    "run": ("mode", "out_dir"),
}
_OPTIONAL = {
    ("detector", "s_i"),
    ("detector", "transparency"),
    ("run", "out_dir"),
}


@dataclass(frozen=True)
class RunConfig:
    """Complete description of one run; see the README for the file format."""

    epsilon: float
    h_tunnel: float
    hbar: float
    i1: float
    i2: float
    e_charge: float
    gamma_d_extra: float
    s11: float
    s12_re: float
    s12_im: float
    dt: float
    t_final: float
    window: float
    seed: int
    mode: str
    s_i: float | None = None
    transparency: float | None = None
    out_dir: str | None = None

    def __post_init__(self) -> None:
        if (self.s_i is None) == (self.transparency is None):
            raise ConfigError(
                "detector needs exactly one of s_i or transparency (Schottky)"
            )
        self.parse_mode()

    def parse_mode(self) -> tuple[str, str | None]:
        """Split ``mode`` into (kind, argument) and validate it."""
        kind, _, arg = self.mode.partition(":")
        if kind not in MODES:
            raise ConfigError(f"unknown mode {self.mode!r}; expected one of {MODES}")
        if kind == "ensemble":
            try:
                n = int(arg)
            except ValueError:
                raise ConfigError("ensemble mode needs a count, e.g. ensemble:1000")
            if n < 1:
                raise ConfigError("ensemble count must be >= 1")
            return kind, arg
        if kind == "reconstruct":
            if not arg:
                raise ConfigError(
                    "reconstruct mode needs a record file, e.g. reconstruct:record.csv"
                )
            return kind, arg
        if arg:
            raise ConfigError(f"mode {kind!r} takes no argument")
        return kind, None

    def hamiltonian(self) -> QubitHamiltonian:
        return QubitHamiltonian(self.epsilon, self.h_tunnel, self.hbar)

    def detector(self) -> DetectorModel:
        s_i = self.s_i
        if s_i is None:
            s_i = schottky_s_i(
                0.5 * (self.i1 + self.i2), self.e_charge, self.transparency
            )
        return DetectorModel(
            i1=self.i1,
            i2=self.i2,
            s_i=s_i,
            e_charge=self.e_charge,
            gamma_d_extra=self.gamma_d_extra,
        )

    def initial_state(self) -> ConditionedState:
        return ConditionedState(self.s11, self.s12_re, self.s12_im)

    def grid(self) -> SimulationGrid:
        return SimulationGrid(
            dt=self.dt, t_final=self.t_final, window=self.window, seed=self.seed
        )


def _convert(section: str, key: str, raw: str):
    if key == "mode" or key == "out_dir":
        return raw
    if key == "seed":
        try:
            return int(raw)
        except ValueError:
            raise ConfigError(f"[{section}] {key} must be an integer, got {raw!r}")
    try:
        value = float(raw)
    except ValueError:
        raise ConfigError(f"[{section}] {key} must be a number, got {raw!r}")
    if math.isnan(value) or math.isinf(value):
        raise ConfigError(f"[{section}] {key} must be finite, got {raw!r}")
    return value


def parse_config_text(text: str) -> RunConfig:
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse config: {exc}") from exc

    values = {}
    for section, keys in _SCHEMA.items():
        if not parser.has_section(section):
            raise ConfigError(f"missing section [{section}]")
        for key in parser.options(section):
            if key not in keys:
                raise ConfigError(f"unknown key {key!r} in section [{section}]")
        for key in keys:
            if parser.has_option(section, key):
                values[key] = _convert(section, key, parser.get(section, key))
            elif (section, key) not in _OPTIONAL:
                raise ConfigError(f"missing key {key!r} in section [{section}]")
    try:
        return RunConfig(**values)
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def parse_config(path) -> RunConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    return parse_config_text(path.read_text())


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def config_text(cfg: RunConfig) -> str:
    out = io.StringIO()
    sections: dict[str, list[tuple[str, object]]] = {
        "hamiltonian": [
            ("epsilon", cfg.epsilon),
            ("h_tunnel", cfg.h_tunnel),
            ("hbar", cfg.hbar),
        ],
        "detector": [
            ("i1", cfg.i1),
            ("i2", cfg.i2),
            ("e_charge", cfg.e_charge),
            ("gamma_d_extra", cfg.gamma_d_extra),
        ],
        "initial": [
            ("s11", cfg.s11),
            ("s12_re", cfg.s12_re),
            ("s12_im", cfg.s12_im),
        ],
        "grid": [
            ("dt", cfg.dt),
            ("t_final", cfg.t_final),
            ("window", cfg.window),
            ("seed", cfg.seed),
        ],
        "run": [("mode", cfg.mode)],
    }
    if cfg.s_i is not None:
        sections["detector"].insert(2, ("s_i", cfg.s_i))
    else:
        sections["detector"].insert(2, ("transparency", cfg.transparency))
    if cfg.out_dir is not None:
        sections["run"].append(("out_dir", cfg.out_dir))
    for section, pairs in sections.items():
        out.write(f"[{section}]\n")
        for key, value in pairs:
            out.write(f"{key} = {_fmt(value)}\n")
        out.write("\n")
    return out.getvalue()


def write_config(cfg: RunConfig, path) -> None:
    Path(path).write_text(config_text(cfg))


# shared detector for the demonstration scenarios: weakly responding
# point contact with Schottky-consistent noise (s_i = 2 e i0 exactly 1)
_BASE = dict(
    i1=10.0,
    i2=11.0,
    e_charge=1.0 / 21.0,
    s_i=1.0,
    gamma_d_extra=0.0,
    hbar=1.0,
    seed=1,
)

# the demonstration runs; h values realize coupling strengths
# {0.3, 3, 30} at delta_i^2/s_i = 1
_SCENARIOS = {
    "fig1": dict(
        epsilon=0.0, h_tunnel=0.0, s11=0.5, s12_re=0.0, s12_im=0.0,
        dt=0.02, t_final=20.0, window=0.1, mode="trajectory",
    ),
    "fig2a": dict(
        epsilon=10.0 / 3.0, h_tunnel=10.0 / 3.0, s11=1.0, s12_re=0.0, s12_im=0.0,
        dt=0.005, t_final=20.0, window=0.05, mode="trajectory",
    ),
    "fig2b": dict(
        epsilon=1.0 / 3.0, h_tunnel=1.0 / 3.0, s11=1.0, s12_re=0.0, s12_im=0.0,
        dt=0.01, t_final=20.0, window=0.1, mode="trajectory",
    ),
    "fig2c": dict(
        epsilon=1.0 / 30.0, h_tunnel=1.0 / 30.0, s11=1.0, s12_re=0.0, s12_im=0.0,
        dt=0.01, t_final=100.0, window=0.2, mode="trajectory",
    ),
    "purify": dict(
        epsilon=0.0, h_tunnel=0.0, s11=0.5, s12_re=0.0, s12_im=0.0,
        dt=0.01, t_final=20.0, window=0.1, mode="trajectory",
    ),
    "steer-demo": dict(
        epsilon=0.0, h_tunnel=0.0, s11=0.5, s12_re=0.5, s12_im=0.0,
        dt=0.01, t_final=2.0, window=0.05, mode="steer",
    ),
}


def scenario_names() -> tuple[str, ...]:
    return tuple(_SCENARIOS)


def scenario(name: str, seed: int | None = None, out_dir: str | None = None) -> RunConfig:
    """Preset configuration for one of the demonstration runs.

    fig1       gradual localization of a symmetric mixture (h = 0)
    fig2a/b/c  monitored oscillations at coupling 0.3 / 3 / 30
    purify     purification of the fully mixed state by monitoring
    steer-demo measure a coherent superposition for tau_loc, then a
               detector-off pulse steers it into dot 1, then re-check
    """
    if name not in _SCENARIOS:
        raise ConfigError(
            f"unknown scenario {name!r}; available: {', '.join(_SCENARIOS)}"
        )
    cfg = RunConfig(**_BASE, **_SCENARIOS[name])
    if seed is not None:
        cfg = replace(cfg, seed=seed)
    if out_dir is not None:
        cfg = replace(cfg, out_dir=out_dir)
    return cfg
