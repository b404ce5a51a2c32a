"""Experiment configuration: dataclasses, YAML loading and validation.

Every section and key is optional in the file; missing ones take the
defaults below.  Unknown keys raise :class:`ConfigError`.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import yaml

from .geometry import ChannelParams, build_array
from .resource import SolverSettings, TaskParams
from .saho import AOSettings, SolveMode
from .sca import ScaSettings

SPEED_OF_LIGHT = 3e8  # gives the 0.125 m wavelength at 2.4 GHz
SWEEP_PARAMETERS = ("directivity_p", "theta_max_deg", "antenna_count")


class ConfigError(ValueError):
    pass


@dataclass
class ArrayConfig:
    kx: int = 3
    ky: int = 3
    spacing_wavelengths: float = 0.5
    theta_max_deg: float = 60.0


@dataclass
class ChannelConfig:
    carrier_hz: float = 2.4e9
    directivity_p: int = 4
    g0_mode: Any = "normalized"  # "normalized" or an explicit linear gain
    a0_db: float = -46.4
    pathloss_exp: Any = 2.8  # scalar or per-user list
    rician_k: Any = 1.0  # scalar or per-user list
    noise_dbm: float = -100.0


@dataclass
class UsersConfig:
    count: int = 4
    horiz_dist_range_m: list = field(default_factory=lambda: [20.0, 50.0])
    height_range_m: list = field(default_factory=lambda: [10.0, 30.0])
    area_uniform: bool = False
    azimuth_halfspace: bool = False


@dataclass
class TaskConfig:
    frame_s: float = 1.0
    bandwidth_hz: float = 10e6
    overhead_v: Any = 1.1
    cycles_per_bit: Any = 1000.0
    e_max_j: Any = 10.0
    circuit_power_w: Any = 0.1
    capacitance_rc: Any = 1e-28
    r_min_bits: Any = 0.0
    weights: Any = 1.0


@dataclass
class RunConfig:
    modes: list = field(default_factory=lambda: ["dynamic", "static", "fixed"])
    seeds: list | None = None
    seed_count: int = 100
    master_seed: int = 0
    ao_tol: float = 1e-3
    ao_max_iters: int = 30
    sca_max_iters: int = 20
    kkt_tol: float = 1e-8
    init: str = "fixed"


@dataclass
class SweepConfig:
    parameter: str = "directivity_p"
    values: list = field(default_factory=list)


@dataclass
class ExperimentConfig:
    array: ArrayConfig = field(default_factory=ArrayConfig)
    channel: ChannelConfig = field(default_factory=ChannelConfig)
    users: UsersConfig = field(default_factory=UsersConfig)
    task: TaskConfig = field(default_factory=TaskConfig)
    run: RunConfig = field(default_factory=RunConfig)
    sweep: SweepConfig | None = None

    # -- derived objects -------------------------------------------------
    @property
    def wavelength(self) -> float:
        return SPEED_OF_LIGHT / self.channel.carrier_hz

    def channel_params(self) -> ChannelParams:
        ch = self.channel
        g0 = None if ch.g0_mode == "normalized" else float(ch.g0_mode)
        return ChannelParams(
            directivity=int(ch.directivity_p),
            g0=g0,
            ref_gain=10 ** (ch.a0_db / 10),
            pathloss_exp=_num(ch.pathloss_exp),
            rician_k=_num(ch.rician_k),
            wavelength=self.wavelength,
            noise_power=10 ** ((ch.noise_dbm - 30) / 10),
        )

    def array_geometry(self):
        a = self.array
        return build_array(a.kx, a.ky, a.spacing_wavelengths * self.wavelength, math.radians(a.theta_max_deg))

    def task_params(self) -> TaskParams:
        t = self.task
        return TaskParams(
            bandwidth=float(t.bandwidth_hz), overhead=_num(t.overhead_v),
            cycles_per_bit=_num(t.cycles_per_bit), frame=float(t.frame_s), e_max=_num(t.e_max_j),
            circuit_power=_num(t.circuit_power_w), capacitance=_num(t.capacitance_rc),
            r_min=_num(t.r_min_bits), weight=_num(t.weights),
        )

    def ao_settings(self) -> AOSettings:
        r = self.run
        return AOSettings(
            tol=r.ao_tol, max_outer=r.ao_max_iters, init=r.init,
            sca=ScaSettings(max_iters=r.sca_max_iters),
            resource=SolverSettings(kkt_tol=r.kkt_tol),
        )

    def with_sweep_value(self, parameter: str, value) -> "ExperimentConfig":
        """Copy of this config with one swept parameter replaced."""
        cfg = copy_config(self)
        if parameter == "directivity_p":
            cfg.channel.directivity_p = int(value)
        elif parameter == "theta_max_deg":
            cfg.array.theta_max_deg = float(value)
        elif parameter == "antenna_count":
            cfg.array.kx, cfg.array.ky = antenna_layout(int(value))
        else:
            raise ConfigError(f"unknown sweep parameter {parameter!r}")
        return cfg

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def _num(v):
    if isinstance(v, (list, tuple)):
        return [float(x) for x in v]
    return float(v)


def antenna_layout(count: int) -> tuple[int, int]:
    """Square layout when ``count`` is a perfect square, otherwise a single row."""
    if count < 1:
        raise ConfigError(f"antenna_count must be >= 1, got {count}")
    side = math.isqrt(count)
    return (side, side) if side * side == count else (count, 1)


def copy_config(cfg: ExperimentConfig) -> ExperimentConfig:
    return from_dict(cfg.to_dict())


_SECTIONS = {
    "array": ArrayConfig,
    "channel": ChannelConfig,
    "users": UsersConfig,
    "task": TaskConfig,
    "run": RunConfig,
    "sweep": SweepConfig,
}


def _as_number(key, v):
    # YAML 1.1 reads "2.4e9" (no dot, no sign) as a string
    if isinstance(v, bool):
        raise ConfigError(f"{key}: expected a number, got {v!r}")
    if isinstance(v, str):
        try:
            return float(v)
        except ValueError:
            raise ConfigError(f"{key}: expected a number, got {v!r}") from None
    if isinstance(v, (int, float)):
        return v
    raise ConfigError(f"{key}: expected a number, got {v!r}")


def _coerce(key, v, default):
    if key == "channel.g0_mode" and v == "normalized":
        return v
    if isinstance(default, bool):
        if not isinstance(v, bool):
            raise ConfigError(f"{key}: expected true/false, got {v!r}")
        return v
    if isinstance(default, (int, float)) and not isinstance(default, bool):
        if isinstance(v, list) and key.startswith(("channel.", "task.")):
            return [_as_number(key, x) for x in v]
        x = _as_number(key, v)
        if isinstance(default, int) and not isinstance(default, bool):
            if float(x) != int(x):
                raise ConfigError(f"{key}: expected an integer, got {v!r}")
            return int(x)
        return x
    if key in ("users.horiz_dist_range_m", "users.height_range_m"):
        if not isinstance(v, list):
            raise ConfigError(f"{key} must be a [low, high] pair")
        return [_as_number(key, x) for x in v]
    if key == "sweep.values":
        if not isinstance(v, list):
            raise ConfigError(f"{key} must be a list")
        return [_as_number(key, x) for x in v]
    if key == "run.seeds" and v is not None:
        if not isinstance(v, list):
            raise ConfigError(f"{key} must be a list")
        return [int(_as_number(key, x)) for x in v]
    return v


def _field_default(f):
    if f.default is not dataclasses.MISSING:
        return f.default
    return f.default_factory()


_DEFAULTS = {cls: {f.name: _field_default(f) for f in dataclasses.fields(cls)} for cls in _SECTIONS.values()}


def from_dict(data: dict | None) -> ExperimentConfig:
    data = dict(data or {})
    unknown = set(data) - set(_SECTIONS)
    if unknown:
        raise ConfigError(f"unknown config section(s): {', '.join(sorted(unknown))}")
    kwargs = {}
    for name, cls in _SECTIONS.items():
        if name not in data or data[name] is None:
            continue
        section = data[name]
        if not isinstance(section, dict):
            raise ConfigError(f"section {name!r} must be a mapping")
        allowed = {f.name for f in dataclasses.fields(cls)}
        bad = set(section) - allowed
        if bad:
            raise ConfigError(f"unknown key(s) in [{name}]: {', '.join(sorted(bad))}")
        kwargs[name] = cls(**{k: _coerce(f"{name}.{k}", v, _DEFAULTS[cls][k]) for k, v in section.items()})
    cfg = ExperimentConfig(**kwargs)
    validate_config(cfg)
    return cfg


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    if data is not None and not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    return from_dict(data)


def _range(name, r, *, positive=True):
    if not isinstance(r, (list, tuple)) or len(r) != 2:
        raise ConfigError(f"{name} must be a [low, high] pair")
    lo, hi = float(r[0]), float(r[1])
    if lo > hi:
        raise ConfigError(f"{name} is not ordered: {r}")
    if positive and lo < 0:
        raise ConfigError(f"{name} must be non-negative")


def validate_config(cfg: ExperimentConfig) -> None:
    """Raise :class:`ConfigError` on any invalid value."""
    a, ch, us, run = cfg.array, cfg.channel, cfg.users, cfg.run
    if a.kx < 1 or a.ky < 1:
        raise ConfigError("array.kx and array.ky must be >= 1")
    if a.spacing_wavelengths <= 0:
        raise ConfigError("array.spacing_wavelengths must be positive")
    if not 0 <= a.theta_max_deg <= 90:
        raise ConfigError("array.theta_max_deg must lie in [0, 90]")
    if ch.carrier_hz <= 0:
        raise ConfigError("channel.carrier_hz must be positive")
    if ch.g0_mode != "normalized":
        try:
            if float(ch.g0_mode) <= 0:
                raise ValueError
        except (TypeError, ValueError):
            raise ConfigError("channel.g0_mode must be 'normalized' or a positive number") from None
    if us.count < 1:
        raise ConfigError("users.count must be >= 1")
    _range("users.horiz_dist_range_m", us.horiz_dist_range_m)
    _range("users.height_range_m", us.height_range_m)
    if max(us.horiz_dist_range_m) == 0 and max(us.height_range_m) == 0:
        raise ConfigError("users would sit on the array origin")
    if min(us.height_range_m) <= 0:
        raise ConfigError("users.height_range_m must be strictly positive")
    for mode in run.modes:
        try:
            SolveMode(mode)
        except ValueError:
            raise ConfigError(f"unknown mode {mode!r}") from None
    if not run.modes:
        raise ConfigError("run.modes must not be empty")
    if run.seeds is None and run.seed_count < 1:
        raise ConfigError("run.seed_count must be >= 1")
    if run.seeds is not None and (not run.seeds or any(int(s) < 0 for s in run.seeds)):
        raise ConfigError("run.seeds must be a non-empty list of non-negative integers")
    if run.init not in ("fixed", "centroid"):
        raise ConfigError("run.init must be 'fixed' or 'centroid'")
    try:
        cfg.channel_params()
        cfg.array_geometry()
        cfg.task_params()
        cfg.ao_settings()
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    n = us.count
    for name in ("pathloss_exp", "rician_k"):
        v = getattr(ch, name)
        if isinstance(v, list) and len(v) != n:
            raise ConfigError(f"channel.{name} has {len(v)} entries for {n} users")
    for f in dataclasses.fields(cfg.task):
        v = getattr(cfg.task, f.name)
        if isinstance(v, list) and len(v) != n:
            raise ConfigError(f"task.{f.name} has {len(v)} entries for {n} users")
    if cfg.sweep is not None:
        sw = cfg.sweep
        if sw.parameter not in SWEEP_PARAMETERS:
            raise ConfigError(f"sweep.parameter must be one of {SWEEP_PARAMETERS}")
        if not sw.values:
            raise ConfigError("sweep.values must not be empty")
        for v in sw.values:
            try:
                _check_sweep_value(sw.parameter, v)
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"invalid sweep value {v!r} for {sw.parameter}: {exc}") from None


def _check_sweep_value(parameter, value):
    if parameter == "directivity_p":
        if int(value) != value or int(value) < 1:
            raise ValueError("directivity must be a positive integer")
    elif parameter == "theta_max_deg":
        if not 0 <= float(value) <= 90:
            raise ValueError("theta_max_deg must lie in [0, 90]")
    elif parameter == "antenna_count":
        if int(value) != value or int(value) < 1:
            raise ValueError("antenna_count must be a positive integer")
