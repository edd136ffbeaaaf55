"""Scenario configuration: presets, key=value parsing, validation.

The config file format is one `key = value` pair per line, '#' comments,
blank lines ignored.  The same keys are accepted via the CLI's repeatable
``--set key=value``.  Unknown keys are rejected.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from importlib import resources

import numpy as np

from .medium import (AbsorptionTable, AlbedoParams, DensityProfile, Medium,
                     RefractiveProfile)
from .solver import BoundaryData
from .spectral import KELVIN_PER_UNIT, FrequencyGrid, kelvin_to_rescaled

BUILTIN_TABLE = "builtin"


class ConfigError(ValueError):
    """Invalid or unknown configuration input."""


@dataclass
class ScenarioConfig:
    """Fully resolved scenario description (all values after preset expansion)."""

    preset: str = "custom"
    epsilon: float = -0.3
    beta: float = 1.0
    y_interface: float = 0.5
    z_top: float = 1.0
    a1: float = 0.7
    a2: float = 0.3
    z1: float = 0.4
    z2: float = 0.8
    nu1: float = 0.6
    nu2: float = 1.5
    c_e: float = 0.0
    t_e_kelvin: float = 300.0
    c_s: float = 0.0
    t_s_kelvin: float = 5700.0
    kappa: str = "0.5"            # constant value, or "table:PATH" / "table:builtin"
    co2_bands: str = ""           # "lo_um:hi_um:value,..." wavelength bands
    rho_below: float = 1.0
    rho_above: float = 1.0
    fresnel: bool = True
    mode: str = "up"
    basis: str = "iq"
    n_z: int = 100
    n_nu: int = 120
    n_mu: int = 64
    n_levels: int = 60
    nu_min: float = 0.01
    nu_max: float = 20.0
    tol: float = 1e-4
    max_iter: int = 50
    probe_altitude_m: float = 300.0
    hot_start_celsius: float = 180.0
    down_init: str = "emission"

    def validate(self) -> "ScenarioConfig":
        if not 0.0 <= self.beta <= 1.0:
            raise ConfigError(f"beta must lie in [0, 1], got {self.beta}")
        if self.epsilon <= -1.0:
            raise ConfigError("epsilon must keep the refractive index positive")
        if not 0.0 < self.y_interface < self.z_top:
            raise ConfigError("y_interface must lie strictly inside (0, z_top)")
        if not (0.0 <= self.a1 < 1.0 and 0.0 <= self.a2 < 1.0):
            raise ConfigError("albedo amplitudes must lie in [0, 1)")
        if self.mode not in ("up", "down", "both"):
            raise ConfigError(f"mode must be up, down or both, got {self.mode!r}")
        if self.basis not in ("iq", "ilir"):
            raise ConfigError(f"basis must be iq or ilir, got {self.basis!r}")
        if self.rho_below <= 0.0 or self.rho_above <= 0.0:
            raise ConfigError("densities must be positive")
        if self.c_e < 0.0 or self.c_s < 0.0:
            raise ConfigError("boundary amplitudes must be nonnegative")
        if self.tol <= 0.0 or self.max_iter < 1:
            raise ConfigError("tol must be positive and max_iter at least 1")
        self._kappa_source()  # raises on malformed kappa / missing file
        parse_bands(self.co2_bands)
        return self

    def _kappa_source(self):
        spec = str(self.kappa).strip()
        if spec.startswith("table:"):
            path = spec[len("table:"):]
            if path == BUILTIN_TABLE:
                return AbsorptionTable.from_text(builtin_table_text())
            try:
                return AbsorptionTable.from_file(path)
            except OSError as exc:
                raise ConfigError(f"cannot read kappa table {path!r}: {exc}") from exc
        try:
            value = float(spec)
        except ValueError as exc:
            raise ConfigError(f"kappa must be a number or 'table:PATH', got {spec!r}") from exc
        if value <= 0.0:
            raise ConfigError("constant kappa must be positive")
        return AbsorptionTable.constant(value)

    def items(self):
        for f in dataclasses.fields(self):
            yield f.name, getattr(self, f.name)


def builtin_table_text() -> str:
    return resources.files("vrrte").joinpath("data/ir_absorption_sample.txt").read_text()


def parse_bands(spec: str):
    """Parse 'lo:hi:value,lo:hi:value' wavelength bands (micrometres)."""
    spec = spec.strip()
    if not spec:
        return ()
    bands = []
    for chunk in spec.split(","):
        parts = chunk.split(":")
        if len(parts) != 3:
            raise ConfigError(f"band must be lo:hi:value, got {chunk!r}")
        try:
            bands.append(tuple(float(p) for p in parts))
        except ValueError as exc:
            raise ConfigError(f"non-numeric band {chunk!r}") from exc
    return tuple(bands)


PRESETS = {
    "case1": {  # shortwave from the top boundary
        "c_e": 0.0, "c_s": 2.0e-5, "t_s_kelvin": 5700.0, "t_e_kelvin": 300.0,
        "epsilon": -0.3, "kappa": "0.5",
    },
    "case2": {  # longwave from the bottom boundary, free escape at the top
        "c_e": 2.5, "t_e_kelvin": 300.0, "c_s": 0.0, "t_s_kelvin": 5700.0,
        "epsilon": -0.3, "kappa": "table:builtin",
    },
    "water_air": {  # dense lower zone, 1:9 split of the column
        "c_e": 2.5, "t_e_kelvin": 300.0, "c_s": 0.0, "t_s_kelvin": 5700.0,
        "epsilon": -0.3, "kappa": "table:builtin",
        "y_interface": 0.1, "rho_below": 10.0, "rho_above": 0.1,
    },
    "custom": {},
}

_FIELDS = {f.name: f for f in dataclasses.fields(ScenarioConfig)}


def _coerce(name: str, raw: str):
    kind = _FIELDS[name].type
    raw = raw.strip()
    if kind == "bool" or isinstance(getattr(ScenarioConfig(), name), bool):
        if raw.lower() in ("1", "true", "on", "yes"):
            return True
        if raw.lower() in ("0", "false", "off", "no"):
            return False
        raise ConfigError(f"{name} expects a boolean, got {raw!r}")
    if kind == "int":
        try:
            return int(raw)
        except ValueError as exc:
            raise ConfigError(f"{name} expects an integer, got {raw!r}") from exc
    if kind == "float":
        try:
            return float(raw)
        except ValueError as exc:
            raise ConfigError(f"{name} expects a number, got {raw!r}") from exc
    return raw


def apply_assignments(cfg: ScenarioConfig, pairs) -> ScenarioConfig:
    values = dataclasses.asdict(cfg)
    for key, raw in pairs:
        if key == "preset":
            raise ConfigError("preset must be chosen before other keys "
                              "(use --preset or the first config line)")
        if key not in _FIELDS:
            raise ConfigError(f"unknown config key {key!r}")
        values[key] = _coerce(key, raw)
    return ScenarioConfig(**values)


def from_preset(name: str) -> ScenarioConfig:
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r} (choose from {sorted(PRESETS)})")
    return dataclasses.replace(ScenarioConfig(preset=name), **PRESETS[name])


def parse_config_text(text: str, base: ScenarioConfig | None = None) -> ScenarioConfig:
    pairs = []
    preset = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value, got {line!r}")
        key, raw = (part.strip() for part in line.split("=", 1))
        if key == "preset":
            if pairs:
                raise ConfigError("preset must come before other keys")
            preset = raw
        else:
            pairs.append((key, raw))
    cfg = base if base is not None else ScenarioConfig()
    if preset is not None:
        cfg = from_preset(preset)
    return apply_assignments(cfg, pairs)


def parse_config_file(path, base: ScenarioConfig | None = None) -> ScenarioConfig:
    try:
        with open(path, "r", encoding="utf-8") as handle:
            text = handle.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc}") from exc
    return parse_config_text(text, base)


# -- construction of model ingredients ----------------------------------------


def medium_from_config(cfg: ScenarioConfig) -> Medium:
    profile = RefractiveProfile.from_step(cfg.epsilon, cfg.y_interface, cfg.z_top)
    if cfg.rho_below == cfg.rho_above:
        rho = DensityProfile.constant(cfg.rho_below)
    else:
        rho = DensityProfile.two_zone(cfg.rho_below, cfg.rho_above, cfg.y_interface)
    table = cfg._kappa_source()
    bands = parse_bands(cfg.co2_bands)
    if bands:
        table = table.with_bands(bands)
    albedo = AlbedoParams(cfg.a1, cfg.a2, cfg.z1, cfg.z2, cfg.nu1, cfg.nu2)
    return Medium(profile, rho, table, albedo, cfg.beta)


def boundary_from_config(cfg: ScenarioConfig) -> BoundaryData:
    return BoundaryData(
        c_bottom=cfg.c_e, t_bottom=float(kelvin_to_rescaled(cfg.t_e_kelvin)),
        c_top=cfg.c_s, t_top=float(kelvin_to_rescaled(cfg.t_s_kelvin)))


def frequency_grid_from_config(cfg: ScenarioConfig) -> FrequencyGrid:
    order = 5
    panels = max(1, round(cfg.n_nu / order))
    return FrequencyGrid.build(cfg.nu_min, cfg.nu_max, panels, order)


def levels_from_config(cfg: ScenarioConfig) -> np.ndarray:
    return np.linspace(0.01, 1.2, cfg.n_levels)


def probe_altitude_units(cfg: ScenarioConfig) -> float:
    """Probe altitude in column units (metres over the 10 km unit length)."""
    return cfg.probe_altitude_m * 1.0e-4


def hot_start_kelvin(cfg: ScenarioConfig) -> float:
    return cfg.hot_start_celsius + 273.15


def echo_config(cfg: ScenarioConfig) -> str:
    return "\n".join(f"{name} = {value}" for name, value in sorted(cfg.items()))
