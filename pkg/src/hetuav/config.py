"""Scenario configuration for heterogeneous UAV secrecy simulations.

A scenario is a flat key/value mapping stored as YAML. Field names are
descriptive; the symbols used in the parameter table (``D``, ``H_UAV``,
``V_max``, ``f_c``, ``P_max``, ``sigma2``, ``delta``/``f``, ``eta_LoS``,
``M``, ``A``, ...) are accepted as aliases so scenario files can be written
in either vocabulary.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any

import numpy as np
import yaml


class ConfigError(ValueError):
    """Raised for unknown keys or values violating a config invariant."""


@dataclass
class ScenarioConfig:
    # geometry / fleet
    area_side: float = 200.0
    uav_altitude: float = 100.0
    n_uav: int = 2
    n_gt: int = 8
    n_eve: int = 2
    coverage_range: list[float] = field(default_factory=lambda: [130.0, 150.0])
    service_capacity: list[int] = field(default_factory=lambda: [3, 4])
    uav_init: list[list[float]] | None = None
    coverage_distance: str = "3d"  # "3d" or "horizontal"

    # mobility
    v_max: float = 25.0
    v_min: float = 4.0
    speed_levels: int = 5
    slot_duration: float = 1.0
    n_slots: int = 20
    protection_distance: float = 10.0

    # radio
    carrier_freq: float = 2.4e9
    max_power: float = 35.0
    noise_psd_dbm: float = -170.0
    bandwidth: float = 1e6
    s_curve_a: float = 9.61
    s_curve_b: float = 0.15
    eta_los: float = 1.0
    eta_nlos: float = 20.0
    antennas: int = 2

    # rotary-wing propulsion
    d0: float = 0.3
    rho_a: float = 1.225
    s_sol: float = 0.05
    disc_area: float = 0.503
    v_tip: float = 120.0
    P0: float = 79.86
    P1: float = 88.63
    v0: float = 4.03

    # ground layout
    n_hotspots: int = 2
    hotspot_std: float = 15.0
    hotspot_fraction: float = 1.0

    # reward
    w_sr: float = 1.0
    w_ec: float | None = None
    p_col: float = 5.0

    # inner solver
    s2dc_max_iter: int = 30
    s2dc_tol: float = 1e-4
    s2dc_mu0: float = 1.0
    s2dc_mu_max: float = 1e3
    ipm_tol: float = 1e-9
    s2dc_starts: list[str] = field(default_factory=lambda: ["mrt", "gev"])

    rng_seed: int = 0

    def __post_init__(self) -> None:
        self.coverage_range = [float(c) for c in np.atleast_1d(self.coverage_range)]
        self.service_capacity = [int(c) for c in np.atleast_1d(self.service_capacity)]
        if len(self.coverage_range) == 1 and self.n_uav > 1:
            self.coverage_range = self.coverage_range * self.n_uav
        if len(self.service_capacity) == 1 and self.n_uav > 1:
            self.service_capacity = self.service_capacity * self.n_uav
        self.validate()

    def validate(self) -> None:
        def need(ok: bool, key: str, msg: str) -> None:
            if not ok:
                raise ConfigError(f"{key}: {msg}")

        need(self.area_side > 0, "area_side", "must be > 0")
        need(self.uav_altitude > 0, "uav_altitude", "must be > 0")
        need(self.n_uav >= 1, "n_uav", "must be >= 1")
        need(self.n_gt >= 0, "n_gt", "must be >= 0")
        need(self.n_eve >= 0, "n_eve", "must be >= 0")
        need(self.v_min > 0, "v_min", "must be > 0")
        need(self.v_max > self.v_min, "v_max", "must exceed v_min")
        need(self.speed_levels >= 3, "speed_levels", "must be >= 3")
        need(self.slot_duration > 0, "slot_duration", "must be > 0")
        need(self.n_slots >= 1, "n_slots", "must be >= 1")
        need(len(self.coverage_range) == self.n_uav, "coverage_range",
             f"expected {self.n_uav} entries, got {len(self.coverage_range)}")
        need(all(c > 0 for c in self.coverage_range), "coverage_range", "entries must be > 0")
        need(len(self.service_capacity) == self.n_uav, "service_capacity",
             f"expected {self.n_uav} entries, got {len(self.service_capacity)}")
        need(all(c >= 1 for c in self.service_capacity), "service_capacity", "entries must be >= 1")
        need(self.antennas >= 1, "antennas", "must be >= 1")
        need(self.bandwidth > 0, "bandwidth", "must be > 0")
        need(self.max_power > 0, "max_power", "must be > 0")
        need(self.coverage_distance in ("3d", "horizontal"), "coverage_distance",
             "must be '3d' or 'horizontal'")
        for key in ("d0", "rho_a", "s_sol", "disc_area", "v_tip", "P0", "P1", "v0"):
            need(getattr(self, key) > 0, key, "rotor parameter must be > 0")
        need(0.0 <= self.hotspot_fraction <= 1.0, "hotspot_fraction", "must lie in [0, 1]")
        need(self.s2dc_max_iter >= 1, "s2dc_max_iter", "must be >= 1")
        need(self.ipm_tol > 0, "ipm_tol", "must be > 0")
        need(len(self.s2dc_starts) >= 1 and set(self.s2dc_starts) <= {"mrt", "gev"}, "s2dc_starts",
             "entries must be 'mrt' or 'gev'")
        if self.uav_init is not None:
            need(len(self.uav_init) == self.n_uav, "uav_init", f"expected {self.n_uav} positions")

    @property
    def hover_power(self) -> float:
        return self.P0 + self.P1

    @property
    def energy_weight(self) -> float:
        """Weight on the energy reward; defaults to one all-hover slot per unit."""
        if self.w_ec is not None:
            return self.w_ec
        return 1.0 / (self.n_uav * self.hover_power * self.slot_duration)

    def initial_positions(self) -> np.ndarray:
        if self.uav_init is not None:
            return np.asarray(self.uav_init, dtype=float).reshape(self.n_uav, 2)
        # small square formation around the centre, 25 m offsets
        c = self.area_side / 2.0
        offsets = np.array([[-1, -1], [1, 1], [-1, 1], [1, -1]], dtype=float) * 25.0
        reps = int(np.ceil(self.n_uav / 4))
        pts = np.concatenate([offsets * (r + 1) for r in range(reps)])[: self.n_uav]
        return np.clip(c + pts, 0.0, self.area_side)

    def replace(self, **changes: Any) -> "ScenarioConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict[str, Any]:
        return dataclasses.asdict(self)


# parameter-table symbols accepted as keys
ALIASES = {
    "D": "area_side",
    "H_UAV": "uav_altitude",
    "H": "uav_altitude",
    "N_K": "n_uav",
    "N_I": "n_gt",
    "N_E": "n_eve",
    "C_r": "coverage_range",
    "N_s": "service_capacity",
    "V_max": "v_max",
    "V_min": "v_min",
    "delta_t": "slot_duration",
    "N_T": "n_slots",
    "d_c": "protection_distance",
    "f_c": "carrier_freq",
    "P_max": "max_power",
    "sigma2": "noise_psd_dbm",
    "B": "bandwidth",
    "delta": "s_curve_a",
    "f": "s_curve_b",
    "a": "s_curve_a",
    "b": "s_curve_b",
    "eta_LoS": "eta_los",
    "eta_NLoS": "eta_nlos",
    "M": "antennas",
    "A": "disc_area",
    "L": "speed_levels",
}

_FIELDS = {f.name for f in dataclasses.fields(ScenarioConfig)}


def config_from_dict(data: dict[str, Any]) -> ScenarioConfig:
    kwargs: dict[str, Any] = {}
    for key, value in data.items():
        name = ALIASES.get(key, key)
        if name not in _FIELDS:
            raise ConfigError(f"{key}: unknown configuration key")
        if name in kwargs:
            raise ConfigError(f"{key}: duplicate of '{name}'")
        kwargs[name] = value
    try:
        return ScenarioConfig(**kwargs)
    except TypeError as exc:  # pragma: no cover - defensive
        raise ConfigError(str(exc)) from exc


def load_config(path: str | Path) -> ScenarioConfig:
    """Load a scenario from a YAML file or a bundled scenario name."""
    p = Path(path)
    if not p.exists():
        bundled = resources.files("hetuav") / "scenarios" / f"{path}.yaml"
        if not bundled.is_file():
            raise ConfigError(f"{path}: no such scenario file or bundled scenario")
        text = bundled.read_text()
    else:
        text = p.read_text()
    data = yaml.safe_load(text) or {}
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: expected a mapping at top level")
    return config_from_dict(data)


def dump_config(cfg: ScenarioConfig, path: str | Path) -> None:
    Path(path).write_text(yaml.safe_dump(cfg.to_dict(), sort_keys=False))
