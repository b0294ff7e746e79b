"""Fleet geometry, kinematics, area/collision checks and propulsion energy."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from hetuav.config import ScenarioConfig


@dataclass
class FleetState:
    """Horizontal UAV positions at slot ``t``; altitude is shared and fixed."""

    xy: np.ndarray  # (N_K, 2)
    altitude: float
    t: int = 0
    speeds: np.ndarray = field(default=None)  # speed flown into this slot

    def __post_init__(self) -> None:
        self.xy = np.asarray(self.xy, dtype=float).reshape(-1, 2)
        if self.speeds is None:
            self.speeds = np.zeros(len(self.xy))

    @property
    def n_uav(self) -> int:
        return len(self.xy)

    @property
    def pos(self) -> np.ndarray:
        """3D positions, z fixed at the flight altitude."""
        z = np.full((self.n_uav, 1), self.altitude)
        return np.hstack([self.xy, z])

    def copy(self) -> "FleetState":
        return FleetState(self.xy.copy(), self.altitude, self.t, self.speeds.copy())


def step_kinematics(pos, v: float, omega: float) -> np.ndarray:
    """Move ``v`` metres along heading ``omega``; no clamping."""
    pos = np.asarray(pos, dtype=float)
    return pos + v * np.array([np.cos(omega), np.sin(omega)])


def boundary_violation(pos, D: float) -> bool:
    x, y = np.asarray(pos, dtype=float)[:2]
    return bool(x < 0 or x > D or y < 0 or y > D)


def clamp_to_area(pos, D: float) -> np.ndarray:
    return np.clip(np.asarray(pos, dtype=float), 0.0, D)


def collision_pairs(pos, d_c: float) -> set[tuple[int, int]]:
    """All pairs (k, k') with k < k' closer than ``d_c``.

    ``pos`` may be 2D or 3D rows, or a FleetState.
    """
    if isinstance(pos, FleetState):
        pos = pos.pos
    p = np.asarray(pos, dtype=float)
    diff = p[:, None, :] - p[None, :, :]
    dist = np.sqrt((diff**2).sum(-1))
    ks, ls = np.nonzero(np.triu(dist < d_c, k=1))
    return {(int(a), int(b)) for a, b in zip(ks, ls)}


def propulsion_power(v, cfg: ScenarioConfig):
    """Rotary-wing propulsion power in watts at forward speed ``v``."""
    v = np.asarray(v, dtype=float)
    parasite = 0.5 * cfg.d0 * cfg.rho_a * cfg.s_sol * cfg.disc_area * v**3
    blade = cfg.P0 * (1.0 + 3.0 * v**2 / cfg.v_tip**2)
    induced = cfg.P1 * np.sqrt(np.sqrt(1.0 + v**4 / (4.0 * cfg.v0**4)) - v**2 / (2.0 * cfg.v0**2))
    out = parasite + blade + induced
    return float(out) if out.ndim == 0 else out


def slot_energy(v, dt: float, cfg: ScenarioConfig):
    if dt <= 0:
        raise ValueError("slot duration must be > 0")
    return propulsion_power(v, cfg) * dt


def fleet_energy_objective(speeds, cfg: ScenarioConfig, dt: float | None = None) -> float:
    """Total propulsion energy for a (N_K, N_T) array of per-slot speeds."""
    dt = cfg.slot_duration if dt is None else dt
    speeds = np.atleast_2d(np.asarray(speeds, dtype=float))
    return float(np.sum(slot_energy(speeds, dt, cfg)))
