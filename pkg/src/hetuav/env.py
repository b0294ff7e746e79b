"""Multi-UAV secrecy MDP: observations, discrete actions, rewards, stepping.

One slot runs: decode actions -> move and clamp -> coverage -> channel draw
-> capacity-limited scheduling -> precoding (S2DC or a fixed power split)
-> rates -> rewards -> next observations.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable

import numpy as np

from hetuav.association import AssociationState, coverage_matrix, schedule_gts
from hetuav.channel import Channels, draw_channels, noise_power
from hetuav.config import ScenarioConfig
from hetuav.rsma import PrecoderSet, RatesReport, rates_report
from hetuav.s2dc import S2DCOptions, s2dc_solve
from hetuav.world import FleetState, boundary_violation, clamp_to_area, collision_pairs, slot_energy, step_kinematics

DIRECTIONS = ("right", "up", "left", "down")
HEADINGS = {"right": 0.0, "up": np.pi / 2, "left": np.pi, "down": 3 * np.pi / 2}
# common-stream share of the power budget for the precoding-as-action baselines
SPLIT_LEVELS = (0.0, 0.2, 0.4, 0.6, 0.8)
_LAYOUT_TAG = 7


def velocity_ladder(v_min: float, v_max: float, L: int) -> np.ndarray:
    """{0} plus L-1 log-spaced speeds from v_min to v_max."""
    if L < 3:
        raise ValueError("need at least 3 speed levels")
    if not 0 < v_min < v_max:
        raise ValueError("need 0 < v_min < v_max")
    l = np.arange(L - 1)
    return np.concatenate([[0.0], v_min * (v_max / v_min) ** (l / (L - 2))])


@dataclass(frozen=True)
class ActionSpec:
    """Index 0 is 'still'; then each direction crossed with each non-zero
    speed. With ``power_levels`` > 1 every movement is further crossed with a
    common/private split level: index = move * power_levels + level."""

    ladder: tuple
    power_levels: int = 1

    @classmethod
    def from_config(cls, cfg: ScenarioConfig, power_levels: int = 1) -> "ActionSpec":
        return cls(tuple(float(v) for v in velocity_ladder(cfg.v_min, cfg.v_max, cfg.speed_levels)),
                   power_levels)

    @property
    def n_moves(self) -> int:
        return 1 + len(DIRECTIONS) * (len(self.ladder) - 1)

    @property
    def n(self) -> int:
        return self.n_moves * self.power_levels

    def encode(self, direction: str, level: int, power: int = 0) -> int:
        """``direction`` in DIRECTIONS or 'still'; ``level`` indexes the ladder."""
        if not 0 <= power < self.power_levels:
            raise ValueError(f"power level {power} out of range")
        if direction == "still" or level == 0:
            move = 0
        else:
            if direction not in DIRECTIONS:
                raise ValueError(f"unknown direction {direction!r}")
            if not 1 <= level < len(self.ladder):
                raise ValueError(f"speed level {level} out of range")
            move = 1 + DIRECTIONS.index(direction) * (len(self.ladder) - 1) + (level - 1)
        return move * self.power_levels + power

    def parts(self, index: int) -> tuple[str, int, int]:
        """(direction, ladder level, power level) of an action index."""
        index = int(index)
        if not 0 <= index < self.n:
            raise ValueError(f"action index {index} out of range [0, {self.n})")
        move, power = divmod(index, self.power_levels)
        if move == 0:
            return "still", 0, power
        d, l = divmod(move - 1, len(self.ladder) - 1)
        return DIRECTIONS[d], l + 1, power

    def decode(self, index: int) -> tuple[float, float]:
        """(speed, heading) for the kinematics."""
        direction, level, _ = self.parts(index)
        if direction == "still":
            return 0.0, 0.0
        return self.ladder[level], HEADINGS[direction]


@dataclass
class Transition:
    agent: int
    episode: int
    t: int
    obs: list
    action: int
    reward: float
    next_obs: list
    done: bool
    fallback: bool = False

    def to_json(self) -> str:
        return json.dumps(asdict(self), separators=(",", ":"))

    @classmethod
    def from_json(cls, line: str) -> "Transition":
        return cls(**json.loads(line))


def write_transitions(path: str | Path, transitions: Iterable[Transition]) -> int:
    n = 0
    with open(path, "w") as fh:
        for tr in transitions:
            fh.write(tr.to_json() + "\n")
            n += 1
    return n


def read_transitions(path: str | Path, obs_dim: int | None = None, n_actions: int | None = None) -> list[Transition]:
    out = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            tr = Transition.from_json(line)
            if obs_dim is not None and (len(tr.obs) != obs_dim or len(tr.next_obs) != obs_dim):
                raise ValueError(f"{path}:{lineno}: observation length {len(tr.obs)} != {obs_dim}")
            if n_actions is not None and not 0 <= tr.action < n_actions:
                raise ValueError(f"{path}:{lineno}: action {tr.action} out of range")
            out.append(tr)
    return out


@dataclass
class Layout:
    gt: np.ndarray  # (I, 2)
    eve: np.ndarray  # (E, 2)
    hotspots: np.ndarray  # (n_hotspots, 2)


def hotspot_layout(cfg: ScenarioConfig, seed: int, episode: int = 0) -> Layout:
    """GTs around uniformly drawn hot spots (a share uniform over the area
    when ``hotspot_fraction`` < 1); Eves uniform over the area."""
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), int(episode), _LAYOUT_TAG]))
    D = cfg.area_side
    n_h = max(cfg.n_hotspots, 1)
    centres = rng.uniform(0.15 * D, 0.85 * D, size=(n_h, 2))
    n_clustered = int(round(cfg.hotspot_fraction * cfg.n_gt))
    which = np.arange(n_clustered) % n_h
    clustered = centres[which] + rng.normal(scale=cfg.hotspot_std, size=(n_clustered, 2))
    scattered = rng.uniform(0.0, D, size=(cfg.n_gt - n_clustered, 2))
    gt = np.clip(np.concatenate([clustered, scattered]), 0.0, D)
    eve = rng.uniform(0.0, D, size=(cfg.n_eve, 2))
    return Layout(gt, eve, centres)


def observe(k: int, uav_xy: np.ndarray, layout: Layout, D: float) -> np.ndarray:
    """Relative positions u_k - (other UAVs, GTs, Eves), divided by D."""
    u = uav_xy[k]
    others = np.delete(uav_xy, k, axis=0)
    rel = np.concatenate([u - others, u - layout.gt, u - layout.eve]) / D
    return rel.ravel()


def reward(r_sr: float, r_ec: float, violated: bool, collided: bool, cfg: ScenarioConfig) -> float:
    """(w_sr r_sr + w_ec r_ec) eta_loc - eta_col p_col."""
    eta_loc = 0.0 if violated else 1.0
    eta_col = 1.0 if collided else 0.0
    return (cfg.w_sr * r_sr + cfg.energy_weight * r_ec) * eta_loc - eta_col * cfg.p_col


def split_precoders(channels: Channels, assoc: AssociationState, fractions, p_max: float) -> PrecoderSet:
    """Full-power precoders with maximum-ratio private beams, a principal
    common beam and a per-UAV common share ``fractions[k]``."""
    K, I = assoc.schedule.shape
    M = channels.antennas
    prec = PrecoderSet.zeros(K, I, M)
    for k in range(K):
        served = np.flatnonzero(assoc.schedule[k])
        if len(served) == 0:
            continue
        h = channels.gt[k, served]
        hn = h / np.linalg.norm(h, axis=1, keepdims=True)
        f = float(fractions[k])
        for i, u in zip(served, hn):
            prec.pp[k, i] = np.sqrt(p_max * (1 - f) / len(served)) * u
        if f > 0:
            G = hn.T @ hn.conj()
            prec.pc[k] = np.sqrt(p_max * f) * np.linalg.eigh(G)[1][:, -1]
    return prec


@dataclass
class StepInfo:
    f1: float
    sum_secrecy: float
    energy: np.ndarray  # (K,) joules this slot
    violations: np.ndarray  # (K,) bool
    collisions: int  # number of close pairs
    s2dc_iterations: int
    s2dc_converged: bool
    served: int


class HetUavEnv:
    """Single-owner environment; ``precoding`` is 's2dc' or 'split'."""

    def __init__(self, cfg: ScenarioConfig, precoding: str = "s2dc", s2dc_opts: S2DCOptions | None = None):
        if precoding not in ("s2dc", "split"):
            raise ValueError(f"unknown precoding mode {precoding!r}")
        self.cfg = cfg
        self.precoding = precoding
        self.spec = ActionSpec.from_config(cfg, len(SPLIT_LEVELS) if precoding == "split" else 1)
        self.opts = s2dc_opts or S2DCOptions.from_config(cfg)
        self.noise = noise_power(cfg.noise_psd_dbm, cfg.bandwidth)
        self.obs_dim = 2 * (cfg.n_uav - 1 + cfg.n_gt + cfg.n_eve)
        self.seed = 0
        self.episode = 0
        self.layout: Layout | None = None
        self.fleet: FleetState | None = None
        self.last: dict = {}

    @property
    def n_agents(self) -> int:
        return self.cfg.n_uav

    @property
    def n_actions(self) -> int:
        return self.spec.n

    def reset(self, seed: int, episode: int = 0) -> list[np.ndarray]:
        """Place GTs and Eves (fresh per episode), UAVs at their start points."""
        self.seed, self.episode = int(seed), int(episode)
        self.layout = hotspot_layout(self.cfg, self.seed, self.episode)
        self.fleet = FleetState(self.cfg.initial_positions(), self.cfg.uav_altitude)
        self.last = {}
        return self.observations()

    def observations(self) -> list[np.ndarray]:
        return [observe(k, self.fleet.xy, self.layout, self.cfg.area_side) for k in range(self.n_agents)]

    def summary(self) -> dict:
        """Absolute-position view used by expert policies."""
        return dict(uav=self.fleet.xy.copy(), gt=self.layout.gt.copy(), eve=self.layout.eve.copy(),
                    coverage_range=list(self.cfg.coverage_range), capacity=list(self.cfg.service_capacity),
                    altitude=self.cfg.uav_altitude, area_side=self.cfg.area_side, t=self.fleet.t,
                    n_slots=self.cfg.n_slots, slot_duration=self.cfg.slot_duration,
                    coverage_distance=self.cfg.coverage_distance, ladder=list(self.spec.ladder),
                    protection_distance=self.cfg.protection_distance,
                    previous_actions=list(self.last.get("actions", [])))

    def associate(self, channels: Channels | None = None) -> AssociationState:
        cfg = self.cfg
        pos = self.fleet.pos
        cg = coverage_matrix(pos, self.layout.gt, cfg.coverage_range, cfg.coverage_distance)
        ce = coverage_matrix(pos, self.layout.eve, cfg.coverage_range, cfg.coverage_distance)
        if channels is None:
            sched = np.zeros_like(cg)
        else:
            sched = schedule_gts(channels.gt, cg, cfg.service_capacity)
        return AssociationState(cg, ce, sched)

    def precode(self, channels: Channels, assoc: AssociationState, power_levels) -> tuple[PrecoderSet, int, bool]:
        if self.precoding == "split":
            fr = [SPLIT_LEVELS[p] for p in power_levels]
            return split_precoders(channels, assoc, fr, self.cfg.max_power), 0, True
        res = s2dc_solve(channels, assoc, self.noise, self.cfg.max_power, self.opts)
        return res.precoders, res.iterations, res.converged

    def step(self, actions) -> tuple[list[Transition], StepInfo]:
        cfg = self.cfg
        if self.fleet is None:
            raise RuntimeError("call reset() first")
        if self.fleet.t >= cfg.n_slots:
            raise RuntimeError("episode finished; call reset()")
        actions = [int(a) for a in actions]
        if len(actions) != self.n_agents:
            raise ValueError(f"expected {self.n_agents} actions, got {len(actions)}")
        obs = self.observations()

        xy = self.fleet.xy.copy()
        speeds = np.zeros(self.n_agents)
        violated = np.zeros(self.n_agents, dtype=bool)
        levels = []
        for k, a in enumerate(actions):
            v, omega = self.spec.decode(a)
            levels.append(self.spec.parts(a)[2])
            moved = step_kinematics(xy[k], v, omega)
            violated[k] = boundary_violation(moved, cfg.area_side)
            xy[k] = clamp_to_area(moved, cfg.area_side)
            speeds[k] = v
        t = self.fleet.t
        self.fleet = FleetState(xy, cfg.uav_altitude, t + 1, speeds)

        channels = draw_channels(xy, self.layout.gt, self.layout.eve, cfg, self.seed, self.episode, t)
        assoc = self.associate(channels)
        prec, iters, conv = self.precode(channels, assoc, levels)
        rep: RatesReport = rates_report(channels, assoc, prec, self.noise)

        energy = np.asarray(slot_energy(speeds, cfg.slot_duration, cfg), dtype=float).reshape(-1)
        r_sr = rep.sum_secrecy
        r_ec = -float(energy.sum())
        pairs = collision_pairs(self.fleet.pos, cfg.protection_distance)
        hit = np.zeros(self.n_agents, dtype=bool)
        for a, b in pairs:
            hit[a] = hit[b] = True
        done = self.fleet.t >= cfg.n_slots
        nxt = self.observations()
        out = [Transition(k, self.episode, t, obs[k].tolist(), actions[k],
                          reward(r_sr, r_ec, bool(violated[k]), bool(hit[k]), cfg), nxt[k].tolist(), done)
               for k in range(self.n_agents)]
        info = StepInfo(rep.f1, r_sr, energy, violated, len(pairs), iters, conv, int(assoc.schedule.sum()))
        self.last = dict(actions=actions, assoc=assoc, report=rep, precoders=prec)
        return out, info
