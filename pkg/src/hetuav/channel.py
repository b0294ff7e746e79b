"""Air-to-ground channels: S-curve LoS probability, mean path loss and
Rayleigh small-scale fading, with per-link keyed random streams."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from hetuav.config import ScenarioConfig

SPEED_OF_LIGHT = 299_792_458.0
GT, EVE = 0, 1  # node kinds used in stream keys


def los_probability(d, H: float, a: float, b: float):
    """LoS probability with the elevation angle measured in degrees."""
    d = np.asarray(d, dtype=float)
    if np.any(d < H * (1 - 1e-12)):
        raise ValueError("link distance shorter than altitude")
    theta = np.degrees(np.arcsin(np.minimum(H / d, 1.0)))
    p = 1.0 / (1.0 + a * np.exp(-b * (theta - a)))
    return float(p) if p.ndim == 0 else p


def free_space_loss_db(d, f_c: float):
    return 20.0 * np.log10(4.0 * np.pi * f_c * np.asarray(d, dtype=float) / SPEED_OF_LIGHT)


def path_loss_db(d, H, a, b, eta_los, eta_nlos, f_c):
    p = los_probability(d, H, a, b)
    out = p * eta_los + (1.0 - p) * eta_nlos + free_space_loss_db(d, f_c)
    return float(out) if np.ndim(out) == 0 else out


def draw_small_scale(rng: np.random.Generator, M: int, size: int | tuple | None = None) -> np.ndarray:
    """Unit-variance circularly-symmetric complex Gaussian entries.

    Returns shape ``(M,)`` or ``size + (M,)``.
    """
    shape = () if size is None else tuple(np.atleast_1d(size).astype(int))
    re = rng.normal(0.0, np.sqrt(0.5), shape + (M,))
    im = rng.normal(0.0, np.sqrt(0.5), shape + (M,))
    return re + 1j * im


def noise_power(psd_dbm_hz: float, bandwidth: float) -> float:
    if bandwidth <= 0:
        raise ValueError("bandwidth must be > 0")
    return 10.0 ** ((psd_dbm_hz + 10.0 * np.log10(bandwidth) - 30.0) / 10.0)


def link_stream(seed: int, episode: int, t: int, k: int, kind: int, idx: int) -> np.random.Generator:
    """Independent generator for one (slot, UAV, node) link."""
    ss = np.random.SeedSequence([int(seed), int(episode), int(t), int(k), int(kind), int(idx)])
    return np.random.default_rng(ss)


@dataclass
class LinkChannel:
    h: np.ndarray
    from_uav: int
    to_node: tuple[str, int]
    t: int
    loss_db: float


def link_channel(uav_pos, node_pos, cfg: ScenarioConfig, rng: np.random.Generator,
                 loss_db: float | None = None, k: int = 0, node=("gt", 0), t: int = 0) -> LinkChannel:
    """Compose large-scale loss and small-scale fading for one link.

    ``loss_db`` overrides the computed path loss (useful for checks).
    """
    u = np.asarray(uav_pos, dtype=float)
    n = np.asarray(node_pos, dtype=float)
    if len(u) == 2:
        u = np.append(u, cfg.uav_altitude)
    if len(n) == 2:
        n = np.append(n, 0.0)
    d = float(np.linalg.norm(u - n))
    if loss_db is None:
        loss_db = path_loss_db(d, u[2] - n[2], cfg.s_curve_a, cfg.s_curve_b,
                               cfg.eta_los, cfg.eta_nlos, cfg.carrier_freq)
    h_small = draw_small_scale(rng, cfg.antennas)
    h = np.sqrt(10.0 ** (-loss_db / 10.0)) * h_small
    return LinkChannel(h=h, from_uav=k, to_node=node, t=t, loss_db=float(loss_db))


@dataclass
class Channels:
    """All UAV-to-node channels of one slot: gt (K, I, M), eve (K, E, M)."""

    gt: np.ndarray
    eve: np.ndarray

    @property
    def n_uav(self) -> int:
        return self.gt.shape[0]

    @property
    def antennas(self) -> int:
        return self.gt.shape[2]


def draw_channels(uav_xy, gt_xy, eve_xy, cfg: ScenarioConfig, seed: int, episode: int, t: int) -> Channels:
    """Draw every link for a slot from keyed streams (deterministic per key)."""
    uav_xy = np.asarray(uav_xy, dtype=float).reshape(-1, 2)
    gt_xy = np.asarray(gt_xy, dtype=float).reshape(-1, 2)
    eve_xy = np.asarray(eve_xy, dtype=float).reshape(-1, 2)
    K, M, H = len(uav_xy), cfg.antennas, cfg.uav_altitude
    out = []
    for kind, nodes in ((GT, gt_xy), (EVE, eve_xy)):
        horiz = np.linalg.norm(uav_xy[:, None, :] - nodes[None, :, :], axis=-1)
        d = np.sqrt(horiz**2 + H**2)
        loss = path_loss_db(d, H, cfg.s_curve_a, cfg.s_curve_b, cfg.eta_los, cfg.eta_nlos, cfg.carrier_freq)
        amp = np.sqrt(10.0 ** (-np.asarray(loss) / 10.0))
        h = np.zeros((K, len(nodes), M), dtype=complex)
        for k in range(K):
            for j in range(len(nodes)):
                rng = link_stream(seed, episode, t, k, kind, j)
                h[k, j] = amp[k, j] * draw_small_scale(rng, M)
        out.append(h)
    return Channels(gt=out[0], eve=out[1])
