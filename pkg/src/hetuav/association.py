"""Coverage indicators and capacity-limited GT scheduling."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class AssociationState:
    cover_gt: np.ndarray  # (K, I) int
    cover_eve: np.ndarray  # (K, E) int
    schedule: np.ndarray  # (K, I) int

    def served(self, k: int) -> list[int]:
        return [int(i) for i in np.flatnonzero(self.schedule[k])]

    def eves(self, k: int) -> list[int]:
        return [int(e) for e in np.flatnonzero(self.cover_eve[k])]

    def check(self, capacity) -> None:
        s, c = self.schedule, self.cover_gt
        if np.any(s > c):
            raise AssertionError("scheduled GT outside coverage")
        if np.any(s.sum(1) > np.asarray(capacity)):
            raise AssertionError("service capacity exceeded")
        if np.any(s.sum(0) > 1):
            raise AssertionError("GT served by more than one UAV")


def coverage_matrix(uav_pos, node_pos, C_r, mode: str = "3d") -> np.ndarray:
    """1 where the UAV-node distance is within the UAV's coverage range.

    ``uav_pos`` rows are 3D (x, y, H); ``node_pos`` rows are 2D or 3D on the
    ground. ``mode='horizontal'`` ignores the altitude.
    """
    u = np.atleast_2d(np.asarray(uav_pos, dtype=float))
    n = np.asarray(node_pos, dtype=float)
    if n.size == 0:
        return np.zeros((len(u), 0), dtype=int)
    n = np.atleast_2d(n)
    if n.shape[1] == 2:
        n = np.hstack([n, np.zeros((len(n), 1))])
    if u.shape[1] == 2:
        u = np.hstack([u, np.zeros((len(u), 1))])
    diff = u[:, None, :] - n[None, :, :]
    if mode == "horizontal":
        diff = diff[..., :2]
    d = np.sqrt((diff**2).sum(-1))
    return (d <= np.asarray(C_r, dtype=float)[:, None]).astype(int)


def schedule_gts(gains, cover_gt, capacity) -> np.ndarray:
    """Greedy global assignment by descending channel gain.

    ``gains`` is (K, I) of ||h_{k,i}||^2, or a (K, I, M) channel array.
    Ties go to the lexicographically smaller (k, i).
    """
    g = np.asarray(gains)
    if g.ndim == 3:
        g = np.sum(np.abs(g) ** 2, axis=-1)
    cover = np.asarray(cover_gt).astype(bool)
    K, I = cover.shape
    sched = np.zeros((K, I), dtype=int)
    ks, is_ = np.nonzero(cover)
    # lexsort: last key primary; stable on (k, i) order for ties
    order = np.lexsort((is_, ks, -g[ks, is_]))
    left = np.asarray(capacity, dtype=int).copy()
    taken = np.zeros(I, dtype=bool)
    for j in order:
        k, i = ks[j], is_[j]
        if left[k] > 0 and not taken[i]:
            sched[k, i] = 1
            left[k] -= 1
            taken[i] = True
    return sched


def eavesdropper_sets(cover_eve) -> list[list[int]]:
    return [[int(e) for e in np.flatnonzero(row)] for row in np.asarray(cover_eve)]
