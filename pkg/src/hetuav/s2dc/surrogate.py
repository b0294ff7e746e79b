"""Compiled secrecy-rate program and its convex d.c. surrogate.

Every received-power functional that appears inside a log is an affine map
of the stacked block parameters. With X = P_max * X~ and
z = (sigma^2 + h^H X h + ...) / sigma^2 = 1 + Z x, each secrecy-rate row is
sum_l coef_l * log2 z_l(x) (the log2 sigma^2 constants cancel). Positive
coefficients are concave terms and are kept; negative ones are convex and
get linearized at the incumbent.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field

import numpy as np

from hetuav.association import AssociationState
from hetuav.channel import Channels
from hetuav.s2dc.lifted import LiftedVars, principal_eig, quad_coeffs, to_matrix, to_params, trace_coeffs

LN2 = np.log(2.0)


@dataclass
class ConvexSubproblem:
    """maximize t + c.x  s.t.  r_j(x) - [obj_j] t > 0,  1 - T x > 0,  X_b > 0.

    r_j(x) = sum_l C[j, l] ln(1 + Z_l x) + E[j] . x + f[j]
    """

    Z: np.ndarray
    C: np.ndarray
    E: np.ndarray
    f: np.ndarray
    is_obj: np.ndarray
    T: np.ndarray
    c: np.ndarray
    n_blocks: int
    M: int
    const: float = 0.0

    @property
    def n_x(self) -> int:
        return self.Z.shape[1]

    def rows(self, x: np.ndarray) -> np.ndarray:
        z = 1.0 + self.Z @ x
        return self.C @ np.log(z) + self.E @ x + self.f

    def value(self, x: np.ndarray) -> float:
        r = self.rows(x)
        head = np.min(r[self.is_obj]) if self.is_obj.any() else 0.0
        return float(head + self.c @ x + self.const)


@dataclass
class Compiled:
    M: int
    p_max: float
    blocks: list  # (k, 'c') or (k, i)
    uav_blocks: dict  # k -> list of block ids
    Z: np.ndarray  # (L, n_x)
    keys: list
    obj_rows: list  # list of (k, i, e or -1, [(coef, l), ...])
    sec_rows: list
    cancel_shared: bool = True
    common_on: dict = field(default_factory=dict)

    @property
    def n_x(self) -> int:
        return len(self.blocks) * self.M * self.M

    # conversions -----------------------------------------------------------
    def to_lifted(self, x: np.ndarray, K: int, I: int) -> LiftedVars:
        out = LiftedVars.zeros(K, I, self.M)
        mats = to_matrix(x.reshape(len(self.blocks), -1), self.M) * self.p_max
        for b, (k, kind) in enumerate(self.blocks):
            if kind == "c":
                out.Pc[k] = mats[b]
            else:
                out.Pp[k, kind] = mats[b]
        return out

    def from_lifted(self, vars: LiftedVars) -> np.ndarray:
        xs = []
        for k, kind in self.blocks:
            X = vars.Pc[k] if kind == "c" else vars.Pp[k, kind]
            xs.append(to_params(X) / self.p_max)
        return np.concatenate(xs) if xs else np.zeros(0)

    def block_mats(self, x: np.ndarray) -> np.ndarray:
        return to_matrix(x.reshape(len(self.blocks), -1), self.M)

    # exact objective ---------------------------------------------------------
    def row_values(self, x: np.ndarray, rows) -> np.ndarray:
        lz = np.log2(1.0 + self.Z @ x)
        return np.array([sum(c * lz[l] for c, l in terms) for *_, terms in rows])

    def secrecy_values(self, x: np.ndarray) -> np.ndarray:
        """F~1 for every objective row."""
        return self.row_values(x, self.obj_rows)

    def secrecy_margins(self, x: np.ndarray) -> np.ndarray:
        """Common-stream secrecy margins R_c - R_ce per (k, i, e)."""
        return self.row_values(x, self.sec_rows) if self.sec_rows else np.zeros(0)

    def penalty(self, x: np.ndarray) -> float:
        """sum over blocks of (lambda_max - tr), in watts (non-positive)."""
        if not self.blocks:
            return 0.0
        w = np.linalg.eigvalsh(self.block_mats(x))
        return float(self.p_max * np.sum(w[:, -1] - w.sum(-1)))

    def rank_gap(self, x: np.ndarray) -> float:
        return -self.penalty(x)

    def total_trace(self, x: np.ndarray) -> float:
        return float(self.p_max * x.reshape(len(self.blocks), -1)[:, : self.M].sum()) if self.blocks else 0.0

    def objective(self, x: np.ndarray, mu: float) -> float:
        vals = self.secrecy_values(x)
        return float(np.min(vals) + mu * self.penalty(x))

    def strictly_feasible(self, x: np.ndarray) -> bool:
        """Interior of the lifted feasible set (PD blocks, power and secrecy)."""
        if np.any(1.0 + self.Z @ x <= 0) or np.any(self.power_matrix() @ x >= 1.0):
            return False
        if np.linalg.eigvalsh(self.block_mats(x))[:, 0].min() <= 0:
            return False
        return not np.any(self.secrecy_margins(x) <= 0)

    def project_interior(self, x: np.ndarray, eps: float = 1e-9) -> np.ndarray:
        """Clip block eigenvalues to a small positive floor and rescale any
        UAV whose power exceeds the budget back just inside it."""
        n_p = self.M * self.M
        w, V = np.linalg.eigh(self.block_mats(x))
        tr = np.maximum(w.sum(-1), 0.0)
        w = np.maximum(w, eps * np.maximum(tr, 1e-12)[:, None])
        mats = np.einsum("bij,bj,bkj->bik", V, w, V.conj())
        y = to_params(mats).reshape(-1)
        T = self.power_matrix()
        used = T @ y
        for g, k in enumerate(sorted(self.uav_blocks)):
            if used[g] >= 1.0:
                for b in self.uav_blocks[k]:
                    y[b * n_p:(b + 1) * n_p] *= (1.0 - eps) / used[g]
        return y

    def power_matrix(self) -> np.ndarray:
        ks = sorted(self.uav_blocks)
        T = np.zeros((len(ks), self.n_x))
        tc = trace_coeffs(self.M)
        n_p = self.M * self.M
        for g, k in enumerate(ks):
            for b in self.uav_blocks[k]:
                T[g, b * n_p:(b + 1) * n_p] = tc
        return T

    # surrogate --------------------------------------------------------------
    def surrogate(self, x0: np.ndarray, mu: float) -> ConvexSubproblem:
        L = self.Z.shape[0]
        z0 = 1.0 + self.Z @ x0
        lz0 = np.log(z0)
        rows = [(terms, True) for *_, terms in self.obj_rows] + [(terms, False) for *_, terms in self.sec_rows]
        J = len(rows)
        C = np.zeros((J, L))
        E = np.zeros((J, self.n_x))
        f = np.zeros(J)
        for j, (terms, _) in enumerate(rows):
            for coef, l in terms:
                if coef > 0:
                    C[j, l] += coef / LN2
                else:
                    # tangent of the concave log at z0 (majorant of log)
                    g = coef / LN2
                    E[j] += g * self.Z[l] / z0[l]
                    f[j] += g * (lz0[l] - self.Z[l] @ x0 / z0[l])
        is_obj = np.array([o for _, o in rows], dtype=bool)

        # linearized rank-one penalty: mu * P_max * sum_b (v^H X~ v - tr X~)
        n_p = self.M * self.M
        c = np.zeros(self.n_x)
        const = 0.0
        tc = trace_coeffs(self.M)
        mats = self.block_mats(x0) if self.blocks else []
        for b in range(len(self.blocks)):
            lam, v = principal_eig(mats[b])
            av = quad_coeffs(v)
            c[b * n_p:(b + 1) * n_p] = mu * self.p_max * (av - tc)
            const += mu * self.p_max * (lam - av @ x0[b * n_p:(b + 1) * n_p])
        return ConvexSubproblem(self.Z, C, E, f, is_obj, self.power_matrix(), c,
                                len(self.blocks), self.M, const)


def compile_problem(channels: Channels, assoc: AssociationState, noise: float, p_max: float,
                    common_on: dict | None = None, cancel_shared: bool = True) -> Compiled:
    """Build the affine functionals and signed log rows for one slot.

    ``common_on[k]`` disables UAV k's common stream when False; its
    common-stream terms then cancel exactly and are dropped.
    """
    K, I = assoc.schedule.shape
    M = channels.antennas
    served = [list(np.flatnonzero(assoc.schedule[k])) for k in range(K)]
    eves = [list(np.flatnonzero(assoc.cover_eve[k])) for k in range(K)]
    active = [k for k in range(K) if served[k]]
    common_on = {k: True for k in active} | dict(common_on or {})

    blocks, uav_blocks = [], {}
    for k in active:
        ids = []
        if common_on[k]:
            ids.append(len(blocks))
            blocks.append((k, "c"))
        for i in served[k]:
            ids.append(len(blocks))
            blocks.append((k, int(i)))
        uav_blocks[k] = ids
    n_p = M * M
    n_x = len(blocks) * n_p
    scale = p_max / noise

    def pc_block(k):
        return uav_blocks[k][0] if common_on[k] else None

    def pp_block(k, i):
        return uav_blocks[k][(1 if common_on[k] else 0) + served[k].index(i)]

    keys, Zrows, index = [], [], {}

    qg = scale * quad_coeffs(channels.gt)  # (K, I, M^2)
    qe = scale * quad_coeffs(channels.eve)

    def add(key, parts):
        if key in index:
            return index[key]
        row = np.zeros(n_x)
        for b, a in parts:
            row[b * n_p:(b + 1) * n_p] += a
        index[key] = len(keys)
        keys.append(key)
        Zrows.append(row)
        return index[key]

    def interference(k, h_all, cover, node):
        parts = []
        for kk in active:
            if kk != k and cover[kk, node]:
                parts += [(b, h_all[kk, node]) for b in uav_blocks[kk]]
        return parts

    hg, he = qg, qe
    obj_rows, sec_rows = [], []
    for k in active:
        for i in served[k]:
            ig = interference(k, hg, assoc.cover_gt, i)
            privs = [(pp_block(k, j), hg[k, i]) for j in served[k]]
            common = [(pc_block(k), hg[k, i])] if common_on[k] else []
            l_tot = add(("tot", k, i), common + privs + ig)
            l_phc = add(("phc", k, i), privs + ig)
            l_php = add(("php", k, i), [p for p in privs if p[0] != pp_block(k, i)] + ig)
            eset = eves[k] if eves[k] else [-1]
            for e in eset:
                F11, F12, F13, F14 = [(1.0, l_tot)], [(1.0, l_phc)], [(1.0, l_phc)], [(1.0, l_php)]
                if e >= 0:
                    ie = interference(k, he, assoc.cover_eve, e)
                    eprivs = [(pp_block(k, j), he[k, e]) for j in served[k]]
                    ecom = [(pc_block(k), he[k, e])] if common_on[k] else []
                    l_tote = add(("tote", k, e), ecom + eprivs + ie)
                    l_phec = add(("phec", k, e), eprivs + ie)
                    l_phep = add(("phep", k, i, e), ecom + [p for p in eprivs if p[0] != pp_block(k, i)] + ie)
                    F11.append((1.0, l_phec))
                    F12.append((1.0, l_phep))
                    F13.append((1.0, l_tote))
                    F14.append((1.0, l_tote))
                    if common_on[k]:
                        sec_rows.append((k, i, e, F11 + [(-c, l) for c, l in F13]))
                if common_on[k]:
                    signed = F11 + F12 + [(-c, l) for c, l in F13 + F14]
                else:
                    signed = F12 + [(-c, l) for c, l in F14]
                if cancel_shared:
                    acc = defaultdict(float)
                    for c, l in signed:
                        acc[l] += c
                    signed = [(c, l) for l, c in sorted(acc.items()) if c != 0.0]
                obj_rows.append((k, i, e, signed))
    Z = np.array(Zrows) if Zrows else np.zeros((0, n_x))
    return Compiled(M, p_max, blocks, uav_blocks, Z, keys, obj_rows, sec_rows, cancel_shared, common_on)
