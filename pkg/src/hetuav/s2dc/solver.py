"""Secrecy precoding by SDR, exact rank-one penalty and d.c. iterations."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from hetuav.association import AssociationState
from hetuav.channel import Channels
from hetuav.rsma import PrecoderSet, rates_report
from hetuav.s2dc.ipm import InfeasibleStart, solve_subproblem
from hetuav.s2dc.lifted import LiftedVars, extract_rank_one, lift
from hetuav.s2dc.surrogate import Compiled, compile_problem

COMMON_FRACTIONS = (None, 0.5, 0.7, 0.8, 0.9, 0.95, 0.99)


@dataclass
class S2DCOptions:
    max_iter: int = 30
    tol: float = 1e-4
    mu0: float = 1.0
    mu_max: float = 1e3
    stall_iters: int = 3
    gap_rel: float = 1e-4
    ipm_tol: float = 1e-9
    start_power: float = 0.9
    interior_eps: float = 1e-3
    cancel_shared: bool = True
    starts: tuple = ("mrt", "gev")
    extrapolate: bool = True
    beta_max: float = 16.0

    @classmethod
    def from_config(cls, cfg) -> "S2DCOptions":
        return cls(max_iter=cfg.s2dc_max_iter, tol=cfg.s2dc_tol, mu0=cfg.s2dc_mu0,
                   mu_max=cfg.s2dc_mu_max, ipm_tol=cfg.ipm_tol, starts=tuple(cfg.s2dc_starts))


@dataclass
class DcIterate:
    kappa: int
    mu: float
    objective_before: float
    objective_after: float
    penalty: float
    gap: float
    accepted: bool
    newton_steps: int


@dataclass
class S2DCResult:
    precoders: PrecoderSet
    lifted: LiftedVars
    f1: float
    objective: float
    gap: float
    total_trace: float
    iterations: int
    converged: bool
    rank_one_ok: bool
    common_on: dict
    history: list = field(default_factory=list)

    def dump_diagnostics(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["kappa", "mu", "objective_before", "objective_after", "penalty", "gap", "accepted"])
            for it in self.history:
                w.writerow([it.kappa, it.mu, repr(it.objective_before), repr(it.objective_after),
                            repr(it.penalty), repr(it.gap), int(it.accepted)])


def _unit(v: np.ndarray) -> np.ndarray:
    n = np.linalg.norm(v)
    return v / n if n > 0 else v


def _common_directions(hg_served: np.ndarray, he_watch: np.ndarray, noise: float, power: float) -> list:
    """Candidate common-stream beams: principal direction of the served
    channels, and the GT-versus-Eve generalized eigenvector."""
    hs = np.array([_unit(h) for h in hg_served])
    G = hs.T @ hs.conj()  # sum_i h_i h_i^H (normalized)
    out = [np.linalg.eigh(G)[1][:, -1]]
    if len(he_watch):
        A = hg_served.T @ hg_served.conj()
        B = he_watch.T @ he_watch.conj() + (noise / power) * np.eye(G.shape[0])
        L = np.linalg.cholesky(B)
        Li = np.linalg.inv(L)
        w, V = np.linalg.eigh(Li @ A @ Li.conj().T)
        out.append(_unit(Li.conj().T @ V[:, -1]))
    return out


def _gev(a: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Unit maximizer of |a^H p|^2 / (p^H B p) for positive definite B."""
    return _unit(np.linalg.solve(B, a))


def _private_beams(channels: Channels, assoc: AssociationState, k: int, served, noise: float,
                   power: float, kind: str) -> dict:
    if kind == "mrt":
        return {i: _unit(channels.gt[k, i]) for i in served}
    he = channels.eve[k, np.flatnonzero(assoc.cover_eve[k])]
    B = he.T @ he.conj() + (noise / power) * np.eye(channels.antennas)
    return {i: _gev(channels.gt[k, i], B) for i in served}


def _build_start(channels: Channels, assoc: AssociationState, noise: float, p_max: float,
                 opts: S2DCOptions, choice: dict, common_on: dict, private: str = "mrt") -> PrecoderSet:
    K, I = assoc.schedule.shape
    M = channels.antennas
    prec = PrecoderSet.zeros(K, I, M)
    for k in range(K):
        served = np.flatnonzero(assoc.schedule[k])
        if len(served) == 0:
            continue
        beams = _private_beams(channels, assoc, k, served, noise, p_max, private)
        total = opts.start_power * p_max
        frac, beam = choice.get(k, (None, None))
        if common_on.get(k, True):
            f = 1.0 / (1 + len(served)) if frac is None else frac
        else:
            f = 0.0
        p_priv = total * (1 - f) / len(served)
        for i in served:
            prec.pp[k, i] = np.sqrt(p_priv) * beams[i]
        if f > 0:
            prec.pc[k] = np.sqrt(total * f) * beam
    return prec


def _interior_lift(prec: PrecoderSet, eps: float) -> LiftedVars:
    """Rank-one lift pulled slightly into the PD cone with trace preserved."""
    v = lift(prec)
    M = v.Pc.shape[-1]
    eye = np.eye(M)

    def pull(X):
        tr = np.real(np.trace(X, axis1=-2, axis2=-1))
        return (1 - eps) * X + eps * (tr / M)[..., None, None] * eye

    return LiftedVars(pull(v.Pc), pull(v.Pp))


def feasible_start(channels: Channels, assoc: AssociationState, noise: float, p_max: float,
                   opts: S2DCOptions | None = None, private: str = "mrt"):
    """Strictly feasible starting point and the common-stream on/off map.

    Maximum-ratio (``private="mrt"``) or Eve-aware generalized-eigenvector
    (``"gev"``) private beams with an equal split at 0.9 P_max. If the
    common-stream secrecy margin of UAV k is not strictly positive, larger
    common fractions and an alternative beam are tried; if none works the
    common stream of that UAV is switched off (private-only is always
    feasible because the constraint then holds with equality and is
    dropped).
    """
    opts = opts or S2DCOptions()
    K = assoc.schedule.shape[0]
    active = [k for k in range(K) if assoc.schedule[k].any()]
    common_on = {k: True for k in active}
    choice, beams = {}, {}
    for k in active:
        served = np.flatnonzero(assoc.schedule[k])
        eves = np.flatnonzero(assoc.cover_eve[k])
        beams[k] = _common_directions(channels.gt[k, served], channels.eve[k, eves], noise, p_max)
        choice[k] = (None, beams[k][0])
    searched: set = set()

    compiled: dict = {}

    def start_point(ch, on):
        key = tuple(sorted(on.items()))
        if key not in compiled:
            compiled[key] = compile_problem(channels, assoc, noise, p_max, on, opts.cancel_shared)
        prob = compiled[key]
        prec = _build_start(channels, assoc, noise, p_max, opts, ch, on, private)
        return prob, prob.from_lifted(_interior_lift(prec, opts.interior_eps))

    # each UAV is searched once, then switched off, so this terminates
    while True:
        prob, x = start_point(choice, common_on)
        margins = _margins_by_uav(prob, x)
        bad = [k for k in active if common_on[k] and margins.get(k, np.inf) <= 1e-9]
        if not bad:
            return prob, x
        for k in bad:
            if k in searched:
                common_on[k] = False
                continue
            searched.add(k)
            best, best_m = choice[k], -np.inf
            for beam in beams[k]:
                for frac in COMMON_FRACTIONS:
                    trial = dict(choice)
                    trial[k] = (frac, beam)
                    pt, xt = start_point(trial, common_on)
                    m = _margins_by_uav(pt, xt).get(k, np.inf)
                    if m > best_m:
                        best, best_m = (frac, beam), m
            choice[k] = best
            if best_m <= 1e-9:
                common_on[k] = False


def _margins_by_uav(prob: Compiled, x: np.ndarray) -> dict:
    vals = prob.secrecy_margins(x)
    out: dict = {}
    for (k, *_), v in zip(prob.sec_rows, vals):
        out[k] = min(out.get(k, np.inf), v)
    return out


def s2dc_solve(channels: Channels, assoc: AssociationState, noise: float, p_max: float,
               opts: S2DCOptions | None = None) -> S2DCResult:
    """Run the penalized d.c. iterations from each start in ``opts.starts``
    and keep the result with the best worst-case secrecy rate."""
    opts = opts or S2DCOptions()
    best = None
    for private in opts.starts:
        res = _solve_from(channels, assoc, noise, p_max, opts, private)
        if best is None or res.f1 > best.f1:
            best = res
    return best


def _solve_from(channels: Channels, assoc: AssociationState, noise: float, p_max: float,
                opts: S2DCOptions, private: str) -> S2DCResult:
    K, I = assoc.schedule.shape
    M = channels.antennas
    prob, x = feasible_start(channels, assoc, noise, p_max, opts, private)
    if not prob.blocks:
        zero = PrecoderSet.zeros(K, I, M)
        rep = rates_report(channels, assoc, zero, noise)
        return S2DCResult(zero, LiftedVars.zeros(K, I, M), rep.f1, 0.0, 0.0, 0.0, 0, True, True, {})

    mu = opts.mu0
    obj = prob.objective(x, mu)
    history: list[DcIterate] = []
    stall = 0
    converged = False
    kappa = 0
    x_prev, beta = x, 1.0
    for kappa in range(1, opts.max_iter + 1):
        # extrapolate the linearization point along the last step with a
        # factor that doubles after each success; a step from it that fails
        # to improve is redone from the incumbent
        anchor = x
        if opts.extrapolate and kappa > 1:
            v = prob.project_interior(x + beta * (x - x_prev))
            if prob.strictly_feasible(v):
                anchor = v
            else:
                beta = max(1.0, 0.5 * beta)
        res = None
        if anchor is not x:
            try:
                res = solve_subproblem(prob.surrogate(anchor, mu), anchor, tol=opts.ipm_tol)
            except InfeasibleStart:
                # interior to rounding only; fall back to the incumbent
                anchor, beta = x, 1.0
        if res is None:
            res = solve_subproblem(prob.surrogate(x, mu), x, tol=opts.ipm_tol)
        elif anchor is not x:
            if prob.objective(res.x, mu) < obj:
                beta = 1.0
                res = solve_subproblem(prob.surrogate(x, mu), x, tol=opts.ipm_tol)
            else:
                beta = min(2.0 * beta, opts.beta_max)
        new_obj = prob.objective(res.x, mu)
        accepted = new_obj >= obj
        if accepted:
            x_next = res.x
        else:
            x_next, new_obj = x, obj
        gap = prob.rank_gap(x_next)
        history.append(DcIterate(kappa, mu, obj, new_obj, prob.penalty(x_next), gap, accepted,
                                 res.newton_steps))
        delta = new_obj - obj
        x_prev = x
        x, obj = x_next, new_obj
        gap_ok = gap <= opts.gap_rel * max(prob.total_trace(x), 1e-300)
        stall = 0 if gap_ok else stall + 1
        if not gap_ok and (stall >= opts.stall_iters or not accepted) and mu < opts.mu_max:
            mu = min(2.0 * mu, opts.mu_max)
            stall = 0
            obj = prob.objective(x, mu)
            continue
        if gap_ok and (abs(delta) < opts.tol or not accepted):
            converged = True
            break
        if not accepted:
            break

    lifted = prob.to_lifted(x, K, I)
    prec = extract_rank_one(lifted)
    rep = rates_report(channels, assoc, prec, noise)
    gap = prob.rank_gap(x)
    tr = prob.total_trace(x)
    return S2DCResult(prec, lifted, rep.f1, obj, gap, tr, kappa, converged,
                      gap <= opts.gap_rel * max(tr, 1e-300), dict(prob.common_on), history)
