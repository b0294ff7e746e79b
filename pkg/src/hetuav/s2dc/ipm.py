"""Log-barrier interior-point method for the small-block surrogate programs.

Decision vector y = [x, t]. The barrier is

    -sum ln r_j(x, t) - sum ln(1 - T x) - sum_b ln det X_b(x)

and each centering step is a damped Newton method with a Jacobi-scaled
Cholesky solve.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from hetuav.s2dc.lifted import hermitian_basis
from hetuav.s2dc.surrogate import ConvexSubproblem


class InfeasibleStart(ValueError):
    pass


class NumericalFailure(ArithmeticError):
    """Newton system with non-finite entries or no usable solution."""


@dataclass
class IPMResult:
    x: np.ndarray
    t: float
    value: float
    converged: bool
    newton_steps: int
    gap_bound: float
    numerical_failure: bool = False


class _Barrier:
    def __init__(self, sub: ConvexSubproblem):
        self.s = sub
        self.nx = sub.n_x
        self.M = sub.M
        self.B = hermitian_basis(sub.M)
        self.n_p = sub.M * sub.M
        self.is_obj = sub.is_obj.astype(float)
        # without objective rows the epigraph variable is frozen
        self.use_t = bool(sub.is_obj.any())

    def mats(self, x):
        if self.s.n_blocks == 0:
            return np.zeros((0, self.M, self.M), complex)
        xb = x.reshape(self.s.n_blocks, self.n_p)
        return np.einsum("bp,pij->bij", xb, self.B)

    def feasible(self, y):
        x, t = y[:-1], y[-1]
        s = self.s
        z = 1.0 + s.Z @ x
        if np.any(z <= 0):
            return None
        r = s.C @ np.log(z) + s.E @ x + s.f - self.is_obj * t
        if np.any(r <= 0):
            return None
        slack = 1.0 - s.T @ x
        if np.any(slack <= 0):
            return None
        if self.M == 2:
            # closed form for 2x2 blocks [[a, c + i d], [c - i d, b]]
            xb = x.reshape(s.n_blocks, 4)
            det = xb[:, 0] * xb[:, 1] - xb[:, 2] ** 2 - xb[:, 3] ** 2
            if np.any(xb[:, 0] <= 0) or np.any(det <= 0):
                return None
            return z, r, slack, (xb, det), float(np.sum(np.log(det)))
        X = self.mats(x)
        try:
            L = np.linalg.cholesky(X)
        except np.linalg.LinAlgError:
            return None
        logdet = 2.0 * np.sum(np.log(np.real(np.diagonal(L, axis1=-2, axis2=-1))))
        return z, r, slack, X, logdet

    def value(self, y, tau, cache=None):
        c = cache if cache is not None else self.feasible(y)
        if c is None:
            return np.inf
        z, r, slack, X, logdet = c
        obj = self.use_t * y[-1] + self.s.c @ y[:-1]
        return -tau * obj - np.sum(np.log(r)) - np.sum(np.log(slack)) - logdet

    def grad_hess(self, y, tau, cache):
        s = self.s
        x = y[:-1]
        z, r, slack, X, _ = cache
        n = self.nx + 1
        w = 1.0 / z
        # row Jacobian (J, n)
        Jr = np.empty((len(r), n))
        Jr[:, :-1] = (s.C * w) @ s.Z + s.E
        Jr[:, -1] = -self.is_obj
        inv_r = 1.0 / r
        g = -Jr.T @ inv_r
        H = (Jr * inv_r[:, None] ** 2).T @ Jr
        q = w**2 * (s.C.T @ inv_r)
        H[:-1, :-1] += (s.Z * q[:, None]).T @ s.Z
        # power slacks
        inv_s = 1.0 / slack
        g[:-1] += s.T.T @ inv_s
        H[:-1, :-1] += (s.T * inv_s[:, None] ** 2).T @ s.T
        # log det blocks
        if s.n_blocks and self.M == 2:
            xb, det = X
            a, b, c, d = xb.T
            gdet = np.stack([b, a, -2 * c, -2 * d], axis=1)  # (nb, 4)
            g[:-1] -= (gdet / det[:, None]).ravel()
            hdet = np.array([[0.0, 1, 0, 0], [1, 0, 0, 0], [0, 0, -2, 0], [0, 0, 0, -2]])
            Hb = (gdet[:, :, None] * gdet[:, None, :]) / (det**2)[:, None, None] - hdet / det[:, None, None]
            for bi in range(s.n_blocks):
                H[4 * bi:4 * bi + 4, 4 * bi:4 * bi + 4] += Hb[bi]
        elif s.n_blocks:
            W = np.linalg.inv(X)
            WB = np.einsum("bij,pjk->bpik", W, self.B)
            gb = -np.real(np.einsum("bpii->bp", WB))
            Hb = np.real(np.einsum("bpij,bqji->bpq", WB, WB))
            for b in range(s.n_blocks):
                sl = slice(b * self.n_p, (b + 1) * self.n_p)
                g[sl] += gb[b]
                H[sl, sl] += Hb[b]
        # linear objective
        g[:-1] -= tau * s.c
        if self.use_t:
            g[-1] -= tau
        else:
            g[-1], H[-1, :], H[:, -1], H[-1, -1] = 0.0, 0.0, 0.0, 1.0
        return g, H

    def max_step(self, y, dy, cache) -> float:
        """Largest step keeping the affine and block constraints interior
        (the log rows are left to the line search)."""
        s = self.s
        dx = dy[:-1]
        z, _, slack, X, _ = cache
        bound = np.inf

        def ratio(val, rate):
            neg = rate < 0
            return np.min(-val[neg] / rate[neg]) if np.any(neg) else np.inf

        bound = min(bound, ratio(z, s.Z @ dx), ratio(slack, -(s.T @ dx)))
        if self.M == 2 and s.n_blocks:
            xb, det = X
            a, b, c, d = xb.T
            da, db, dc, dd = dx.reshape(s.n_blocks, 4).T
            bound = min(bound, ratio(a, da))
            # det(x + t dx) = det + p t + q t^2
            p = a * db + b * da - 2 * c * dc - 2 * d * dd
            q = da * db - dc**2 - dd**2
            bound = min(bound, _first_root(det, p, q))
        return float(bound)

    def initial_tau(self, y, cache) -> float:
        g_b, H = self.grad_hess(y, 0.0, cache)
        g_o = np.append(-self.s.c, -1.0 if self.use_t else 0.0)
        Hg_o = _solve(H, g_o)
        den = g_o @ Hg_o
        if den <= 0:
            return 1.0
        return float(np.clip(-(g_b @ Hg_o) / den, 1.0, 1e6))


def _first_root(c0, c1, c2) -> float:
    """Smallest positive root over all quadratics c0 + c1 t + c2 t^2 with c0 > 0."""
    disc = c1 * c1 - 4.0 * c2 * c0
    real = disc >= 0
    sq = np.sqrt(np.where(real, disc, 0.0))
    # stable pair of roots: q = -(c1 + sign(c1) sq) / 2, roots q / c2 and c0 / q
    qq = -0.5 * (c1 + np.where(c1 >= 0, 1.0, -1.0) * sq)
    with np.errstate(divide="ignore", invalid="ignore"):
        r1 = np.where(c2 != 0, qq / c2, np.inf)
        r2 = np.where(qq != 0, c0 / qq, np.inf)
    cand = np.concatenate([r1[real], r2[real]])
    cand = cand[np.isfinite(cand) & (cand > 0)]
    return float(cand.min()) if len(cand) else np.inf


def _solve(H, b):
    if not (np.all(np.isfinite(H)) and np.all(np.isfinite(b))):
        # slacks near the floating-point floor overflow the barrier derivatives
        raise NumericalFailure("non-finite Newton system")
    d = np.sqrt(np.maximum(np.diag(H), 1e-300))
    Hs = H / d[:, None] / d[None, :]
    try:
        L = np.linalg.cholesky(Hs)
        return np.linalg.solve(L.T, np.linalg.solve(L, b / d)) / d
    except np.linalg.LinAlgError:
        pass
    try:
        return np.linalg.lstsq(Hs + 1e-12 * np.eye(len(b)), b / d, rcond=None)[0] / d
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure(str(exc)) from exc


def _pull_inward(x, sub, theta):
    """Convex combination with a scaled identity in every block; power
    slacks stay positive because the identity share per UAV is below 1."""
    n_p = sub.M * sub.M
    xb = (1.0 - theta) * x.reshape(sub.n_blocks, n_p)
    xb[:, : sub.M] += theta / (sub.M * sub.n_blocks)
    return xb.ravel()


def _newton_direction(g, H):
    return -_solve(H, g)


def solve_subproblem(sub: ConvexSubproblem, x0: np.ndarray, tol: float = 1e-9, tau0: float | None = None,
                     factor: float = 20.0, max_newton: int = 1000,
                     center_tol: float = 1e-6, pull: float = 1e-3, predictor: bool = True) -> IPMResult:
    """Maximize the surrogate from a strictly feasible ``x0``.

    Stops when the barrier duality bound m / tau drops below ``tol``. When
    ``tau0`` is None it is chosen so that the start is as close as possible
    to the central path (the incumbent of a d.c. step is usually close to
    the boundary, where a small tau would first pull it back inward).
    """
    bar = _Barrier(sub)
    x0 = np.asarray(x0, dtype=float)
    y, cache = None, None
    # nudge a near-boundary start inward; the barrier Newton steps would
    # otherwise spend one iteration per doubling of the smallest slack
    theta = pull
    while y is None:
        xs = _pull_inward(x0, sub, theta) if theta > 0 else x0
        r0 = sub.rows(xs) if len(sub.f) else np.zeros(0)
        obj_rows = r0[sub.is_obj]
        t0 = (np.min(obj_rows) - 1.0) if len(obj_rows) else 0.0
        cand = np.append(xs, t0)
        c = bar.feasible(cand)
        if c is not None:
            y, cache = cand, c
        elif theta > 0:
            theta = theta * 0.1 if theta > 1e-9 else 0.0
        else:
            raise InfeasibleStart("starting point is not strictly feasible")
    m = len(sub.f) + sub.T.shape[0] + sub.n_blocks * sub.M
    tau = tau0 if tau0 is not None else bar.initial_tau(y, cache)
    steps = 0
    converged = failed = False
    try:
        while steps < max_newton:
            # centering
            for _ in range(50):
                g, H = bar.grad_hess(y, tau, cache)
                dy = _newton_direction(g, H)
                dec = -g @ dy
                # the Hessian loses precision near the boundary, so the
                # centering tolerance cannot be much tighter than this
                if dec / 2.0 <= center_tol:
                    break
                f0 = bar.value(y, tau, cache)
                step = min(1.0, 0.99 * bar.max_step(y, dy, cache))
                while True:
                    y_new = y + step * dy
                    c_new = bar.feasible(y_new)
                    if c_new is not None and bar.value(y_new, tau, c_new) <= f0 - 0.25 * step * dec:
                        break
                    step *= 0.5
                    if step < 1e-10:
                        c_new = None
                        break
                steps += 1
                if c_new is None:
                    break
                y, cache = y_new, c_new
            if m / tau < tol:
                converged = True
                break
            # predictor along the central path: at the centre tau*g_obj + g_bar = 0,
            # so raising tau to tau' moves the centre by -(tau' - tau) H^{-1} g_obj
            new_tau = tau * factor
            if predictor:
                _, H = bar.grad_hess(y, tau, cache)
                g_o = np.append(-sub.c, -1.0 if bar.use_t else 0.0)
                dy = -(new_tau - tau) * _solve(H, g_o)
                step = min(1.0, 0.9 * bar.max_step(y, dy, cache))
                f0 = bar.value(y, new_tau, cache)
                while step > 1e-3:
                    c_new = bar.feasible(y + step * dy)
                    if c_new is not None and bar.value(y + step * dy, new_tau, c_new) < f0:
                        y, cache = y + step * dy, c_new
                        break
                    step *= 0.5
            tau = new_tau
    except NumericalFailure:
        # y only ever holds strictly feasible iterates, so stop there
        failed = True
    x = y[:-1]
    return IPMResult(x=x, t=float(y[-1]), value=sub.value(x), converged=converged,
                     newton_steps=steps, gap_bound=m / tau, numerical_failure=failed)
