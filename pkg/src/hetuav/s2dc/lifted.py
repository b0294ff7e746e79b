"""Lifted (outer-product) precoding variables and their spectral helpers.

A Hermitian M x M block is stored as M^2 real numbers: the diagonal, then
the real parts of the strict upper triangle, then its imaginary parts.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from hetuav.association import AssociationState
from hetuav.channel import Channels
from hetuav.rsma import PrecoderSet


@lru_cache(maxsize=8)
def hermitian_basis(M: int) -> np.ndarray:
    """Basis matrices B_p (M^2, M, M) with X = sum_p x_p B_p."""
    B = []
    for m in range(M):
        E = np.zeros((M, M), complex)
        E[m, m] = 1.0
        B.append(E)
    upper = [(m, n) for m in range(M) for n in range(m + 1, M)]
    for m, n in upper:
        E = np.zeros((M, M), complex)
        E[m, n] = E[n, m] = 1.0
        B.append(E)
    for m, n in upper:
        E = np.zeros((M, M), complex)
        E[m, n], E[n, m] = 1j, -1j
        B.append(E)
    out = np.array(B)
    out.setflags(write=False)
    return out


@lru_cache(maxsize=8)
def _upper(M: int):
    return np.triu_indices(M, 1)


def quad_coeffs(h: np.ndarray) -> np.ndarray:
    """Real vector a with h^H X h = a . x for any Hermitian X (vectorized)."""
    h = np.asarray(h)
    M = h.shape[-1]
    iu = _upper(M)
    z = np.conj(h[..., iu[0]]) * h[..., iu[1]]
    return np.concatenate([np.abs(h) ** 2, 2 * z.real, -2 * z.imag], axis=-1)


def to_params(X: np.ndarray) -> np.ndarray:
    X = np.asarray(X)
    M = X.shape[-1]
    iu = _upper(M)
    d = np.real(np.diagonal(X, axis1=-2, axis2=-1))
    off = X[..., iu[0], iu[1]]
    return np.concatenate([d, off.real, off.imag], axis=-1)


def to_matrix(x: np.ndarray, M: int) -> np.ndarray:
    return np.einsum("...p,pij->...ij", np.asarray(x, dtype=float), hermitian_basis(M))


def trace_coeffs(M: int) -> np.ndarray:
    t = np.zeros(M * M)
    t[:M] = 1.0
    return t


@dataclass
class LiftedVars:
    Pc: np.ndarray  # (K, M, M)
    Pp: np.ndarray  # (K, I, M, M)

    @classmethod
    def zeros(cls, K: int, I: int, M: int) -> "LiftedVars":
        return cls(np.zeros((K, M, M), complex), np.zeros((K, I, M, M), complex))

    def check(self, herm_tol: float = 1e-10, psd_tol: float = -1e-8) -> None:
        for X in list(self.Pc) + list(self.Pp.reshape(-1, *self.Pp.shape[-2:])):
            if np.max(np.abs(X - X.conj().T), initial=0.0) > herm_tol:
                raise ValueError("block not Hermitian")
            if np.linalg.eigvalsh(X).min() < psd_tol:
                raise ValueError("block not PSD")

    def power(self) -> np.ndarray:
        tr = lambda X: np.real(np.trace(X, axis1=-2, axis2=-1))
        return tr(self.Pc) + tr(self.Pp).sum(-1)


def lift(prec: PrecoderSet) -> LiftedVars:
    Pc = np.einsum("km,kn->kmn", prec.pc, prec.pc.conj())
    Pp = np.einsum("kim,kin->kimn", prec.pp, prec.pp.conj())
    return LiftedVars(Pc, Pp)


def principal_eig(X: np.ndarray) -> tuple[float, np.ndarray]:
    """Largest eigenvalue and unit eigenvector, largest-|real| entry positive."""
    w, V = np.linalg.eigh(X)
    v = V[:, -1]
    # remove the global phase so the dominant entry is real, then fix sign
    j = int(np.argmax(np.abs(v)))
    if abs(v[j]) > 0:
        v = v * np.exp(-1j * np.angle(v[j]))
    j = int(np.argmax(np.abs(v.real)))
    if v.real[j] < 0:
        v = -v
    return float(w[-1]), v


def rank_one_gap(X: np.ndarray) -> float:
    X = np.asarray(X)
    return float(np.real(np.trace(X)) - np.linalg.eigvalsh(X)[-1])


def linearized_lambda(X: np.ndarray, X_prev: np.ndarray) -> float:
    lam, v = principal_eig(X_prev)
    return float(lam + np.real(v.conj() @ (X - X_prev) @ v))


def extract_vector(X: np.ndarray) -> np.ndarray:
    lam, v = principal_eig(X)
    if lam <= 0:
        return np.zeros(X.shape[-1], complex)
    return np.sqrt(lam) * v


def extract_rank_one(vars: LiftedVars) -> PrecoderSet:
    K, I, M = vars.Pp.shape[:3]
    out = PrecoderSet.zeros(K, I, M)
    for k in range(K):
        out.pc[k] = extract_vector(vars.Pc[k])
        for i in range(I):
            out.pp[k, i] = extract_vector(vars.Pp[k, i])
    return out


def _quad(h: np.ndarray, X: np.ndarray) -> np.ndarray:
    return np.real(np.einsum("...m,...mn,...n->...", h.conj(), X, h))


def phi_terms(vars: LiftedVars, channels: Channels, assoc: AssociationState, noise: float) -> dict:
    """Interference-plus-noise functionals of the lifted variables.

    Returns arrays phi_c, phi_p, sig_c (K, I) and phi_ec, phi_ep, sig_ec,
    sig_ep (K, I, E), where sig_* are the desired-stream powers h^H P h.
    """
    hg, he = channels.gt, channels.eve
    served = assoc.schedule.astype(float)
    K, I = served.shape
    E = he.shape[1]
    Pp = vars.Pp * served[:, :, None, None]
    # received powers of every stream at every node
    gc = _quad(hg[:, :, :], vars.Pc[:, None])  # (K, I)
    gp = np.real(np.einsum("kim,kjmn,kin->kij", hg.conj(), Pp, hg))  # (K, I, J)
    ec = _quad(he, vars.Pc[:, None])  # (K, E)
    ep = np.real(np.einsum("kem,kjmn,ken->kej", he.conj(), Pp, he))  # (K, E, J)
    other = 1.0 - np.eye(K)
    Ig = np.einsum("kj,jn->kn", other, assoc.cover_gt * (gc + gp.sum(-1)))
    Ie = np.einsum("kj,jn->kn", other, assoc.cover_eve * (ec + ep.sum(-1)))
    own = gp[:, np.arange(I), np.arange(I)]
    phi_c = gp.sum(-1) + Ig + noise
    phi_p = phi_c - own
    phi_ec = np.broadcast_to((ep.sum(-1) + Ie + noise)[:, None, :], (K, I, E)).copy()
    sig_ep = np.transpose(ep, (0, 2, 1))
    sig_ec = np.broadcast_to(ec[:, None, :], (K, I, E)).copy()
    phi_ep = sig_ec + phi_ec - sig_ep
    return dict(phi_c=phi_c, phi_p=phi_p, sig_c=gc, phi_ec=phi_ec, phi_ep=phi_ep,
                sig_ec=sig_ec, sig_ep=sig_ep)


def f_tilde_terms(vars: LiftedVars, channels: Channels, assoc: AssociationState, noise: float):
    """The four log2 groupings (K, I, E) whose signed sum is the secrecy rate.

    F11 + F12 - F13 - F14 = R_i - R_{e,i} on exact lifts of precoders.
    """
    t = phi_terms(vars, channels, assoc, noise)
    for key in ("phi_c", "phi_p", "phi_ec", "phi_ep"):
        if np.any(t[key] <= 0):
            raise ValueError(f"non-positive log argument in {key}")
    A = assoc.cover_eve.astype(float)[:, None, :]
    lg = np.log2
    gt_total = (t["phi_c"] + t["sig_c"])[:, :, None]
    phi_c = t["phi_c"][:, :, None]
    phi_p = t["phi_p"][:, :, None]
    F11 = lg(gt_total) + A * lg(t["phi_ec"])
    F12 = lg(phi_c) + A * lg(t["phi_ep"])
    F13 = lg(phi_c) + A * lg(t["phi_ec"] + t["sig_ec"])
    F14 = lg(phi_p) + A * lg(t["phi_ep"] + t["sig_ep"])
    return F11, F12, F13, F14
