"""Rate-splitting SINRs, rates and secrecy rates for one slot.

Precoders are stored densely: ``pc`` is (K, M) and ``pp`` is (K, I, M) with
zero rows for GTs that UAV k does not serve. Received powers use
``|h^H p|^2``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from hetuav.association import AssociationState
from hetuav.channel import Channels


@dataclass
class PrecoderSet:
    pc: np.ndarray  # (K, M) complex
    pp: np.ndarray  # (K, I, M) complex

    @classmethod
    def zeros(cls, K: int, I: int, M: int) -> "PrecoderSet":
        return cls(np.zeros((K, M), complex), np.zeros((K, I, M), complex))

    def power(self) -> np.ndarray:
        """Per-UAV transmit power tr(P_k P_k^H)."""
        return np.sum(np.abs(self.pc) ** 2, axis=1) + np.sum(np.abs(self.pp) ** 2, axis=(1, 2))

    def scaled(self, c: float) -> "PrecoderSet":
        return PrecoderSet(self.pc * c, self.pp * c)

    def copy(self) -> "PrecoderSet":
        return PrecoderSet(self.pc.copy(), self.pp.copy())


@dataclass
class RatesReport:
    served: np.ndarray  # (K, I) bool
    sinr_c: np.ndarray  # (K, I)
    sinr_p: np.ndarray
    sinr_ce: np.ndarray  # (K, I, E)
    sinr_pe: np.ndarray
    R_c: np.ndarray
    R_p: np.ndarray
    R: np.ndarray
    R_ce: np.ndarray
    R_pe: np.ndarray
    R_e: np.ndarray
    R_sr: np.ndarray  # (K, I): R - max over all Eves, zero if unserved
    f1: float

    @property
    def sum_secrecy(self) -> float:
        return float(self.R_sr[self.served].sum())


def _received(h: np.ndarray, p: np.ndarray) -> np.ndarray:
    """|h^H p|^2 for h (K, N, M) and p (K, M) -> (K, N)."""
    return np.abs(np.einsum("knm,km->kn", h.conj(), p)) ** 2


def _received_private(h: np.ndarray, pp: np.ndarray) -> np.ndarray:
    """|h_{k,n}^H p_{k,j}|^2 -> (K, N, J)."""
    return np.abs(np.einsum("knm,kjm->knj", h.conj(), pp)) ** 2


def _interference(cover: np.ndarray, total: np.ndarray) -> np.ndarray:
    """sum over k' != k of cover[k', n] * total[k', n]  -> (K, N)."""
    K = cover.shape[0]
    other = 1.0 - np.eye(K)
    return np.einsum("kj,jn->kn", other, cover * total)


def stream_powers(channels: Channels, assoc: AssociationState, prec: PrecoderSet) -> dict:
    """Received-power building blocks shared by the SINRs and by S2DC."""
    hg, he = channels.gt, channels.eve
    Gc = _received(hg, prec.pc)
    Gp = _received_private(hg, prec.pp)
    Ec = _received(he, prec.pc)
    Ep = _received_private(he, prec.pp)
    Ig = _interference(assoc.cover_gt, Gc + Gp.sum(-1))
    Ie = _interference(assoc.cover_eve, Ec + Ep.sum(-1))
    return dict(Gc=Gc, Gp=Gp, Ec=Ec, Ep=Ep, Ig=Ig, Ie=Ie)


def sinrs(channels: Channels, assoc: AssociationState, prec: PrecoderSet, noise: float):
    """Return (gamma_c, gamma_p, gamma_ce, gamma_pe); Eve arrays are (K, I, E)."""
    s = stream_powers(channels, assoc, prec)
    K, I = assoc.schedule.shape
    served = assoc.schedule.astype(float)
    A = assoc.cover_eve.astype(float)  # (K, E)
    diag = np.arange(I)

    priv_all = np.einsum("kij,kj->ki", s["Gp"], served)
    own_p = s["Gp"][:, diag, diag]
    priv_other = np.einsum("kij,kj->ki", s["Gp"] * (1.0 - np.eye(I)), served)
    g_c = served * s["Gc"] / (served * priv_all + s["Ig"] + noise)
    g_p = served * own_p / (served * priv_other + s["Ig"] + noise)

    Ep = s["Ep"]  # (K, E, I)
    eve_priv_all = np.einsum("kej,kj->ke", Ep, served)
    den_ce = A * eve_priv_all + s["Ie"] + noise  # (K, E)
    g_ce = (A * s["Ec"] / den_ce)[:, None, :] * served[:, :, None]
    eve_priv_other = np.einsum("kej,kj,ij->kie", Ep, served, 1.0 - np.eye(I))
    num_pe = A[:, None, :] * np.transpose(Ep, (0, 2, 1))
    den_pe = A[:, None, :] * (s["Ec"][:, None, :] + eve_priv_other) + s["Ie"][:, None, :] + noise
    g_pe = served[:, :, None] * num_pe / den_pe
    return g_c, g_p, g_ce, g_pe


def rates_report(channels: Channels, assoc: AssociationState, prec: PrecoderSet, noise: float) -> RatesReport:
    g_c, g_p, g_ce, g_pe = sinrs(channels, assoc, prec, noise)
    served = assoc.schedule.astype(bool)
    R_c, R_p = np.log2(1.0 + g_c), np.log2(1.0 + g_p)
    R_ce, R_pe = np.log2(1.0 + g_ce), np.log2(1.0 + g_pe)
    R = R_c + R_p
    R_e = R_ce + R_pe
    E = R_e.shape[2]
    worst_eve = R_e.max(axis=2) if E else np.zeros_like(R)
    R_sr = np.where(served, R - worst_eve, 0.0)
    return RatesReport(served, g_c, g_p, g_ce, g_pe, R_c, R_p, R, R_ce, R_pe, R_e, R_sr,
                       worst_case_secrecy(R, R_e, served, assoc.cover_eve))


def worst_case_secrecy(R, R_e, served, cover_eve) -> float:
    """min over (k, i in I_k, e in E_k) of R_i - R_{e,i}; R_i if E_k is empty.

    Returns 0 when no GT is served at all.
    """
    vals = []
    for k in range(R.shape[0]):
        eves = np.flatnonzero(cover_eve[k])
        for i in np.flatnonzero(served[k]):
            if len(eves):
                vals.append(np.min(R[k, i] - R_e[k, i, eves]))
            else:
                vals.append(R[k, i])
    return float(min(vals)) if vals else 0.0


def sinr_common_gt(k, i, channels, assoc, prec, noise) -> float:
    return float(sinrs(channels, assoc, prec, noise)[0][k, i])


def sinr_private_gt(k, i, channels, assoc, prec, noise) -> float:
    return float(sinrs(channels, assoc, prec, noise)[1][k, i])


def sinr_common_eve(k, e, i, channels, assoc, prec, noise) -> float:
    return float(sinrs(channels, assoc, prec, noise)[2][k, i, e])


def sinr_private_eve(k, e, i, channels, assoc, prec, noise) -> float:
    return float(sinrs(channels, assoc, prec, noise)[3][k, i, e])
