import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cases import NOISE, oracle_args, random_instance, random_precoders, rate_case
from hetuav.association import AssociationState
from hetuav.channel import Channels
from hetuav.rsma import (PrecoderSet, rates_report, sinr_common_eve, sinr_common_gt, sinr_private_eve,
                         sinr_private_gt, sinrs)
from oracles import scalar_rates


def _single(h, he, pc, pp, noise=1.0, cover_eve=1):
    ch = Channels(np.array([[h]], complex), np.array([[he]], complex))
    assoc = AssociationState(np.ones((1, 1), int), np.array([[cover_eve]]), np.ones((1, 1), int))
    return ch, assoc, PrecoderSet(np.array([pc], complex), np.array([[pp]], complex)), noise


def test_zero_precoders_give_zero():
    ch, assoc = random_instance(0, 2, 3, 2)
    rep = rates_report(ch, assoc, PrecoderSet.zeros(2, 3, 2), NOISE)
    assert rep.f1 == 0.0
    assert np.all(rep.R == 0) and np.all(rep.R_e == 0)
    assert sinr_common_gt(0, 0, ch, assoc, PrecoderSet.zeros(2, 3, 2), NOISE) == 0.0


def test_single_link_no_interference():
    ch, assoc, prec, n = _single([1.0, 0.5j], [0.3, 0.2], [1.0, 1.0], [0.0, 0.0], noise=0.5)
    assert sinr_common_gt(0, 0, ch, assoc, prec, n) == pytest.approx(abs(1.0 + 0.5j) ** 2 / 0.5)
    ch, assoc, prec, n = _single([1.0, 0.5j], [0.3, 0.2], [0.0, 0.0], [1.0, 2.0], noise=0.5)
    assert sinr_private_gt(0, 0, ch, assoc, prec, n) == pytest.approx(abs(np.vdot([1.0, 0.5j], [1.0, 2.0])) ** 2 / 0.5)
    assert sinr_common_eve(0, 0, 0, ch, assoc, prec, n) == 0.0


def test_eve_gate_and_no_interference_case():
    ch, assoc, prec, n = _single([1.0, 0.0], [0.3, 0.4], [1.0, 0.0], [0.0, 0.0], cover_eve=0)
    assert sinr_common_eve(0, 0, 0, ch, assoc, prec, n) == 0.0
    assert sinr_private_eve(0, 0, 0, ch, assoc, prec, n) == 0.0
    ch, assoc, prec, n = _single([1.0, 0.0], [0.3, 0.4], [1.0, 0.0], [0.0, 0.0], cover_eve=1)
    assert sinr_common_eve(0, 0, 0, ch, assoc, prec, n) == pytest.approx(0.09)


def test_private_eve_decreases_with_common_power():
    vals = []
    for c in (0.0, 1.0, 4.0):
        ch, assoc, prec, n = _single([1.0, 0.0], [0.3, 0.4], [c, c], [1.0, 0.0])
        vals.append(sinr_private_eve(0, 0, 0, ch, assoc, prec, n))
    assert vals[0] > vals[1] > vals[2]


def test_unit_sinr_gives_one_bit():
    ch = Channels(np.array([[[1.0, 0.0]]], complex), np.zeros((1, 0, 2), complex))
    assoc = AssociationState(np.ones((1, 1), int), np.zeros((1, 0), int), np.ones((1, 1), int))
    prec = PrecoderSet(np.zeros((1, 2), complex), np.array([[[1.0, 0.0]]], complex))
    rep = rates_report(ch, assoc, prec, 1.0)
    assert rep.R[0, 0] == pytest.approx(1.0) and rep.f1 == pytest.approx(1.0)


def test_two_gt_hand_expansion():
    h1, h2 = np.array([1.0, 0.5]), np.array([0.2, 1.0j])
    pc, p1, p2 = np.array([1.0, 1.0]), np.array([0.5, 0.0]), np.array([0.0, 0.7])
    ch = Channels(np.array([[h1, h2]], complex), np.zeros((1, 0, 2), complex))
    assoc = AssociationState(np.ones((1, 2), int), np.zeros((1, 0), int), np.ones((1, 2), int))
    prec = PrecoderSet(pc[None].astype(complex), np.array([[p1, p2]], complex))
    pw = lambda h, p: abs(np.vdot(h, p)) ** 2  # noqa: E731
    n = 0.1
    want_c = pw(h1, pc) / (pw(h1, p1) + pw(h1, p2) + n)
    want_p = pw(h1, p1) / (pw(h1, p2) + n)
    g_c, g_p, _, _ = sinrs(ch, assoc, prec, n)
    assert g_c[0, 0] == pytest.approx(want_c, rel=1e-12)
    assert g_p[0, 0] == pytest.approx(want_p, rel=1e-12)


def test_identical_channels_common_stream_leaks_fully():
    # the Eve decodes the common stream exactly as well as the GT; only the
    # private stream, which the Eve cannot cancel the common stream from, is secret
    h = [1.0, 0.3j]
    ch, assoc, prec, n = _single(h, h, [1.0, 0.2], [0.5, 0.5])
    rep = rates_report(ch, assoc, prec, n)
    assert rep.R_c[0, 0] == pytest.approx(rep.R_ce[0, 0, 0], rel=1e-14)
    assert rep.f1 == pytest.approx(rep.R_p[0, 0] - rep.R_pe[0, 0, 0], rel=1e-12)
    prec0 = PrecoderSet(np.zeros((1, 2), complex), prec.pp)
    assert rates_report(ch, assoc, prec0, n).f1 == pytest.approx(0.0, abs=1e-12)


def test_matches_scalar_oracle():
    for seed in range(40):
        ch, assoc, prec = rate_case(seed)
        rep = rates_report(ch, assoc, prec, NOISE)
        ref = scalar_rates(*oracle_args(ch, assoc, prec))
        for (k, i), r in ref["R"].items():
            assert rep.R[k, i] == pytest.approx(r, rel=1e-9, abs=1e-12)
            assert rep.R_sr[k, i] == pytest.approx(ref["Rsr"][(k, i)], rel=1e-9, abs=1e-12)
        for (k, i, e), r in ref["Re"].items():
            assert rep.R_e[k, i, e] == pytest.approx(r, rel=1e-9, abs=1e-12)
        assert rep.f1 == pytest.approx(ref["f1"], rel=1e-9, abs=1e-12)


def test_f1_not_clamped():
    ch, assoc, prec, n = _single([0.1, 0.0], [1.0, 0.0], [0.0, 0.0], [1.0, 0.0])
    assert rates_report(ch, assoc, prec, n).f1 < 0


def test_no_eves_uses_rate():
    ch, assoc = random_instance(2, 1, 2, 1)
    assoc.cover_eve[:] = 0
    prec = random_precoders(2, assoc)
    rep = rates_report(ch, assoc, prec, NOISE)
    assert rep.f1 == pytest.approx(rep.R[0].min())


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10_000))
def test_rate_invariants(seed):
    ch, assoc, prec = rate_case(seed)
    rep = rates_report(ch, assoc, prec, NOISE)
    for arr in (rep.sinr_c, rep.sinr_p, rep.sinr_ce, rep.sinr_pe, rep.R, rep.R_e):
        assert np.all(arr >= 0)
    assert np.allclose(rep.R, rep.R_c + rep.R_p) and np.allclose(rep.R_e, rep.R_ce + rep.R_pe)
    assert rates_report(ch, assoc, prec.scaled(0.0), NOISE).f1 == 0.0
    # SIC helps: adding the common stream back into the private denominator lowers the SINR
    g_c, g_p, _, _ = sinrs(ch, assoc, prec, NOISE)
    for k, i in zip(*np.nonzero(assoc.schedule)):
        h = ch.gt[k, i]
        sig = abs(np.vdot(h, prec.pp[k, i])) ** 2
        den = sig / g_p[k, i] if g_p[k, i] > 0 else np.inf
        assert g_p[k, i] >= sig / (den + abs(np.vdot(h, prec.pc[k])) ** 2) - 1e-15
