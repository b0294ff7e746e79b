from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cases import NOISE, random_instance, random_precoders
from hetuav.association import AssociationState
from hetuav.channel import Channels
from hetuav.rsma import PrecoderSet, rates_report
from hetuav.s2dc import (ConvexSubproblem, LiftedVars, NumericalFailure, S2DCOptions, compile_problem,
                         extract_rank_one, f_tilde_terms, feasible_start, lift, linearized_lambda, phi_terms,
                         principal_eig, rank_one_gap, s2dc_solve, solve_subproblem)
from hetuav.s2dc.lifted import quad_coeffs, to_params, trace_coeffs

P_MAX = 35.0


def _rand_psd(rng, M=2, rank=2):
    A = rng.normal(size=(M, rank)) + 1j * rng.normal(size=(M, rank))
    return A @ A.conj().T


# lifting and spectral helpers -------------------------------------------------

def test_lift_examples():
    z = lift(PrecoderSet.zeros(1, 1, 2))
    assert np.all(z.Pc == 0) and np.all(z.Pp == 0)
    e1 = PrecoderSet(np.array([[1.0, 0.0]], complex), np.zeros((1, 1, 2), complex))
    assert np.array_equal(lift(e1).Pc[0], np.array([[1, 0], [0, 0]]))
    rng = np.random.default_rng(0)
    p = rng.normal(size=2) + 1j * rng.normal(size=2)
    X = lift(PrecoderSet(p[None], np.zeros((1, 1, 2), complex))).Pc[0]
    assert np.trace(X).real == pytest.approx(np.linalg.norm(p) ** 2, rel=1e-14)
    lift(random_precoders(1, random_instance(1, 2, 3, 2)[1])).check()


def test_rank_one_gap_examples():
    p = np.array([1.0, 2.0j])
    assert rank_one_gap(np.outer(p, p.conj())) == pytest.approx(0.0, abs=1e-12)
    assert rank_one_gap(np.eye(2)) == pytest.approx(1.0)
    assert rank_one_gap(np.diag([3.0, 1.0])) == pytest.approx(1.0)


def test_principal_eig_sign_convention():
    lam, v = principal_eig(np.eye(2))
    assert lam == pytest.approx(1.0)
    j = np.argmax(np.abs(v.real))
    assert v.real[j] > 0
    lam2, v2 = principal_eig(np.eye(2))
    assert np.array_equal(v, v2)


def test_linearized_lambda_examples():
    rng = np.random.default_rng(1)
    Xp = _rand_psd(rng)
    lam, v = principal_eig(Xp)
    assert linearized_lambda(Xp, Xp) == pytest.approx(lam, rel=1e-12)
    assert linearized_lambda(Xp + 0.7 * np.outer(v, v.conj()), Xp) == pytest.approx(lam + 0.7, rel=1e-12)
    p = rng.normal(size=2) + 1j * rng.normal(size=2)
    R1 = np.outer(p, p.conj())
    assert linearized_lambda(2 * R1, R1) == pytest.approx(2 * principal_eig(R1)[0], rel=1e-12)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 100_000))
def test_linearized_lambda_supporting_hyperplane(seed):
    rng = np.random.default_rng(seed)
    X, Xp = _rand_psd(rng), _rand_psd(rng, rank=int(rng.integers(1, 3)))
    assert linearized_lambda(X, Xp) <= np.linalg.eigvalsh(X)[-1] + 1e-10


def test_extract_rank_one_examples():
    prec = random_precoders(3, random_instance(3, 1, 2, 1)[1])
    back = extract_rank_one(lift(prec))
    assert np.allclose(lift(back).Pc, lift(prec).Pc, atol=1e-12)
    assert np.allclose(lift(back).Pp, lift(prec).Pp, atol=1e-12)
    zero = extract_rank_one(LiftedVars.zeros(1, 1, 2))
    assert np.all(zero.pc == 0)


def test_extract_rank_one_near_rank_one():
    # gap of 1% of the trace: reconstruction error is exactly that share of the trace
    rng = np.random.default_rng(4)
    Q, _ = np.linalg.qr(rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2)))
    X = Q @ np.diag([0.99, 0.01]) @ Q.conj().T
    v = LiftedVars(X[None], np.zeros((1, 0, 2, 2), complex))
    assert rank_one_gap(X) == pytest.approx(0.01)
    rec = lift(extract_rank_one(v)).Pc[0]
    assert np.linalg.norm(rec - X) / np.trace(X).real <= 0.01 + 1e-12


# lifted rate terms -------------------------------------------------------------

def test_phi_terms_zero_vars_single_uav():
    ch, assoc = random_instance(0, 1, 2, 1)
    t = phi_terms(LiftedVars.zeros(1, 2, 2), ch, assoc, NOISE)
    for key in ("phi_c", "phi_p", "phi_ec", "phi_ep"):
        assert np.allclose(t[key], NOISE, rtol=0, atol=1e-30)


def test_phi_difference_is_own_private_power():
    ch, assoc = random_instance(5, 2, 3, 2)
    v = lift(random_precoders(5, assoc))
    t = phi_terms(v, ch, assoc, NOISE)
    for k, i in zip(*np.nonzero(assoc.schedule)):
        h = ch.gt[k, i]
        own = np.real(h.conj() @ v.Pp[k, i] @ h)
        assert t["phi_c"][k, i] - t["phi_p"][k, i] == pytest.approx(own, rel=1e-9)


def test_f_tilde_zero_vars_unit_noise():
    ch, assoc = random_instance(0, 1, 1, 1)
    for F in f_tilde_terms(LiftedVars.zeros(1, 1, 2), ch, assoc, 1.0):
        assert np.allclose(F, 0.0)


def test_f_tilde_reproduces_secrecy_rate():
    for seed in range(25):
        rng = np.random.default_rng(seed)
        ch, assoc = random_instance(seed, int(rng.integers(1, 3)), int(rng.integers(1, 4)), int(rng.integers(1, 3)),
                                    full_cover=bool(seed % 2))
        prec = random_precoders(seed, assoc)
        rep = rates_report(ch, assoc, prec, NOISE)
        F11, F12, F13, F14 = f_tilde_terms(lift(prec), ch, assoc, NOISE)
        Ft = F11 + F12 - F13 - F14
        for k, i in zip(*np.nonzero(assoc.schedule)):
            for e in np.flatnonzero(assoc.cover_eve[k]):
                assert Ft[k, i, e] == pytest.approx(rep.R[k, i] - rep.R_e[k, i, e], rel=1e-9, abs=1e-9)


def test_f_tilde_uncovered_eve_collapses():
    ch, assoc = random_instance(7, 1, 2, 1)
    assoc.cover_eve[:] = 0
    v = lift(random_precoders(7, assoc))
    t = phi_terms(v, ch, assoc, NOISE)
    _, _, F13, F14 = f_tilde_terms(v, ch, assoc, NOISE)
    assert np.allclose(F13[:, :, 0], np.log2(t["phi_c"]))
    assert np.allclose(F14[:, :, 0], np.log2(t["phi_p"]))


def test_compiled_objective_matches_rates():
    ch, assoc = random_instance(8, 2, 3, 2)
    prec = random_precoders(8, assoc)
    prob = compile_problem(ch, assoc, NOISE, P_MAX)
    x = prob.from_lifted(lift(prec))
    rep = rates_report(ch, assoc, prec, NOISE)
    assert prob.objective(x, 0.0) == pytest.approx(rep.f1, rel=1e-9, abs=1e-9)
    assert prob.rank_gap(x) == pytest.approx(0.0, abs=1e-12)


# surrogate ---------------------------------------------------------------------

@pytest.mark.parametrize("seed,shape", [(0, (1, 1, 1)), (1, (2, 3, 2)), (2, (1, 2, 1))])
def test_surrogate_touches_and_minorizes(seed, shape):
    ch, assoc = random_instance(seed, *shape)
    prob, x0 = feasible_start(ch, assoc, NOISE, P_MAX)
    rng = np.random.default_rng(seed)
    for mu in (0.0, 1.0):
        sub = prob.surrogate(x0, mu)
        assert sub.value(x0) == pytest.approx(prob.objective(x0, mu), rel=1e-12, abs=1e-12)
        for _ in range(10):
            x = prob.project_interior(x0 + 0.05 * rng.normal(size=x0.size))
            assert sub.value(x) <= prob.objective(x, mu) + 1e-9
    sub0 = prob.surrogate(x0, 0.0)
    assert np.all(sub0.c == 0) and sub0.const == 0


# interior-point subproblem solver ----------------------------------------------

def _single_block(rows_Z, C, f, is_obj, c=None):
    M = 2
    Z = np.atleast_2d(rows_Z)
    n = M * M
    return ConvexSubproblem(Z, np.atleast_2d(C), np.zeros((len(f), n)), np.asarray(f, float),
                            np.asarray(is_obj, bool), trace_coeffs(M)[None], np.zeros(n) if c is None else c, 1, M)


def test_ipm_trace_objective():
    sub = ConvexSubproblem(np.zeros((0, 4)), np.zeros((0, 0)), np.zeros((0, 4)), np.zeros(0), np.zeros(0, bool),
                           trace_coeffs(2)[None], P_MAX * trace_coeffs(2), 1, 2)
    res = solve_subproblem(sub, to_params(np.eye(2) / 4))
    assert res.value == pytest.approx(P_MAX, rel=1e-6)


def test_ipm_mrt_closed_form():
    rng = np.random.default_rng(11)
    h = (rng.normal(size=2) + 1j * rng.normal(size=2)) * 1e-5
    # log2(s2 + P h^H X h) with X = P_max X~, tr X~ <= 1
    Z = (P_MAX / NOISE) * quad_coeffs(h)
    sub = _single_block(Z, [[1 / np.log(2)]], [np.log2(NOISE)], [True])
    res = solve_subproblem(sub, to_params(np.eye(2) / 4))
    want = np.log2(NOISE + P_MAX * np.linalg.norm(h) ** 2)
    assert abs(res.value - want) <= 1e-3
    X = res.x.reshape(4)
    mat = np.array([[X[0], X[2] + 1j * X[3]], [X[2] - 1j * X[3], X[1]]])
    assert rank_one_gap(mat) <= 1e-4 * np.trace(mat).real
    assert np.trace(mat).real == pytest.approx(1.0, abs=1e-6)


def test_ipm_newton_solve_rejects_non_finite_system():
    from hetuav.s2dc.ipm import _solve
    H = np.eye(3)
    assert np.allclose(_solve(2 * H, np.ones(3)), 0.5)
    H[1, 1] = np.inf
    with pytest.raises(NumericalFailure):
        _solve(H, np.ones(3))
    with pytest.raises(NumericalFailure):
        _solve(np.eye(3), np.array([1.0, np.nan, 0.0]))


def test_ipm_rejects_infeasible_start():
    sub = _single_block(np.zeros(4), [[0.0]], [1.0], [True])
    with pytest.raises(ValueError):
        solve_subproblem(sub, to_params(np.eye(2)))


# full solver -------------------------------------------------------------------

def _check_result(prob_ch, assoc, res):
    assert np.all(res.precoders.power() <= P_MAX * (1 + 1e-9))
    assert res.gap <= 1e-4 * res.total_trace
    rep = rates_report(prob_ch, assoc, res.precoders, NOISE)
    assert rep.f1 == pytest.approx(res.f1)
    for step in res.history:
        assert step.objective_after >= step.objective_before - 1e-8
    for k in range(assoc.schedule.shape[0]):
        if res.common_on.get(k, False):
            for i in np.flatnonzero(assoc.schedule[k]):
                for e in np.flatnonzero(assoc.cover_eve[k]):
                    assert rep.R_c[k, i] >= rep.R_ce[k, i, e] - 1e-6


def test_s2dc_ill_conditioned_instance():
    # recorded from a training rollout where the barrier Hessian overflowed
    d = np.load(Path(__file__).parent / "data" / "ill_conditioned_case.npz")
    ch = Channels(d["gt"], d["eve"])
    assoc = AssociationState(d["cover_gt"], d["cover_eve"], d["schedule"])
    opts = S2DCOptions(max_iter=5, ipm_tol=1e-6, starts=("mrt",))
    res = s2dc_solve(ch, assoc, float(d["noise"]), float(d["p_max"]), opts)
    _check_result(ch, assoc, res)
    assert np.isfinite(res.f1)


@pytest.mark.parametrize("seed,shape", [(0, (1, 1, 1)), (1, (1, 2, 1)), (2, (2, 3, 2))])
def test_s2dc_feasible_monotone(seed, shape):
    ch, assoc = random_instance(seed, *shape)
    res = s2dc_solve(ch, assoc, NOISE, P_MAX)
    _check_result(ch, assoc, res)


def test_s2dc_no_eve_reaches_mrt():
    ch, assoc = random_instance(3, 1, 1, 1)
    assoc.cover_eve[:] = 0
    res = s2dc_solve(ch, assoc, NOISE, P_MAX)
    want = np.log2(1 + P_MAX * np.linalg.norm(ch.gt[0, 0]) ** 2 / NOISE)
    assert res.f1 == pytest.approx(want, abs=0.05)


def test_s2dc_identical_channels():
    # identical GT/Eve channels make R_c = R_ce for every precoder, so the
    # common-stream secrecy constraint has no interior; the solver falls back
    # to private-only precoding, whose secrecy is then exactly zero
    h = np.array([[[0.8e-5, 0.3e-5j]]])
    ch = Channels(h.copy(), h.copy())
    assoc = AssociationState(np.ones((1, 1), int), np.ones((1, 1), int), np.ones((1, 1), int))
    res = s2dc_solve(ch, assoc, NOISE, P_MAX)
    assert res.common_on == {0: False}
    assert res.f1 == pytest.approx(0.0, abs=1e-9)
    assert np.all(res.precoders.power() <= P_MAX * (1 + 1e-9))


def test_s2dc_no_served_gt():
    ch, assoc = random_instance(0, 1, 1, 1)
    assoc.schedule[:] = 0
    res = s2dc_solve(ch, assoc, NOISE, P_MAX)
    assert res.f1 == 0.0 and np.all(res.precoders.power() == 0)


def test_s2dc_diagnostics_dump(tmp_path):
    ch, assoc = random_instance(0, 1, 1, 1)
    res = s2dc_solve(ch, assoc, NOISE, P_MAX, S2DCOptions(max_iter=3, starts=("mrt",)))
    res.dump_diagnostics(tmp_path / "diag.csv")
    lines = (tmp_path / "diag.csv").read_text().splitlines()
    assert len(lines) == len(res.history) + 1
