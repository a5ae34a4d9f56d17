"""Shift-operator algebra, wave operators, flows, and the reduction."""

from fractions import Fraction as F

import pytest

from orbitoda.errors import DivisionByZeroTau, WindowUnderflow
from orbitoda.rationals import ParamRat as PR
from orbitoda.series import TruncSeries as TS, up_win
from orbitoda.toda import (ShiftOp, TauJet, check_wave_equations, dress,
                           gauge_qpower_check, identity_op, lambda_op,
                           log_lax, log_lax_bar, tau_to_wave,
                           two_toda_vacuum_tau, vacuum_lbar,
                           verify_reduced_vacuum, verify_solve_recovery,
                           verify_flow_band_shape, verify_vacuum,
                           verify_zakharov_shabat, yname)

EW = up_win(3)


def test_lambda_commutation():
    u = TS.from_poly("x", {1: 1}).truncated({"eps": EW})
    lam = lambda_op(1)
    out = lam.mul(ShiftOp({0: u}, 0, True), EW)
    want = TS.from_poly("x", {1: 1}) + TS.from_poly("eps", {1: 1})
    assert (out.bands[1] - want.truncated({"eps": EW})).is_zero()


def test_split_projectors():
    a = TS.from_poly("x", {2: 1}).truncated({"eps": EW})
    M = ShiftOp({1: TS.scalar(1, {"eps": EW}), -1: a}, -1, True)
    plus = M.split_plus()
    assert list(plus.bands) == [1]
    assert plus.split_plus().eq_report(plus) is None
    assert plus.split_minus().is_zero()
    recombined = plus + M.split_minus()
    assert recombined.eq_report(M) is None


def test_square_matches_application_oracle():
    # apply (Lambda + a Lambda^-1) twice to test monomials u and compare
    # with the banded square acting once
    a = TS.from_poly("x", {2: 1}).truncated({"eps": EW})
    M = ShiftOp({1: TS.scalar(1, {"eps": EW}), -1: a}, -1, True)
    sq = M.mul(M, EW)

    def apply(op, u):
        from orbitoda.series import taylor_shift
        out = None
        for i, c in op.bands.items():
            term = c * taylor_shift(u, "x", "eps", i, EW)
            out = term if out is None else out + term
        return out

    for u in (TS.from_poly("x", {0: 1}), TS.from_poly("x", {1: 1}),
              TS.from_poly("x", {3: F(1, 2), 1: -2})):
        u = u.truncated({"eps": EW})
        twice = apply(M, apply(M, u))
        once = apply(sq, u)
        assert (twice - once).is_zero()
    # band 0 carries a(x) + a(x+eps) per the shift bookkeeping
    xe = TS.from_poly("x", {1: 1}) + TS.from_poly("eps", {1: 1})
    want0 = (TS.from_poly("x", {2: 1}) + xe * xe).truncated({"eps": EW})
    assert (sq.bands[0] - want0).is_zero()


def test_mul_associativity_random():
    a = TS.from_poly("x", {1: F(1, 2)}).truncated({"eps": EW})
    b = TS.from_poly("x", {0: -1, 2: F(1, 3)}).truncated({"eps": EW})
    A = ShiftOp({1: TS.scalar(1, {"eps": EW}), 0: a}, 0, True)
    B = ShiftOp({-1: b, 1: TS.scalar(F(2, 7), {"eps": EW})}, -1, True)
    C = ShiftOp({0: a, -2: b}, -2, True)
    lhs = A.mul(B, EW).mul(C, EW)
    rhs = A.mul(B.mul(C, EW), EW)
    assert lhs.eq_report(rhs) is None


def test_tau_requires_invertible_constant():
    with pytest.raises(DivisionByZeroTau):
        TauJet(TS.from_poly("x", {1: 1}), 0, 0)


def test_tau_declared_times_contract():
    tau = two_toda_vacuum_tau(2, 2)
    with pytest.raises(WindowUnderflow):
        tau.d_time(False, 5)


def test_vacuum_tau_trivial_wave():
    tau = TauJet(TS.scalar(1, {"eps": EW}), 0, 0)
    p_op, q_op = tau_to_wave(tau, 3, EW)
    assert p_op.eq_report(identity_op()) is None
    assert q_op.eq_report(identity_op()) is None
    L, lbar = dress(p_op, q_op, EW, 3)
    assert L.eq_report(lambda_op(1)) is None
    assert lbar.eq_report(vacuum_lbar()) is None


def test_vacuum_report():
    assert verify_vacuum(EW).ok


def test_linearized_tau_wave_coefficient():
    # tau = 1 + c y_1: w_1 = -eps c/(1 + c y_1) to the declared windows
    c = F(3, 5)
    tau_ser = (1 + TS.var(yname(1), up_win(4)).scale(c)).truncated({"eps": EW})
    tau = TauJet(tau_ser, 1, 0)
    p_op, _ = tau_to_wave(tau, 2, EW)
    w1 = p_op.bands.get(-1)
    denom = (1 + TS.var(yname(1), up_win(4)).scale(c)).recip()
    want = (denom * TS.from_poly("eps", {1: 1})).scale(-c).truncated({"eps": EW})
    assert (w1 - want).is_zero()


def test_wave_equations_on_vacuum_family():
    tau = two_toda_vacuum_tau(4, 3)
    assert check_wave_equations(tau, 4, EW, flows=2).ok


def test_constant_tau_is_not_a_tau_function():
    # the wave equations fail for tau = 1: eps d Q-op = 0 but (L)_+ Q-op != 0
    tau = TauJet(TS.scalar(1, {"eps": EW}), 1, 1)
    rep = check_wave_equations(tau, 2, EW, flows=1)
    assert not rep.ok


def test_dressing_single_coefficient():
    w = TS.from_poly("x", {1: 1}).truncated({"eps": EW})
    p = ShiftOp({0: TS.scalar(1, {"eps": EW}), -1: w}, -4, False)
    L = p.mul(lambda_op(1), EW).mul(p.inverse(EW), EW)
    # L = Lambda + (w(x) - w(x+eps)) + O(Lambda^-1)
    band0 = L.bands[0]
    want = -TS.from_poly("eps", {1: 1}).truncated({"eps": EW})
    assert (band0 - want).is_zero()


def test_log_lax_vacuum_forms():
    p = identity_op()
    lg = log_lax(p, EW)
    assert all(c.is_zero() for c in lg.bands.values())
    assert (lg.deriv - PR.one()).is_zero()
    lgb = log_lax_bar(identity_op(), EW, 3)
    assert (lgb.deriv + PR.one()).is_zero()
    assert (lgb.logq - PR.one()).is_zero()


def test_zakharov_shabat():
    assert verify_zakharov_shabat(3, 3, 4).ok


def test_reduction_suite():
    for km in [(2, 1), (3, 2)]:
        for rep in verify_reduced_vacuum(*km):
            assert rep.ok, (rep.name, rep.first_discrepancy)
    assert verify_solve_recovery(2).ok
    assert verify_solve_recovery(3).ok
    assert verify_flow_band_shape(2, 1).ok
    assert verify_flow_band_shape(3, 2).ok


def test_gauge_bookkeeping():
    assert gauge_qpower_check().ok


def test_dress_undress_roundtrip():
    # P^-1 L P = Lambda for any unit-leading dressing, to the band window
    w1 = TS.from_poly("x", {1: F(1, 3)}).truncated({"eps": EW})
    w2 = TS.from_poly("x", {2: F(-1, 5)}).truncated({"eps": EW})
    p = ShiftOp({0: TS.scalar(1, {"eps": EW}), -1: w1, -2: w2}, -4, False)
    p_inv = p.inverse(EW)
    L = p.mul(lambda_op(1), EW).mul(p_inv, EW)
    back = p_inv.mul(L, EW).mul(p, EW)
    assert back.eq_report(lambda_op(1)) is None
