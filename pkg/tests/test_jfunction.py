"""J-series construction, derivative formulas, and the identity engine."""

from fractions import Fraction as F

import pytest

from orbitoda.cohomology import SectorIndex
from orbitoda.errors import NotCoprime
from orbitoda.jfunction import (JSeries, operator_ladder, build_dj, build_j,
                                j_small_z_expansion, poch, poch_ratio,
                                verify_ladder_identities, verify_qde)
from orbitoda.rationals import ParamRat as PR
from orbitoda.series import TruncSeries as TS, VarWindow

ZWIN = VarWindow(-8, 2, False, True)


def test_build_j_q0_layer():
    j = build_j(3, 2, 0, ZWIN)
    z1 = j.sectors["0"][0][SectorIndex("k", 0)]
    assert z1 == TS.var("z", z1.wins["z"])
    zinf = j.sectors["inf"][0][SectorIndex("m", 0)]
    assert zinf == TS.var("z", zinf.wins["z"])


def test_build_j_d1_term():
    # (k,m)=(3,2), 0-sector, d=1: q^2 z / (z (nu + (2/3) z)) 1_{1/3}
    j = build_j(3, 2, 2, ZWIN)
    got = j.sectors["0"][2][SectorIndex("k", 1)]
    want = TS.from_poly("z", {0: PR.nu(3), 1: F(2, 3)}).recip_within(
        {"z": got.wins["z"]})
    assert (got - want).is_zero()


def test_small_z_expansion():
    assert j_small_z_expansion(3, 2)
    assert j_small_z_expansion(5, 3)


def test_poch_conventions():
    nu = PR.nu(3)
    # integer argument: b runs 1..x
    p = poch(nu, F(2))
    want = TS.from_poly("z", {0: nu, 1: 1}) * TS.from_poly("z", {0: nu, 1: 2})
    assert (p - want).is_zero()
    # single fractional factor
    p = poch(nu, F(2, 3))
    assert (p - TS.from_poly("z", {0: nu, 1: F(2, 3)})).is_zero()
    # empty product when x < {x}
    assert (poch(nu, F(-1, 3)) - 1).is_zero()


def test_poch_ratio_d0_simplifies_to_one():
    # ratio at X = -i/k for 1 <= i <= k-1 is the empty product
    for k in (3, 5):
        nu = PR.nu(k)
        for i in range(1, k):
            r = poch_ratio(nu, F(-i, k), ZWIN)
            assert (r - 1).is_zero()


def test_poch_ratio_untwisted_direction():
    # X = -1 keeps the single b=0 factor: ratio = nu
    nu = PR.nu(3)
    r = poch_ratio(nu, F(-1), ZWIN)
    assert (r - TS.scalar(nu)).is_zero()
    # X = -5/3 keeps b = -2/3
    r = poch_ratio(nu, F(-5, 3), ZWIN)
    assert (r - TS.from_poly("z", {0: nu, 1: F(-2, 3)})).is_zero()


def test_build_dj_d0_only():
    dj = build_dj(3, 2, "m", 2, 0, ZWIN)
    # only d=0 terms survive at qmax=0
    assert list(dj.sectors["0"].keys()) == []
    assert list(dj.sectors["inf"].keys()) == [0]


def test_build_dj_leading_terms():
    # z d_{0/m} J: highest-z term z nubar 1_{0/m} after unscaling m g
    dj = build_dj(3, 2, "m", 2, 4, ZWIN)
    ser = dj.sectors["inf"][0][SectorIndex("m", 0)]
    g0m = (-PR.diff()).inverse()
    top = ser.coeff_of("z", 1)
    # build_dj includes the m*g normalization: top = m g nubar
    assert top == TS.scalar(PR.nubar(2) * g0m * 2)
    # i = k case: d=0 sector-0 term is z * (k g nu) 1_{0/k} = z 1_{0/k}
    djk = build_dj(3, 2, "k", 3, 4, ZWIN)
    ser = djk.sectors["0"][0][SectorIndex("k", 0)]
    assert ser == TS.var("z", ser.wins["z"])


def test_operator_ladder_3_2():
    seq = operator_ladder(3, 2)
    assert seq.q == [0, 1, 3]
    assert seq.r[1] == 1
    assert [(str(s), f) for s, f in seq.s] == [
        ("0", "k"), ("0", "m"), ("1/3", "k"), ("1/2", "m"), ("2/3", "k")]
    assert seq.s_tilde[2] == ("k", 1)   # s~_3 = (k-m)/k = 1/3


def test_operator_ladder_remainders_nonzero():
    for (k, m) in [(5, 3), (7, 4), (4, 3)]:
        seq = operator_ladder(k, m)
        assert all(r != 0 for r in seq.r[1:])


def test_operator_ladder_rejects_non_coprime():
    with pytest.raises(NotCoprime):
        operator_ladder(4, 2)


def test_ladder_identities_3_2():
    reps = verify_ladder_identities(3, 2, 12)
    assert [r.name for r in reps] == [f"ladder-alpha-{a}" for a in range(1, 6)]
    assert all(r.ok for r in reps)


def test_ladder_identities_5_3():
    reps = verify_ladder_identities(5, 3, 15)
    assert all(r.ok for r in reps)


def test_ladder_negative_control():
    reps = verify_ladder_identities(3, 2, 6, negate=True)
    bad = [r for r in reps if not r.ok]
    assert bad and bad[0].name == "ladder-alpha-1"
    assert bad[0].first_discrepancy is not None
    assert "difference" in bad[0].first_discrepancy["at"] or \
        bad[0].first_discrepancy["at"].get("q_degree") is not None


def test_qde():
    assert verify_qde(3, 2, 12).ok
    assert verify_qde(2, 1, 8).ok


def test_qde_negative_control():
    rep = verify_qde(3, 2, 6, negate=True)
    assert not rep.ok
    assert rep.first_discrepancy is not None


def test_swapped_feet_engine():
    # k < m goes through the same engine with feet relabeled
    reps = verify_ladder_identities(2, 3, 10)
    assert all(r.ok for r in reps)
    assert verify_qde(2, 3, 10).ok


def test_tau_derivative_decomposes_over_untwisted_directions():
    # z d/dtau J = nu0 * (z d_{0/k} J) + nu1 * (z d_{0/m} J): the pullback of
    # the restriction direction tau p through the derivative formulas
    from orbitoda.rationals import ParamRat
    k, m, qmax = 3, 2, 8
    j = build_j(k, m, qmax, ZWIN)
    lhs = j.apply_zdtau_affine(
        lambda sector, qdeg: TS.from_poly(
            "z", {0: PR.nu0() if sector == "0" else PR.nu1(),
                  1: PR.rational(qdeg)}))
    djk = build_dj(k, m, "k", k, qmax, ZWIN)
    djm = build_dj(k, m, "m", m, qmax, ZWIN)
    rhs = JSeries(k, m, qmax, ZWIN)
    for sec, grades in djk.sectors.items():
        for qd, bucket in grades.items():
            for idx, z in bucket.items():
                rhs.add_term(sec, qd, idx, z.scale(PR.nu0()))
    for sec, grades in djm.sectors.items():
        for qd, bucket in grades.items():
            for idx, z in bucket.items():
                rhs.add_term(sec, qd, idx, z.scale(PR.nu1()))
    assert lhs.diff_report(rhs, qmax) is None


def test_poch_ratio_inverts_poch():
    # ratio(X) * poch(X) = 1 whenever X >= {X}
    nu = PR.nu(3)
    for num in (2, 5, 7, 9):
        x = F(num, 3)
        r = poch_ratio(nu, x, ZWIN)
        prod = r * poch(nu, x)
        assert (prod - 1).is_zero()
