"""Symmetric polynomials, Bernoulli polynomials, Pochhammer utilities."""

from fractions import Fraction as F

import pytest

from orbitoda.algebra import (bernoulli_number, bernoulli_poly,
                              binom_frac, frac_factorial, frac_part_unit,
                              poly_derivative, symmetric_polys)
from orbitoda.rationals import ParamRat as PR


def brute_h(l, xs):
    """Oracle: expand prod 1/(1+t x_i) = prod sum_j (-x_i t)^j to order l."""
    series = [F(1)] + [F(0)] * l
    for x in xs:
        geo = [(-F(x)) ** j for j in range(l + 1)]
        series = [sum(series[i] * geo[j - i] for i in range(j + 1))
                  for j in range(l + 1)]
    return series[l]


def brute_e(l, xs):
    series = [F(1)] + [F(0)] * l
    for x in xs:
        new = list(series)
        for j in range(l, 0, -1):
            new[j] = series[j] + series[j - 1] * F(x)
        series = new
    return series[l]


def test_e_trivial():
    assert symmetric_polys("e", 0, [PR.nu0(), PR.nu1()]) == PR.one()
    a, b = PR.nu0(), PR.nu1()
    assert symmetric_polys("e", 1, [a, b]) == a + b


def test_h2_brute_force():
    # h_2(a,b) = a^2 + a b + b^2 by direct expansion
    a, b = PR.nu0(), PR.nu1()
    assert symmetric_polys("h", 2, [a, b]) == a * a + a * b + b * b
    for xs in [(F(1, 2), F(3)), (F(2), F(5), F(-1, 3))]:
        for l in range(5):
            got = symmetric_polys("h", l, [PR.rational(x) for x in xs])
            assert got == PR.rational(brute_h(l, xs))
            got_e = symmetric_polys("e", l, [PR.rational(x) for x in xs])
            assert got_e == PR.rational(brute_e(l, xs))


def brute_bernoulli(nmax):
    """Oracle: series-divide e^{tx} t / (e^t - 1) with polynomial coefficients.

    Work with coefficients in Q[x]: divide sum_j x^j t^j/j! by
    (e^t - 1)/t = sum_j t^j/(j+1)!.
    """
    num = [{j: F(1, _fact(j))} for j in range(nmax + 1)]  # x^j / j!
    den = [F(1, _fact(j + 1)) for j in range(nmax + 1)]
    out = []
    for n in range(nmax + 1):
        acc = dict(num[n])
        for i in range(n):
            for e, c in out[i].items():
                acc[e] = acc.get(e, F(0)) - c * den[n - i]
        out.append({e: c for e, c in acc.items() if c})
    return [{e: c * _fact(n) for e, c in poly.items()} for n, poly in enumerate(out)]


def _fact(n):
    r = 1
    for i in range(2, n + 1):
        r *= i
    return r


def test_bernoulli_low():
    assert bernoulli_poly(0) == {0: F(1)}
    assert bernoulli_poly(1) == {1: F(1), 0: F(-1, 2)}
    assert bernoulli_poly(2) == {2: F(1), 1: F(-1), 0: F(1, 6)}


def test_bernoulli_against_generating_function():
    oracle = brute_bernoulli(10)
    for n in range(11):
        assert bernoulli_poly(n) == oracle[n]


def test_bernoulli_derivative_identity():
    for n in range(1, 14):
        lhs = poly_derivative(bernoulli_poly(n))
        rhs = {e: c * n for e, c in bernoulli_poly(n - 1).items()}
        assert lhs == rhs


def test_bernoulli_numbers():
    assert bernoulli_number(12) == F(-691, 2730)
    for n in range(3, 13, 2):
        assert bernoulli_number(n) == 0


def test_frac_factorial():
    assert frac_factorial(F(3)) == 6
    # (1/2)! = 1/2; (3/2)! = (1/2)(3/2) = 3/4
    assert frac_factorial(F(1, 2)) == F(1, 2)
    assert frac_factorial(F(3, 2)) == F(3, 4)
    # integer alpha uses {alpha} = 1
    assert frac_factorial(F(4)) == 24


def test_frac_part_unit():
    assert frac_part_unit(F(-2, 3)) == F(1, 3)
    assert frac_part_unit(F(5, 3)) == F(2, 3)
    assert frac_part_unit(F(2)) == F(1)
    assert frac_part_unit(F(0)) == F(1)
    assert frac_part_unit(F(-1)) == F(1)


def test_binom_frac():
    assert binom_frac(F(2, 3), 2) == F(2, 3) * F(-1, 3) / 2
    assert binom_frac(F(5), 2) == 10


def test_symmetric_rejects_bad_kind():
    with pytest.raises(ValueError):
        symmetric_polys("q", 1, [])
