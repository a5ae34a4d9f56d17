#!/usr/bin/env python3
"""Micro-benchmarks for the exact kernel: coefficient field and series ops.

The coefficient field is a sparse Laurent ring in (nu0 - nu1) over Q[nu1],
chosen after sympy's generic fraction field benchmarked ~1000x slower on
the bounded-degree shapes these verifications produce.
"""

import time
from fractions import Fraction

from orbitoda.rationals import PR
from orbitoda.series import TruncSeries as TS, down_win, up_win


def bench(label, fn, n=2000):
    t0 = time.perf_counter()
    for _ in range(n):
        fn()
    dt = (time.perf_counter() - t0) / n
    print(f"{label:40s} {dt * 1e6:9.2f} us/op")


def main():
    a = PR.nu(3) * PR.nu0() + PR.rational(Fraction(2, 7))
    b = PR.nubar(2) ** 3
    bench("ParamRat multiply", lambda: a * b)
    bench("ParamRat add", lambda: a + b)
    bench("ParamRat monomial inverse", lambda: PR.diff().inverse())

    z = TS.var("z", down_win(-12, hi=2))
    poly = TS.from_poly("z", {0: PR.nu(3), 1: Fraction(2, 3), 2: 1})
    bench("series reciprocal (window 14)",
          lambda: poly.recip_within({"z": down_win(-12, hi=2)}), n=200)
    u = TS.var("u", up_win(10))
    bench("series exp (order 10)", lambda: (u + u * u).exp(), n=200)


if __name__ == "__main__":
    main()
