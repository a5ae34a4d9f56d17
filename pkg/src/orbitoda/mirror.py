"""Mirror family, flat coordinates, residue pairing, and classical limits.

The superpotential is carried as an exact Laurent polynomial in x over
(q, t)-polynomials together with structural log-coefficients: the logs never
need expanding because only df and log-derivative bookkeeping enter the
formulas.  Residues at x = 0 and x = infinity are Laurent expansions in the
two orientations of the same variable.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .algebra import bernoulli_poly, binom_frac
from .cohomology import Cohomology, QuantumRing, SectorIndex
from .errors import SingularFiber
from .rationals import ParamRat, PR, RootRing
from .reports import CheckReport, Stopwatch
from .series import (TruncSeries, VarWindow, down_win, exact_win,
                     series_reversion, up_win)


def tname(i: int) -> str:
    return f"t{i}"


@dataclass
class Superpotential:
    """f_t on the x-chart: rational part + structural logs.

    rational: x^k + sum t_i x^{k-i} + sum t_{k+j} (q/x)^j + (q/x)^m over the
    declared t-variables (or numeric t); logs: c_x * log x + c_q * log q with
    c_x = nu1 - nu0 and c_q = nu0 (from nu1 log x + nu0 log(q/x)).
    """
    k: int
    m: int
    rational: TruncSeries
    log_x: ParamRat
    log_q: ParamRat
    tN_term: TruncSeries  # nu0 * t_N, entering the flat-coordinate equation

    def df_dx(self) -> TruncSeries:
        return self.rational.derivative("x") + \
            TruncSeries.from_poly("x", {-1: self.log_x})


def superpotential(k: int, m: int, tvals: dict | None = None,
                   tcap: int = 4) -> Superpotential:
    """Build f_t; ``tvals`` maps t-indices to exact rationals (None keeps the
    t's symbolic up to total degree ``tcap``)."""
    N = k + m
    symbolic = tvals is None

    def tvar(i):
        if symbolic:
            s = TruncSeries.var(tname(i), up_win(tcap))
            return s.with_cap([tname(j) for j in range(1, N + 1)], tcap)
        return TruncSeries.scalar(tvals.get(i, 0))

    x = TruncSeries.from_poly("x", {1: 1})
    q = TruncSeries.from_poly("q", {1: 1})
    rational = x ** k
    for i in range(1, k + 1):
        rational = rational + tvar(i) * TruncSeries.from_poly("x", {k - i: 1})
    for j in range(1, m):
        rational = rational + tvar(k + j) * (q ** j) * \
            TruncSeries.from_poly("x", {-j: 1})
    rational = rational + (q ** m) * TruncSeries.from_poly("x", {-m: 1})
    return Superpotential(
        k=k, m=m, rational=rational,
        log_x=PR.nu1() - PR.nu0(), log_q=PR.nu0(),
        tN_term=tvar(N).scale(PR.nu0()))


def _retname_map(k: int, m: int) -> dict[str, str]:
    """y-chart t-names in terms of the x-chart ones: t_i <-> t_{k+m-i}."""
    N = k + m
    out = {tname(N): tname(N)}
    for i in range(1, N):
        out[tname(i)] = tname(N - i)
    return out


# ---------------------------------------------------------------------------
# flat coordinates
# ---------------------------------------------------------------------------


def solve_chart_change(sp: Superpotential, depth: int) -> TruncSeries:
    """x(lam) = lam (1 + u) solving f_t(x) = lam^k + (log-normal form).

    Returns x(lam) with the lam-window soft down to lam^{1-depth}.
    """
    k = sp.k
    lamw = VarWindow(-depth, 0, False, True)
    qwin = up_win(depth + sp.m)
    u0 = TruncSeries.scalar(0, {"lam": lamw, "q": qwin})
    lam_pow = {e: TruncSeries.from_poly("lam", {e: 1}) for e in range(-sp.m, k + 1)}

    def subst_x(u, e):
        # (lam (1+u))^e
        base = (1 + u) ** e if e >= 0 else ((1 + u).recip()) ** (-e)
        return base * TruncSeries.from_poly("lam", {e: 1})

    def G(u):
        acc = subst_x(u, k) - lam_pow[k] + sp.tN_term
        for key, c in sp.rational.terms.items():
            exps = dict(zip(sp.rational.vars, key))
            e = exps.get("x", 0)
            if e == k and all(v == 0 for n, v in exps.items() if n != "x"):
                continue  # the leading x^k handled above
            rest = {n: v for n, v in exps.items() if n != "x"}
            mono = TruncSeries.monomial(
                rest, {n: sp.rational.wins[n] for n in rest}, coeff=c)
            acc = acc + mono * subst_x(u, e)
        return acc + u.log1p().scale(sp.log_x)

    def Gprime(u):
        # d/du of G: from the rational part, e * lam^e (1+u)^{e-1}, plus
        # log-term c/(1+u)
        acc = TruncSeries.scalar(0, {"lam": lamw, "q": qwin})
        one_u = 1 + u
        inv = one_u.recip()
        pows = {}

        def upow(e):
            if e not in pows:
                pows[e] = one_u ** e if e >= 0 else inv ** (-e)
            return pows[e]
        for key, c in sp.rational.terms.items():
            exps = dict(zip(sp.rational.vars, key))
            e = exps.get("x", 0)
            if e == 0:
                continue
            rest = {n: v for n, v in exps.items() if n != "x"}
            mono = TruncSeries.monomial(
                rest, {n: sp.rational.wins[n] for n in rest}, coeff=c * e)
            acc = acc + mono * upow(e - 1) * TruncSeries.from_poly("lam", {e: 1})
        return acc + inv.scale(sp.log_x)

    u = u0
    for _ in range(depth + 3):
        g = G(u)
        if g.is_zero():
            break
        u = u - g * Gprime(u).recip()
    else:
        gc = G(u)
        if not gc.is_zero():
            raise SingularFiber("chart-change Newton did not converge")
    return (1 + u) * TruncSeries.from_poly("lam", {1: 1})


def flat_coords_residue(k: int, m: int, degree: int,
                        depth: int | None = None) -> dict:
    """tau^{i/k}(t) via reversion of the chart change and residues.

    Returns {('k', i): polynomial in the t's}; i = 0 holds t_k + nu0 t_N.
    """
    sp = superpotential(k, m, None, degree)
    depth = depth or (k + m + 3)
    x_of_lam = solve_chart_change(sp, depth)
    lam_of_x = series_reversion(x_of_lam, "lam", out_var="x")
    out = {}
    pows = TruncSeries.scalar(1, lam_of_x.wins)
    for i in range(1, k + 1):
        pows = pows * lam_of_x
        coef = pows.coeff_of("x", 0)
        tau = coef.scale(Fraction(k, i))
        out[("k", i % k)] = tau
    return out


def flat_coords_binomial(k: int, m: int, degree: int | None = None) -> dict:
    """The truncated-binomial closed form of the flat coordinates.

    The sums are finite (weighted degree i in the t's), so the output is an
    exact polynomial; ``degree`` is accepted for signature parity and only
    caps the result when given.
    """
    out = {}
    N = k + m
    for i in range(1, k + 1):
        ti = TruncSeries.from_poly(tname(i), {1: 1})
        if i == k:
            tau = ti + TruncSeries.from_poly(tname(N), {1: 1}).scale(PR.nu0())
            out[("k", 0)] = tau
            continue
        if i == 1:
            out[("k", 1)] = ti
            continue
        # f_{i/k}: coefficient of x^{-i} in (1/(i/k)) sum_{n=2}^{i}
        # binom(i/k, n) (t_1/x + ... + t_{i-1}/x^{i-1})^n
        inner = TruncSeries.scalar(0, {"x": exact_win(-(i - 1), -1)})
        for a in range(1, i):
            inner = inner + TruncSeries.from_poly(tname(a), {1: 1}) * \
                TruncSeries.from_poly("x", {-a: 1})
        acc = TruncSeries.scalar(0)
        inner_pow = inner
        for n in range(2, i + 1):
            inner_pow = inner_pow * inner
            c = binom_frac(Fraction(i, k), n)
            if c:
                acc = acc + inner_pow.scale(c)
        f_ik = acc.coeff_of("x", -i).scale(Fraction(k, i))
        out[("k", i)] = ti + f_ik
    if degree is not None:
        caps = frozenset(tname(j) for j in range(1, N + 1))
        out = {key: ser.with_cap(caps, degree) for key, ser in out.items()}
    return out


def verify_flat_coordinates(k: int, m: int, degree: int = 4) -> CheckReport:
    """Residue route == truncated-binomial route, plus the pinned values."""
    with Stopwatch() as sw:
        rep = CheckReport(name="flat-coordinates",
                          params={"k": k, "m": m, "degree": degree},
                          max_order_verified={"t": degree})
        res_route = flat_coords_residue(k, m, degree)
        bin_route = flat_coords_binomial(k, m, degree)
        for key in sorted(bin_route):
            a = res_route[key]
            b = bin_route[key]
            d = a.eq_report(b + TruncSeries.scalar(0, a.wins))
            if d is not None:
                rep.fail({"tau": f"{key[1]}/{k}", "at": str(d[0])},
                         "residue route", "binomial route")
                break
        # pinned displays: tau^{1/k} = t_1 (k>1), tau^{0/k} = t_k + nu0 t_N
        want0 = TruncSeries.var(tname(k), up_win(degree)) + \
            TruncSeries.var(tname(k + m), up_win(degree)).scale(PR.nu0())
        got0 = res_route[("k", 0)]
        if (got0 - want0.truncated(got0.wins)).is_zero() is False:
            rep.fail({"tau": f"0/{k}"}, str(got0), str(want0))
    rep.elapsed_ms = sw.ms
    return rep


# ---------------------------------------------------------------------------
# residue pairing
# ---------------------------------------------------------------------------


def _laurent_support(ser: TruncSeries, var: str) -> tuple[int, int]:
    i = ser.vars.index(var)
    exps = [key[i] for key in ser.terms]
    return (min(exps), max(exps))


def to_y_chart(ser: TruncSeries, qlo_pad: int = 0) -> TruncSeries:
    """Exact monomial remap x^e q^j -> y^{-e} q^{e+j} (y = q/x)."""
    out = {}
    xi = ser.vars.index("x") if "x" in ser.vars else None
    qi = ser.vars.index("q") if "q" in ser.vars else None
    qlos, qhis, ylos, yhis = [0], [0], [0], [0]
    rest = [i for i, v in enumerate(ser.vars) if v not in ("x", "q")]
    restvars = tuple(ser.vars[i] for i in rest)
    for key, c in ser.terms.items():
        e = key[xi] if xi is not None else 0
        j = key[qi] if qi is not None else 0
        nk = (-e, e + j) + tuple(key[i] for i in rest)
        qlos.append(e + j)
        qhis.append(e + j)
        ylos.append(-e)
        yhis.append(-e)
        out[nk] = out.get(nk, PR.zero()) + c
    wins = {"y": exact_win(min(ylos), max(yhis)),
            "q": exact_win(min(qlos) - qlo_pad, max(qhis))}
    for i in rest:
        wins[ser.vars[i]] = ser.wins[ser.vars[i]]
    vars_all = ("q", "y") + restvars
    order = sorted(range(len(vars_all)), key=lambda i: vars_all[i])
    sorted_vars = tuple(vars_all[i] for i in order)
    terms = {}
    for key, c in out.items():
        if not c.is_zero():
            full = (key[1], key[0]) + key[2:]
            terms[tuple(full[i] for i in order)] = c
    caps = {g: c for g, c in ser.caps.items() if "x" not in g and "q" not in g}
    return TruncSeries(sorted_vars, wins, terms, caps)


def residue_both_ends(num: TruncSeries, den: TruncSeries,
                      qpad: int = 4) -> TruncSeries:
    """-(res_0 + res_inf) of (num/den) dx for exact Laurent num, den.

    The residue at infinity expands 1/den downward in x; the residue at
    zero is taken on the y = q/x chart, where all q-offsets relative to the
    leading monomial stay nonnegative.
    """
    nlo, nhi = _laurent_support(num, "x")
    dlo, dhi = _laurent_support(den, "x")
    qspan = (nhi - nlo) + (dhi - dlo) + qpad
    at_inf = TruncSeries.scalar(0)
    if nhi - dhi >= -1:
        # expand 1/den downward from x^{-dhi}; q-degrees only grow
        inv_inf = den.recip_within({"x": down_win(-1 - nhi, hi=dhi),
                                    "q": up_win(qspan)})
        at_inf = (num * inv_inf).coeff_of("x", -1)
    at_zero = TruncSeries.scalar(0)
    if nlo - dlo <= -1:
        # res_{x=0}(g dx) = [y^{-1}] of q y^{-2} g(q/y) at y = infinity
        num_y = to_y_chart(num)
        den_y = to_y_chart(den)
        ylo, yhi = _laurent_support(den_y, "y")
        nylo, nyhi = _laurent_support(num_y, "y")
        qloy = min(_laurent_support(den_y, "q")[0],
                   _laurent_support(num_y, "q")[0], 0)
        inv_y = den_y.recip_within(
            {"y": down_win(-1 - nyhi - 1, hi=yhi),
             "q": up_win(qspan, lo=2 * qloy - qspan)})
        prefactor = TruncSeries.monomial(
            {"q": 1, "y": -2}, {"q": exact_win(1, 1), "y": exact_win(-2, -2)})
        at_zero = (prefactor * num_y * inv_y).coeff_of("y", -1)
    # res_inf(g dx) = -[x^-1]_inf g;  res_0(g dx) = +[x^-1]_0 g(y-chart)
    return at_inf - at_zero


def _gauss_invert(mat: list[list[ParamRat]]) -> list[list[ParamRat]]:
    n = len(mat)
    a = [row[:] + [PR.one() if i == j else PR.zero() for j in range(n)]
         for i, row in enumerate(mat)]
    for col in range(n):
        piv = None
        for r in range(col, n):
            if not a[r][col].is_zero() and a[r][col].is_monomial():
                piv = r
                break
        if piv is None:
            raise SingularFiber("flat-chart Jacobian constant part singular")
        a[col], a[piv] = a[piv], a[col]
        inv = a[col][col].inverse()
        a[col] = [v * inv for v in a[col]]
        for r in range(n):
            if r != col and not a[r][col].is_zero():
                f = a[r][col]
                a[r] = [vr - f * vc for vr, vc in zip(a[r], a[col])]
    return [row[n:] for row in a]


class FlatChart:
    """tau(t) polynomials with the inverse Jacobian d t / d tau.

    Built from the exact binomial closed form (the residue route serves as
    its independent oracle in verify_flat_coordinates); the symbolic inverse
    is a jet of the requested degree, the numeric inverse is exact.
    """

    def __init__(self, k: int, m: int, degree: int):
        self.k = k
        self.m = m
        self.degree = degree
        N = k + m
        self.alphas = [("k", i) for i in range(1, k)] + [("k", 0)] + \
            [("m", j) for j in range(1, m)] + [("m", 0)]
        self.tnames = [tname(i) for i in range(1, N + 1)]
        taus_x = flat_coords_binomial(k, m)
        taus_y = flat_coords_binomial(m, k)
        rename = _retname_map(k, m)
        self.tau: dict = {}
        for (_side, i), ser in taus_x.items():
            self.tau[("k", i)] = ser
        # y-chart: feet exchanged (nu0 <-> nu1) and t-indices reflected
        for (_side, j), ser in taus_y.items():
            self.tau[("m", j)] = _swap_nu_series(_rename_vars(ser, rename))
        self.jacobian = [[self.tau[alpha].derivative(tn)
                          for tn in self.tnames] for alpha in self.alphas]

    def dt_dtau_jet(self) -> list[list[TruncSeries]]:
        """J^{-1} as a jet in t to the chart's degree, indexed [t][alpha]."""
        n = len(self.alphas)
        group = frozenset(self.tnames)
        C = [[_const_part(self.jacobian[r][c]) for c in range(n)]
             for r in range(n)]
        Cinv = _gauss_invert(C)
        Nmat = [[(self.jacobian[r][c] - TruncSeries.scalar(C[r][c]))
                 .with_cap(group, self.degree)
                 for c in range(n)] for r in range(n)]
        CN = _mat_mul_scalar(Cinv, Nmat)
        term = [[TruncSeries.scalar(Cinv[r][c]) for c in range(n)]
                for r in range(n)]
        total = [row[:] for row in term]
        for _ in range(self.degree + 1):
            term = _mat_mul_series(CN, term)
            term = [[(-1) * e for e in row] for row in term]
            if all(e.is_zero() for row in term for e in row):
                break
            total = [[t + e for t, e in zip(rt, re)]
                     for rt, re in zip(total, term)]
        return total

    def dt_dtau_at(self, tvals: dict) -> list[list[ParamRat]]:
        """Exact J(t0)^{-1} at a rational parameter point."""
        n = len(self.alphas)
        jac = [[_const_part(_eval_t(self.jacobian[r][c], tvals))
                for c in range(n)] for r in range(n)]
        return _gauss_invert(jac)


def _rename_vars(ser: TruncSeries, names: dict[str, str]) -> TruncSeries:
    vars_new = tuple(names.get(v, v) for v in ser.vars)
    order = sorted(range(len(vars_new)), key=lambda i: vars_new[i])
    vars_sorted = tuple(vars_new[i] for i in order)
    wins = {names.get(v, v): w for v, w in ser.wins.items()}
    terms = {tuple(key[i] for i in order): c for key, c in ser.terms.items()}
    caps = {frozenset(names.get(v, v) for v in g): c
            for g, c in ser.caps.items()}
    return TruncSeries(vars_sorted, wins, terms, caps)


def _swap_nu_series(ser: TruncSeries) -> TruncSeries:
    return TruncSeries(ser.vars, ser.wins,
                       {k: _swap_nu_pr(c) for k, c in ser.terms.items()},
                       ser.caps)


def _swap_nu_pr(c: ParamRat) -> ParamRat:
    # nu0 <-> nu1: D -> -D, S -> S + D
    out = PR.zero()
    nu0 = PR.nu0()
    for (a, b), v in c.terms.items():
        term = PR.monomial(v * (-1) ** (a % 2), a, 0) * (nu0 ** b)
        out = out + term
    return out


def _const_part(ser: TruncSeries) -> ParamRat:
    key = tuple(0 for _ in ser.vars)
    return ser.terms.get(key, PR.zero())


def _mat_mul_scalar(A: list[list[ParamRat]], B: list[list[TruncSeries]]):
    n = len(A)
    return [[_sum_series([B[r][c].scale(A[i][r]) for r in range(n)])
             for c in range(n)] for i in range(n)]


def _mat_mul_series(A: list[list[TruncSeries]], B: list[list[TruncSeries]]):
    n = len(A)
    return [[_sum_series([A[i][r] * B[r][c] for r in range(n)])
             for c in range(n)] for i in range(n)]


def _sum_series(items):
    out = items[0]
    for s in items[1:]:
        out = out + s
    return out


def df_dt(sp: Superpotential, k: int, m: int, b_index: int) -> TruncSeries:
    """d f / d t_b as an exact Laurent polynomial in (x, q, t)."""
    N = k + m
    q = TruncSeries.from_poly("q", {1: 1})
    if 1 <= b_index <= k:
        return TruncSeries.from_poly("x", {k - b_index: 1})
    if k + 1 <= b_index <= N - 1:
        j = b_index - k
        return (q ** j) * TruncSeries.from_poly("x", {-j: 1})
    # t_N: q-dependence q = Q e^{t_N} plus the log-term nu0
    acc = TruncSeries.scalar(PR.nu0())
    for key, c in sp.rational.terms.items():
        exps = dict(zip(sp.rational.vars, key))
        jq = exps.get("q", 0)
        if jq:
            mono = TruncSeries.monomial(
                exps, {n: sp.rational.wins[n] for n in exps}, coeff=c * jq)
            acc = acc + mono
    return acc


def residue_pairing_matrix(k: int, m: int, tvals: dict | None = None,
                           degree: int = 2) -> tuple[list, list, CheckReport]:
    """Full matrix (d/dtau^a, d/dtau^b) via residues; compared to eta.

    With ``tvals`` the check is exact at that rational parameter point;
    without, it is symbolic in t through jet degree ``degree``.
    """
    with Stopwatch() as sw:
        chart = FlatChart(k, m, degree)
        sp = superpotential(k, m, tvals, degree)
        coh = Cohomology(k, m)
        n = len(chart.alphas)
        dfdt = [df_dt(sp, k, m, b + 1) for b in range(n)]
        fprime = sp.df_dx()
        if fprime.is_zero():
            raise SingularFiber("df/dx vanishes identically")
        den = TruncSeries.from_poly("x", {2: 1}) * fprime
        rep = CheckReport(name="mirror-pairing",
                          params={"k": k, "m": m, "degree": degree,
                                  "t": "symbolic" if tvals is None else
                                  {i: str(v) for i, v in tvals.items()}},
                          max_order_verified={"t_jet": degree if tvals is None else 0})
        v_alpha = []
        if tvals is None:
            minv = chart.dt_dtau_jet()
            for a_pos in range(n):
                acc = None
                for b in range(n):
                    w = minv[b][a_pos]
                    if w.is_zero():
                        continue
                    term = dfdt[b] * w
                    acc = term if acc is None else acc + term
                v_alpha.append(acc)
        else:
            minv = chart.dt_dtau_at(tvals)
            for a_pos in range(n):
                acc = None
                for b in range(n):
                    c = minv[b][a_pos]
                    if c.is_zero():
                        continue
                    term = dfdt[b].scale(c)
                    acc = term if acc is None else acc + term
                v_alpha.append(acc)
        matrix = []
        for a_pos in range(n):
            row = []
            for b_pos in range(a_pos, n):
                num = v_alpha[a_pos] * v_alpha[b_pos]
                val = residue_both_ends(num, den)
                row.append(val)
                want = coh.pairing(SectorIndex(*chart.alphas[a_pos]),
                                   SectorIndex(*chart.alphas[b_pos]))
                delta = val - TruncSeries.scalar(want, val.wins)
                if not delta.is_zero():
                    rep.fail({"alpha": str(chart.alphas[a_pos]),
                              "beta": str(chart.alphas[b_pos])},
                             str(val), str(want))
            matrix.append(row)
    rep.elapsed_ms = sw.ms
    return matrix, chart.alphas, rep


def _eval_t(ser: TruncSeries, tvals: dict) -> TruncSeries:
    out = ser
    for i, v in tvals.items():
        if tname(i) in out.wins:
            out = out.subst(tname(i), TruncSeries.scalar(Fraction(v)))
    # drop leftover zero t-variables
    for v in list(out.wins):
        if v.startswith("t") and v in out.wins:
            out = out.subst(v, TruncSeries.scalar(0))
    return out


# ---------------------------------------------------------------------------
# tangent algebra
# ---------------------------------------------------------------------------


def small_slice_reduce(k: int, m: int, poly: TruncSeries) -> TruncSeries:
    """Normal form modulo <x^{m+1} d_x f> at the small slice
    t = (0,..,0,t_N): support on x^0..x^{k+m-1}.

    The cleared relation is g = k x^{k+m} + (nu1-nu0) x^m - m q^m, whose top
    and constant coefficients are invertible, so Euclidean reduction works
    from both ends of the Laurent range.
    """
    return tangent_reduce(k, m, {i: 0 for i in range(1, k + m)}, poly)


def verify_tangent_product(k: int, m: int) -> CheckReport:
    """Tangent-algebra products at the small slice match the quantum ring."""
    with Stopwatch() as sw:
        ring = QuantumRing(k, m)
        rep = CheckReport(name="tangent-product", params={"k": k, "m": m})
        x = TruncSeries.from_poly("x", {1: 1})
        q = TruncSeries.from_poly("q", {1: 1})

        def phi(a: SectorIndex) -> TruncSeries:
            if a.side == "k":
                if a.i == 0:
                    return (x ** k).scale(PR.rational(k) * PR.diff().inverse())
                return x ** a.i
            if a.i == 0:
                return (q ** m) * TruncSeries.from_poly("x", {-m: 1}) \
                    .scale(PR.rational(m) * (-PR.diff()).inverse())
            return (q ** a.i) * TruncSeries.from_poly("x", {-a.i: 1})

        def ring_to_poly(elem: dict) -> TruncSeries:
            acc = TruncSeries.scalar(0)
            for key, c in elem.items():
                if key == ("one", 0):
                    base = TruncSeries.scalar(1)
                elif key[0] == "x":
                    base = x ** key[1]
                else:
                    base = (q ** key[1]) * TruncSeries.from_poly(
                        "x", {-key[1]: 1})
                acc = acc + base * c
            return small_slice_reduce(k, m, acc)

        coh = Cohomology(k, m)
        sectors = coh.sectors()
        ring_elems = {a: ring.from_sector(a) for a in sectors}
        for a in sectors:
            for b in sectors:
                lhs = small_slice_reduce(k, m, phi(a) * phi(b))
                rhs = ring_to_poly(ring.mul(ring_elems[a], ring_elems[b]))
                if not (lhs - rhs).is_zero():
                    rep.fail({"a": a.label(k, m), "b": b.label(k, m)},
                             str(lhs), str(rhs))
                    rep.elapsed_ms = sw.ms
                    return rep
        # unit acts trivially
        unit = phi(SectorIndex("k", 0)) + phi(SectorIndex("m", 0))
        for a in sectors:
            lhs = small_slice_reduce(k, m, unit * phi(a))
            rhs = small_slice_reduce(k, m, phi(a))
            if not (lhs - rhs).is_zero():
                rep.fail({"a": a.label(k, m), "b": "unit"}, str(lhs), str(rhs))
                break
    rep.elapsed_ms = sw.ms
    return rep


# ---------------------------------------------------------------------------
# classical limit data and stationary-phase polynomials
# ---------------------------------------------------------------------------


def classical_critical_data(k: int, m: int) -> CheckReport:
    """At Q = 0: xi_i^k = nu exactly and the Hessians are k^2 nu (x-side),
    m^2 nubar (y-side), in the unimodular coordinate."""
    with Stopwatch() as sw:
        rep = CheckReport(name="classical-critical", params={"k": k, "m": m})
        for (n, val) in ((k, PR.nu(k)), (m, PR.nubar(m))):
            ring = RootRing(n, val)
            # (x d_x)^2 (x^n + c log x) = n^2 x^n; at x = zeta^i rho:
            # n^2 zeta^{i n} rho^n = n^2 val
            for i in range(n):
                xi = ring.root(i)
                xin = ring.pow(xi, n)
                if not ring.eq(xin, ring.scalar(val)):
                    rep.fail({"foot": n, "i": i}, "xi^n", str(val))
                    break
                hess = ring.mul_scalar(xin, PR.rational(n * n))
                if not ring.eq(hess, ring.scalar(val * (n * n))):
                    rep.fail({"foot": n, "i": i}, "hessian", f"{n}^2 nu")
                    break
    rep.elapsed_ms = sw.ms
    return rep


def stationary_phase_A(n: int) -> dict[int, Fraction]:
    """A_n(s) = B_n(1-s)/(n(n-1)) as {power of s: coefficient}."""
    if n < 2:
        raise ValueError("defined for n >= 2")
    bn = bernoulli_poly(n)
    out: dict[int, Fraction] = {}
    # substitute x -> 1 - s
    for e, c in bn.items():
        # (1-s)^e
        coeff = Fraction(1)
        for j in range(e + 1):
            binc = Fraction(1)
            for t in range(j):
                binc = binc * (e - t) / (t + 1)
            val = c * binc * (-1) ** j
            out[j] = out.get(j, Fraction(0)) + val
    scale = Fraction(1, n * (n - 1))
    return {e: c * scale for e, c in out.items() if c}


def classical_R(k: int, j: int, n_max: int, barred: bool = False,
                m: int | None = None) -> tuple[Fraction, TruncSeries]:
    """The diagonal classical-limit factor:

        g_{alpha i} exp( sum_{n>=2} A_n(j/foot) (-nu)^{-n+1} z^{n-1} )

    Returns (the fractional nu-power j/foot - 1/2 of the prefactor, the
    exponential series R = 1 + O(z)).  The scalar part of g_{alpha i} is
    g_alpha, and nu means nubar on the barred side.
    """
    foot = k
    nu = PR.nubar(m) if barred else PR.nu(k)
    arg = TruncSeries.scalar(0, {"z": up_win(n_max - 1)})
    s = Fraction(j, foot)
    for n in range(2, n_max + 1):
        an = stationary_phase_A(n)
        val = sum((c * s ** e for e, c in an.items()), Fraction(0))
        coeff = PR.rational(val) * ((-1 * nu).inverse() ** (n - 1))
        arg = arg + TruncSeries.var("z", up_win(n_max - 1), power=n - 1,
                                    coeff=coeff)
    return (s - Fraction(1, 2), arg.exp())


def gaussian_moment_oracle(n_max: int) -> CheckReport:
    """Machine stationary-phase expansion of the model integral.

    Substitute t = nu(1+u) in int e^{(t - nu log t)/z} t^{s-1} dt, expand the
    non-Gaussian part, integrate with the Laplace moments (odd -> 0,
    u^{2p} -> (2p-1)!! (-w)^p with w = z/nu), and compare the log of the
    normalized series against sum A_n(s) (-w)^{n-1}.
    """
    with Stopwatch() as sw:
        rep = CheckReport(name="gaussian-moment-oracle", params={"n": n_max},
                          max_order_verified={"w": n_max - 1})
        U = 6 * n_max + 2
        uw = up_win(U)
        vw = up_win(2 * n_max + 2)   # v counts 1/w powers
        sw_deg = U + 1
        # u - log(1+u) = sum_{r>=2} (-1)^r u^r / r; the r = 2 term is the
        # Gaussian kernel, the rest exponentiates against 1/w
        arg = TruncSeries.scalar(0, {"u": uw, "v": vw})
        for r in range(3, U + 1):
            arg = arg + TruncSeries.monomial(
                {"u": r, "v": 1}, {"u": uw, "v": vw},
                coeff=Fraction((-1) ** r, r))
        F = arg.exp()
        # times (1+u)^{s-1} with symbolic s: sum_c binom(s-1, c) u^c
        swin = up_win(sw_deg)
        splus = TruncSeries.scalar(0, {"s": swin, "u": uw})
        binom_c = TruncSeries.scalar(1, {"s": swin})
        spoly = TruncSeries.var("s", swin) - 1
        fact = Fraction(1)
        for c in range(0, U + 1):
            if c:
                binom_c = binom_c * (spoly - (c - 1))
                fact *= c
            splus = splus + binom_c.scale(Fraction(1, fact)) * \
                TruncSeries.monomial({"u": c}, {"u": uw})
        F = F * splus
        # moment integration: u^a v^b -> (a-1)!! (-1)^{a/2} w^{a/2-b}
        wwin = up_win(n_max - 1)
        total = TruncSeries.scalar(0, {"w": wwin, "s": swin})
        for key, c in F.terms.items():
            exps = dict(zip(F.vars, key))
            a = exps.get("u", 0)
            b = exps.get("v", 0)
            if a % 2:
                continue
            wexp = a // 2 - b
            if wexp < 0 or wexp > n_max - 1:
                continue
            mom = Fraction(1)
            for t in range(1, a, 2):
                mom *= t
            mom *= (-1) ** (a // 2)
            total = total + TruncSeries.monomial(
                {"w": wexp, "s": exps.get("s", 0)},
                {"w": wwin, "s": swin}, coeff=c * mom)
        logR = total.log()
        want = TruncSeries.scalar(0, {"w": wwin, "s": swin})
        for n in range(2, n_max + 1):
            an = stationary_phase_A(n)
            for e, c in an.items():
                want = want + TruncSeries.monomial(
                    {"w": n - 1, "s": e}, {"w": wwin, "s": swin},
                    coeff=c * (-1) ** (n - 1))
        d = logR.eq_report(want)
        if d is not None:
            rep.fail({"at": str(d[0])}, "moment expansion", "A_n closed form")
    rep.elapsed_ms = sw.ms
    return rep


def residue_pairing(k: int, m: int, alpha: SectorIndex, beta: SectorIndex,
                    tvals: dict | None = None, degree: int = 2) -> TruncSeries:
    """(d/dtau^alpha, d/dtau^beta) as a residue; a jet in t when tvals is
    None, an exact scalar series otherwise."""
    chart = FlatChart(k, m, degree)
    sp = superpotential(k, m, tvals, degree)
    fprime = sp.df_dx()
    if fprime.is_zero():
        raise SingularFiber("df/dx vanishes identically")
    den = TruncSeries.from_poly("x", {2: 1}) * fprime
    n = len(chart.alphas)
    pos = {a: i for i, a in enumerate(chart.alphas)}
    dfdt = [df_dt(sp, k, m, b + 1) for b in range(n)]

    def v_of(a: SectorIndex) -> TruncSeries:
        a_pos = pos[(a.side, a.i)]
        acc = None
        if tvals is None:
            minv = chart.dt_dtau_jet()
            for b in range(n):
                w = minv[b][a_pos]
                if w.is_zero():
                    continue
                term = dfdt[b] * w
                acc = term if acc is None else acc + term
        else:
            minv = chart.dt_dtau_at(tvals)
            for b in range(n):
                c = minv[b][a_pos]
                if c.is_zero():
                    continue
                term = dfdt[b].scale(c)
                acc = term if acc is None else acc + term
        return acc

    return residue_both_ends(v_of(alpha) * v_of(beta), den)


def tangent_reduce(k: int, m: int, tvals: dict, poly: TruncSeries) -> TruncSeries:
    """Normal form modulo <x^{m+1} d_x f_t> at a rational parameter point:
    support x^0..x^{k+m-1}; valid whenever the cleared relation keeps its
    unit top and monomial constant term (any t, since those coefficients
    are k and -m q^m)."""
    sp = superpotential(k, m, tvals)
    g = TruncSeries.from_poly("x", {m + 1: 1}) * sp.df_dx()
    out = poly
    guard = 0
    while "x" in out.vars and out.terms:
        guard += 1
        if guard > 10000:
            raise SingularFiber("reduction did not terminate")
        xi = out.vars.index("x")
        xs = [key[xi] for key in out.terms]
        hi, lo = max(xs), min(xs)
        if hi >= k + m:
            lead = out.coeff_of("x", hi)
            out = out - lead.scale(Fraction(1, k)) * g * \
                TruncSeries.from_poly("x", {hi - (k + m): 1})
        elif lo < 0:
            lead = out.coeff_of("x", lo)
            quot = lead.shift_exponent("q", -m).scale(Fraction(-1, m))
            out = out - quot * g * TruncSeries.from_poly("x", {lo: 1})
        else:
            break
    return out


def tangent_product(k: int, m: int, tvals: dict, phi1: TruncSeries,
                    phi2: TruncSeries) -> TruncSeries:
    """Product of tangent-algebra classes reduced to normal form."""
    return tangent_reduce(k, m, tvals, phi1 * phi2)
