"""The equivariant J-series, its derivative formulas, and the full
differential-operator verification engine.

A ``JSeries`` keeps two sectors, tagged by which exponential prefactor they
carry (e^{tau nu0/z} at the 0-foot, e^{tau nu1/z} at the infinity-foot).
Inside a sector, terms are graded by the integer power of q = Q e^tau and
each graded piece is a cohomology-valued Laurent series in z.  tau only ever
enters through q-powers and the prefactor, so z d/dtau acts on the (sector s,
q-degree a) piece as multiplication by (nu_s + a z).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .algebra import frac_part_unit
from .cohomology import Cohomology, SectorIndex
from .errors import BadIndex, NotCoprime
from .rationals import ParamRat, PR
from .reports import CheckReport, Stopwatch
from .series import TruncSeries, VarWindow

from math import gcd


def poch(param: ParamRat, x: Fraction) -> TruncSeries:
    """prod_{b={x},{x}+1,...,x} (param + b z) as an exact z-polynomial.

    Empty (= 1) when x < {x}; {x} is the (0,1]-normalized fractional part,
    so integer x gives b = 1..x.
    """
    x = Fraction(x)
    out = TruncSeries.from_poly("z", {0: 1})
    b = frac_part_unit(x)
    while b <= x:
        out = out * TruncSeries.from_poly("z", {0: param, 1: PR.rational(b)})
        b += 1
    return out


def poch_ratio(param: ParamRat, x: Fraction, zwin: VarWindow) -> TruncSeries:
    """[prod_{b<{x}} / prod_{b<=x}] (param + b z), by tail cancellation.

    Equal to 1/poch(param, x) when x >= {x}, and to the finite product over
    {x} - Z>0 values b with x < b < {x} otherwise.
    """
    x = Fraction(x)
    f = frac_part_unit(x)
    if x >= f:
        return poch(param, x).recip_within({"z": zwin})
    out = TruncSeries.from_poly("z", {0: 1})
    b = f - 1
    while b > x:
        out = out * TruncSeries.from_poly("z", {0: param, 1: PR.rational(b)})
        b -= 1
    return out.truncated({"z": zwin})


@dataclass
class JSeries:
    k: int
    m: int
    qmax: int
    zwin: VarWindow
    # sector tag -> q-degree -> SectorIndex -> z-series
    sectors: dict = field(default_factory=lambda: {"0": {}, "inf": {}})

    def add_term(self, sector: str, qdeg: int, idx: SectorIndex,
                 zser: TruncSeries):
        if qdeg > self.qmax or zser.is_zero():
            return
        bucket = self.sectors[sector].setdefault(qdeg, {})
        cur = bucket.get(idx)
        new = zser if cur is None else cur + zser
        if new.is_zero() and cur is None:
            return
        bucket[idx] = new

    def map_terms(self, fn) -> "JSeries":
        """fn(sector, qdeg, idx, zser) -> zser."""
        out = JSeries(self.k, self.m, self.qmax, self.zwin)
        for sector, grades in self.sectors.items():
            for qdeg, bucket in grades.items():
                for idx, zser in bucket.items():
                    out.add_term(sector, qdeg, idx, fn(sector, qdeg, idx, zser))
        return out

    def apply_zdtau_affine(self, coeff_fn) -> "JSeries":
        """Apply an operator acting on (s, a) as multiplication by a z-poly.

        coeff_fn(sector, qdeg) returns the exact multiplier series in z.
        """
        return self.map_terms(lambda s, a, idx, z: z * coeff_fn(s, a))

    def shift_q(self, delta: int, new_qmax: int | None = None) -> "JSeries":
        out = JSeries(self.k, self.m,
                      self.qmax + delta if new_qmax is None else new_qmax,
                      self.zwin)
        for sector, grades in self.sectors.items():
            for qdeg, bucket in grades.items():
                for idx, zser in bucket.items():
                    out.add_term(sector, qdeg + delta, idx, zser)
        return out

    def scale(self, c) -> "JSeries":
        return self.map_terms(lambda s, a, idx, z: z.scale(c))

    def low_q_part(self, below: int) -> list:
        """Nonzero (sector, qdeg, idx) entries with qdeg < below."""
        out = []
        for sector, grades in self.sectors.items():
            for qdeg, bucket in grades.items():
                if qdeg < below:
                    for idx, zser in bucket.items():
                        if not zser.is_zero():
                            out.append((sector, qdeg, idx, zser))
        return out

    def diff_report(self, other: "JSeries", qmax: int):
        """First discrepancy (dict) or None; compares through q-degree qmax."""
        for sector in ("0", "inf"):
            for qdeg in range(0, qmax + 1):
                a = self.sectors[sector].get(qdeg, {})
                b = other.sectors[sector].get(qdeg, {})
                for idx in sorted(set(a) | set(b)):
                    za = a.get(idx)
                    zb = b.get(idx)
                    if za is None:
                        za = TruncSeries.scalar(0, {"z": zb.wins["z"]})
                    if zb is None:
                        zb = TruncSeries.scalar(0, {"z": za.wins["z"]})
                    rep = za.eq_report(zb)
                    if rep is not None:
                        exps, resid = rep
                        return {
                            "sector": sector,
                            "q_degree": qdeg,
                            "class": idx.label(self.k, self.m),
                            "z_power": str(exps.get("z", 0)),
                            "difference": str(resid),
                        }
        return None


def _require_coprime(k: int, m: int):
    if gcd(k, m) != 1:
        raise NotCoprime(f"k={k}, m={m} must be coprime")


def build_j(k: int, m: int, qmax: int, zwin: VarWindow) -> JSeries:
    """Exact truncation of the equivariant J-series (both sectors)."""
    _require_coprime(k, m)
    if qmax < 0:
        raise ValueError("qmax must be nonnegative")
    out = JSeries(k, m, qmax, zwin)
    nu = PR.nu(k)
    nubar = PR.nubar(m)
    fact = Fraction(1)
    for d in range(0, qmax // m + 1):
        if d > 0:
            fact *= d
        x = Fraction(d * m, k)
        ser = poch(nu, x).recip_within({"z": zwin}) if d > 0 else \
            TruncSeries.scalar(1, {"z": zwin})
        ser = ser.shift_exponent("z", 1 - d).scale(Fraction(1, 1) / fact)
        out.add_term("0", d * m, SectorIndex("k", (-d * m) % k), ser)
    fact = Fraction(1)
    for d in range(0, qmax // k + 1):
        if d > 0:
            fact *= d
        x = Fraction(d * k, m)
        ser = poch(nubar, x).recip_within({"z": zwin}) if d > 0 else \
            TruncSeries.scalar(1, {"z": zwin})
        ser = ser.shift_exponent("z", 1 - d).scale(Fraction(1, 1) / fact)
        out.add_term("inf", d * k, SectorIndex("m", (-d * k) % m), ser)
    return out


def build_dj(k: int, m: int, side: str, index: int, qmax: int,
             zwin: VarWindow) -> JSeries:
    """z d/dtau^alpha J for alpha = index/k (side 'k', 1<=index<=k) or
    index/m (side 'm', 1<=index<=m); index k (resp. m) is the untwisted
    direction 0/k (resp. 0/m).

    Built from the closed derivative formulas, including the k g_alpha
    (resp. m g_alpha) normalization, so the result is exactly z dJ/dtau^alpha.
    """
    _require_coprime(k, m)
    coh = Cohomology(k, m)
    nu = PR.nu(k)
    nubar = PR.nubar(m)
    out = JSeries(k, m, qmax, zwin)
    if side == "k":
        i = index
        if not (1 <= i <= k):
            raise BadIndex(f"need 1 <= i <= k, got {i}")
        galpha = coh.g(SectorIndex("k", i % k))
        pref = galpha * k
        fact = Fraction(1)
        for d in range(0, qmax // m + 1):
            if d > 0:
                fact *= d
            ser = poch_ratio(nu, Fraction(d * m - i, k), zwin)
            ser = ser.shift_exponent("z", 1 - d).scale(pref / fact)
            out.add_term("0", d * m, SectorIndex("k", (i - d * m) % k), ser)
        fact = Fraction(1)
        d = 0
        while d * k + i <= qmax:
            if d > 0:
                fact *= d
            ser = poch(nubar, Fraction(d * k + i, m)).recip_within({"z": zwin})
            ser = ser.shift_exponent("z", 1 - d).scale(pref / fact)
            out.add_term("inf", d * k + i, SectorIndex("m", (-(d * k + i)) % m), ser)
            d += 1
    elif side == "m":
        j = index
        if not (1 <= j <= m):
            raise BadIndex(f"need 1 <= j <= m, got {j}")
        galpha = coh.g(SectorIndex("m", j % m))
        pref = galpha * m
        fact = Fraction(1)
        d = 0
        while d * m + j <= qmax:
            if d > 0:
                fact *= d
            ser = poch(nu, Fraction(d * m + j, k)).recip_within({"z": zwin})
            ser = ser.shift_exponent("z", 1 - d).scale(pref / fact)
            out.add_term("0", d * m + j, SectorIndex("k", (-(d * m + j)) % k), ser)
            d += 1
        fact = Fraction(1)
        for d in range(0, qmax // k + 1):
            if d > 0:
                fact *= d
            ser = poch_ratio(nubar, Fraction(d * k - j, m), zwin)
            ser = ser.shift_exponent("z", 1 - d).scale(pref / fact)
            out.add_term("inf", d * k, SectorIndex("m", (j - d * k) % m), ser)
    else:
        raise BadIndex(f"side must be 'k' or 'm', got {side!r}")
    return out


# ---------------------------------------------------------------------------
# the combinatorial engine behind the derivative identities
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DeltaOp:
    """First-order operator attached to one s-value of one foot.

    For a k-foot value s: (z/m) d_tau - nu0/m - s k z; for an m-foot value:
    (z/k) d_tau - nu1/k - s m z.  Acting on the (sector, q-degree a) piece it
    multiplies by an exact degree-1 polynomial in z.
    """
    foot: str          # 'k' or 'm'
    s: Fraction

    def multiplier(self, k: int, m: int, sector: str, qdeg: int) -> TruncSeries:
        nus = PR.nu0() if sector == "0" else PR.nu1()
        if self.foot == "k":
            div, sub, mult = m, PR.nu0(), k
        else:
            div, sub, mult = k, PR.nu1(), m
        c0 = (nus - sub) / div
        c1 = PR.rational(Fraction(qdeg, div) - self.s * mult)
        return TruncSeries.from_poly("z", {0: c0, 1: c1})


@dataclass
class LadderSequence:
    k: int
    m: int
    q: list          # q_0..q_M for the normalized pair K > M
    r: list          # r_1..r_{M-1}
    s: list          # s_1..s_{k+m} as (Fraction, foot) in caller naming
    s_tilde: list    # per alpha >= 3: (foot, index) derivative labels
    deltas: list     # DeltaOp per alpha (deltas[alpha-1])
    swapped: bool    # True iff k < m (the normalized big foot is then the m-foot)


def operator_ladder(k: int, m: int) -> LadderSequence:
    """The increasing s-sequence, delta operators, and derivative labels.

    The sequence merges {0/k..(k-1)/k} and {0/m..(m-1)/m} in increasing
    order, with zero of the larger foot first.  The literal closed-form
    index ranges would overproduce entries, so the sequence is built
    directly from the sort; the q_i, r_i data are kept for reference.
    """
    _require_coprime(k, m)
    if k == m:
        raise NotCoprime(f"k = m = {k} is not a coprime pair unless 1;"
                         " the engine needs distinct feet")
    swapped = k < m
    K, M = (m, k) if swapped else (k, m)
    big_foot = "m" if swapped else "k"
    small_foot = "k" if swapped else "m"

    q = [0] * (M + 1)
    r = [0] * M
    for i in range(1, M):
        q[i], r[i] = divmod(i * K, M)
        assert r[i] != 0, "coprimality guarantees nonzero remainders"
    q[M] = K

    entries = [(Fraction(i, K), big_foot) for i in range(K)]
    entries += [(Fraction(j, M), small_foot) for j in range(M)]
    entries.sort(key=lambda t: (t[0], 0 if t[1] == big_foot else 1))
    assert len(entries) == K + M

    deltas = [DeltaOp(foot, s) for (s, foot) in entries]
    s_tilde: list = [None, None]
    for alpha in range(3, K + M + 1):
        s_alpha, foot = entries[alpha - 1]
        if foot == "k":
            f = frac_part_unit(-m * s_alpha)
            s_tilde.append(("k", int(f * k)))
        else:
            f = frac_part_unit(-k * s_alpha)
            s_tilde.append(("m", int(f * m)))
    return LadderSequence(k=k, m=m, q=q, r=r, s=entries, s_tilde=s_tilde,
                            deltas=deltas, swapped=swapped)


def _apply_delta(j: JSeries, k: int, m: int, op: DeltaOp) -> JSeries:
    return j.apply_zdtau_affine(lambda sector, qdeg:
                                op.multiplier(k, m, sector, qdeg))


def verify_ladder_identities(k: int, m: int, qcheck: int,
                               zlo: int = -6, zhi: int = 2,
                               negate: bool = False) -> list[CheckReport]:
    """Identities delta_1 J, delta_2 J, and D_alpha J = z d_{s~alpha} J.

    Verified exactly through q-degree ``qcheck`` on the z-window
    [zlo, zhi].  Returns one report per alpha.
    """
    _require_coprime(k, m)
    seq = operator_ladder(k, m)
    K, M = max(k, m), min(k, m)
    pad = K + M  # one z-order of erosion per delta application
    zwin = VarWindow(zlo - pad, zhi + pad, False, True)
    zwin_check = VarWindow(zlo, zhi, False, True)
    qmax = qcheck + K * M
    j = build_j(k, m, qmax, zwin)
    coh = Cohomology(k, m)
    reports = []

    # alpha = 1 pairs delta_1 (zero of the larger foot) with the derivative
    # along the *smaller* foot's untwisted direction; alpha = 2 mirrors it.
    small_side = "m" if k > m else "k"
    big_side = "k" if k > m else "m"
    for alpha, side in ((1, small_side), (2, big_side)):
        with Stopwatch() as sw:
            n = k if side == "k" else m
            lhs = _apply_delta(j, k, m, seq.deltas[alpha - 1])
            g = coh.g(SectorIndex(side, 0))
            rhs = build_dj(k, m, side, n, qmax, zwin).scale((g * n).inverse())
            if negate and alpha == 1:
                # negative control: use delta_1 + z instead of delta_1
                lhs = _add_j(lhs, j.map_terms(
                    lambda s, a, i, z: z.shift_exponent("z", 1)))
            lhs = _truncate_j(lhs, zwin_check)
            rhs = _truncate_j(rhs, zwin_check)
            disc = lhs.diff_report(rhs, qcheck)
        rep = CheckReport(
            name=f"ladder-alpha-{alpha}",
            params={"k": k, "m": m, "alpha": alpha, "qdeg": qcheck,
                    "zwin": [zlo, zhi]},
            max_order_verified={"q": qcheck, "z": [zlo, zhi]})
        rep.elapsed_ms = sw.ms
        if disc is not None:
            rep.fail(disc, "delta-chain", "derivative formula")
        reports.append(rep)

    # alpha >= 3: D_alpha J = z d_{s~alpha} J
    chain = _apply_delta(_apply_delta(j, k, m, seq.deltas[0]),
                         k, m, seq.deltas[1])
    for alpha in range(3, K + M + 1):
        with Stopwatch() as sw:
            if alpha > 3:
                chain = _apply_delta(chain, k, m, seq.deltas[alpha - 2])
            s_alpha = seq.s[alpha - 1][0]
            shift = int(K * M * s_alpha)
            rep = CheckReport(
                name=f"ladder-alpha-{alpha}",
                params={"k": k, "m": m, "alpha": alpha, "qdeg": qcheck,
                        "zwin": [zlo, zhi], "s_alpha": str(s_alpha)},
                max_order_verified={"q": min(qcheck, qmax - shift),
                                    "z": [zlo, zhi]})
            low = [(s, a, i, z) for (s, a, i, z)
                   in (chain.low_q_part(shift))
                   if not z.truncated({"z": zwin_check}).is_zero()]
            if low:
                sector, qdeg, idx, zser = low[0]
                rep.elapsed_ms = sw.ms
                rep.fail({"sector": sector, "q_degree": qdeg,
                          "class": idx.label(k, m)},
                         str(zser), "0",
                         "delta chain must annihilate q-degrees below the shift")
                reports.append(rep)
                continue
            lhs = chain.shift_q(-shift)
            foot, index = seq.s_tilde[alpha - 1]
            rhs = build_dj(k, m, foot, index, qmax, zwin)
            lhs = _truncate_j(lhs, zwin_check)
            rhs = _truncate_j(rhs, zwin_check)
            disc = lhs.diff_report(rhs, min(qcheck, qmax - shift))
        rep.elapsed_ms = sw.ms
        if disc is not None:
            rep.fail(disc, "D-alpha chain", "derivative formula")
        reports.append(rep)
    return reports


def _truncate_j(j: JSeries, zwin: VarWindow) -> JSeries:
    return j.map_terms(lambda s, a, idx, z: z.truncated({"z": zwin}))


def _add_j(a: JSeries, b: JSeries) -> JSeries:
    out = JSeries(a.k, a.m, min(a.qmax, b.qmax), a.zwin)
    for src in (a, b):
        for sector, grades in src.sectors.items():
            for qdeg, bucket in grades.items():
                for idx, zser in bucket.items():
                    out.add_term(sector, qdeg, idx, zser)
    return out


def _perturb(j: JSeries) -> JSeries:
    """Negative control: multiply one graded piece by z."""
    done = {}

    def fn(sector, qdeg, idx, z):
        if not done and qdeg > 0:
            done["x"] = True
            return z.shift_exponent("z", 1)
        return z
    return j.map_terms(fn)


def verify_qde(k: int, m: int, qcheck: int, zlo: int = -6, zhi: int = 2,
               negate: bool = False) -> CheckReport:
    """prod_i (z/m d_tau - nu0/m - i z) prod_j (z/k d_tau - nu1/k - j z) J
    equals q^{km} J, through q-degree ``qcheck``."""
    _require_coprime(k, m)
    pad = k + m
    zwin = VarWindow(zlo - pad, zhi + pad, False, True)
    zwin_check = VarWindow(zlo, zhi, False, True)
    qmax = qcheck + k * m
    with Stopwatch() as sw:
        j = build_j(k, m, qmax, zwin)
        lhs = j
        for i in range(k):
            lhs = _apply_delta(lhs, k, m, DeltaOp("k", Fraction(i, k)))
        for jj in range(m):
            lhs = _apply_delta(lhs, k, m, DeltaOp("m", Fraction(jj, m)))
        rhs = j.shift_q(k * m)
        if negate:
            rhs = _perturb(rhs)
        lhs = _truncate_j(lhs, zwin_check)
        rhs = _truncate_j(rhs, zwin_check)
        disc = lhs.diff_report(rhs, qcheck)
    rep = CheckReport(name="qde",
                      params={"k": k, "m": m, "qdeg": qcheck, "zwin": [zlo, zhi]},
                      max_order_verified={"q": qcheck, "z": [zlo, zhi]})
    rep.elapsed_ms = sw.ms
    if disc is not None:
        rep.fail(disc, "QDE operator product", "q^{km} J")
    return rep


def expand_prefactors(j: JSeries, tau_order: int) -> dict:
    """Multiply each sector by its expanded prefactor e^{tau nu_s / z}.

    Returns {SectorIndex: series in (z, tau, q)} with the q-grading folded
    into an exact polynomial variable.  Used by the small-z sanity check; the
    verification engine itself never expands prefactors.
    """
    out: dict = {}
    tau_win = VarWindow(0, tau_order, True, False)
    for sector, grades in j.sectors.items():
        nus = PR.nu0() if sector == "0" else PR.nu1()
        pref_arg = (TruncSeries.var("tau", tau_win).scale(nus)
                    * TruncSeries.var("z", j.zwin, power=-1))
        pref = pref_arg.exp()
        for qdeg, bucket in grades.items():
            for idx, zser in bucket.items():
                term = (zser * pref).shift_exponent("q", qdeg)
                out[idx] = out.get(idx, 0) + term
    return out


def j_small_z_expansion(k: int, m: int) -> bool:
    """Sanity: the q^0 layer of J expands as z*1 + tau*p + O(z^-1)."""
    coh = Cohomology(k, m)
    zwin = VarWindow(-3, 1, False, True)
    j = build_j(k, m, 0, zwin)
    expanded = expand_prefactors(j, 2)
    unit = coh.unit()
    p = coh.p_class()
    for idx in (SectorIndex("k", 0), SectorIndex("m", 0)):
        ser = expanded[idx].coeff_of("q", 0)
        z1 = ser.coeff_of("z", 1).coeff_of("tau", 0)
        if not (z1 - TruncSeries.scalar(unit.coords[idx])).is_zero():
            return False
        z0t1 = ser.coeff_of("z", 0).coeff_of("tau", 1)
        if not (z0t1 - TruncSeries.scalar(p.coords[idx])).is_zero():
            return False
    return True
