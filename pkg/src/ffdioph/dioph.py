"""Psi-approximability: witness search, Borel-Cantelli sums, and exact
finite-height measures of the approximation sets.

Every set measured here is a finite union over coefficient vectors a of
conditions of two shapes: dist(g_a(x), Lambda) < threshold (the existential
a_0 collapses to the polynomial part) and gradient-norm comparisons.  Each
(a, cell) pair is decided by ultrametric dominance of the center value over
the certified variation bound; undecided cells split.  All thresholds are
strict in the paper's sense and normalize to the next lower power of q.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Optional, Sequence

from .ffield import (
    AbsValue,
    Ball,
    FieldSpec,
    GridSpec,
    Laurent,
    Poly,
    enumerate_shell,
    shell_count,
    strict_below,
)
from .goodfn import (
    IN,
    OUT,
    UNKNOWN,
    MeasureResult,
    TrueAtom,
    compare_abs_leq,
    frac_exp,
    measure_union,
)
from .ultracalc import AnalyticMap, MPoly

# ---------------------------------------------------------------------------
# approximating functions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ApproxFn:
    """Multivariable approximating function Psi(a) = c * ||a||^-tau, or a
    per-shell table of exponents; values are powers of q.

    Power laws are automatically monotone decreasing componentwise; tables
    are validated to be nonincreasing in t.
    """

    coeff_exp: Fraction = Fraction(0)       # c = q^coeff_exp
    tau: Fraction = Fraction(0)             # decay exponent
    table: Optional[tuple] = None           # shell t -> exponent, None = Psi 0
    zero: bool = False                      # Psi identically 0

    def __post_init__(self):
        object.__setattr__(self, "coeff_exp", Fraction(self.coeff_exp))
        object.__setattr__(self, "tau", Fraction(self.tau))
        if self.table is not None:
            tb = tuple(None if v is None else Fraction(v) for v in self.table)
            object.__setattr__(self, "table", tb)
            known = [v for v in tb if v is not None]
            if any(known[i + 1] > known[i] for i in range(len(known) - 1)):
                raise ValueError("shell table must be nonincreasing")

    @classmethod
    def power_law(cls, tau, coeff_exp=0) -> "ApproxFn":
        return cls(coeff_exp=Fraction(coeff_exp), tau=Fraction(tau))

    @classmethod
    def shell_table(cls, exps: Sequence) -> "ApproxFn":
        return cls(table=tuple(None if e is None else Fraction(e) for e in exps))

    @classmethod
    def zero_fn(cls) -> "ApproxFn":
        return cls(zero=True)

    def exp_at_shell(self, t: int) -> Optional[Fraction]:
        """Exponent e with Psi(a) = q^e on the shell ||a|| = q^t (None: Psi=0)."""
        if self.zero:
            return None
        if self.table is not None:
            if t >= len(self.table):
                raise ValueError(f"shell table has no entry for t={t}")
            return self.table[t]
        return self.coeff_exp - self.tau * t

    def exp_at(self, a: Sequence[Poly]) -> Optional[Fraction]:
        t = max((p.deg for p in a if not p.is_zero), default=None)
        if t is None:
            raise ValueError("Psi is evaluated on nonzero a only")
        return self.exp_at_shell(t)

    def __str__(self) -> str:
        if self.table is not None:
            return f"table{[str(e) for e in self.table]}"
        c = "" if self.coeff_exp == 0 else f"q^{self.coeff_exp}*"
        return f"{c}q^(-{self.tau}*t)"


def psi0_exp(tvec: Sequence[int]) -> int:
    """Exponent of Psi_0(X^{t_1},..,X^{t_n}) = prod |X^{t_i}|^{-1} (c_0 = 1)."""
    return -sum(tvec)


# ---------------------------------------------------------------------------
# witnesses
# ---------------------------------------------------------------------------

@dataclass
class Witness:
    """(a, a0) certifying |f(x).a + a0 + theta(x)| < Psi(a) at a point."""

    a: tuple[Poly, ...]
    a0: Poly
    value: Laurent
    grad_exp: Optional[int]
    shell: int

    def verify(self, m: AnalyticMap, x: Sequence[Laurent], psi: ApproxFn,
               theta_on: bool = True) -> bool:
        z = _combo_value(m, self.a, x, theta_on)
        val = z + self.a0.to_laurent()
        bound = psi.exp_at(self.a)
        if bound is None:
            return False
        e = val.abs_exp()
        return e is None or Fraction(e) < bound


def _combo_value(m: AnalyticMap, a: Sequence[Poly], x: Sequence[Laurent],
                 theta_on: bool) -> Laurent:
    acc = m.eval_theta(x) if theta_on else Laurent.zero(m.spec)
    fx = m.eval(x)
    for ai, fi in zip(a, fx):
        if not ai.is_zero:
            acc = acc + ai.to_laurent() * fi
    return acc


def best_a0(z: Laurent) -> tuple[Poly, AbsValue]:
    """The a0 minimizing |z + a0| over Lambda: a0 = -[z], value |{z}| <= 1/q."""
    head, tail = z.poly_part()
    return -head, tail.abs_value() if not tail.is_zero else AbsValue.zero()


def find_witness(
    m: AnalyticMap,
    x: Sequence[Laurent],
    psi: ApproxFn,
    t: int,
    theta_on: bool = True,
) -> Optional[Witness]:
    """First witness in shell order with |f(x).a + a0 + theta| < Psi(a)."""
    bound = psi.exp_at_shell(t)
    if bound is None:
        return None
    fx = m.eval(x)
    th = m.eval_theta(x) if theta_on else Laurent.zero(m.spec)
    for a in enumerate_shell(m.spec, m.n, t):
        z = th
        for ai, fi in zip(a, fx):
            if not ai.is_zero:
                z = z + ai.to_laurent() * fi
        head, tail = z.poly_part()
        e = tail.abs_exp() if not tail.is_zero else None
        if e is None or Fraction(e) < bound:
            g = m.combo(a, with_theta=theta_on)
            grads = [g.partial(j).eval(x) for j in range(m.d)]
            ge = None
            for v in grads:
                ve = v.abs_exp()
                if ve is not None and (ge is None or ve > ge):
                    ge = ve
            return Witness(a=a, a0=-head, value=tail, grad_exp=ge, shell=t)
    return None


# ---------------------------------------------------------------------------
# Borel-Cantelli sums
# ---------------------------------------------------------------------------

@dataclass
class BCSum:
    """Partial sum of sum_a Psi(a) with the power-law convergence verdict."""

    partial: Fraction
    shells: list[Fraction]
    diverges: Optional[bool]
    limit: Optional[Fraction]


def borel_cantelli_sum(psi: ApproxFn, q: int, n: int, T: int) -> BCSum:
    """sum_{t<=T} q^{tn}(q^n - 1) Psi(shell t), exact; closed form when the
    power law has integral exponents."""
    if T < 0:
        raise ValueError("T >= 0 required")
    shells = []
    total = Fraction(0)
    for t in range(T + 1):
        e = psi.exp_at_shell(t)
        if e is None:
            shells.append(Fraction(0))
            continue
        if e.denominator != 1:
            raise ValueError("non-integral exponent: partial sums not rational")
        val = Fraction(q ** int(e)) if e >= 0 else Fraction(1, q ** int(-e))
        term = shell_count(q, n, t) * val
        shells.append(term)
        total += term
    diverges = limit = None
    if psi.zero:
        diverges, limit = False, Fraction(0)
    elif psi.table is None:
        # shell terms are (q^n - 1) * c * q^{t(n - tau)}
        ratio_exp = n - psi.tau
        diverges = ratio_exp >= 0
        if not diverges and psi.coeff_exp.denominator == 1 and ratio_exp.denominator == 1:
            c = Fraction(q) ** int(psi.coeff_exp)
            r = Fraction(q) ** int(ratio_exp)
            limit = (q**n - 1) * c / (1 - r)
    return BCSum(partial=total, shells=shells, diverges=diverges, limit=limit)


# ---------------------------------------------------------------------------
# cell-sweep atoms specialized to a.f + theta combos
# ---------------------------------------------------------------------------

class VarTable:
    """Variation bounds of one polynomial on subcells of a fixed domain.

    table[w] bounds every weight-w coefficient of g recentered at any point
    of the domain (a sup over the domain of the order-w difference
    quotients, straight from the ultrametric coefficient bound).  The
    variation of g on a subcell of radius exponent r is then
    max_w table[w] - r*w, memoized per r.
    """

    __slots__ = ("table", "_memo")

    def __init__(self, g: MPoly, domain: Ball):
        rec = g.recenter(domain.center)
        r0 = domain.radius_exp
        table: dict[int, int] = {}
        for mm, c in rec.terms.items():
            wm = sum(mm)
            e = c.abs_exp()
            if e is None:
                continue
            for w in range(1, wm + 1):
                b = e - r0 * (wm - w)
                if w not in table or b > table[w]:
                    table[w] = b
        self.table = sorted(table.items())
        self._memo: dict[int, Optional[int]] = {}

    def var_exp(self, r: int) -> Optional[int]:
        got = self._memo.get(r, "?")
        if got != "?":
            return got
        best = None
        for w, b in self.table:
            e = b - r * w
            if best is None or e > best:
                best = e
        self._memo[r] = best
        return best


class SweepData:
    """Per-sweep evaluation helpers for one map: the component polynomials,
    their partials, and variation tables over the sweep domain."""

    __slots__ = ("m", "fvt", "tvt", "pvt", "ptvt", "partials", "tpartials")

    def __init__(self, m: AnalyticMap, domain: Optional[Ball] = None):
        self.m = m
        dom = domain if domain is not None else m.resolved_domain
        th = m.theta_or_zero
        self.fvt = [VarTable(f, dom) for f in m.components]
        self.tvt = VarTable(th, dom)
        self.partials = [[f.partial(j) for f in m.components] for j in range(m.d)]
        self.tpartials = [th.partial(j) for j in range(m.d)]
        self.pvt = [[VarTable(p, dom) for p in row] for row in self.partials]
        self.ptvt = [VarTable(p, dom) for p in self.tpartials]


class MapCellData:
    """Per-cell cache shared by all atoms of a sweep over one map.

    Holds f_i / theta / partial values at the cell center (Horner, shared
    power cache), certified variation bounds at the cell radius, and
    memoized products a_i * f_i(center).
    """

    __slots__ = ("fvals", "fvars", "tval", "tvar", "pvals", "pvars",
                 "ptvals", "ptvars", "vprod", "gprod")

    def __init__(self, sd: SweepData, cell: Ball):
        m = sd.m
        center = cell.center
        r = cell.radius_exp
        self.fvals = [f.eval(center) for f in m.components]
        self.fvars = [vt.var_exp(r) for vt in sd.fvt]
        self.tval = m.theta_or_zero.eval(center)
        self.tvar = sd.tvt.var_exp(r)
        self.pvals = [[p.eval(center) for p in row] for row in sd.partials]
        self.pvars = [[vt.var_exp(r) for vt in row] for row in sd.pvt]
        self.ptvals = [p.eval(center) for p in sd.tpartials]
        self.ptvars = [vt.var_exp(r) for vt in sd.ptvt]
        self.vprod: dict = {}
        self.gprod: dict = {}

    def combo_value(self, a: Sequence[Poly], with_theta: bool) -> tuple[Laurent, Optional[int]]:
        """(value at center, variation bound exponent) of a.f (+ theta)."""
        spec = self.fvals[0].spec if self.fvals else self.tval.spec
        acc = self.tval if with_theta else Laurent.zero(spec)
        var = self.tvar if with_theta else None
        for i, ai in enumerate(a):
            if ai.is_zero:
                continue
            key = (i, ai)
            p = self.vprod.get(key)
            if p is None:
                p = ai.to_laurent() * self.fvals[i]
                self.vprod[key] = p
            acc = acc + p
            if self.fvars[i] is not None:
                e = ai.deg + self.fvars[i]
                if var is None or e > var:
                    var = e
        return acc, var

    def combo_grad(self, a: Sequence[Poly], j: int, with_theta: bool) -> tuple[Laurent, Optional[int]]:
        spec = self.tval.spec
        acc = self.ptvals[j] if with_theta else Laurent.zero(spec)
        var = self.ptvars[j] if with_theta else None
        for i, ai in enumerate(a):
            if ai.is_zero:
                continue
            key = (j, i, ai)
            p = self.gprod.get(key)
            if p is None:
                p = ai.to_laurent() * self.pvals[j][i]
                self.gprod[key] = p
            acc = acc + p
            if self.pvars[j][i] is not None:
                e = ai.deg + self.pvars[j][i]
                if var is None or e > var:
                    var = e
        return acc, var


def _var_exp(rec: MPoly, r: int) -> Optional[int]:
    best = None
    for mm, c in rec.terms.items():
        w = sum(mm)
        if w == 0:
            continue
        e = c.abs_exp()
        if e is None:
            continue
        e -= r * w
        if best is None or e > best:
            best = e
    return best


class WitnessAtom:
    """Cell condition: dist(a.f(x)+theta, Lambda) <= q^tau, optionally
    conjoined with gradient-norm constraints on grad(a.f (+theta)).

    grad_lower: require ||grad|| >= q^grad_lower (Fraction exponent);
    grad_upper_tau: require ||grad|| <= q^grad_upper_tau (already strict-
    normalized to an integer).
    """

    __slots__ = ("sd", "a", "tau", "value_theta", "grad_theta",
                 "grad_lower", "grad_upper_tau")

    def __init__(self, sd: SweepData, a, tau: int, value_theta: bool,
                 grad_theta: bool = False, grad_lower=None, grad_upper_tau=None):
        self.sd = sd
        self.a = tuple(a)
        self.tau = tau
        self.value_theta = value_theta
        self.grad_theta = grad_theta
        self.grad_lower = None if grad_lower is None else Fraction(grad_lower)
        self.grad_upper_tau = grad_upper_tau

    def _data(self, cell: Ball, ctx: dict) -> MapCellData:
        data = ctx.get("mapcell")
        if data is None:
            data = MapCellData(self.sd, cell)
            ctx["mapcell"] = data
        return data

    def status(self, cell: Ball, ctx: dict) -> int:
        data = self._data(cell, ctx)
        v, var = data.combo_value(self.a, self.value_theta)
        s = _frac_status(v, var, self.tau)
        if s == OUT:
            return OUT
        overall = s
        if self.grad_lower is not None or self.grad_upper_tau is not None:
            gs = self._grad_status(data, cell)
            if gs == OUT:
                return OUT
            if gs == UNKNOWN:
                overall = UNKNOWN
        return overall

    def _grad_status(self, data: MapCellData, cell: Ball) -> int:
        d = self.sd.m.d
        comps = []
        for j in range(d):
            gv, gvar = data.combo_grad(self.a, j, self.grad_theta)
            comps.append((gv.abs_exp(), gvar))
        out = IN
        if self.grad_lower is not None:
            s = _norm_geq_status(comps, self.grad_lower)
            if s == OUT:
                return OUT
            if s == UNKNOWN:
                out = UNKNOWN
        if self.grad_upper_tau is not None:
            s = _norm_leq_status(comps, self.grad_upper_tau)
            if s == OUT:
                return OUT
            if s == UNKNOWN:
                out = UNKNOWN
        return out


def _frac_status(v: Laurent, var_exp: Optional[int], tau: int) -> int:
    if tau >= -1:
        return IN  # |{z}| <= 1/q always
    if var_exp is not None and var_exp > -1:
        return UNKNOWN
    w = frac_exp(v)
    return compare_abs_leq(w, var_exp, tau)


def _norm_geq_status(comps, lower: Fraction) -> int:
    """Status of max_j |g_j(x)| >= q^lower on the cell."""
    any_unknown = False
    for v_exp, var in comps:
        if v_exp is not None and (var is None or v_exp > var):
            # |g_j| is constant = q^v_exp on the cell
            if Fraction(v_exp) >= lower:
                return IN
        elif var is not None and Fraction(var) >= lower:
            any_unknown = True
    return UNKNOWN if any_unknown else OUT


def _norm_leq_status(comps, tau: int) -> int:
    """Status of max_j |g_j(x)| <= q^tau on the cell."""
    out = IN
    for v_exp, var in comps:
        s = compare_abs_leq(v_exp, var, tau)
        if s == OUT:
            return OUT
        if s == UNKNOWN:
            out = UNKNOWN
    return out


# ---------------------------------------------------------------------------
# exact measures of the headline sets
# ---------------------------------------------------------------------------

@dataclass
class SweepReport:
    """Union measure plus per-shell tallies for a shell-range sweep."""

    union: MeasureResult
    per_shell: dict[int, MeasureResult]
    domain_measure: Fraction

    @property
    def certified(self) -> bool:
        return self.union.certified and all(r.certified for r in self.per_shell.values())


def _witness_depth(grid: GridSpec, shells: Sequence[int], taus: Sequence[int]) -> int:
    """Depth at which every (a, cell) pair is decidable: variation below
    min(1/q, threshold) for the largest shell."""
    worst = max((t - min(tau, -1) for t, tau in zip(shells, taus)), default=0)
    return max(grid.N, grid.resolved_domain.radius_exp + worst + 1)


def measure_W(
    m: AnalyticMap,
    psi: ApproxFn,
    theta_on: bool,
    t0: int,
    t1: int,
    grid: GridSpec,
    max_depth: Optional[int] = None,
) -> SweepReport:
    """Exact measure of {x : some a with ||a|| in [q^t0, q^t1] has a witness}.

    Returns the union measure and the per-shell hit measures.
    """
    if t0 > t1:
        raise ValueError("need t0 <= t1")
    shells = list(range(t0, t1 + 1))
    exps = [psi.exp_at_shell(t) for t in shells]
    taus = [None if e is None else strict_below(e) for e in exps]
    live = [(t, tau) for t, tau in zip(shells, taus) if tau is not None]
    depth = max_depth if max_depth is not None else _witness_depth(
        grid, [t for t, _ in live], [tau for _, tau in live]
    )
    dom = grid.resolved_domain
    sd = SweepData(m, dom)
    per_shell = {}
    all_atoms = []
    for t, tau in zip(shells, taus):
        atoms: list = []
        if tau is None:
            pass
        elif tau >= -1:
            atoms.append(TrueAtom())
        else:
            for a in enumerate_shell(m.spec, m.n, t):
                atoms.append(WitnessAtom(sd, a, tau, value_theta=theta_on))
        per_shell[t] = measure_union(atoms, dom, depth)
        all_atoms.extend(atoms)
    union = measure_union(all_atoms, dom, depth)
    return SweepReport(union=union, per_shell=per_shell, domain_measure=dom.measure())


def enumerate_exact_degrees(spec: FieldSpec, tvec: Sequence[int]) -> Iterator[tuple[Poly, ...]]:
    """All a with |a_i| = q^{t_i} exactly for every i."""
    opts = []
    for t in tvec:
        polys = [
            Poly(spec, list(lo) + [lead])
            for lead in range(1, spec.q)
            for lo in itertools.product(range(spec.q), repeat=t)
        ]
        opts.append(polys)
    return itertools.product(*opts)


def measure_bigA(
    m: AnalyticMap,
    delta_exp: int,
    tvecs: Sequence[Sequence[int]],
    eps: Fraction,
    grid: GridSpec,
    theta_on: bool = False,
    max_depth: Optional[int] = None,
) -> tuple[MeasureResult, Fraction]:
    """Exact measure of the big-gradient set A (or A_theta) over the given
    coordinate-degree vectors, and the ratio measure/(delta |U|).

    Per a with |a_i| = q^{t_i}: |f.a (+theta) + a_0| < delta q^{-sum t_i}
    and ||grad(f.a (+theta))|| >= ||a||^{1-eps}.
    """
    eps = Fraction(eps)
    if not (0 < eps < Fraction(1, 2)):
        raise ValueError("need 0 < eps < 1/2")
    dom = grid.resolved_domain
    sd = SweepData(m, dom)
    atoms = []
    worst = 0
    for tvec in tvecs:
        tvec = tuple(tvec)
        tau = strict_below(delta_exp - sum(tvec))
        tmax = max(tvec)
        glower = Fraction(tmax) * (1 - eps)
        worst = max(worst, tmax - min(tau, -1))
        for a in enumerate_exact_degrees(m.spec, tvec):
            atoms.append(
                WitnessAtom(
                    sd, a, tau,
                    value_theta=theta_on,
                    grad_theta=theta_on,
                    grad_lower=glower,
                )
            )
    depth = max_depth if max_depth is not None else max(
        grid.N, dom.radius_exp + worst + 1
    )
    res = measure_union(atoms, dom, depth)
    q = m.spec.q
    delta = Fraction(q) ** delta_exp if delta_exp >= 0 else Fraction(1, q ** -delta_exp)
    ratio = res.included / (delta * dom.measure())
    return res, ratio


def smallgrad_atoms(m: AnalyticMap, t: int, t_prime: int, tvec: Sequence[int],
                    domain: Optional[Ball] = None) -> list:
    """Atoms for the small-gradient set S(t, t', t_1..t_n)."""
    tau_val = strict_below(Fraction(-t))
    tau_grad = strict_below(Fraction(t_prime))
    sd = SweepData(m, domain)
    atoms = []
    from .ffield import enumerate_box

    for a in enumerate_box(m.spec, [ti - 1 for ti in tvec]):
        if all(p.is_zero for p in a):
            continue
        atoms.append(
            WitnessAtom(
                sd, a, tau_val,
                value_theta=False,
                grad_theta=False,
                grad_upper_tau=tau_grad,
            )
        )
    return atoms


def measure_smallgrad_S(
    m: AnalyticMap,
    t: int,
    t_prime: int,
    tvec: Sequence[int],
    B: Ball,
    max_depth: Optional[int] = None,
) -> tuple[MeasureResult, Fraction]:
    """Exact measure of S(t,t',t_1..t_n) ∩ B and the theorem's epsilon.

    Hypotheses: t >= 0, t_i >= 1, t' + sum t_i - t - max t_i < 0.
    """
    tvec = tuple(tvec)
    n = len(tvec)
    gap = t_prime + sum(tvec) - t - max(tvec)
    if t < 0 or any(ti < 1 for ti in tvec) or gap >= 0:
        raise ValueError("small-gradient hypotheses violated")
    eps_theory = max(Fraction(-t), Fraction(gap, n + 1))
    atoms = smallgrad_atoms(m, t, t_prime, tvec, domain=B)
    depth = max_depth if max_depth is not None else B.radius_exp + max(tvec) + t + 2
    res = measure_union(atoms, B, depth)
    return res, eps_theory


def in_smallgrad_S_point(
    m: AnalyticMap, x: Sequence[Laurent], t: int, t_prime: int, tvec: Sequence[int]
) -> bool:
    """Pointwise membership in S(t,t',t_i): exhaustive over the a-box."""
    from .ffield import enumerate_box

    fx = m.eval(x)
    for a in enumerate_box(m.spec, [ti - 1 for ti in tvec]):
        if all(p.is_zero for p in a):
            continue
        z = Laurent.zero(m.spec)
        for ai, fi in zip(a, fx):
            if not ai.is_zero:
                z = z + ai.to_laurent() * fi
        e = frac_exp(z)
        if e is not None and e >= -t:
            continue
        ok = True
        for j in range(m.d):
            gv = Laurent.zero(m.spec)
            for i, ai in enumerate(a):
                if not ai.is_zero:
                    gv = gv + ai.to_laurent() * m.components[i].partial(j).eval(x)
            ge = gv.abs_exp()
            if ge is not None and ge >= t_prime:
                ok = False
                break
        if ok:
            return True
    return False


def measure_phi_f(
    m: AnalyticMap,
    t: int,
    delta_exp: int,
    B: Ball,
    max_depth: Optional[int] = None,
) -> MeasureResult:
    """Exact measure of Phi^f(t, delta) ∩ B: some ||a|| = q^t with
    |f(x).a + a_0| < delta q^{-nt}."""
    if t < 1 or delta_exp >= 0:
        raise ValueError("need t >= 1 and 0 < delta < 1")
    tau = strict_below(delta_exp - m.n * t)
    sd = SweepData(m, B)
    atoms: list = []
    if tau >= -1:
        atoms.append(TrueAtom())
    else:
        for a in enumerate_shell(m.spec, m.n, t):
            atoms.append(WitnessAtom(sd, a, tau, value_theta=False))
    depth = max_depth if max_depth is not None else B.radius_exp + t - min(tau, -1) + 1
    return measure_union(atoms, B, depth)


def in_phi_f_point(m: AnalyticMap, x: Sequence[Laurent], t: int, delta_exp: int) -> bool:
    """Pointwise membership in Phi^f(t, delta)."""
    tau = strict_below(delta_exp - m.n * t)
    fx = m.eval(x)
    for a in enumerate_shell(m.spec, m.n, t):
        z = Laurent.zero(m.spec)
        for ai, fi in zip(a, fx):
            if not ai.is_zero:
                z = z + ai.to_laurent() * fi
        e = frac_exp(z)
        if e is None or e <= tau:
            return True
    return False


# ---------------------------------------------------------------------------
# transference sets I_t / H_t
# ---------------------------------------------------------------------------

def in_I_t(
    m: AnalyticMap,
    x: Sequence[Laurent],
    alpha: tuple[Poly, Sequence[Poly]],
    tvec: Sequence[int],
    lam_exp: Fraction,
    eps: Fraction,
) -> bool:
    """x in I_t(alpha, lambda): inhomogeneous system with max{1,|a_i|} <= q^{t_i}."""
    a0, a = alpha
    if a0.is_zero and all(p.is_zero for p in a):
        raise ValueError("alpha = 0 is excluded from the index set")
    if any(not p.is_zero and p.deg > ti for p, ti in zip(a, tvec)):
        return False
    return _it_ht_conditions(m, x, a0, a, tvec, lam_exp, eps, with_theta=True)


def in_H_t(
    m: AnalyticMap,
    x: Sequence[Laurent],
    alpha: tuple[Poly, Sequence[Poly]],
    tvec: Sequence[int],
    lam_exp: Fraction,
    eps: Fraction,
) -> bool:
    """x in H_t(alpha, lambda): homogeneous variant with |a_i| <= q^{t_i}."""
    a0, a = alpha
    if a0.is_zero and all(p.is_zero for p in a):
        raise ValueError("alpha = 0 is excluded from the index set")
    if any(not p.is_zero and p.deg > ti for p, ti in zip(a, tvec)):
        return False
    return _it_ht_conditions(m, x, a0, a, tvec, lam_exp, eps, with_theta=False)


def _it_ht_conditions(m, x, a0, a, tvec, lam_exp, eps, with_theta):
    lam_exp = Fraction(lam_exp)
    eps = Fraction(eps)
    tmax = max(tvec)
    val = _combo_value(m, a, x, with_theta) + a0.to_laurent()
    e = val.abs_exp()
    if e is not None and Fraction(e) >= lam_exp + psi0_exp(tvec):
        return False
    g = m.combo(a, with_theta=with_theta)
    for j in range(m.d):
        ge = g.partial(j).eval(x).abs_exp()
        if ge is not None and Fraction(ge) >= lam_exp + tmax * (1 - eps):
            return False
    return True


def phi_delta_exp(delta: Fraction, tvec: Sequence[int]) -> Fraction:
    """Exponent of phi_delta(t) = q^{delta |t|}, |t| = max t_i."""
    return Fraction(delta) * max(tvec)


# the gradient-split parameter: any 0 < eps < 1/2 works; 1/4 is the default
GRAD_EPS_DEFAULT = Fraction(1, 4)


def classify_gradient(
    m: AnalyticMap,
    a: Sequence[Poly],
    x: Sequence[Laurent],
    eps: Fraction = GRAD_EPS_DEFAULT,
    theta_on: bool = True,
) -> str:
    """'large' iff ||grad(f.a + theta)(x)|| >= ||a||^(1 - eps), else 'small'."""
    eps = Fraction(eps)
    if not (0 < eps < Fraction(1, 2)):
        raise ValueError("need 0 < eps < 1/2")
    t = max((p.deg for p in a if not p.is_zero), default=None)
    if t is None:
        raise ValueError("the split needs a nonzero a")
    g = m.combo(a, with_theta=theta_on)
    ge = None
    for j in range(m.d):
        e = g.partial(j).eval(x).abs_exp()
        if e is not None and (ge is None or e > ge):
            ge = e
    if ge is None:
        return "small"
    return "large" if Fraction(ge) >= Fraction(t) * (1 - eps) else "small"
