"""(C, alpha)-goodness machinery: exact sup norms, sublevel-set measures and
certified goodness constants.

All measures are computed by an adaptive cell sweep.  A cell is decided once
the value at its center dominates the certified variation bound on the cell
(ultrametric mean value estimate); undecided cells are split until a maximum
depth, and any survivors are reported as explicit undecided mass rather than
guessed.  Everything is exact: measures are Fractions with power-of-q
denominators and constants are Fraction * q^Fraction pairs.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import total_ordering
from typing import Optional, Sequence

from .errors import PrecisionError
from .ffield import AbsValue, Ball, Laurent, strict_below
from .ultracalc import MPoly

IN, OUT, UNKNOWN = 1, 0, -1


@total_ordering
class QExp:
    """An exact nonnegative real of the form m * q^u, m rational, u rational.

    Closed under multiplication and division; ordering is exact via
    cross-powering, never through floats.  This is the carrier for certified
    goodness constants C = (measure/|B|) * (sup/eps)^alpha.
    """

    __slots__ = ("q", "m", "u")

    def __init__(self, q: int, m, u=0):
        self.q = q
        self.m = Fraction(m)
        self.u = Fraction(u)
        if self.m < 0:
            raise ValueError("QExp values are nonnegative")
        if self.m == 0:
            self.u = Fraction(0)

    @classmethod
    def qpow(cls, q: int, e) -> "QExp":
        return cls(q, 1, e)

    @classmethod
    def zero(cls, q: int) -> "QExp":
        return cls(q, 0)

    @property
    def is_zero(self) -> bool:
        return self.m == 0

    def _cmp_key(self, other: "QExp") -> int:
        if self.q != other.q:
            raise ValueError("mixed base q")
        if self.m == 0 or other.m == 0:
            return (self.m > 0) - (other.m > 0)
        du = self.u - other.u
        b = du.denominator
        # self ? other  <=>  (m1/m2)^b ? q^(-du*b)
        lhs = (self.m / other.m) ** b
        e = -du * b
        rhs = Fraction(self.q ** int(e)) if e >= 0 else Fraction(1, self.q ** int(-e))
        return (lhs > rhs) - (lhs < rhs)

    def __eq__(self, other) -> bool:
        if not isinstance(other, QExp):
            return NotImplemented
        return self._cmp_key(other) == 0

    def __lt__(self, other) -> bool:
        return self._cmp_key(other) < 0

    def __hash__(self):
        return hash((self.q, self.m, self.u))

    def __mul__(self, other: "QExp") -> "QExp":
        if self.q != other.q:
            raise ValueError("mixed base q")
        return QExp(self.q, self.m * other.m, self.u + other.u)

    def __truediv__(self, other: "QExp") -> "QExp":
        if other.m == 0:
            raise ZeroDivisionError("division by zero QExp")
        return QExp(self.q, self.m / other.m, self.u - other.u)

    def pow_rational(self, e) -> "QExp":
        """Rational power; requires a pure q-power unless e is an integer."""
        e = Fraction(e)
        if e.denominator == 1:
            return QExp(self.q, self.m ** int(e), self.u * e)
        if self.m == 1:
            return QExp(self.q, 1, self.u * e)
        if self.m == 0:
            return QExp.zero(self.q)
        raise ValueError("fractional power of a non-q-power QExp is not exact")

    @classmethod
    def from_fraction(cls, q: int, f: Fraction) -> "QExp":
        return cls(q, f, 0)

    def to_float(self) -> float:
        return float(self.m) * self.q ** float(self.u)

    def __repr__(self) -> str:
        if self.m == 0:
            return "QExp(0)"
        if self.u == 0:
            return f"QExp({self.m})"
        return f"QExp({self.m} * {self.q}^{self.u})"


# ---------------------------------------------------------------------------
# adaptive cell engine
# ---------------------------------------------------------------------------

@dataclass
class MeasureResult:
    """Exact outcome of a cell sweep: included mass plus undecided slack."""

    included: Fraction
    undecided: Fraction
    q: int
    d: int
    max_depth: int

    @property
    def certified(self) -> bool:
        return self.undecided == 0

    @property
    def measure(self) -> Fraction:
        return self.included

    @property
    def upper(self) -> Fraction:
        return self.included + self.undecided

    def cell_count(self, resolution: int) -> int:
        """Included mass as a count of resolution-cells (must be integral)."""
        n = self.included * self.q ** (self.d * resolution)
        if n.denominator != 1:
            raise ValueError(f"measure not integral at resolution {resolution}")
        return int(n)


def measure_union(atoms: Sequence, domain: Ball, max_depth: int) -> MeasureResult:
    """Exact Haar measure of the union of the atoms' satisfaction sets.

    Each atom must provide status(cell, ctx) -> IN | OUT | UNKNOWN, where IN
    means every point of the cell satisfies the atom and OUT means no point
    does.  ``ctx`` is a fresh dict per cell, shared by the atoms for caching.
    Cells undecided at max_depth are tallied separately, never guessed.
    """
    included = Fraction(0)
    undecided = Fraction(0)
    stack: list[tuple[Ball, tuple]] = [(domain, tuple(atoms))]
    while stack:
        cell, active = stack.pop()
        ctx: dict = {}
        survivors = []
        hit = False
        for a in active:
            s = a.status(cell, ctx)
            if s == IN:
                included += cell.measure()
                hit = True
                break
            if s == UNKNOWN:
                survivors.append(a)
        if hit or not survivors:
            continue
        if cell.radius_exp >= max_depth:
            undecided += cell.measure()
            continue
        kids = tuple(survivors)
        for child in cell.subdivide():
            stack.append((child, kids))
    return MeasureResult(included, undecided, domain.spec.q, domain.d, max_depth)


class PolyAbsAtom:
    """Atom |g(x)| <= q^tau on a cell, for a fixed polynomial g.

    tau=None means the threshold is 0, i.e. the condition is g(x) = 0; that
    set has measure zero for nonzero g and the atom answers OUT on cells
    where the value dominates and UNKNOWN elsewhere.

    The variation bound on subcells comes from a table of domain-wide
    difference-quotient bounds, built lazily from the first (largest) cell
    the engine presents; it is valid on all of that cell's descendants.
    """

    __slots__ = ("g", "tau", "_table", "_memo")

    def __init__(self, g: MPoly, tau: Optional[int]):
        self.g = g
        self.tau = tau
        self._table = None
        self._memo: dict[int, Optional[int]] = {}

    def _var_exp(self, cell: Ball) -> Optional[int]:
        if self._table is None:
            rec = self.g.recenter(cell.center)
            r0 = cell.radius_exp
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
            self._table = sorted(table.items())
        r = cell.radius_exp
        got = self._memo.get(r, "?")
        if got != "?":
            return got
        best = None
        for w, b in self._table:
            e = b - r * w
            if best is None or e > best:
                best = e
        self._memo[r] = best
        return best

    def status(self, cell: Ball, ctx: dict) -> int:
        var = self._var_exp(cell)
        v_exp = self.g.eval(cell.center).abs_exp()
        return compare_abs_leq(v_exp, var, self.tau)


def _nonconst_exp(rec: MPoly, r: int) -> Optional[int]:
    best = None
    for m, c in rec.terms.items():
        w = sum(m)
        if w == 0:
            continue
        e = c.abs_exp()
        if e is None:
            continue
        e -= r * w
        if best is None or e > best:
            best = e
    return best


class TrueAtom:
    """Vacuously satisfied condition (threshold above every possible value)."""

    __slots__ = ()

    def status(self, cell: Ball, ctx: dict) -> int:
        return IN


class ConjAtom:
    """Conjunction of conditions: IN iff all IN, OUT iff some OUT."""

    __slots__ = ("parts",)

    def __init__(self, parts: Sequence):
        self.parts = tuple(parts)

    def status(self, cell: Ball, ctx: dict) -> int:
        all_in = True
        for p in self.parts:
            s = p.status(cell, ctx)
            if s == OUT:
                return OUT
            if s != IN:
                all_in = False
        return IN if all_in else UNKNOWN


class FracAbsAtom:
    """Atom dist(g(x), Lambda) <= q^tau, i.e. |{g(x)}| <= q^tau, on a cell.

    Requires the variation bound on the cell to be < 1 before deciding, so
    the polynomial part [g(x)] is constant on the cell and the fractional
    part moves by at most the variation.
    """

    __slots__ = ("g", "tau")

    def __init__(self, g: MPoly, tau: Optional[int]):
        self.g = g
        self.tau = tau

    def status(self, cell: Ball, ctx: dict) -> int:
        rec = self.g.recenter(cell.center)
        m_exp = _nonconst_exp(rec, cell.radius_exp)
        if m_exp is not None and m_exp > -1:
            return UNKNOWN
        v = rec.terms.get((0,) * self.g.d)
        w_exp = None if v is None else frac_exp(v)
        return compare_abs_leq(w_exp, m_exp, self.tau)


def frac_exp(v: Laurent) -> Optional[int]:
    """Exponent of |{v}|, None when the fractional part is zero."""
    if v.prec is not None and v.prec > -1:
        raise PrecisionError("window does not reach degree -1")
    for d, _ in v.terms:
        if d < 0:
            return d
    if v.prec is not None:
        raise PrecisionError("fractional part indistinguishable from 0")
    return None


def compare_abs_leq(v_exp: Optional[int], var_exp: Optional[int], tau: Optional[int]) -> int:
    """Decide |g(x)| <= q^tau for all/no x in a cell, given |g(center)| = q^v
    and a variation bound q^var on the cell.  None exponents mean 0."""
    if tau is None:
        # condition g(x) = 0 exactly
        if v_exp is None and var_exp is None:
            return IN
        if v_exp is not None and (var_exp is None or v_exp > var_exp):
            return OUT
        return UNKNOWN
    if v_exp is None:
        return IN if (var_exp is None or var_exp <= tau) else UNKNOWN
    if var_exp is None:
        return IN if v_exp <= tau else OUT
    if v_exp <= tau and var_exp <= tau:
        return IN
    if v_exp > tau and v_exp > var_exp:
        return OUT
    return UNKNOWN


# ---------------------------------------------------------------------------
# sup norms
# ---------------------------------------------------------------------------

def sup_norm_on_ball(g: MPoly, ball: Ball, max_depth: Optional[int] = None) -> AbsValue:
    """Exact sup of |g| over the ball (Haar-a.e. sup = max, attained).

    Starts from the ultrametric coefficient bound and refines the cells
    whose bound is not yet attained by an evaluated center.  Terminates
    because center values stabilize while variation bounds decay with depth.
    """
    if g.is_zero:
        return AbsValue.zero()
    if max_depth is None:
        max_depth = ball.radius_exp + 60
    best: Optional[int] = None  # exponent of largest |g(center)| seen
    # breadth-first: a whole level's center values feed the lower bound
    # before any refinement, so a path where g vanishes identically (e.g. a
    # diagonal in characteristic 2) cannot starve the termination criterion
    level = [ball]
    while level:
        pending = []
        for cell in level:
            rec = g.recenter(cell.center)
            v = rec.terms.get((0,) * g.d)
            v_exp = v.abs_exp() if v is not None else None
            if v_exp is not None and (best is None or v_exp > best):
                best = v_exp
            m_exp = _nonconst_exp(rec, cell.radius_exp)
            bound = v_exp if m_exp is None else (
                m_exp if v_exp is None else max(v_exp, m_exp)
            )
            if bound is not None:
                pending.append((cell, bound))
        nxt = []
        for cell, bound in pending:
            if best is not None and bound <= best:
                continue
            if cell.radius_exp >= max_depth:
                raise PrecisionError("sup-norm refinement exceeded the depth budget")
            nxt.extend(cell.subdivide())
        level = nxt
    return AbsValue.zero() if best is None else AbsValue(best)


def sup_norm_family(gs: Sequence[MPoly], ball: Ball) -> AbsValue:
    """sup over the ball of max_i |g_i|."""
    best = AbsValue.zero()
    for g in gs:
        v = sup_norm_on_ball(g, ball)
        if v > best:
            best = v
    return best


# ---------------------------------------------------------------------------
# sublevel measures and goodness certification
# ---------------------------------------------------------------------------

@dataclass
class SublevelReport:
    """Exact measure of {x in B : |f(x)| < eps} with certification data."""

    ball: Ball
    eps_exp: Fraction
    sup: AbsValue
    measure: Fraction
    undecided: Fraction
    resolution: int
    certified: bool

    def to_json(self) -> dict:
        q = self.ball.spec.q
        scaled = self.measure * q ** (self.ball.d * self.resolution)
        return {
            "ball": str(self.ball),
            "epsilonExp": str(self.eps_exp),
            "supExp": None if self.sup.is_zero else str(self.sup.exp),
            "cellCount": int(scaled) if scaled.denominator == 1 else None,
            "measure": str(self.measure),
            "undecided": str(self.undecided),
            "resolution": self.resolution,
            "certified": self.certified,
        }


def sublevel_measure(
    g: MPoly,
    ball: Ball,
    eps_exp,
    resolution: Optional[int] = None,
    max_depth: Optional[int] = None,
) -> SublevelReport:
    """Measure of {x in B : |g(x)| < q^eps_exp}, exact via cell certification.

    The strict threshold normalizes to |g(x)| <= q^strict_below(eps_exp) on
    the discrete value group.  Default refinement depth is resolution + 4.
    """
    eps_exp = Fraction(eps_exp)
    if resolution is None:
        resolution = ball.radius_exp + 4
    tau = strict_below(eps_exp)
    if max_depth is None:
        max_depth = resolution + 4
        # decisions need the variation below the threshold: scale the depth
        # with the coefficient size so certification is scaling-invariant
        bound = g.sup_bound_exp(ball)
        if bound is not None and bound > tau:
            max_depth = max(max_depth, ball.radius_exp + (bound - tau) + 1)
    res = measure_union([PolyAbsAtom(g, tau)], ball, max_depth)
    sup = sup_norm_on_ball(g, ball)
    return SublevelReport(
        ball=ball,
        eps_exp=eps_exp,
        sup=sup,
        measure=res.included,
        undecided=res.undecided,
        resolution=max_depth,
        certified=res.certified,
    )


@dataclass
class GoodnessCertificate:
    """The smallest constant C witnessing (C, alpha)-goodness on a grid."""

    alpha: Fraction
    C: QExp
    sup: AbsValue
    rows: list = field(default_factory=list)  # (eps_exp, measure, ratio QExp)
    certified: bool = True


def certify_good(
    g: MPoly,
    ball: Ball,
    alpha,
    eps_exps: Sequence,
    resolution: Optional[int] = None,
    max_depth: Optional[int] = None,
) -> GoodnessCertificate:
    """Certify (C, alpha)-goodness of g on the tested epsilon grid.

    Returns max over eps of  measure * (sup/eps)^alpha / |B|,  each factor
    exact.  Epsilon values above the sup norm contribute ratio measure/|B|
    <= 1 and are admitted (the definition is vacuous there).
    """
    q = ball.spec.q
    alpha = Fraction(alpha)
    sup = sup_norm_on_ball(g, ball)
    if sup.is_zero:
        raise ValueError("goodness of the zero function is undefined")
    ball_measure = ball.measure()
    best = QExp.zero(q)
    rows = []
    certified = True
    for e in eps_exps:
        e = Fraction(e)
        rep = sublevel_measure(g, ball, e, resolution=resolution, max_depth=max_depth)
        certified = certified and rep.certified
        ratio = QExp.from_fraction(q, rep.measure / ball_measure)
        if rep.measure:
            ratio = ratio * QExp.qpow(q, (Fraction(sup.exp) - e) * alpha)
        rows.append((e, rep.measure, ratio))
        if ratio > best:
            best = ratio
    return GoodnessCertificate(alpha=alpha, C=best, sup=sup, rows=rows, certified=certified)


def good_bound_holds(
    measure: Fraction,
    ball_measure: Fraction,
    sup_exp: Fraction,
    eps_exp: Fraction,
    alpha: Fraction,
    C: QExp,
    q: int,
) -> bool:
    """Check measure <= C * (eps/sup)^alpha * |B| exactly."""
    lhs = QExp.from_fraction(q, measure)
    rhs = C * QExp.qpow(q, (Fraction(eps_exp) - Fraction(sup_exp)) * alpha)
    rhs = rhs * QExp.from_fraction(q, ball_measure)
    return lhs <= rhs


def check_orthonormal(vectors: Sequence[Sequence[Laurent]]) -> bool:
    """True iff ||v_1|| = ... = ||v_k|| = ||v_1 ^ ... ^ v_k|| = 1."""
    from .latdyn import sup_norm_vec, wedge_vectors

    for v in vectors:
        e = sup_norm_vec(v)
        if e is None or e != 0:
            return False
    w = wedge_vectors(vectors)
    return w.sup_exp() == 0


def disjoint_subcover(balls: Sequence[Ball]) -> list[Ball]:
    """A pairwise-disjoint subfamily with the same union (ultrametric
    Besicovitch with constant 1: distinct balls are disjoint or nested)."""
    kept: list[Ball] = []
    for b in sorted(balls, key=lambda b: b.radius_exp):
        if not any(k.contains_ball(b) for k in kept):
            kept.append(b)
    return kept
