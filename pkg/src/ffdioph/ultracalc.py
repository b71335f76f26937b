"""Ultrametric calculus on polynomial maps: difference quotients, skew
gradients, rescaling operators and the normalization conditions.

Maps are exact polynomial maps U in F^d -> F^n with Laurent coefficients.
Every bound used here is ultrametric: the sup of a monomial c*x^beta over a
ball ||x - c0|| <= q^-r is |c| q^(-r|beta|) after recentering at c0, so sup
norms over balls are certified from coefficient data alone, with grid
refinement reserved for the cancellation cases.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

from .errors import FieldMismatchError
from .ffield import AbsValue, Ball, FieldSpec, Laurent, Poly

MultiIndex = tuple[int, ...]


def weight(beta: MultiIndex) -> int:
    return sum(beta)


class MPoly:
    """Polynomial in x1..xd with Laurent coefficients (exact by default)."""

    __slots__ = ("spec", "d", "terms")

    def __init__(self, spec: FieldSpec, d: int, terms=None):
        self.spec = spec
        self.d = d
        clean: dict[MultiIndex, Laurent] = {}
        if terms:
            for m, c in (terms.items() if isinstance(terms, dict) else terms):
                m = tuple(m)
                if len(m) != d:
                    raise ValueError(f"exponent {m} has arity != {d}")
                if not c.is_zero:
                    prev = clean.get(m)
                    c = prev + c if prev is not None else c
                    if c.is_zero:
                        del clean[m]
                    else:
                        clean[m] = c
        self.terms = clean

    # -- constructors ----------------------------------------------------

    @classmethod
    def zero(cls, spec: FieldSpec, d: int) -> "MPoly":
        return cls(spec, d)

    @classmethod
    def const(cls, spec: FieldSpec, d: int, c: Laurent) -> "MPoly":
        return cls(spec, d, {(0,) * d: c})

    @classmethod
    def one(cls, spec: FieldSpec, d: int) -> "MPoly":
        return cls.const(spec, d, Laurent.one(spec))

    @classmethod
    def var(cls, spec: FieldSpec, d: int, j: int) -> "MPoly":
        """The coordinate function x_{j+1} (0-based j)."""
        m = tuple(1 if i == j else 0 for i in range(d))
        return cls(spec, d, {m: Laurent.one(spec)})

    @classmethod
    def monomial(cls, spec: FieldSpec, d: int, m: MultiIndex, c: Laurent) -> "MPoly":
        return cls(spec, d, {tuple(m): c})

    # -- structure -------------------------------------------------------

    @property
    def is_zero(self) -> bool:
        return not self.terms

    def total_deg(self) -> Optional[int]:
        return max((weight(m) for m in self.terms), default=None)

    def deg_in(self, j: int) -> int:
        return max((m[j] for m in self.terms), default=0)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, MPoly)
            and self.spec == other.spec
            and self.d == other.d
            and self.terms == other.terms
        )

    def __hash__(self):
        return hash((self.spec, self.d, tuple(sorted(self.terms.items(), key=lambda t: t[0]))))

    # -- arithmetic ------------------------------------------------------

    def _check(self, other: "MPoly") -> None:
        if self.spec != other.spec or self.d != other.d:
            raise FieldMismatchError("mixed polynomial rings")

    def __add__(self, other: "MPoly") -> "MPoly":
        self._check(other)
        acc = dict(self.terms)
        for m, c in other.terms.items():
            s = acc.get(m)
            s = c if s is None else s + c
            if s.is_zero:
                acc.pop(m, None)
            else:
                acc[m] = s
        return MPoly(self.spec, self.d, acc)

    def __neg__(self) -> "MPoly":
        return MPoly(self.spec, self.d, {m: -c for m, c in self.terms.items()})

    def __sub__(self, other: "MPoly") -> "MPoly":
        return self + (-other)

    def __mul__(self, other: "MPoly") -> "MPoly":
        self._check(other)
        acc: dict[MultiIndex, Laurent] = {}
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                m = tuple(a + b for a, b in zip(m1, m2))
                p = c1 * c2
                s = acc.get(m)
                s = p if s is None else s + p
                if s.is_zero:
                    acc.pop(m, None)
                else:
                    acc[m] = s
        return MPoly(self.spec, self.d, acc)

    def scale(self, c: Laurent) -> "MPoly":
        if c.is_zero:
            return MPoly.zero(self.spec, self.d)
        return MPoly(self.spec, self.d, {m: x * c for m, x in self.terms.items()})

    def partial(self, j: int) -> "MPoly":
        """Formal partial derivative in x_{j+1}."""
        acc: dict[MultiIndex, Laurent] = {}
        p = self.spec.p
        for m, c in self.terms.items():
            k = m[j]
            if k == 0 or k % p == 0:
                continue
            m2 = tuple(x - 1 if i == j else x for i, x in enumerate(m))
            acc[m2] = c.scale(k % p) if m2 not in acc else acc[m2] + c.scale(k % p)
        return MPoly(self.spec, self.d, acc)

    def gradient(self) -> tuple["MPoly", ...]:
        return tuple(self.partial(j) for j in range(self.d))

    def eval(self, point: Sequence[Laurent]) -> Laurent:
        if len(point) != self.d:
            raise ValueError("point arity mismatch")
        powers: list[dict[int, Laurent]] = [dict() for _ in range(self.d)]
        acc = Laurent.zero(self.spec)
        for m, c in self.terms.items():
            v = c
            for j, e in enumerate(m):
                if e:
                    pw = powers[j].get(e)
                    if pw is None:
                        pw = point[j]
                        for _ in range(e - 1):
                            pw = pw * point[j]
                        powers[j][e] = pw
                    v = v * pw
            acc = acc + v
        return acc

    # -- substitutions ---------------------------------------------------

    def subs_axis(self, j: int, image: "MPoly") -> "MPoly":
        """Substitute x_{j+1} -> image (an MPoly in the same ring)."""
        out = MPoly.zero(self.spec, self.d)
        pow_cache: dict[int, MPoly] = {0: MPoly.one(self.spec, self.d)}

        def img_pow(e: int) -> MPoly:
            if e not in pow_cache:
                pow_cache[e] = img_pow(e - 1) * image
            return pow_cache[e]

        for m, c in self.terms.items():
            rest = tuple(x if i != j else 0 for i, x in enumerate(m))
            out = out + (MPoly.monomial(self.spec, self.d, rest, c) * img_pow(m[j]))
        return out

    def recenter(self, center: Sequence[Laurent]) -> "MPoly":
        """g(x + center) as a polynomial in the displacement x."""
        out = self
        for j, cj in enumerate(center):
            if cj.is_zero:
                continue
            img = MPoly.var(self.spec, self.d, j) + MPoly.const(self.spec, self.d, cj)
            out = out.subs_axis(j, img)
        return out

    def scale_vars(self, s: Laurent) -> "MPoly":
        """g(s*x): multiply each monomial by s^|m|."""
        acc: dict[MultiIndex, Laurent] = {}
        pow_cache: dict[int, Laurent] = {0: Laurent.one(self.spec)}

        def spow(e: int) -> Laurent:
            if e not in pow_cache:
                pow_cache[e] = spow(e - 1) * s
            return pow_cache[e]

        for m, c in self.terms.items():
            acc[m] = c * spow(weight(m))
        return MPoly(self.spec, self.d, acc)

    # -- ultrametric bounds ----------------------------------------------

    def sup_bound_exp(self, ball: Ball) -> Optional[int]:
        """Certified upper bound on sup_B |g|: exponent e with sup <= q^e.

        None means g vanishes identically (sup = 0).  The bound is the
        ultrametric coefficient bound after recentering at the ball center;
        it is attained unless leading coefficients cancel.
        """
        g = self.recenter(ball.center)
        r = ball.radius_exp
        best = None
        for m, c in g.terms.items():
            e = c.abs_exp()
            if e is None:
                continue
            e -= r * weight(m)
            if best is None or e > best:
                best = e
        return best

    def nonconst_bound_exp(self, ball: Ball) -> Optional[int]:
        """Bound exponent for sup_B |g(x) - g(center)| (variation on the ball)."""
        g = self.recenter(ball.center)
        r = ball.radius_exp
        best = None
        for m, c in g.terms.items():
            w = weight(m)
            if w == 0:
                continue
            e = c.abs_exp()
            if e is None:
                continue
            e -= r * w
            if best is None or e > best:
                best = e
        return best

    def second_diff_bound_exp(self, ball: Ball) -> Optional[int]:
        """Bound exponent for sup over all second difference quotients
        |bar Phi_beta g| (|beta| = 2) with all arguments in the ball."""
        g = self.recenter(ball.center)
        r = ball.radius_exp
        best = None
        for m, c in g.terms.items():
            w = weight(m)
            if w < 2:
                continue
            e = c.abs_exp()
            if e is None:
                continue
            e -= r * (w - 2)
            if best is None or e > best:
                best = e
        return best

    def __repr__(self) -> str:
        if not self.terms:
            return "MPoly(0)"
        parts = []
        for m, c in sorted(self.terms.items(), reverse=True):
            mono = "*".join(
                f"x{j+1}" if e == 1 else f"x{j+1}^{e}" for j, e in enumerate(m) if e
            )
            cs = str(c).split(" (")[0]
            parts.append(f"({cs})*{mono}" if mono else f"({cs})")
        return "MPoly(" + " + ".join(parts) + ")"


# ---------------------------------------------------------------------------
# difference quotients
# ---------------------------------------------------------------------------

def complete_homogeneous(spec: FieldSpec, m: int, values: Sequence[Laurent]) -> Laurent:
    """h_m(values): sum of all degree-m monomials, coefficients 1.

    h_{m-k} evaluated at k+1 points is the k-th divided difference of x^m,
    which is what makes the closed-form extension of Phi^k exact.
    """
    if m < 0:
        return Laurent.zero(spec)
    if m == 0:
        return Laurent.one(spec)
    # DP over values: h[d] for the first i values
    h = [Laurent.one(spec)] + [Laurent.zero(spec)] * m
    for v in values:
        vp = Laurent.one(spec)
        pows = [vp]
        for _ in range(m):
            vp = vp * v
            pows.append(vp)
        newh = list(h)
        for dgr in range(1, m + 1):
            acc = h[dgr]
            for i in range(1, dgr + 1):
                acc = acc + h[dgr - i] * pows[i]
            newh[dgr] = acc
        h = newh
    return h[m]


def difference_quotient(
    g: MPoly, k: int, axis: int, points: Sequence[Laurent]
) -> Laurent:
    """The k-th order difference quotient of g along ``axis`` (0-based).

    Evaluates the unique polynomial extension bar-Phi^k, so coincident
    points are allowed; at pairwise-distinct points it agrees with the
    recursive quotient.  The remaining coordinates of g must be specified
    by evaluating first (1s elsewhere are not assumed); here g may depend
    on axis only or the caller passes a full point via multi_difference.
    """
    if len(points) != k + 1:
        raise ValueError(f"need {k + 1} points for order {k}")
    spec = g.spec
    acc = Laurent.zero(spec)
    for m, c in g.terms.items():
        for j, e in enumerate(m):
            if j != axis and e:
                raise ValueError(
                    "difference_quotient needs g univariate in the chosen axis; "
                    "use multi_difference for several variables"
                )
        acc = acc + c * complete_homogeneous(spec, m[axis] - k, points)
    return acc


def difference_quotient_recursive(
    g: MPoly, k: int, axis: int, points: Sequence[Laurent]
) -> Laurent:
    """Raw inductive quotient at pairwise distinct points (test oracle)."""
    if k == 0:
        return g.eval(_axis_point(g, axis, points[0]))
    a = difference_quotient_recursive(g, k - 1, axis, (points[0],) + tuple(points[2:]))
    b = difference_quotient_recursive(g, k - 1, axis, tuple(points[1:]))
    num, den = a - b, points[0] - points[1]
    if den.is_zero:
        raise ZeroDivisionError("coincident points in the recursive quotient")
    if not num.terms:
        prec = None if num.prec is None else num.prec - den.top_deg
        return Laurent(g.spec, (), prec)
    return num.div_to_floor(den, num.top_deg - den.top_deg - 64)


def _axis_point(g: MPoly, axis: int, x: Laurent) -> list[Laurent]:
    return [x if j == axis else Laurent.zero(g.spec) for j in range(g.d)]


def multi_difference(
    g: MPoly, beta: MultiIndex, points: Sequence[Sequence[Laurent]]
) -> Laurent:
    """bar-Phi_beta g = the composed iterated quotient Phi_1^{i_1}...Phi_d^{i_d}.

    ``points[j]`` supplies the i_j + 1 evaluation points for axis j.  For a
    monomial prod x_j^{m_j} the value is prod_j h_{m_j - i_j}(points[j]).
    """
    if len(beta) != g.d:
        raise ValueError("multi-index arity mismatch")
    for j, (b, pts) in enumerate(zip(beta, points)):
        if len(pts) != b + 1:
            raise ValueError(f"axis {j} needs {b + 1} points")
    spec = g.spec
    acc = Laurent.zero(spec)
    for m, c in g.terms.items():
        v = c
        dead = False
        for j in range(g.d):
            if m[j] < beta[j]:
                dead = True
                break
            v = v * complete_homogeneous(spec, m[j] - beta[j], points[j])
        if not dead:
            acc = acc + v
    return acc


def formal_partial(g: MPoly, beta: MultiIndex) -> MPoly:
    out = g
    for j, e in enumerate(beta):
        for _ in range(e):
            out = out.partial(j)
    return out


# ---------------------------------------------------------------------------
# skew gradient and rescaling
# ---------------------------------------------------------------------------

def skew_gradient(g1: MPoly, g2: MPoly) -> tuple[MPoly, ...]:
    """g1*grad(g2) - g2*grad(g1), componentwise symbolic."""
    return tuple(
        g1 * g2.partial(j) - g2 * g1.partial(j) for j in range(g1.d)
    )


def rescale_recenter(g: MPoly, r: int, x1: Sequence[Laurent], l: int) -> MPoly:
    """g_{q^r}(x) = g(X^r * x + x1) / X^(r l), exact.

    With x1 = 0 this is the pure scaling P(X^r x)/X^(rl).  Requires
    l >= deg g so the result stays polynomial with Laurent coefficients.
    """
    if g.total_deg() is not None and l < g.total_deg():
        raise ValueError("degree bound l must be at least deg g")
    spec = g.spec
    out = g.recenter(x1).scale_vars(Laurent.X(spec, r))
    return out.scale(Laurent.X(spec, -r * l))


# ---------------------------------------------------------------------------
# analytic maps and the normalization conditions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AnalyticMap:
    """A polynomial map f = (f1..fn): U in F^d -> F^n plus a scalar shift theta."""

    spec: FieldSpec
    d: int
    n: int
    components: tuple[MPoly, ...]
    theta: Optional[MPoly] = None
    domain: Optional[Ball] = None

    def __post_init__(self):
        if len(self.components) != self.n:
            raise ValueError("component count != n")
        if self.domain is None:
            object.__setattr__(self, "domain", Ball.unit(self.spec, self.d, 1))

    @property
    def resolved_domain(self) -> Ball:
        return self.domain  # type: ignore[return-value]

    @property
    def theta_or_zero(self) -> MPoly:
        return self.theta if self.theta is not None else MPoly.zero(self.spec, self.d)

    def eval(self, x: Sequence[Laurent]) -> tuple[Laurent, ...]:
        return tuple(f.eval(x) for f in self.components)

    def eval_theta(self, x: Sequence[Laurent]) -> Laurent:
        return self.theta_or_zero.eval(x)

    def combo(self, a: Sequence[Poly], a0: Optional[Poly] = None, with_theta: bool = False) -> MPoly:
        """The scalar function a . f (+ a0) (+ theta) as an MPoly."""
        acc = MPoly.zero(self.spec, self.d)
        for ai, fi in zip(a, self.components):
            if not ai.is_zero:
                acc = acc + fi.scale(ai.to_laurent())
        if a0 is not None and not a0.is_zero:
            acc = acc + MPoly.const(self.spec, self.d, a0.to_laurent())
        if with_theta and self.theta is not None:
            acc = acc + self.theta
        return acc

    def grad_eval(self, g: MPoly, x: Sequence[Laurent]) -> tuple[Laurent, ...]:
        return tuple(g.partial(j).eval(x) for j in range(self.d))


def grad_sup_exp(values: Iterable[Laurent]) -> Optional[int]:
    """||v|| = max |v_j| as an exponent, None when all components vanish."""
    best = None
    for v in values:
        e = v.abs_exp()
        if e is not None and (best is None or e > best):
            best = e
    return best


def veronese(spec: FieldSpec, n: int, domain: Optional[Ball] = None,
             theta: Optional[MPoly] = None) -> AnalyticMap:
    """The Veronese curve x -> (x, x^2, ..., x^n) with d = 1."""
    comps = tuple(
        MPoly.monomial(spec, 1, (k,), Laurent.one(spec)) for k in range(1, n + 1)
    )
    return AnalyticMap(spec, 1, n, comps, theta=theta, domain=domain)


@dataclass
class ConditionsReport:
    """Outcome of the (II)-(VI) normalization checks on a map."""

    f1_is_x1: bool
    independent: bool
    f_sup_ok: bool
    grad_sup_ok: bool
    second_diff_ok: bool
    theta_ok: bool
    violations: list[str] = field(default_factory=list)

    @property
    def all_ok(self) -> bool:
        return (
            self.f1_is_x1
            and self.independent
            and self.f_sup_ok
            and self.grad_sup_ok
            and self.second_diff_ok
            and self.theta_ok
        )


def _laurent_matrix_rank(rows: list[list[Laurent]]) -> int:
    """Rank over F of a matrix with exact Laurent entries (fraction-free)."""
    mat = [row[:] for row in rows]
    rank = 0
    ncols = len(mat[0]) if mat else 0
    for col in range(ncols):
        piv = None
        for i in range(rank, len(mat)):
            if mat[i][col].terms:
                piv = i
                break
        if piv is None:
            continue
        mat[rank], mat[piv] = mat[piv], mat[rank]
        pv = mat[rank][col]
        for i in range(rank + 1, len(mat)):
            if mat[i][col].terms:
                f = mat[i][col]
                mat[i] = [pv * a - f * b for a, b in zip(mat[i], mat[rank])]
        rank += 1
        if rank == len(mat):
            break
    return rank


def components_independent(m: AnalyticMap) -> bool:
    """Linear independence of 1, f1, ..., fn over F (condition III)."""
    monos = sorted({k for f in m.components for k in f.terms} | {(0,) * m.d})
    rows = [[Laurent.one(m.spec) if mo == (0,) * m.d else Laurent.zero(m.spec) for mo in monos]]
    for f in m.components:
        rows.append([f.terms.get(mo, Laurent.zero(m.spec)) for mo in monos])
    return _laurent_matrix_rank(rows) == m.n + 1


def _sup_exceeds(g: MPoly, ball: Ball, limit_exp: int) -> bool:
    """Does sup_B |g| exceed q^limit_exp?  Exact (bound, then refinement)."""
    bound = g.sup_bound_exp(ball)
    if bound is None or bound <= limit_exp:
        return False
    from .goodfn import sup_norm_on_ball  # local import to avoid a cycle

    return sup_norm_on_ball(g, ball) > AbsValue(limit_exp)


def check_conditions(m: AnalyticMap, domain: Optional[Ball] = None) -> ConditionsReport:
    """Certify conditions (II)-(IV) for f and (VI) for theta on the domain."""
    ball = domain if domain is not None else m.resolved_domain
    violations = []

    x1 = MPoly.var(m.spec, m.d, 0)
    f1_ok = m.components[0] == x1
    if not f1_ok:
        violations.append("condition II: f1(x) != x1")

    indep = components_independent(m)
    if not indep:
        violations.append("condition III: 1, f1..fn linearly dependent over F")

    f_sup_ok = True
    grad_ok = True
    sec_ok = True
    for i, f in enumerate(m.components, start=1):
        if _sup_exceeds(f, ball, 0):
            f_sup_ok = False
            violations.append(f"condition IV: ||f{i}|| > 1 on the domain")
        for j in range(m.d):
            if _sup_exceeds(f.partial(j), ball, 0):
                grad_ok = False
                violations.append(f"condition IV: |d_{j+1} f{i}| > 1 on the domain")
        e = f.second_diff_bound_exp(ball)
        if e is not None and e > 0:
            sec_ok = False
            violations.append(f"condition IV: second difference of f{i} exceeds 1")

    theta_ok = True
    th = m.theta
    if th is not None and not th.is_zero:
        if _sup_exceeds(th, ball, 0):
            theta_ok = False
            violations.append("condition VI: |theta| > 1 on the domain")
        for j in range(m.d):
            if _sup_exceeds(th.partial(j), ball, 0):
                theta_ok = False
                violations.append(f"condition VI: |d_{j+1} theta| > 1 on the domain")
        e = th.second_diff_bound_exp(ball)
        if e is not None and e > 0:
            theta_ok = False
            violations.append("condition VI: second difference of theta exceeds 1")

    return ConditionsReport(
        f1_is_x1=f1_ok,
        independent=indep,
        f_sup_ok=f_sup_ok,
        grad_sup_ok=grad_ok,
        second_diff_ok=sec_ok,
        theta_ok=theta_ok,
        violations=violations,
    )
