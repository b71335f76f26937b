"""Difference quotients, skew gradients, rescaling and condition checks."""

import random

import pytest

from ffdioph.ffield import AbsValue, FieldSpec, Laurent
from ffdioph.ultracalc import (
    AnalyticMap,
    MPoly,
    check_conditions,
    components_independent,
    difference_quotient,
    difference_quotient_recursive,
    formal_partial,
    multi_difference,
    rescale_recenter,
    skew_gradient,
    veronese,
)

F2 = FieldSpec(2)
F3 = FieldSpec(3)
F5 = FieldSpec(5)


def mono(spec, d, m, c=1):
    return MPoly.monomial(spec, d, m, Laurent.const(spec, c))


def rand_point(spec, rng, lo=-3, hi=-1):
    return Laurent(spec, [(d, rng.randrange(spec.q)) for d in range(lo, hi + 1)])


def rand_mpoly(spec, rng, d=1, deg=4):
    terms = {}
    for _ in range(rng.randrange(1, 6)):
        m = tuple(rng.randrange(deg + 1) for _ in range(d))
        if sum(m) > deg:
            continue
        terms[m] = Laurent(spec, [(rng.randrange(-2, 2), rng.randrange(spec.q))])
    return MPoly(spec, d, terms)


# ---------------------------------------------------------------------------
# evaluation
# ---------------------------------------------------------------------------

def test_eval_veronese():
    m = veronese(F3, 2)
    x = Laurent.X(F3, -1)
    assert m.eval([x]) == (x, x * x)


def test_eval_zero_map():
    m = AnalyticMap(F3, 1, 1, (MPoly.zero(F3, 1),))
    assert m.eval([Laurent.X(F3, -1)])[0].is_zero


def test_eval_product_map():
    f = AnalyticMap(F2, 2, 2, (MPoly.var(F2, 2, 0), mono(F2, 2, (1, 1))))
    x = [Laurent.X(F2, -1), Laurent.X(F2, -1)]
    v = f.eval(x)
    assert v[0] == Laurent.X(F2, -1)
    assert v[1] == Laurent.X(F2, -2)


# ---------------------------------------------------------------------------
# difference quotients
# ---------------------------------------------------------------------------

def test_phi1_of_square_is_sum():
    g = mono(F3, 1, (2,))
    p1, p2 = Laurent.X(F3, -1), Laurent.monomial(F3, 2, -2)
    assert difference_quotient(g, 1, 0, [p1, p2]) == p1 + p2


def test_phi2_of_square_is_one():
    g = mono(F5, 1, (2,))
    pts = [Laurent.X(F5, -1), Laurent.X(F5, -2), Laurent.zero(F5)]
    assert difference_quotient(g, 2, 0, pts) == Laurent.one(F5)


def test_derivative_identity_f5():
    # g = x^3 over F_5: 2! PhiBar^2 g(x,x,x) = 6x = g''(x)
    g = mono(F5, 1, (3,))
    x = Laurent.monomial(F5, 2, -1)
    lhs = difference_quotient(g, 2, 0, [x, x, x]).scale(2)
    rhs = g.partial(0).partial(0).eval([x])
    assert lhs == rhs


def test_derivative_identity_vanishing_characteristic():
    # k = 2 in characteristic 2: both sides must vanish
    g = mono(F2, 1, (2,)) + mono(F2, 1, (3,))
    x = Laurent.X(F2, -1)
    lhs = difference_quotient(g, 2, 0, [x, x, x]).scale(2 % 2)
    rhs = g.partial(0).partial(0).eval([x])
    assert lhs.is_zero and rhs.is_zero


def test_symmetry_random():
    rng = random.Random(3)
    for _ in range(40):
        spec = rng.choice([F2, F3, F5])
        g = rand_mpoly(spec, rng)
        k = rng.randrange(1, 4)
        pts = []
        seen = set()
        while len(pts) < k + 1:
            p = rand_point(spec, rng)
            if p.terms not in seen:
                seen.add(p.terms)
                pts.append(p)
        base = difference_quotient(g, k, 0, pts)
        perm = pts[:]
        rng.shuffle(perm)
        assert difference_quotient(g, k, 0, perm) == base


def test_recursive_agrees_with_closed_form():
    rng = random.Random(9)
    for _ in range(25):
        spec = rng.choice([F3, F5])
        g = rand_mpoly(spec, rng)
        k = rng.randrange(1, 3)
        pts = []
        seen = set()
        while len(pts) < k + 1:
            p = rand_point(spec, rng)
            if p.terms not in seen:
                seen.add(p.terms)
                pts.append(p)
        closed = difference_quotient(g, k, 0, pts)
        rec = difference_quotient_recursive(g, k, 0, pts)
        # the recursive route truncates; compare on the common window
        diff = closed - rec
        assert not diff.terms, (closed, rec)


def test_multi_difference_examples():
    g12 = mono(F3, 2, (1, 1))
    pts = [[Laurent.X(F3, -1), Laurent.zero(F3)], [Laurent.X(F3, -2), Laurent.one(F3)]]
    # beta = (1,0): value is the second-axis point product sum -> x2 evaluated
    v = multi_difference(g12, (1, 0), [[Laurent.X(F3, -1), Laurent.zero(F3)], [Laurent.X(F3, -2)]])
    assert v == Laurent.X(F3, -2)
    assert multi_difference(g12, (1, 1), pts) == Laurent.one(F3)
    g = mono(F3, 2, (2, 1))
    v = multi_difference(g, (2, 0), [[Laurent.X(F3, -1), Laurent.zero(F3), Laurent.one(F3)], [Laurent.X(F3, -5)]])
    assert v == Laurent.X(F3, -5)


def test_multi_difference_partial_identity():
    # beta! PhiBar_beta g(diagonal) = partial_beta g
    rng = random.Random(17)
    for _ in range(20):
        spec = rng.choice([F3, F5])
        g = rand_mpoly(spec, rng, d=2, deg=3)
        beta = (rng.randrange(3), rng.randrange(2))
        x = [rand_point(spec, rng), rand_point(spec, rng)]
        pts = [[x[0]] * (beta[0] + 1), [x[1]] * (beta[1] + 1)]
        fact = 1
        for b in beta:
            for i in range(1, b + 1):
                fact *= i
        lhs = multi_difference(g, beta, pts).scale(fact % spec.p)
        rhs = formal_partial(g, beta).eval(x)
        assert lhs == rhs


# ---------------------------------------------------------------------------
# skew gradient
# ---------------------------------------------------------------------------

def test_skew_gradient_d1_example():
    g1 = MPoly.var(F3, 1, 0)
    g2 = mono(F3, 1, (2,))
    sg = skew_gradient(g1, g2)
    assert sg[0] == mono(F3, 1, (2,))  # 2x^2 - x^2 = x^2 in any characteristic


def test_skew_gradient_diagonal_zero():
    g = mono(F5, 1, (3,)) + MPoly.var(F5, 1, 0)
    assert all(c.is_zero for c in skew_gradient(g, g))


def test_skew_gradient_of_one():
    g = mono(F3, 1, (2,)) + MPoly.one(F3, 1)
    sg = skew_gradient(MPoly.one(F3, 1), g)
    assert sg == g.gradient()


def test_skew_gradient_antisymmetric_bilinear():
    rng = random.Random(23)
    for _ in range(20):
        spec = rng.choice([F2, F3])
        g1, g2 = rand_mpoly(spec, rng, d=2, deg=3), rand_mpoly(spec, rng, d=2, deg=3)
        s12 = skew_gradient(g1, g2)
        s21 = skew_gradient(g2, g1)
        assert all((a + b).is_zero for a, b in zip(s12, s21))
        c = Laurent.X(spec, 1)
        scaled = skew_gradient(g1.scale(c), g2)
        assert all(x == y.scale(c) for x, y in zip(scaled, s12))


# ---------------------------------------------------------------------------
# rescaling
# ---------------------------------------------------------------------------

def test_rescale_identity_cases():
    x = MPoly.var(F3, 1, 0)
    assert rescale_recenter(x, -1, [Laurent.zero(F3)], 1) == x
    x2 = mono(F3, 1, (2,))
    assert rescale_recenter(x2, -1, [Laurent.zero(F3)], 2) == x2


def test_rescale_coefficient_growth():
    # g = x^2 + x, r = -1, l = 2: coefficient of x becomes X^{-r(l - 1)} = X
    g = mono(F3, 1, (2,)) + MPoly.var(F3, 1, 0)
    out = rescale_recenter(g, -1, [Laurent.zero(F3)], 2)
    assert out.terms[(2,)] == Laurent.one(F3)
    assert out.terms[(1,)] == Laurent.X(F3)


def test_rescale_recenter_evaluation_consistency():
    rng = random.Random(31)
    for _ in range(20):
        g = rand_mpoly(F3, rng, d=1, deg=3)
        l = 4
        x1 = [rand_point(F3, rng)]
        out = rescale_recenter(g, -2, x1, l)
        y = rand_point(F3, rng)
        lhs = out.eval([y])
        rhs = g.eval([Laurent.X(F3, -2) * y + x1[0]]) * Laurent.X(F3, 8)
        assert lhs == rhs


def test_rescale_degree_guard():
    g = mono(F3, 1, (3,))
    with pytest.raises(ValueError):
        rescale_recenter(g, -1, [Laurent.zero(F3)], 2)


# ---------------------------------------------------------------------------
# conditions (II)-(VI)
# ---------------------------------------------------------------------------

def test_veronese_conditions_pass():
    rep = check_conditions(veronese(F3, 2))
    assert rep.all_ok


def test_second_difference_violation_flagged():
    bad = AnalyticMap(
        F3, 1, 2,
        (MPoly.var(F3, 1, 0), MPoly.monomial(F3, 1, (2,), Laurent.X(F3))),
    )
    rep = check_conditions(bad)
    assert not rep.second_diff_ok
    assert any("second difference" in v for v in rep.violations)


def test_constant_map_dependent():
    cm = AnalyticMap(F3, 1, 1, (MPoly.one(F3, 1),))
    rep = check_conditions(cm)
    assert not rep.independent and not rep.f1_is_x1


def test_independence_veronese():
    assert components_independent(veronese(F2, 3))


def test_theta_conditions():
    theta = MPoly.monomial(F3, 1, (1,), Laurent.X(F3, 2))
    m = veronese(F3, 2, theta=theta)
    rep = check_conditions(m)
    assert not rep.theta_ok  # |d theta| = q^2 q^{-1} = q > 1 on the domain


def test_ultrametric_mean_value_on_grid():
    # |g(x) - g(y)| <= max(grad bound, second-difference bound) ||x - y||
    from ffdioph.ffield import GridSpec

    m = veronese(F3, 2)
    g = m.components[1]
    cells = list(GridSpec(F3, 1, 3).cells())
    pts = [c.center for c in cells]
    for x in pts:
        for y in pts:
            diff = (g.eval(x) - g.eval(y)).abs_value()
            sep = (x[0] - y[0]).abs_value()
            if sep.is_zero:
                assert diff.is_zero
                continue
            # grad and second-difference bounds are both <= 1 here
            assert diff <= AbsValue(0) * sep
