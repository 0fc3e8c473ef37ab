import math
from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tropint import plpoly as pl, puiseux as pu

EX1 = "x*y^2 + e*y^2 + x^2*y + e^2*x*y + e^5*y + e^8"
EX2 = "y^3 + (x + e^4)*y^2 + e^2*(x + e)*(x + 2*e)*y + e^10"


def ex1():
    return pl.parse(EX1)


def ex2():
    return pl.parse(EX2)


# ---------------------------------------------------------------------------
# parser


def test_parse_support_example_one():
    # oracle: expansion by hand
    f = ex1()
    got = {w: pu.val(c) for w, c in f.coeffs.items()}
    assert got == {(1, 2): 0, (0, 2): 1, (2, 1): 0, (1, 1): 2,
                   (0, 1): 5, (0, 0): 8}


def test_parse_support_example_two():
    # oracle: e^2*(x+e)*(x+2e) = e^2 x^2 + 3 e^3 x + 2 e^4, expanded by hand
    f = ex2()
    got = {w: (pu.val(c), pu.leading_coeff(c)) for w, c in f.coeffs.items()}
    assert got == {(0, 3): (0, 1), (1, 2): (0, 1), (0, 2): (4, 1),
                   (2, 1): (2, 1), (1, 1): (3, 3), (0, 1): (4, 2),
                   (0, 0): (10, 1)}


def test_parse_complex_literals():
    f = pl.parse("2 + 3i + x*y")
    assert pu.leading_coeff(f.coeffs[(0, 0)]) == 2 + 3j


def test_parse_negative_variable_exponent():
    f = pl.parse("x^-1*y + 1")
    assert (-1, 1) in f.coeffs


def test_parse_rational_exponent_of_e():
    f = pl.parse("2*e^3/2 - e^4 + x")
    c = f.coeffs[(0, 0)]
    assert dict(c.terms) == {F(3, 2): 2 + 0j, F(4): -1 + 0j}


def test_parse_rejects_rational_variable_exponent():
    with pytest.raises(pl.ParseError):
        pl.parse("x^3/2 + 1")


def test_parse_rejects_zero_polynomial():
    with pytest.raises(pl.ParseError, match="zero"):
        pl.parse("x*y - x*y")


def test_parse_reports_position():
    with pytest.raises(pl.ParseError, match="position"):
        pl.parse("x + * y")


def test_parse_power_of_parenthesized():
    f = pl.parse("(x + y)^2")
    assert set(f.coeffs) == {(2, 0), (1, 1), (0, 2)}
    assert pu.leading_coeff(f.coeffs[(1, 1)]) == 2


# ---------------------------------------------------------------------------
# tropical valuation, theta sets, truncation


VERTS1 = {(F(1), F(1)): [(0, 2), (1, 2), (2, 1)],
          (F(2), F(4)): [(0, 0), (1, 1), (2, 1)],
          (F(2), F(3)): [(0, 2), (1, 1), (2, 1)],
          (F(5, 2), F(7, 2)): [(0, 0), (0, 2), (1, 1)]}


def test_theta_sets_at_example_one_vertices():
    f = ex1()
    for P, want in VERTS1.items():
        assert pl.theta_set(f, P) == want


def test_tropical_val_values():
    f = ex1()
    assert pl.tropical_val(f, (1, 1)) == 3
    assert pl.tropical_val(f, (2, 4)) == 8
    assert pl.tropical_val(f, (F(5, 2), F(7, 2))) == 8


def test_theta_generic_point_is_singleton():
    assert pl.theta_set(ex1(), (0, 1)) == [(2, 1)]


def test_theta_on_edge_interior():
    # vertical edge between (2,3) and (2,4)
    assert pl.theta_set(ex1(), (2, F(7, 2))) == [(1, 1), (2, 1)]


def test_truncation_goldens():
    f1, f2 = ex1(), ex2()
    cases = [
        (f1, (1, 1), {(1, 2): 1, (0, 2): 1, (2, 1): 1}),
        (f1, (2, 4), {(2, 1): 1, (1, 1): 1, (0, 0): 1}),
        (f1, (2, 3), {(0, 2): 1, (2, 1): 1, (1, 1): 1}),
        (f1, (F(5, 2), F(7, 2)), {(0, 2): 1, (1, 1): 1, (0, 0): 1}),
        (f2, (1, 6), {(2, 1): 1, (1, 1): 3, (0, 1): 2, (0, 0): 1}),
        (f2, (1, 3), {(1, 2): 1, (2, 1): 1, (1, 1): 3, (0, 1): 2}),
        (f2, (2, 2), {(0, 3): 1, (1, 2): 1, (0, 1): 2}),
    ]
    for f, P, want in cases:
        tr = pl.truncation(f, P)
        assert set(tr.main) == set(want)
        for w, u in want.items():
            assert abs(tr.main[w] - u) < 1e-12


def test_delta_norm_closed_form_and_decay():
    # at the (1,1) vertex of Example I the largest tail term is exactly et^1
    f = ex1()
    for eps in (0.2, 0.1, 0.05):
        assert abs(pl.delta_norm(f, (1, 1), eps) - math.exp(-1 / eps)) < 1e-15
    a, b, c = (pl.delta_norm(f, (1, 1), e) for e in (0.2, 0.1, 0.05))
    assert a > b > c


rat_pts = st.tuples(st.fractions(min_value=-4, max_value=4, max_denominator=6),
                    st.fractions(min_value=-4, max_value=4, max_denominator=6))


@given(rat_pts)
@settings(max_examples=50, deadline=None)
def test_q_transform_moves_val_to_origin(P):
    f = ex1()
    g = pl.q_transform(f, P)
    assert pl.tropical_val(g, (0, 0)) == pl.tropical_val(f, P)
    assert pl.theta_set(g, (0, 0)) == pl.theta_set(f, P)


@given(rat_pts)
@settings(max_examples=50, deadline=None)
def test_truncation_commutes_with_q_transform(P):
    f = ex2()
    a = pl.truncation(f, P)
    b = pl.truncation(pl.q_transform(f, P), (0, 0))
    assert a.theta == b.theta
    assert set(a.main) == set(b.main)
    for w in a.main:
        assert abs(a.main[w] - b.main[w]) < 1e-12


# ---------------------------------------------------------------------------
# y-polynomial view and root data


def test_as_y_polynomial_example_one():
    N, rows = pl.as_y_polynomial(ex1())
    assert N == 2
    # a_0 = x + e
    assert pu.val(rows[0].coeffs[0]) == 1 and pu.val(rows[0].coeffs[1]) == 0
    # a_1 = x^2 + e^2 x + e^5
    assert [pu.val(c) for c in rows[1].coeffs] == [5, 2, 0]
    # a_2 = e^8
    assert pu.val(rows[2].coeffs[0]) == 8


def test_as_y_polynomial_rejects_negative_exponents():
    with pytest.raises(pl.PLError, match="premultiply"):
        pl.as_y_polynomial(pl.parse("y + y^-1"))


def test_coefficient_root_data_example_one():
    _, rows = pl.as_y_polynomial(ex1())
    d0 = pl.coefficient_root_data(rows[0])
    assert (d0.A, d0.m) == (0, 0) and abs(d0.c - 1) < 1e-12
    assert [(B, round(u.real, 9)) for B, u in d0.roots] == [(1, -1)]
    d1 = pl.coefficient_root_data(rows[1])
    assert [(B, round(u.real, 9)) for B, u in d1.roots] == [(2, -1), (3, -1)]
    d2 = pl.coefficient_root_data(rows[2])
    assert d2.A == 8 and d2.roots == []


def test_coefficient_root_data_example_two():
    _, rows = pl.as_y_polynomial(ex2())
    d2 = pl.coefficient_root_data(rows[2])
    assert d2.A == 2
    assert [(B, round(u.real, 9)) for B, u in d2.roots] == [(1, -2), (1, -1)]


def test_genericness_examples_pass_per_level():
    for f in (ex1(), ex2()):
        rep = pl.genericness_check(f)
        assert rep["ok"] and rep["per_level"]["ok"]
        # the strict global reading disagrees and that is surfaced
        assert not rep["strict"]["ok"]
        assert rep["discrepancy"]


def test_genericness_detects_equal_units_on_a_level():
    f = pl.parse("(x + e)^2*y + e^5")
    rep = pl.genericness_check(f)
    assert not rep["ok"]
    assert rep["per_level"]["collisions"]


def test_genericness_strict_mode_selected():
    rep = pl.genericness_check(ex1(), strict=True)
    assert rep["mode"] == "strict" and not rep["ok"]


# ---------------------------------------------------------------------------
# transforms and evaluation


def test_affine_transform_requires_det_one():
    with pytest.raises(pl.PLError, match="determinant"):
        pl.affine_transform_poly(ex1(), ((2, 0), (0, 1)))


def test_affine_transform_support_oracle():
    # theta = [[1,-1],[0,1]] sends support w to (w1, w1+w2); worked by hand
    ft = pl.affine_transform_poly(ex1(), ((1, -1), (0, 1)))
    assert sorted(ft.coeffs) == [(0, 0), (0, 1), (0, 2), (1, 2), (1, 3), (2, 3)]


def unimodular(seed):
    rng = np.random.default_rng(seed)
    m = np.eye(2, dtype=int)
    for _ in range(4):
        k = int(rng.integers(-2, 3))
        if rng.integers(2):
            m = m @ np.array([[1, k], [0, 1]])
        else:
            m = m @ np.array([[1, 0], [k, 1]])
    return ((int(m[0, 0]), int(m[0, 1])), (int(m[1, 0]), int(m[1, 1])))


@given(st.integers(min_value=0, max_value=10 ** 6), rat_pts)
@settings(max_examples=50, deadline=None)
def test_val_invariant_under_unimodular_transform(seed, P):
    f = ex1()
    theta = unimodular(seed)
    ft = pl.affine_transform_poly(f, theta)
    assert pl.tropical_val(ft, pl.transform_point(theta, P)) == \
        pl.tropical_val(f, P)


def test_monomial_map_matches_support_transform():
    # a numeric zero of f maps to a numeric zero of the transformed poly
    f = ex1()
    theta = ((1, -1), (0, 1))
    ft = pl.affine_transform_poly(f, theta)
    g = pl.transform_monomial_map(theta)
    eps = 0.4
    x = 0.7 + 0.2j
    _, rows = pl.as_y_polynomial(f)
    coeffs = [sum(pu.eval_at(c, eps) * x ** k for k, c in enumerate(a.coeffs))
              for a in rows]
    for y in np.roots(coeffs):
        assert abs(pl.eval_complex(f, x, y, eps)) < 1e-10
        xt, yt = g(x, y)
        assert abs(pl.eval_complex(ft, xt, yt, eps)) < 1e-8


def test_eval_complex_matches_direct_sum():
    f = ex2()
    eps, x, y = 0.35, 0.3 + 0.1j, -0.2 + 0.7j
    direct = sum(pu.eval_at(c, eps) * x ** i * y ** j
                 for (i, j), c in f.coeffs.items())
    assert abs(pl.eval_complex(f, x, y, eps) - direct) < 1e-12 * abs(direct)
