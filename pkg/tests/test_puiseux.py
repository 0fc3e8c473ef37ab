import math
from fractions import Fraction as F

import pytest
from hypothesis import assume, given, settings, strategies as st

from tropint import puiseux as pu


def S(d, trunc=None):
    return pu.series(d, trunc)


# ---------------------------------------------------------------------------
# valuation and leading data


def test_val_of_simple_series():
    assert pu.val(S({F(3, 2): 2, 4: -1})) == F(3, 2)


def test_val_of_zero_is_infinite():
    assert pu.val(pu.ZERO) == math.inf


def test_val_of_truncated_empty_reports_bound():
    s = pu.series({}, trunc_order=3)
    assert pu.val(s) == 3


def test_leading_unit_of_unit_series():
    assert pu.leading_unit(S({0: -1, 1: 2})) == -1


def test_leading_unit_rejects_positive_valuation():
    with pytest.raises(pu.PuiseuxError):
        pu.leading_unit(pu.et_power(F(1, 2)))


def test_leading_coeff_ignores_dust():
    s = S({0: 1e-13, 1: 2.0})
    assert pu.leading_coeff(s) == 2.0
    assert pu.leading_exponent(s) == 1


# ---------------------------------------------------------------------------
# ring operations and truncation bookkeeping


def test_exact_product():
    a = S({0: 1, 1: 1})
    b = S({0: 1, 1: -1})
    c = pu.mul(a, b)
    assert dict(c.terms) == {F(0): 1 + 0j, F(2): -1 + 0j}
    assert c.trunc_order is None


def test_add_keeps_smaller_truncation():
    a = S({0: 1}, trunc=2)
    b = S({1: 1}, trunc=5)
    c = pu.add(a, b)
    assert c.trunc_order == 2
    assert dict(c.terms) == {F(0): 1 + 0j, F(1): 1 + 0j}


def test_mul_shifts_truncation_by_valuation():
    a = S({0: 1, 1: 1}, trunc=2)
    c = pu.mul(a, pu.et_power(1))
    assert c.trunc_order == 3
    assert dict(c.terms) == {F(1): 1 + 0j, F(2): 1 + 0j}


def test_mul_by_exact_zero_is_exact_zero():
    a = S({0: 1}, trunc=2)
    c = pu.mul(a, pu.ZERO)
    assert pu.is_zero(c) and c.trunc_order is None


def test_shift_moves_exponents_and_truncation():
    a = S({0: 1, 1: 2}, trunc=3)
    c = pu.shift(a, F(1, 2))
    assert dict(c.terms) == {F(1, 2): 1 + 0j, F(3, 2): 2 + 0j}
    assert c.trunc_order == F(7, 2)


def test_truncate_drops_terms():
    a = S({0: 1, 2: 5})
    c = pu.truncate(a, 2)
    assert dict(c.terms) == {F(0): 1 + 0j}
    assert c.trunc_order == 2


def test_eval_at_matches_closed_form():
    s = S({F(3, 2): 2})
    got = pu.eval_at(s, 0.5)
    assert abs(got - 2 * math.exp(-3.0)) < 1e-15


# ---------------------------------------------------------------------------
# property suites

exps = st.fractions(min_value=-3, max_value=5, max_denominator=4)
coefs = st.complex_numbers(min_magnitude=0.1, max_magnitude=10,
                           allow_nan=False, allow_infinity=False)


@st.composite
def nonzero_series(draw):
    n = draw(st.integers(min_value=1, max_value=4))
    terms = {}
    for _ in range(n):
        terms[draw(exps)] = draw(coefs)
    return pu.series(terms)


@given(nonzero_series(), nonzero_series())
@settings(max_examples=60, deadline=None)
def test_val_multiplicative(a, b):
    c = pu.mul(a, b)
    # leading coefficients are products of nonzero numbers, no cancellation
    assert pu.val(c) == pu.val(a) + pu.val(b)


@given(nonzero_series(), nonzero_series())
@settings(max_examples=60, deadline=None)
def test_val_ultrametric(a, b):
    c = pu.add(a, b)
    if pu.val(a) != pu.val(b):
        assert pu.val(c) == min(pu.val(a), pu.val(b))
    elif not pu.is_zero(c):
        assert pu.val(c) >= min(pu.val(a), pu.val(b))


@given(nonzero_series(), nonzero_series(), st.floats(min_value=0.3, max_value=1.0))
@settings(max_examples=40, deadline=None)
def test_eval_is_ring_hom(a, b, eps):
    pa, pb = pu.eval_at(a, eps), pu.eval_at(b, eps)
    scale = max(1.0, abs(pa), abs(pb), abs(pa * pb))
    assert abs(pu.eval_at(pu.add(a, b), eps) - (pa + pb)) < 1e-9 * scale
    assert abs(pu.eval_at(pu.mul(a, b), eps) - pa * pb) < 1e-9 * scale


# ---------------------------------------------------------------------------
# Newton-Puiseux root lifting


def roots_as_pairs(roots):
    return sorted((pu.val(r), round(pu.leading_coeff(r).real, 6),
                   round(pu.leading_coeff(r).imag, 6)) for r in roots)


def test_square_root_branch():
    p = pu.poly([pu.et_power(3, -1), pu.ZERO, pu.ONE])  # x^2 - e^3
    roots = pu.newton_puiseux_roots(p, 5)
    assert roots_as_pairs(roots) == [(F(3, 2), -1.0, 0.0), (F(3, 2), 1.0, 0.0)]


def test_two_separated_roots():
    # (x + e^2)(x + e^3)
    p = pu.poly([pu.et_power(5), pu.series({2: 1, 3: 1}), pu.ONE])
    roots = pu.newton_puiseux_roots(p, 8)
    assert roots_as_pairs(roots) == [(F(2), -1.0, 0.0), (F(3), -1.0, 0.0)]
    for r in roots:
        assert pu.val(pu.poly_eval(p, r)) >= 8


def test_double_root():
    p = pu.poly([pu.et_power(2), pu.et_power(1, 2), pu.ONE])  # (x+e)^2
    roots = pu.newton_puiseux_roots(p, 8)
    assert len(roots) == 2
    for r in roots:
        assert pu.val(r) == 1
        assert abs(pu.leading_coeff(r) + 1) < 1e-9


def test_zero_roots_counted():
    p = pu.poly([pu.ZERO, pu.ZERO, pu.ONE, pu.ONE])  # x^2 (x + 1)
    roots = pu.newton_puiseux_roots(p, 6)
    vals = sorted(pu.val(r) for r in roots)
    assert vals == [0, math.inf, math.inf]


def test_truncated_root_of_infinite_series():
    # (1+e)x - 1 has root 1 - e + e^2 - ...
    p = pu.poly([pu.from_scalar(-1), pu.series({0: 1, 1: 1})])
    (r,) = pu.newton_puiseux_roots(p, 4)
    assert r.trunc_order == 4
    assert dict(r.terms) == {F(0): 1 + 0j, F(1): -1 + 0j,
                             F(2): 1 + 0j, F(3): -1 + 0j}
    assert pu.val(pu.poly_eval(p, r)) >= 4


def test_budget_exhaustion_is_diagnosed():
    p = pu.poly([pu.from_scalar(-1), pu.series({0: 1, 1: 1})])
    with pytest.raises(pu.PuiseuxError, match="slope"):
        pu.newton_puiseux_roots(p, 100, budget=3)


def test_root_requested_order_respected():
    p = pu.poly([pu.from_scalar(-1), pu.series({0: 1, 1: 1})])
    for order in [2, 5, 8]:
        (r,) = pu.newton_puiseux_roots(p, order)
        assert pu.val(pu.poly_eval(p, r)) >= order


mono_exp = st.fractions(min_value=-2, max_value=3, max_denominator=2)


def poly_mul(a, b):
    out = [pu.ZERO] * (len(a.coeffs) + len(b.coeffs) - 1)
    for i, ca in enumerate(a.coeffs):
        for j, cb in enumerate(b.coeffs):
            out[i + j] = pu.add(out[i + j], pu.mul(ca, cb))
    return pu.poly(out)


@given(st.lists(st.tuples(mono_exp, coefs), min_size=1, max_size=3))
@settings(max_examples=40, deadline=None)
def test_roots_of_split_polynomial_recovered(leads):
    # p = prod (x - u*e^q); leading data of the lifted roots must match
    for i, (qi, ui) in enumerate(leads):
        for qj, uj in leads[i + 1:]:
            assume(qi != qj or abs(ui - uj) > 1e-2 * max(abs(ui), abs(uj)))
    p = pu.poly([pu.ONE])
    for q, u in leads:
        p = poly_mul(p, pu.poly([pu.et_power(q, -u), pu.ONE]))
    roots = pu.newton_puiseux_roots(p, 10)
    assert len(roots) == len(leads)
    key = lambda t: (t[0], round(t[1].real, 6), round(t[1].imag, 6))
    want = sorted(((F(q), complex(u)) for q, u in leads), key=key)
    got = sorted(((pu.val(r), pu.leading_coeff(r)) for r in roots), key=key)
    for (qa, ua), (qb, ub) in zip(want, got):
        assert qa == qb
        assert abs(ua - ub) < 1e-6 * max(1.0, abs(ua))
