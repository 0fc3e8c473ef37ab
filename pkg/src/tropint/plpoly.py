"""Bivariate polynomials over the Puiseux series field and their tropical data.

A PLPolynomial is a finite support map (i, j) -> PuiseuxSeries for the
monomial x^i y^j (negative integer exponents allowed).  The module provides
the text parser, the piecewise linear valuation function Val(P; f), argmin
theta sets, the torus rescaling q_transform, truncation at a point, the tail
norm, the y-polynomial coefficient view with its factored root data, the
genericness check on coefficient roots, unimodular monomial changes of
variables, and plain complex evaluation.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from . import puiseux as pu
from .puiseux import PuiseuxSeries


class PLError(ValueError):
    pass


class ParseError(PLError):
    pass


@dataclass
class PLPolynomial:
    """Support map (i, j) -> series coefficient; n = 2 variables fixed."""

    coeffs: dict  # {(int, int): PuiseuxSeries}

    def support(self):
        return sorted(self.coeffs)

    def __repr__(self):
        parts = []
        for w in self.support():
            parts.append("(%s)*x^%d*y^%d" % (pu.pretty(self.coeffs[w]), *w))
        return "PLPolynomial[%s]" % " + ".join(parts)


def plpoly(coeffs) -> PLPolynomial:
    """Build from a {(i, j): series-or-scalar} map, dropping exact zeros."""
    out = {}
    for w, c in coeffs.items():
        s = pu.as_series(c)
        if not pu.is_zero(s):
            out[(int(w[0]), int(w[1]))] = s
    return PLPolynomial(out)


def add_poly(f: PLPolynomial, g: PLPolynomial) -> PLPolynomial:
    acc = dict(f.coeffs)
    for w, c in g.coeffs.items():
        acc[w] = pu.add(acc[w], c) if w in acc else c
    return plpoly(acc)


def neg_poly(f: PLPolynomial) -> PLPolynomial:
    return PLPolynomial({w: pu.neg(c) for w, c in f.coeffs.items()})


def mul_poly(f: PLPolynomial, g: PLPolynomial) -> PLPolynomial:
    acc = {}
    for (i1, j1), c1 in f.coeffs.items():
        for (i2, j2), c2 in g.coeffs.items():
            w = (i1 + i2, j1 + j2)
            t = pu.mul(c1, c2)
            acc[w] = pu.add(acc[w], t) if w in acc else t
    return plpoly(acc)


def monomial_mul(f: PLPolynomial, dx: int, dy: int,
                 c: PuiseuxSeries | None = None) -> PLPolynomial:
    """Multiply by c * x^dx * y^dy (c defaults to 1)."""
    out = {}
    for (i, j), s in f.coeffs.items():
        out[(i + dx, j + dy)] = s if c is None else pu.mul(c, s)
    return PLPolynomial(out)


# ---------------------------------------------------------------------------
# parser


_DIGITS = "0123456789"


def _tokenize(text):
    toks = []
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch.isspace():
            i += 1
            continue
        if ch in "+-*^()/":
            toks.append((ch, ch, i))
            i += 1
            continue
        if ch in "xy":
            toks.append(("var", ch, i))
            i += 1
            continue
        if ch == "e":
            toks.append(("e", ch, i))
            i += 1
            continue
        if ch == "i":
            toks.append(("num", 1j, i))
            i += 1
            continue
        if ch in _DIGITS:
            j = i
            while j < n and text[j] in _DIGITS:
                j += 1
            if j < n and text[j] == "." :
                j += 1
                while j < n and text[j] in _DIGITS:
                    j += 1
                value = float(text[i:j])
                integral = False
            else:
                value = int(text[i:j])
                integral = True
            if j < n and text[j] == "i":
                toks.append(("num", complex(0, value), i))
                j += 1
            elif integral:
                toks.append(("int", value, i))
            else:
                toks.append(("num", float(value), i))
            i = j
            continue
        raise ParseError("unexpected character %r at position %d" % (ch, i))
    toks.append(("end", None, n))
    return toks


class _Parser:
    def __init__(self, text):
        self.text = text
        self.toks = _tokenize(text)
        self.k = 0

    def peek(self):
        return self.toks[self.k]

    def next(self):
        t = self.toks[self.k]
        self.k += 1
        return t

    def fail(self, msg):
        kind, _, pos = self.peek()
        raise ParseError("%s at position %d (near %r)"
                         % (msg, pos, self.text[pos:pos + 8]))

    def parse(self) -> PLPolynomial:
        f = self.poly()
        if self.peek()[0] != "end":
            self.fail("trailing input")
        if not f.coeffs:
            raise ParseError("polynomial is identically zero")
        return f

    def poly(self) -> PLPolynomial:
        sign = 1
        if self.peek()[0] in "+-":
            sign = -1 if self.next()[0] == "-" else 1
        f = self.term()
        if sign < 0:
            f = neg_poly(f)
        while self.peek()[0] in "+-":
            op = self.next()[0]
            g = self.term()
            f = add_poly(f, neg_poly(g) if op == "-" else g)
        return f

    def term(self) -> PLPolynomial:
        f = self.factor()
        while self.peek()[0] == "*":
            self.next()
            f = mul_poly(f, self.factor())
        return f

    def factor(self) -> PLPolynomial:
        kind, value, pos = self.next()
        if kind == "var":
            expo = 1
            if self.peek()[0] == "^":
                self.next()
                expo = self.signed_int("variable exponent")
            return plpoly({(expo, 0) if value == "x" else (0, expo): pu.ONE})
        if kind == "e":
            q = Fraction(1)
            if self.peek()[0] == "^":
                self.next()
                num = self.signed_int("exponent of e")
                den = 1
                if self.peek()[0] == "/":
                    self.next()
                    den = self.unsigned_int("denominator of e exponent")
                q = Fraction(num, den)
            return plpoly({(0, 0): pu.et_power(q)})
        if kind in ("num", "int"):
            base = plpoly({(0, 0): pu.from_scalar(value)})
            if self.peek()[0] == "^":
                self.next()
                expo = self.signed_int("numeric exponent")
                if expo < 0:
                    self.fail("negative exponent allowed only on variables and e")
                return _int_power(base, expo)
            return base
        if kind == "(":
            f = self.poly()
            if self.peek()[0] != ")":
                self.fail("expected ')'")
            self.next()
            if self.peek()[0] == "^":
                self.next()
                expo = self.signed_int("parenthesized exponent")
                if expo < 0:
                    self.fail("negative exponent allowed only on variables and e")
                f = _int_power(f, expo)
            return f
        self.k -= 1
        self.fail("expected a factor")

    def signed_int(self, what) -> int:
        sign = 1
        if self.peek()[0] == "-":
            self.next()
            sign = -1
        kind, value, _ = self.peek()
        if kind != "int":
            self.fail("expected integer %s" % what)
        self.next()
        return sign * value

    def unsigned_int(self, what) -> int:
        kind, value, _ = self.peek()
        if kind != "int":
            self.fail("expected integer %s" % what)
        self.next()
        return value


def _int_power(f: PLPolynomial, k: int) -> PLPolynomial:
    out = plpoly({(0, 0): pu.ONE})
    for _ in range(k):
        out = mul_poly(out, f)
    return out


def parse(text: str) -> PLPolynomial:
    """Parse a polynomial in x, y and the series parameter e.

    Syntax: sums of products of factors; factors are x, y, e, numbers
    (including complex like 3i) or parenthesized subexpressions, optionally
    raised to integer powers.  Only e takes rational exponents (e^3/2,
    e^-2).  The zero polynomial and malformed input raise ParseError with
    the offending position.
    """
    return _Parser(text).parse()


# ---------------------------------------------------------------------------
# tropical data


def _as_point(P):
    return (Fraction(P[0]), Fraction(P[1]))


def tropical_val(f: PLPolynomial, P):
    """Val(P; f) = min over support of val(a_w) + <w, P>."""
    X, Y = _as_point(P)
    if not f.coeffs:
        raise PLError("empty polynomial")
    return min(pu.val(c) + w[0] * X + w[1] * Y for w, c in f.coeffs.items())


def theta_set(f: PLPolynomial, P):
    """Support points achieving the minimum in Val(P; f), sorted."""
    X, Y = _as_point(P)
    forms = {w: pu.val(c) + w[0] * X + w[1] * Y for w, c in f.coeffs.items()}
    m = min(forms.values())
    return sorted(w for w, v in forms.items() if v == m)


def q_transform(f: PLPolynomial, P) -> PLPolynomial:
    """Rescale variables toward P: coefficient at w becomes a_w * et^<w,P>."""
    X, Y = _as_point(P)
    return PLPolynomial({
        w: pu.shift(c, w[0] * X + w[1] * Y) for w, c in f.coeffs.items()})


@dataclass
class TruncationResult:
    main: dict          # {(i, j): complex unit}, support = theta
    theta: list         # sorted lattice points
    valuation_at_P: Fraction


def truncation(f: PLPolynomial, P) -> TruncationResult:
    """Unit-coefficient polynomial keeping the terms dominant at P."""
    X, Y = _as_point(P)
    theta = theta_set(f, P)
    V = tropical_val(f, P)
    main = {}
    for w in theta:
        resc = pu.shift(f.coeffs[w], w[0] * X + w[1] * Y - V)
        main[w] = pu.leading_unit(resc)
    return TruncationResult(main, theta, V)


def delta_norm(f: PLPolynomial, P, eps: float) -> float:
    """Sup of coefficient magnitudes of the truncation tail at concrete eps."""
    X, Y = _as_point(P)
    V = tropical_val(f, P)
    tr = truncation(f, P)
    worst = 0.0
    for w, c in f.coeffs.items():
        resc = pu.shift(c, w[0] * X + w[1] * Y - V)
        if w in tr.main:
            resc = pu.add(resc, pu.from_scalar(-tr.main[w]))
        worst = max(worst, abs(pu.eval_at(resc, eps)))
    return worst


# ---------------------------------------------------------------------------
# y-polynomial view and coefficient root data


def y_degree_range(f: PLPolynomial):
    js = [w[1] for w in f.coeffs]
    return min(js), max(js)

def x_degree_range(f: PLPolynomial):
    xs = [w[0] for w in f.coeffs]
    return min(xs), max(xs)


def partial_x(f: PLPolynomial) -> PLPolynomial:
    """Formal x-derivative (Laurent exponents allowed)."""
    coeffs = {}
    for (i, j), s in f.coeffs.items():
        if i != 0:
            coeffs[(i - 1, j)] = pu.scale(complex(i), s)
    return plpoly(coeffs)


def partial_y(f: PLPolynomial) -> PLPolynomial:
    """Formal y-derivative (Laurent exponents allowed)."""
    coeffs = {}
    for (i, j), s in f.coeffs.items():
        if j != 0:
            coeffs[(i, j - 1)] = pu.scale(complex(j), s)
    return plpoly(coeffs)


def clear_negative_exponents(f: PLPolynomial):
    """Multiply by the smallest monomial making all exponents non-negative.

    Returns (g, (sx, sy)) with g = x^sx y^sy f.  The tropical curve is
    unchanged; dual support data shifts by (sx, sy).
    """
    support = f.support()
    if not support:
        raise PLError("polynomial is zero")
    sx = max(0, -min(w[0] for w in support))
    sy = max(0, -min(w[1] for w in support))
    if sx == 0 and sy == 0:
        return f, (0, 0)
    return monomial_mul(f, sx, sy), (sx, sy)


def as_y_polynomial(f: PLPolynomial):
    """Return (N, [a_0, ..., a_N]) with f = sum_i a_i(x) y^(N-i).

    Each a_i is a UnivariateSeriesPoly in x.  Negative exponents are
    rejected: premultiply by a suitable monomial (monomial_mul) first.
    """
    jmin, jmax = y_degree_range(f)
    imin, _ = x_degree_range(f)
    if jmin < 0 or imin < 0:
        raise PLError(
            "negative exponents present; premultiply by x^%d*y^%d first"
            % (max(0, -imin), max(0, -jmin)))
    N = jmax
    rows = []
    for i in range(N + 1):
        j = N - i
        xs = {w[0]: c for w, c in f.coeffs.items() if w[1] == j}
        deg = max(xs) if xs else 0
        rows.append(pu.poly([xs.get(k, pu.ZERO) for k in range(deg + 1)]))
    return N, rows


@dataclass
class CoefficientRootData:
    """Factored view a(x) = c * et^A * x^m * prod_j (x - u_j et^{B_j})."""

    c: complex
    A: Fraction
    m: int
    roots: list  # [(Fraction B_j, complex u_j leading unit)], sorted


def coefficient_root_data(a: pu.UnivariateSeriesPoly,
                          order=12) -> CoefficientRootData:
    deg = pu.poly_degree(a)
    if deg == 0 and pu.is_zero(a.coeffs[0]):
        raise PLError("coefficient_root_data of the zero polynomial")
    m = 0
    while m < deg and pu.is_zero(a.coeffs[m]):
        m += 1
    lead = a.coeffs[deg]
    A = pu.val(lead)
    c = pu.leading_coeff(lead)
    reduced = pu.poly(list(a.coeffs[m:deg + 1]))
    roots = []
    if deg - m > 0:
        for r in pu.newton_puiseux_roots(reduced, order):
            roots.append((pu.val(r), pu.leading_coeff(r)))
    roots.sort(key=lambda t: (t[0], round(t[1].real, 9), round(t[1].imag, 9)))
    return CoefficientRootData(c, A, m, roots)


def genericness_check(f: PLPolynomial, strict=False, unit_tol=1e-9):
    """Distinctness of coefficient root units.

    Default reading: within each coefficient a_i, roots sharing a valuation
    level B must have pairwise distinct leading units.  Strict reading: all
    root units over all i, j are pairwise distinct.  Both verdicts are
    reported; `ok` follows the selected mode and any disagreement between
    the two readings is flagged rather than hidden.
    """
    N, rows = as_y_polynomial(f)
    all_units = []      # (i, B, u)
    per_level_collisions = []
    for i, a in enumerate(rows):
        if pu.poly_degree(a) == 0 and pu.is_zero(a.coeffs[0]):
            continue
        data = coefficient_root_data(a)
        by_level = {}
        for B, u in data.roots:
            by_level.setdefault(B, []).append(u)
            all_units.append((i, B, u))
        for B, units in by_level.items():
            for k1 in range(len(units)):
                for k2 in range(k1 + 1, len(units)):
                    s = max(1.0, abs(units[k1]), abs(units[k2]))
                    if abs(units[k1] - units[k2]) <= unit_tol * s:
                        per_level_collisions.append(
                            {"i": i, "B": B, "units": [units[k1], units[k2]]})
    strict_collisions = []
    for k1 in range(len(all_units)):
        for k2 in range(k1 + 1, len(all_units)):
            u1, u2 = all_units[k1][2], all_units[k2][2]
            s = max(1.0, abs(u1), abs(u2))
            if abs(u1 - u2) <= unit_tol * s:
                strict_collisions.append(
                    {"first": all_units[k1], "second": all_units[k2]})
    per_level_ok = not per_level_collisions
    strict_ok = not strict_collisions
    return {
        "mode": "strict" if strict else "per_level",
        "ok": strict_ok if strict else per_level_ok,
        "per_level": {"ok": per_level_ok, "collisions": per_level_collisions},
        "strict": {"ok": strict_ok, "collisions": strict_collisions},
        "discrepancy": per_level_ok != strict_ok,
    }


# ---------------------------------------------------------------------------
# monomial changes of variables and evaluation


def _check_unimodular(theta):
    (a, b), (c, d) = theta
    for v in (a, b, c, d):
        if int(v) != v:
            raise PLError("transform entries must be integers")
    if a * d - b * c != 1:
        raise PLError("transform must have determinant 1, got %d"
                      % (a * d - b * c))
    return (int(a), int(b)), (int(c), int(d))


def affine_transform_poly(f: PLPolynomial, theta) -> PLPolynomial:
    """Unimodular monomial substitution; tropical curves map by theta.

    Support transforms by the inverse transpose so that the valuation
    function satisfies Val(theta P; new f) = Val(P; f).
    """
    (a, b), (c, d) = _check_unimodular(theta)
    out = {}
    for (i, j), s in f.coeffs.items():
        w = (d * i - c * j, -b * i + a * j)
        out[w] = s
    return PLPolynomial(out)


def transform_point(theta, P):
    (a, b), (c, d) = theta
    X, Y = _as_point(P)
    return (a * X + b * Y, c * X + d * Y)


def transform_monomial_map(theta):
    """The complex coordinate map matching affine_transform_poly.

    Returns g with g(x, y) = (x^a y^b, x^c y^d): a point on V(f) maps to a
    point on V(affine_transform_poly(f, theta)).
    """
    (a, b), (c, d) = theta

    def g(x, y):
        return (x ** a * y ** b, x ** c * y ** d)
    return g


def eval_complex(f: PLPolynomial, x: complex, y: complex, eps: float) -> complex:
    """Evaluate numerically at concrete eps (Horner over y degrees)."""
    by_j = {}
    for (i, j), c in f.coeffs.items():
        by_j[j] = by_j.get(j, 0j) + pu.eval_at(c, eps) * x ** i
    total = 0j
    prev = None
    for j in sorted(by_j, reverse=True):
        if prev is None:
            total = by_j[j]
        else:
            total = total * y ** (prev - j) + by_j[j]
        prev = j
    if prev is not None and prev != 0:
        total = total * y ** prev
    return total
