"""Truncated convergent Puiseux series in the small parameter et = exp(-1/eps).

A series is a finite sum  sum_q c_q * et^q  with complex coefficients and
rational exponents q, together with an optional truncation order.  Exponents at
or beyond the truncation order are unknown rather than zero; trunc_order None
means the series is exact as written.  The valuation val reads off the lowest
exponent, val(0) = +infinity, and the leading unit is the coefficient at
exponent zero of a valuation-zero series (the eps -> 0+ limit).

Coefficients are double precision complex numbers, exponents are exact
fractions.Fraction values.  Arithmetic drops exactly-cancelled terms; the
root lifter additionally prunes terms that are negligible relative to the
polynomial scale (default 1e-12) so that floating cancellation does not stall
the Newton polygon.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

Rational = Fraction

INF = math.inf


class PuiseuxError(ValueError):
    pass


@dataclass(frozen=True)
class PuiseuxSeries:
    """Finite term list sorted by exponent, plus optional truncation order."""

    terms: tuple  # ((Fraction exponent, complex coefficient), ...)
    trunc_order: Fraction | None = None

    def __add__(self, other):
        return add(self, as_series(other))

    def __radd__(self, other):
        return add(as_series(other), self)

    def __sub__(self, other):
        return add(self, neg(as_series(other)))

    def __rsub__(self, other):
        return add(as_series(other), neg(self))

    def __mul__(self, other):
        return mul(self, as_series(other))

    def __rmul__(self, other):
        return mul(as_series(other), self)

    def __neg__(self):
        return neg(self)

    def __repr__(self):
        return "PuiseuxSeries(%s)" % pretty(self)


def series(terms, trunc_order=None) -> PuiseuxSeries:
    """Build a series from a dict or iterable of (exponent, coefficient)."""
    if isinstance(terms, dict):
        items = terms.items()
    else:
        items = terms
    if trunc_order is not None:
        trunc_order = Fraction(trunc_order)
    acc = {}
    for q, c in items:
        q = Fraction(q)
        c = complex(c)
        if c == 0:
            continue
        if trunc_order is not None and q >= trunc_order:
            continue
        acc[q] = acc.get(q, 0j) + c
    clean = tuple(sorted((q, c) for q, c in acc.items() if c != 0))
    return PuiseuxSeries(clean, trunc_order)


ZERO = series({})
ONE = series({0: 1.0})


def as_series(x) -> PuiseuxSeries:
    if isinstance(x, PuiseuxSeries):
        return x
    if isinstance(x, (int, float, complex)):
        return series({0: complex(x)})
    raise PuiseuxError("cannot coerce %r to a Puiseux series" % (x,))


def from_scalar(c) -> PuiseuxSeries:
    return series({0: complex(c)})


def et_power(q, coeff=1.0) -> PuiseuxSeries:
    """The monomial coeff * et^q."""
    return series({Fraction(q): complex(coeff)})


def is_zero(s: PuiseuxSeries) -> bool:
    return not s.terms


def val(s: PuiseuxSeries):
    """Lowest exponent; +inf for the exact zero series.

    For a truncated series with no visible terms only a lower bound is known
    and that bound (the truncation order) is returned.
    """
    if s.terms:
        return s.terms[0][0]
    if s.trunc_order is not None:
        return s.trunc_order
    return INF


def leading_coeff(s: PuiseuxSeries, rel_tol=1e-9) -> complex:
    """Coefficient at the valuation, ignoring relative dust below rel_tol."""
    if not s.terms:
        return 0j
    scale = max(abs(c) for _, c in s.terms)
    for q, c in s.terms:
        if abs(c) > rel_tol * scale:
            return c
    return 0j


def leading_exponent(s: PuiseuxSeries, rel_tol=1e-9):
    """Valuation with relative dust below rel_tol ignored."""
    if not s.terms:
        return val(s)
    scale = max(abs(c) for _, c in s.terms)
    for q, c in s.terms:
        if abs(c) > rel_tol * scale:
            return q
    return INF


def leading_unit(s: PuiseuxSeries, rel_tol=1e-9) -> complex:
    """The limit of s as eps -> 0+, defined only when val(s) = 0."""
    q = leading_exponent(s, rel_tol)
    if q != 0:
        raise PuiseuxError(
            "leading_unit needs valuation 0, got valuation %s" % (q,))
    return leading_coeff(s, rel_tol)


def _min_trunc(*orders):
    finite = [o for o in orders if o is not None]
    return min(finite) if finite else None


def add(a: PuiseuxSeries, b: PuiseuxSeries) -> PuiseuxSeries:
    trunc = _min_trunc(a.trunc_order, b.trunc_order)
    acc = dict(a.terms)
    for q, c in b.terms:
        acc[q] = acc.get(q, 0j) + c
    return series(acc, trunc)


def neg(a: PuiseuxSeries) -> PuiseuxSeries:
    return PuiseuxSeries(tuple((q, -c) for q, c in a.terms), a.trunc_order)


def scale(c, a: PuiseuxSeries) -> PuiseuxSeries:
    c = complex(c)
    if c == 0:
        return ZERO if a.trunc_order is None else PuiseuxSeries((), a.trunc_order)
    return PuiseuxSeries(tuple((q, c * v) for q, v in a.terms), a.trunc_order)


def _val_lower_bound(s: PuiseuxSeries):
    if s.terms:
        return s.terms[0][0]
    return s.trunc_order if s.trunc_order is not None else INF


def mul(a: PuiseuxSeries, b: PuiseuxSeries) -> PuiseuxSeries:
    # The product is known below min(trunc_a + val(b), trunc_b + val(a)).
    cands = []
    if a.trunc_order is not None:
        vb = _val_lower_bound(b)
        cands.append(None if vb == INF else a.trunc_order + vb)
    if b.trunc_order is not None:
        va = _val_lower_bound(a)
        cands.append(None if va == INF else b.trunc_order + va)
    trunc = _min_trunc(*cands)
    acc = {}
    for qa, ca in a.terms:
        for qb, cb in b.terms:
            q = qa + qb
            acc[q] = acc.get(q, 0j) + ca * cb
    return series(acc, trunc)


def shift(a: PuiseuxSeries, q) -> PuiseuxSeries:
    """Multiply by et^q (exponent shift)."""
    q = Fraction(q)
    trunc = None if a.trunc_order is None else a.trunc_order + q
    return PuiseuxSeries(tuple((e + q, c) for e, c in a.terms), trunc)


def truncate(a: PuiseuxSeries, order) -> PuiseuxSeries:
    order = Fraction(order)
    trunc = order if a.trunc_order is None else min(order, a.trunc_order)
    return PuiseuxSeries(tuple((q, c) for q, c in a.terms if q < trunc), trunc)


def eval_at(s: PuiseuxSeries, eps: float) -> complex:
    """Evaluate at a concrete eps > 0, substituting et = exp(-1/eps)."""
    if eps <= 0:
        raise PuiseuxError("eval_at needs eps > 0")
    total = 0j
    for q, c in s.terms:
        total += c * math.exp(-float(q) / eps)
    return total


def pretty(s: PuiseuxSeries) -> str:
    if not s.terms:
        body = "0"
    else:
        parts = []
        for q, c in s.terms:
            if c.imag == 0:
                coef = "%g" % c.real
            else:
                coef = "(%g%+gi)" % (c.real, c.imag)
            if q == 0:
                parts.append(coef)
            elif q == 1:
                parts.append("%s*e" % coef)
            else:
                parts.append("%s*e^%s" % (coef, q))
        body = " + ".join(parts).replace("+ -", "- ")
    if s.trunc_order is not None:
        body += " + O(e^%s)" % s.trunc_order
    return body


# ---------------------------------------------------------------------------
# univariate polynomials with series coefficients


@dataclass(frozen=True)
class UnivariateSeriesPoly:
    """Polynomial sum_k coeffs[k] * x^k with PuiseuxSeries coefficients."""

    coeffs: tuple  # (PuiseuxSeries, ...), index = degree

    def __repr__(self):
        return "UnivariateSeriesPoly(%s)" % ", ".join(
            pretty(c) for c in self.coeffs)


def poly(coeffs) -> UnivariateSeriesPoly:
    cs = [as_series(c) for c in coeffs]
    while len(cs) > 1 and is_zero(cs[-1]):
        cs.pop()
    return UnivariateSeriesPoly(tuple(cs))


def poly_degree(p: UnivariateSeriesPoly) -> int:
    d = len(p.coeffs) - 1
    while d > 0 and is_zero(p.coeffs[d]):
        d -= 1
    return d


def poly_eval(p: UnivariateSeriesPoly, x: PuiseuxSeries) -> PuiseuxSeries:
    """Horner evaluation at a series argument."""
    acc = ZERO
    for c in reversed(p.coeffs):
        acc = add(mul(acc, x), c)
    return acc


def taylor_shift(coeffs, s: PuiseuxSeries):
    """Coefficients of p(x + s) via repeated synthetic division."""
    out = [c for c in coeffs]
    n = len(out)
    for i in range(n - 1):
        for j in range(n - 2, i - 1, -1):
            out[j] = add(out[j], mul(s, out[j + 1]))
    return out


def _prune_dust(coeffs, dust_tol):
    """Drop series terms negligible against the global coefficient scale.

    Needed after taylor_shift: exact cancellations leave O(1e-16) residues
    that would otherwise masquerade as genuine Newton polygon points.
    """
    scale_ = 0.0
    for c in coeffs:
        for _, v in c.terms:
            scale_ = max(scale_, abs(v))
    if scale_ == 0.0:
        return coeffs
    thr = dust_tol * scale_
    out = []
    for c in coeffs:
        kept = tuple((q, v) for q, v in c.terms if abs(v) > thr)
        out.append(PuiseuxSeries(kept, c.trunc_order) if kept != c.terms else c)
    return out


def _lower_hull(points):
    """Lower convex hull of (k, v) points with k strictly increasing."""
    hull = []
    for pt in points:
        while len(hull) >= 2:
            (x1, y1), (x2, y2) = hull[-2], hull[-1]
            # keep turn strictly convex from below
            if (x2 - x1) * (pt[1] - y1) <= (pt[0] - x1) * (y2 - y1):
                hull.pop()
            else:
                break
        hull.append(pt)
    return hull


def _polygon_segments(coeffs):
    """Newton polygon segments as (mu, k0, k1) with mu the root valuation."""
    pts = [(k, val(c)) for k, c in enumerate(coeffs) if not is_zero(c)]
    if len(pts) < 2:
        return []
    hull = _lower_hull(pts)
    segs = []
    for (k0, v0), (k1, v1) in zip(hull, hull[1:]):
        segs.append(((v0 - v1) / (k1 - k0), k0, k1))
    return segs


def _cluster_roots(roots, tol):
    """Group numerically coincident roots; deterministic order."""
    rs = sorted(roots, key=lambda z: (round(z.real, 12), round(z.imag, 12)))
    scale_ = max(1.0, max(abs(z) for z in rs))
    groups = []
    for z in rs:
        for g in groups:
            if abs(z - g[0] / g[1]) <= tol * scale_:
                g[0] += z
                g[1] += 1
                break
        else:
            groups.append([z, 1])
    return [(g[0] / g[1], g[1]) for g in groups]


def newton_puiseux_roots(p: UnivariateSeriesPoly, order, budget=64,
                         cluster_tol=1e-6, dust_tol=1e-12):
    """All roots of p in the series field, accurate to the requested order.

    Returns deg(p) series (with multiplicity), each satisfying
    val(p(root)) >= order.  Roots that terminate exactly are returned with
    trunc_order None; otherwise trunc_order records the first unknown
    exponent.  Raises PuiseuxError when the slope iteration exhausts its
    budget without separating branches.
    """
    order = Fraction(order)
    coeffs = list(p.coeffs)
    while coeffs and is_zero(coeffs[-1]):
        coeffs.pop()
    if not coeffs or len(coeffs) == 1:
        if not coeffs or is_zero(coeffs[0]):
            raise PuiseuxError("newton_puiseux_roots of the zero polynomial")
        return []
    out = []
    _np_branch(coeffs, ZERO, None, len(coeffs) - 1, order, budget,
               cluster_tol, dust_tol, out)
    deg = len(coeffs) - 1
    if len(out) != deg:
        raise PuiseuxError(
            "root count mismatch: found %d of %d" % (len(out), deg))
    return out


def _np_branch(coeffs, prefix, mu_floor, want, order, rounds_left,
               cluster_tol, dust_tol, out):
    # exact roots at the current center
    t = 0
    while t < len(coeffs) - 1 and is_zero(coeffs[t]):
        t += 1
    for _ in range(min(t, want)):
        out.append(prefix)
    want -= min(t, want)
    coeffs = coeffs[t:]
    if want == 0 or len(coeffs) == 1:
        return
    segs = _polygon_segments(coeffs)
    if mu_floor is not None:
        segs = [s for s in segs if s[0] > mu_floor]
    found = 0
    for mu, k0, k1 in segs:
        if mu >= order:
            # the next correction on this branch sits beyond the requested
            # order; the terms found so far are the answer
            approx = truncate(prefix, mu)
            for _ in range(k1 - k0):
                out.append(approx)
            found += k1 - k0
            continue
        if rounds_left <= 0:
            raise PuiseuxError(
                "Newton-Puiseux budget exhausted; stalled at slope %s "
                "below requested order %s" % (mu, order))
        vseg = val(coeffs[k0])
        phi = []
        for j in range(k1 - k0 + 1):
            c = coeffs[k0 + j]
            on_seg = (not is_zero(c)) and val(c) == vseg - mu * j
            phi.append(leading_coeff(c) if on_seg else 0j)
        roots = np.roots(phi[::-1])
        for u, nu in _cluster_roots(list(roots), cluster_tol):
            step = et_power(mu, u)
            shifted = _prune_dust(taylor_shift(coeffs, step), dust_tol)
            _np_branch(shifted, add(prefix, step), mu, nu, order,
                       rounds_left - 1, cluster_tol, dust_tol, out)
            found += nu
    if found != want:
        raise PuiseuxError(
            "Newton polygon branch accounting error: %d vs %d" % (found, want))
