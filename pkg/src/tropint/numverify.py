"""Numerical verification of the tropical-to-complex period comparison.

At a concrete small eps the vanishing locus of f is an honest complex
curve.  Cycles shadowing the tropical cycle basis are tracked numerically:
each leg drives one coordinate along a log-magnitude ramp or a circular
arc while the other coordinate is predicted and Newton-corrected on f,
with sheet-separation and residual guards.  Holomorphic differentials are
assembled from cylinder data of the tropical curve (rational prefactors in
product form over exact numeric coefficient roots) and integrated over the
sampled paths by the trapezoid rule with Richardson refinement.

The headline comparison: the normalized period matrix of the complex curve,
scaled by -2*pi*i*eps, approaches the tropical period matrix as eps shrinks.
"""

import cmath
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from fractions import Fraction

import numpy as np

from . import periods as pd
from . import plpoly as pl
from . import puiseux as pu
from . import tropcurve as tc


class NumVerifyError(ValueError):
    pass


class TrackError(NumVerifyError):
    pass


class GateError(NumVerifyError):
    """Combinatorial preconditions for the asymptotic comparison failed."""


class _NeedRefine(Exception):
    pass


TWO_PI_I = 2j * math.pi
_IDENTITY = ((1, 0), (0, 1))

# Loop orientation around a cylinder: the fiber coordinate of the
# verticalized frame makes one turn in this direction.  Chosen so that the
# edge differential integrates to +1 over the loop of its own cylinder.
ALPHA_TURNS = 1


@dataclass
class EpsilonContext:
    """Concrete evaluation parameters for one eps."""

    eps: float
    quad_tol: float = 1e-6
    residual_tol: float = 1e-9
    closure_tol: float = 1e-6
    band_const: float = 5.0
    base_steps: int = 64
    max_refine: int = 6
    sep_floor: float = 1e-10

    @property
    def et(self) -> float:
        return math.exp(-1.0 / self.eps)

    def et_pow(self, q) -> float:
        return math.exp(-float(q) / self.eps)


def _log_val(ctx, w) -> float:
    """Log-magnitude position: |w| = et**v."""
    return -ctx.eps * math.log(abs(w))


# ---------------------------------------------------------------------------
# numeric curve cache and root finding


class _NumCurve:
    """Numeric evaluators for one polynomial at one eps."""

    def __init__(self, f: pl.PLPolynomial, eps: float):
        imin, _ = pl.x_degree_range(f)
        jmin, _ = pl.y_degree_range(f)
        if imin < 0 or jmin < 0:
            raise NumVerifyError(
                "negative exponents present; clear them before tracking")
        self.f = f
        self.eps = eps
        self.terms = [(i, j, pu.eval_at(c, eps))
                      for (i, j), c in sorted(f.coeffs.items())]
        self.dx_terms = [(i - 1, j, i * c) for i, j, c in self.terms if i]
        self.dy_terms = [(i, j - 1, j * c) for i, j, c in self.terms if j]
        self.degx = max(i for i, _, _ in self.terms)
        self.degy = max(j for _, j, _ in self.terms)

    @staticmethod
    def _ev(terms, x, y):
        return sum(c * x ** i * y ** j for i, j, c in terms)

    def val(self, x, y):
        return self._ev(self.terms, x, y)

    def dx(self, x, y):
        return self._ev(self.dx_terms, x, y)

    def dy(self, x, y):
        return self._ev(self.dy_terms, x, y)

    def scale(self, x, y):
        return max(abs(c) * abs(x) ** i * abs(y) ** j
                   for i, j, c in self.terms)

    def y_coeffs(self, x):
        cs = [0j] * (self.degy + 1)
        for i, j, c in self.terms:
            cs[j] += c * x ** i
        return cs

    def x_coeffs(self, y):
        cs = [0j] * (self.degx + 1)
        for i, j, c in self.terms:
            cs[i] += c * y ** j
        return cs


def _poly_roots(cs):
    """Roots of sum cs[k] w^k, ascending coefficients."""
    arr = np.array(cs[::-1], dtype=complex)
    nz = np.flatnonzero(np.abs(arr) > 0.0)
    if nz.size == 0:
        raise NumVerifyError("zero polynomial has no isolated roots")
    arr = arr[nz[0]:]
    if arr.size <= 1:
        return []
    return [complex(z) for z in np.roots(arr)]


def _horner(cs, z):
    p = 0j
    for c in reversed(cs):
        p = p * z + c
    return p


def _poly_newton(cs, z, steps=40):
    for _ in range(steps):
        p = 0j
        dp = 0j
        for c in reversed(cs):
            dp = dp * z + p
            p = p * z + c
        if dp == 0:
            break
        d = p / dp
        z = z - d
        if abs(d) <= 1e-15 * max(1.0, abs(z)):
            break
    return z


def _polish(nc: _NumCurve, x, y, which, max_steps=60):
    """Newton-correct one coordinate on f = 0."""
    for _ in range(max_steps):
        fv = nc.val(x, y)
        d = nc.dy(x, y) if which == "y" else nc.dx(x, y)
        if d == 0:
            break
        step = fv / d
        if which == "y":
            y = y - step
            base = abs(y)
        else:
            x = x - step
            base = abs(x)
        if abs(step) <= 1e-15 * max(base, 1e-300):
            break
    return x, y


def y_roots(f, ctx: EpsilonContext, x, nc=None):
    """All fiber solutions y of f(x, y) = 0 at a concrete point x.

    Companion-matrix roots polished by Newton on the full polynomial;
    residuals are verified against the local term scale.
    """
    if nc is None:
        nc = _NumCurve(f, ctx.eps)
    cs = nc.y_coeffs(x)
    sc = max(abs(v) for v in cs)
    if sc == 0.0:
        raise NumVerifyError("all coefficients vanish at x=%r" % (x,))
    if abs(cs[-1]) <= 1e-13 * sc:
        raise NumVerifyError(
            "leading y-coefficient vanishes at x=%r; perturb x" % (x,))
    out = []
    for r in _poly_roots(cs):
        _, r = _polish(nc, x, r, "y")
        res = abs(nc.val(x, r))
        if res > 1e-12 * nc.scale(x, r):
            raise NumVerifyError(
                "root polish stalled at relative residual %.2e; sheets "
                "may be nearly colliding" % (res / nc.scale(x, r)))
        out.append(r)
    return sorted(out, key=lambda z: (abs(z), z.real, z.imag))


def x_roots(f, ctx: EpsilonContext, y, nc=None):
    """All solutions x of f(x, y) = 0 at a concrete fiber value y."""
    if nc is None:
        nc = _NumCurve(f, ctx.eps)
    cs = nc.x_coeffs(y)
    sc = max(abs(v) for v in cs)
    if sc == 0.0:
        raise NumVerifyError("all coefficients vanish at y=%r" % (y,))
    out = []
    for r in _poly_roots(cs):
        r, _ = _polish(nc, r, y, "x")
        out.append(r)
    return sorted(out, key=lambda z: (abs(z), z.real, z.imag))


def sheet_separation(f, ctx: EpsilonContext, curve=None) -> float:
    """Worst relative pairwise sheet distance over edge-midpoint probes.

    Used as a conditioning gate: below EpsilonContext.sep_floor the eps is
    too small for reliable double-precision tracking.
    """
    g, _ = pl.clear_negative_exponents(f)
    if curve is None:
        curve = tc.tropicalize(g)
    nc = _NumCurve(g, ctx.eps)
    worst = math.inf
    for e in curve.edges:
        P0 = curve.vertices[e.v0]
        P1 = curve.vertices[e.v1]
        Xm = (P0[0] + P1[0]) / 2
        Ym = (P0[1] + P1[1]) / 2
        try:
            if e.primitive == (0, 1):
                roots = x_roots(g, ctx, ctx.et_pow(Ym) + 0j, nc)
            else:
                roots = y_roots(g, ctx, ctx.et_pow(Xm) + 0j, nc)
        except NumVerifyError:
            return 0.0
        for i in range(len(roots)):
            for j in range(i + 1, len(roots)):
                rel = abs(roots[i] - roots[j]) / max(
                    abs(roots[i]), abs(roots[j]), 1e-300)
                worst = min(worst, rel)
    return worst


def _term_eval(terms, x, y):
    value = 0j
    scale = 0.0
    for i, j, c in terms:
        t = c * x ** i * y ** j
        value += t
        scale += abs(t)
    return value, scale


def smoothness_probe(f, ctx: EpsilonContext, curve=None) -> dict:
    """Search for torus singularities of the concrete-eps curve.

    From fiber roots over the vertices and edge midpoints, Newton iterates
    on the system (f, f_y); converged solutions with f_x also vanishing
    are singular points.  A finite probe, not a certificate: it reports
    what it finds at this eps."""
    g, _ = pl.clear_negative_exponents(f)
    if curve is None:
        curve = tc.tropicalize(g)
    eps = ctx.eps
    polys = [g, pl.partial_x(g), pl.partial_y(g)]
    polys += [pl.partial_x(polys[2]), pl.partial_y(polys[2])]
    ev = [[(i, j, pu.eval_at(c, eps)) for (i, j), c in p.coeffs.items()]
          for p in polys]
    spots = [tuple(P) for P in curve.vertices]
    for e in curve.edges:
        P0 = curve.vertices[e.v0]
        P1 = curve.vertices[e.v1]
        spots.append(((P0[0] + P1[0]) / 2, (P0[1] + P1[1]) / 2))
    nc = _NumCurve(g, eps)
    singular = []
    starts = 0
    for X, _Y in spots:
        for phase in (0.4, 2.5, 4.4):
            x0 = ctx.et_pow(X) * cmath.exp(1j * phase)
            try:
                fiber = y_roots(g, ctx, x0, nc)
            except NumVerifyError:
                continue
            for y0 in fiber:
                starts += 1
                x, y = x0, y0
                for _ in range(50):
                    gv, gs = _term_eval(ev[0], x, y)
                    gyv, gys = _term_eval(ev[2], x, y)
                    if abs(gv) <= 1e-11 * max(gs, 1e-300) and \
                       abs(gyv) <= 1e-11 * max(gys, 1e-300):
                        break
                    gxv, _ = _term_eval(ev[1], x, y)
                    gyxv, _ = _term_eval(ev[3], x, y)
                    gyyv, _ = _term_eval(ev[4], x, y)
                    det = gxv * gyyv - gyv * gyxv
                    if det == 0 or not (abs(det) < math.inf):
                        break
                    dx = (gv * gyyv - gyv * gyv) / det
                    dy = (gxv * gyv - gyxv * gv) / det
                    x -= dx
                    y -= dy
                    if not (abs(x) < 1e18 and abs(y) < 1e18):
                        break
                else:
                    continue
                gv, gs = _term_eval(ev[0], x, y)
                gyv, gys = _term_eval(ev[2], x, y)
                ok_sys = (abs(gv) <= 1e-10 * max(gs, 1e-300)
                          and abs(gyv) <= 1e-10 * max(gys, 1e-300))
                if not ok_sys or abs(x) < 1e-300 or abs(y) < 1e-300:
                    continue
                gxv, gxs = _term_eval(ev[1], x, y)
                if abs(gxv) <= 1e-8 * max(gxs, 1e-300):
                    if not any(abs(x - a) <= 1e-6 * max(abs(a), 1e-300)
                               and abs(y - b) <= 1e-6 * max(abs(b), 1e-300)
                               for a, b in singular):
                        singular.append((x, y))
    return {"ok": not singular, "eps": eps, "starts": starts,
            "singular_points": [[z.real, z.imag, w.real, w.imag]
                                for z, w in singular]}


# ---------------------------------------------------------------------------
# tracked paths


@dataclass
class TrackedPath:
    samples: list       # [(x, y)] complex pairs, base coordinates
    closed: bool
    shadow: list        # informational tropical waypoints


def _with_refine(ctx: EpsilonContext, build, start=None):
    steps = start or ctx.base_steps
    last = None
    for _ in range(ctx.max_refine):
        try:
            return build(steps)
        except _NeedRefine as e:
            last = e
            steps *= 2
    raise TrackError("tracking failed at %d steps per leg: %s"
                     % (steps, last.args[0] if last and last.args else last))


def _leg_mult(nc, ctx, start, drive, ratio, steps, pred_ratio=None,
              hint=None, guard_every=2):
    """Drive one coordinate multiplicatively; correct the other.

    Returns new samples, start point excluded.  `hint` overrides the sheet
    choice on the first step (tube proximity selection); afterwards the
    follower is predicted by `pred_ratio` or by two-point log extrapolation
    and must stay within a third of its distance to the nearest other sheet.
    """
    x, y = start
    out = []
    prev_follow = y if drive == "x" else x
    prev_prev = None
    for k in range(1, steps + 1):
        if drive == "x":
            x = x * ratio
        else:
            y = y * ratio
        if hint is not None and k == 1:
            roots = (y_roots(nc.f, ctx, x, nc) if drive == "x"
                     else x_roots(nc.f, ctx, y, nc))
            pred = min(roots, key=lambda r: abs(r - hint))
        elif pred_ratio is not None:
            pred = prev_follow * pred_ratio
        elif prev_prev not in (None, 0):
            pred = prev_follow * (prev_follow / prev_prev)
        else:
            pred = prev_follow
        if drive == "x":
            y = pred
            x, y = _polish(nc, x, y, "y")
            follow = y
        else:
            x = pred
            x, y = _polish(nc, x, y, "x")
            follow = x
        if k % guard_every == 0 or k == steps:
            roots = (y_roots(nc.f, ctx, x, nc) if drive == "x"
                     else x_roots(nc.f, ctx, y, nc))
            others = [abs(follow - r) for r in roots
                      if abs(follow - r) > 1e-12 * abs(follow)]
            sep = min(others) if others else math.inf
            if abs(follow - pred) > sep / 3.0:
                raise _NeedRefine(
                    "sheet guard: correction %.2e vs separation %.2e"
                    % (abs(follow - pred), sep))
            if abs(nc.val(x, y)) > ctx.residual_tol * nc.scale(x, y):
                raise _NeedRefine("residual above tolerance")
        prev_prev, prev_follow = prev_follow, follow
        out.append((x, y))
    return out


def _leg_tube(nc, ctx, start, drive, val_target, follow_val_target, steps,
              hint=None):
    """Log-magnitude ramp of the driven coordinate toward a target
    valuation, the follower predicted toward its own target."""
    x, y = start
    w = x if drive == "x" else y
    fol = y if drive == "x" else x
    dv = (float(val_target) - _log_val(ctx, w)) / steps
    ratio = ctx.et_pow(dv)
    dfv = (float(follow_val_target) - _log_val(ctx, fol)) / steps
    pred_ratio = ctx.et_pow(dfv)
    return _leg_mult(nc, ctx, start, drive, ratio, steps, pred_ratio, hint)


def _leg_arc(nc, ctx, start, drive, turns, steps):
    ratio = cmath.exp(TWO_PI_I * turns / steps)
    return _leg_mult(nc, ctx, start, drive, ratio, steps, pred_ratio=None)


# ---------------------------------------------------------------------------
# sphere crossings


def _wrap_angle(a):
    while a > math.pi:
        a -= 2 * math.pi
    while a < -math.pi:
        a += 2 * math.pi
    return a


def _segment_clear(center, phi, rlo, rhi, punctures, margin):
    a = center + rlo * cmath.exp(1j * phi)
    b = center + rhi * cmath.exp(1j * phi)
    for p in punctures:
        ab = b - a
        t = ((p - a) / ab).real if ab != 0 else 0.0
        t = min(1.0, max(0.0, t))
        if abs(a + t * ab - p) < margin:
            return False
    return True


def _clear_angle(center, phi, rlo, rhi, punctures, margin):
    for k in (0, 1, -1, 2, -2, 3, -3):
        cand = phi + 0.5 * k
        if _segment_clear(center, cand, rlo, rhi, punctures, margin):
            return cand
    return phi


def _cross_route(w0, w1, punctures, steps):
    """Waypoints for the driven coordinate through a sphere region:
    radial-arc-radial around the puncture centroid, angles adjusted to
    keep radial runs away from punctures."""
    center = (sum(punctures) / len(punctures)) if punctures else 0j
    rel0, rel1 = w0 - center, w1 - center
    r0, ph0 = abs(rel0), cmath.phase(rel0)
    r1, ph1 = abs(rel1), cmath.phase(rel1)
    pr = max((abs(p - center) for p in punctures), default=0.0)
    R = max(r0, r1, 1.6 * pr, 0.2)
    margin = 0.12 * max(R, 1e-9)
    ph0s = _clear_angle(center, ph0, min(r0, R), R, punctures, margin)
    ph1s = _clear_angle(center, ph1, min(r1, R), R, punctures, margin)
    legs = []
    if ph0s != ph0:
        legs.append(("arc", r0, ph0, ph0s))
    legs.append(("rad", ph0s, r0, R))
    legs.append(("arc", R, ph0s, ph1s))
    legs.append(("rad", ph1s, R, r1))
    if ph1s != ph1:
        legs.append(("arc", r1, ph1s, ph1))
    pts = []
    for kind, fixed, a, b in legs:
        if a == b:
            continue
        n = max(4, steps // 3)
        for k in range(1, n + 1):
            t = a + (b - a) * k / n
            if kind == "arc":
                pts.append(center + fixed * cmath.exp(1j * t))
            else:
                pts.append(center + t * cmath.exp(1j * fixed))
    if not pts or abs(pts[-1] - w1) > 1e-12 * max(1.0, abs(w1)):
        pts.append(w1)
    return pts


def _cross_leg(nc, ctx, g, curve, start, v_idx, exit_fn, steps):
    """Track through the sphere region at a curve vertex.

    The vertex truncation must be degree one in one coordinate after
    removing common monomial factors; that coordinate follows a rational
    formula (seeding Newton on the full f) while the other is driven along
    a puncture-avoiding route in rescaled coordinates.
    """
    P = curve.vertices[v_idx]
    tr = pl.truncation(g, P)
    imin = min(w[0] for w in tr.main)
    jmin = min(w[1] for w in tr.main)
    red = {(i - imin, j - jmin): u for (i, j), u in tr.main.items()}
    ys = sorted({w[1] for w in red})
    xs = sorted({w[0] for w in red})
    if ys[-1] - ys[0] == 1:
        driven = "x"
        dmax = max(w[0] for w in red)
        c1 = [red.get((i, 1), 0j) for i in range(dmax + 1)]
        c0 = [red.get((i, 0), 0j) for i in range(dmax + 1)]
    elif xs[-1] - xs[0] == 1:
        driven = "y"
        dmax = max(w[1] for w in red)
        c1 = [red.get((1, j), 0j) for j in range(dmax + 1)]
        c0 = [red.get((0, j), 0j) for j in range(dmax + 1)]
    else:
        raise TrackError(
            "vertex truncation at %s is not degree one in either "
            "coordinate; cannot route a crossing" % (P,))
    sx = ctx.et_pow(P[0])
    sy = ctx.et_pow(P[1])
    s_drive = sx if driven == "x" else sy
    s_follow = sy if driven == "x" else sx
    x, y = start
    w0 = (x / s_drive) if driven == "x" else (y / s_drive)
    punctures = _poly_roots(c1)
    w1 = exit_fn(driven, punctures, cmath.phase(
        w0 - (sum(punctures) / len(punctures) if punctures else 0j)))
    route = _cross_route(w0, w1, punctures, steps)
    out = []
    fol_prev = (y if driven == "x" else x)
    c1sc = max(abs(v) for v in c1)
    form_prev = None
    for w in route:
        den = _horner(c1, w)
        if abs(den) < 1e-9 * c1sc:
            raise _NeedRefine("crossing route too close to a puncture")
        form = -_horner(c0, w) / den * s_follow
        if form_prev not in (None, 0):
            pred = fol_prev * (form / form_prev)
        else:
            pred = form
        if driven == "x":
            x = w * s_drive
            y = pred
            x, y = _polish(nc, x, y, "y")
            fol = y
        else:
            y = w * s_drive
            x = pred
            x, y = _polish(nc, x, y, "x")
            fol = x
        if abs(fol - pred) > 0.6 * max(abs(pred), abs(fol_prev)):
            raise _NeedRefine("crossing jump guard: follower moved %.2e"
                              % abs(fol - pred))
        if abs(nc.val(x, y)) > ctx.residual_tol * nc.scale(x, y):
            raise _NeedRefine("crossing residual above tolerance")
        fol_prev, form_prev = fol, form
        out.append((x, y))
    return out


# ---------------------------------------------------------------------------
# cylinder data helpers


def _cluster_centers(zs, rel=1e-6):
    if not zs:
        return []
    sc = max(abs(z) for z in zs) or 1.0
    groups = []
    for z in sorted(zs, key=lambda t: (t.real, t.imag)):
        if groups and abs(z - groups[-1][0] / groups[-1][1]) <= rel * sc:
            groups[-1][0] += z
            groups[-1][1] += 1
        else:
            groups.append([z, 1])
    return [g[0] / g[1] for g in groups]


def _tube_roots(g, framed, kind, index):
    """(B, I, N, centers): pinned-coordinate position, floor level index,
    fiber degree, and the sorted unit cluster centers of a vertical piece."""
    piece = (framed.edges[index] if kind == "E" else framed.rays[index])
    if kind == "E":
        if piece.primitive != (0, 1):
            raise NumVerifyError("edge %d is not vertical here" % index)
        B = framed.vertices[piece.v0][0]
    else:
        if piece.direction not in ((0, 1), (0, -1)):
            raise NumVerifyError("ray %d is not vertical here" % index)
        B = framed.vertices[piece.vertex][0]
    N, rows = pl.as_y_polynomial(g)
    I = tc.vertical_floor_index(N, piece.theta)
    crd = pl.coefficient_root_data(rows[I])
    us = [u for (Bj, u) in crd.roots if Bj == B]
    centers = _cluster_centers(us)
    if not centers:
        raise NumVerifyError(
            "no coefficient roots at valuation %s on row %d" % (B, I))
    return B, I, N, centers


def _frame_for(g, curve, kind, index, theta):
    """Transform data putting one curve piece vertical.

    Returns (theta, g2, framed, frame_index, sign) where sign records edge
    orientation relative to the base piece.
    """
    piece = (curve.edges[index] if kind == "E" else curve.rays[index])
    d = piece.primitive if kind == "E" else piece.direction
    if theta is None:
        theta = _IDENTITY if d in ((0, 1), (0, -1)) else \
            tc.verticalizing_theta(d)
    if theta == _IDENTITY:
        g2, _ = pl.clear_negative_exponents(g)
        framed = curve if g2 is g else tc.tropicalize(g2)
        return theta, g2, framed, index, 1
    g2 = pl.affine_transform_poly(g, theta)
    g2, _ = pl.clear_negative_exponents(g2)
    framed = tc.tropicalize(g2)
    match = tc.match_curves(curve, framed, theta)
    if kind == "E":
        fi, sgn = match["edges"][index]
    else:
        fi, sgn = match["rays"][index], 1
    return theta, g2, framed, fi, sgn


def _theta_inv(theta):
    (a, b), (c, d) = theta
    return ((d, -b), (-c, a))


def _map_samples(samples, theta):
    if theta == _IDENTITY:
        return samples
    mm = pl.transform_monomial_map(theta)
    return [mm(x, y) for x, y in samples]


# ---------------------------------------------------------------------------
# alpha loops and cylinder runs


def alpha_cycle(f, ctx: EpsilonContext, curve=None, kind="E", index=0,
                copy=0, theta=None, val_offset=1.5, steps=None,
                turns=None) -> TrackedPath:
    """Closed loop around one expanded cylinder, in base coordinates.

    The loop is computed in the piece's verticalized frame: the fiber
    coordinate makes `turns` full turns at fixed magnitude while the pinned
    coordinate follows its tube root by correction.
    """
    g, _ = pl.clear_negative_exponents(f)
    if curve is None:
        curve = tc.tropicalize(g)
    if turns is None:
        turns = ALPHA_TURNS
    theta, g2, framed, fi, _sgn = _frame_for(g, curve, kind, index, theta)
    piece = framed.edges[fi] if kind == "E" else framed.rays[fi]
    B, _I, _N, centers = _tube_roots(g2, framed, kind, fi)
    if copy >= len(centers):
        raise NumVerifyError("cylinder has %d copies, copy %d requested"
                             % (len(centers), copy))
    if kind == "E":
        Y0 = framed.vertices[piece.v0][1]
        Y1 = framed.vertices[piece.v1][1]
        probe = (Y0 + Y1) / 2
    else:
        dy = piece.direction[1]
        probe = framed.vertices[piece.vertex][1] + Fraction(
            val_offset).limit_denominator(64) * dy
    nc = _NumCurve(g2, ctx.eps)

    def build(nsteps):
        y0 = ctx.et_pow(probe) + 0j
        seed_x = centers[copy] * ctx.et_pow(B)
        roots = x_roots(g2, ctx, y0, nc)
        x0 = min(roots, key=lambda r: abs(r - seed_x))
        others = [abs(x0 - r) for r in roots if abs(r - x0) > 1e-12 * abs(x0)]
        if others and abs(x0 - seed_x) > min(others) / 3.0:
            raise _NeedRefine("tube seed ambiguous")
        x0, y0 = _polish(nc, x0, y0, "x")
        frame_samples = [(x0, y0)]
        frame_samples += _leg_arc(nc, ctx, (x0, y0), "y", turns, nsteps)
        xe, ye = frame_samples[-1]
        closed = (abs(xe - x0) <= ctx.closure_tol * max(abs(x0), 1e-300)
                  and abs(ye - y0) <= ctx.closure_tol * max(abs(y0), 1e-300))
        if not closed:
            raise _NeedRefine("alpha loop did not close")
        base = _map_samples(frame_samples, _theta_inv(theta))
        return TrackedPath(base, True, [(B, probe)])

    return _with_refine(ctx, build, start=steps or 2 * ctx.base_steps)


# Branch points of real-coefficient curves gravitate to the real axis, so
# tube legs are seeded at an offset argument; on tracking failure the next
# phase is tried.
_SEED_PHASES = (0.4, -0.33, 1.1, 2.0, 2.9)


def _edge_level(lf, be):
    # every level sheet running along the edge takes the same value there,
    # so the first one serves for valuation targets
    return tc.edge_level_range(lf.N, be.theta)[0]


def _edge_seed(g, ctx, curve, mg, lf, nc, expanded_index, phase=0.0):
    """On-curve point over the midpoint of an expanded edge, on the sheet
    belonging to that copy, the free coordinate at the given argument."""
    e = mg.edges[expanded_index]
    be = curve.edges[e.base_index]
    P0 = curve.vertices[be.v0]
    P1 = curve.vertices[be.v1]
    Xm = (P0[0] + P1[0]) / 2
    Ym = (P0[1] + P1[1]) / 2
    rot = cmath.exp(1j * phase)
    if be.primitive == (0, 1):
        B, _I, _N, centers = _tube_roots(g, curve, "E", e.base_index)
        y0 = ctx.et_pow(Ym) * rot
        roots = x_roots(g, ctx, y0, nc)
        x0 = min(roots, key=lambda r: abs(r - centers[e.copy] * ctx.et_pow(B)))
        x0, y0 = _polish(nc, x0, y0, "x")
        return (x0, y0), (Xm, Ym)
    target = float(lf.value(_edge_level(lf, be), Xm))
    x0 = ctx.et_pow(Xm) * rot
    roots = y_roots(g, ctx, x0, nc)
    if be.mult > 1:
        # the copy sheets share the tropical level value and differ only in
        # their unit factors; pick the nearest candidates by valuation and
        # label them in a fixed coordinate order
        cand = sorted(roots, key=lambda r: abs(_log_val(ctx, r) - target))
        cand = cand[:be.mult]
        cand.sort(key=lambda r: (round(r.real, 9), round(r.imag, 9)))
        y0 = cand[e.copy]
    else:
        y0 = min(roots, key=lambda r: abs(_log_val(ctx, r) - target))
    x0, y0 = _polish(nc, x0, y0, "y")
    return (x0, y0), (Xm, Ym)


def cylinder_run(f, ctx: EpsilonContext, curve=None, mg=None,
                 expanded_index=0, steps=None) -> TrackedPath:
    """Open tracked path across one expanded cylinder, from the reference
    start vertex to the end vertex."""
    g, _ = pl.clear_negative_exponents(f)
    if curve is None:
        curve = tc.tropicalize(g)
    if mg is None:
        mg = pd.expand_curve(curve)
    lf = tc.level_functions(g)
    nc = _NumCurve(g, ctx.eps)
    e = mg.edges[expanded_index]
    be = curve.edges[e.base_index]
    P0 = curve.vertices[be.v0]
    P1 = curve.vertices[be.v1]
    drive = "y" if be.primitive == (0, 1) else "x"

    def build(nsteps, phase):
        seed, _mid = _edge_seed(g, ctx, curve, mg, lf, nc, expanded_index,
                                phase)
        half = max(8, nsteps // 2)
        if drive == "y":
            fwd = _leg_tube(nc, ctx, seed, "y", P1[1], P1[0], half)
            bwd = _leg_tube(nc, ctx, seed, "y", P0[1], P0[0], half)
        else:
            lvl = _edge_level(lf, be)
            fwd = _leg_tube(nc, ctx, seed, "x", P1[0],
                            lf.value(lvl, P1[0]), half)
            bwd = _leg_tube(nc, ctx, seed, "x", P0[0],
                            lf.value(lvl, P0[0]), half)
        samples = list(reversed(bwd)) + [seed] + fwd
        return TrackedPath(samples, False, [tuple(P0), tuple(P1)])

    last = None
    for phase in _SEED_PHASES:
        try:
            return _with_refine(ctx, lambda n, p=phase: build(n, p),
                                start=steps)
        except TrackError as err:
            last = err
    raise TrackError("every seed phase failed; last: %s" % last)


# ---------------------------------------------------------------------------
# beta paths around basis cycles


def _cycle_walk(mg, chain):
    pool = []
    for key in sorted(chain):
        c = chain[key]
        if key[0] != "E":
            if c:
                raise NumVerifyError(
                    "cycle chain carries a ray; not a closed edge walk")
            continue
        for _ in range(abs(c)):
            pool.append((key[1], 1 if c > 0 else -1))
    if not pool:
        raise NumVerifyError("empty cycle chain")

    def sv(el):
        e = mg.edges[el[0]]
        return e.v0 if el[1] > 0 else e.v1

    def ev(el):
        e = mg.edges[el[0]]
        return e.v1 if el[1] > 0 else e.v0

    walk = [pool.pop(0)]
    cur = ev(walk[0])
    start = sv(walk[0])
    while pool:
        nxt = next((i for i, el in enumerate(pool) if sv(el) == cur), None)
        if nxt is None:
            raise NumVerifyError("cycle chain is not a closed edge walk")
        walk.append(pool.pop(nxt))
        cur = ev(walk[-1])
    if cur != start:
        raise NumVerifyError("cycle chain does not close up")
    return walk


def beta_path(f, ctx: EpsilonContext, cycle, curve=None, mg=None,
              steps=None) -> TrackedPath:
    """Closed tracked path shadowing a cycle of the expanded metric graph.

    Tube legs follow each cylinder between its end vertices; sphere regions
    at the shared vertices are crossed along puncture-avoiding routes.
    """
    g, _ = pl.clear_negative_exponents(f)
    if curve is None:
        curve = tc.tropicalize(g)
    if mg is None:
        mg = pd.expand_curve(curve)
    lf = tc.level_functions(g)
    nc = _NumCurve(g, ctx.eps)
    walk = _cycle_walk(mg, cycle)

    def sv(el):
        e = mg.edges[el[0]]
        return e.v0 if el[1] > 0 else e.v1

    def ev(el):
        e = mg.edges[el[0]]
        return e.v1 if el[1] > 0 else e.v0

    def frac_point(el, t):
        A = curve.vertices[sv(el)]
        Bp = curve.vertices[ev(el)]
        return (A[0] + (Bp[0] - A[0]) * t, A[1] + (Bp[1] - A[1]) * t)

    def tube_hint(el):
        be = curve.edges[mg.edges[el[0]].base_index]
        if be.primitive != (0, 1):
            return None
        B, _I, _N, centers = _tube_roots(g, curve, "E",
                                         mg.edges[el[0]].base_index)
        return centers[mg.edges[el[0]].copy] * ctx.et_pow(B)

    def tube_leg(el, state, t_to, nsteps, hint):
        be = curve.edges[mg.edges[el[0]].base_index]
        X1, Y1 = frac_point(el, t_to)
        if be.primitive == (0, 1):
            return _leg_tube(nc, ctx, state, "y", Y1, X1, nsteps, hint)
        return _leg_tube(nc, ctx, state, "x", X1, Y1, nsteps, hint)

    def exit_fn_for(el):
        e = mg.edges[el[0]]
        be = curve.edges[e.base_index]
        near = curve.vertices[sv(el)]
        far = curve.vertices[ev(el)]

        def exit_fn(driven, punctures, phi0):
            center = (sum(punctures) / len(punctures)) if punctures else 0j
            if be.primitive == (0, 1) and driven == "x":
                _B, _I, _N, centers = _tube_roots(g, curve, "E",
                                                  e.base_index)
                u = centers[e.copy]
                off = center - u
                if abs(off) < 0.2:
                    off = 0.2 + 0j
                return u + 0.35 * off * cmath.exp(1.2j)
            dv = (far[0] - near[0]) if driven == "x" else (far[1] - near[1])
            if dv == 0:
                raise TrackError(
                    "next edge does not move the crossing coordinate")
            pr = max((abs(p - center) for p in punctures), default=0.0)
            runit = max(1.0, 1.6 * pr)
            rad = 0.4 * runit if dv > 0 else 2.5 * runit
            return center + rad * cmath.exp(1j * phi0)

        return exit_fn

    first_drive = ("y" if curve.edges[mg.edges[walk[0][0]].base_index]
                   .primitive == (0, 1) else "x")

    def build(nsteps, phase):
        seed, mid = _edge_seed(g, ctx, curve, mg, lf, nc, walk[0][0], phase)
        samples = [seed]

        def extend(new):
            samples.extend(new)
            return samples[-1]

        state = extend(tube_leg(walk[0], seed, Fraction(1),
                                max(8, nsteps // 2), None))
        n = len(walk)
        for k in range(n):
            vtx = ev(walk[k])
            nxt = walk[(k + 1) % n]
            state = extend(_cross_leg(nc, ctx, g, curve, state, vtx,
                                      exit_fn_for(nxt), nsteps))
            if k < n - 1:
                state = extend(tube_leg(nxt, state, Fraction(1), nsteps,
                                        tube_hint(nxt)))
            else:
                state = extend(tube_leg(nxt, state, Fraction(1, 2),
                                        max(8, nsteps // 2),
                                        tube_hint(nxt)))
        # the crossings rotate the free coordinate by curve-determined
        # amounts; close the remaining phase gap with a short fiber arc
        idx = 1 if first_drive == "y" else 0
        gap = cmath.phase(seed[idx] / state[idx])
        if abs(gap) > 2.6:
            raise _NeedRefine(
                "phase gap %.2f rad after the cycle; possible nontrivial "
                "monodromy" % gap)
        if abs(gap) > 1e-13:
            arcsteps = max(8, int(nsteps * abs(gap) / (2 * math.pi)) + 4)
            state = extend(_leg_arc(nc, ctx, state, first_drive,
                                    gap / (2 * math.pi), arcsteps))
        xe, ye = state
        x0, y0 = seed
        ok = (abs(xe - x0) <= ctx.closure_tol * max(abs(x0), 1e-300)
              and abs(ye - y0) <= ctx.closure_tol * max(abs(y0), 1e-300))
        if not ok:
            raise _NeedRefine(
                "path around the cycle did not close (relative mismatch "
                "%.1e, %.1e); possible nontrivial monodromy"
                % (abs(xe - x0) / max(abs(x0), 1e-300),
                   abs(ye - y0) / max(abs(y0), 1e-300)))
        shadow = [tuple(curve.vertices[sv(el)]) for el in walk]
        return TrackedPath(samples, True, shadow)

    last = None
    for phase in _SEED_PHASES:
        try:
            return _with_refine(ctx, lambda n, p=phase: build(n, p),
                                start=steps)
        except TrackError as err:
            last = err
    raise TrackError("every seed phase failed; last: %s" % last)


# ---------------------------------------------------------------------------
# differential specs


@dataclass
class DiffTerm:
    coeff: complex
    theta: tuple            # base-to-frame transform
    frame_poly: object      # cleared polynomial in the frame coordinates
    row_index: int          # coefficient row whose roots host the poles
    y_power: int            # fiber power in the numerator
    poles: list             # [(residue coefficient, pole location)]
    extra_x_power: int = 0


@dataclass
class DifferentialSpec:
    kind: str
    eps: float
    terms: list


class _TermNum:
    """Numeric cache: product-form prefactor and partials of one term."""

    def __init__(self, term: DiffTerm, eps: float):
        self.term = term
        self.nc = _NumCurve(term.frame_poly, eps)
        _N, rows = pl.as_y_polynomial(term.frame_poly)
        self.cs = [pu.eval_at(c, eps) for c in rows[term.row_index].coeffs]
        arr = np.array(self.cs[::-1], dtype=complex)
        nz = np.flatnonzero(np.abs(arr) > 0.0)
        arr = arr[nz[0]:]
        self.lead = complex(arr[0])
        self.roots = ([] if arr.size <= 1 else
                      [_poly_newton(self.cs, complex(z))
                       for z in np.roots(arr)])
        self.pole_data = []
        for cc, r in term.poles:
            if not self.roots:
                raise NumVerifyError("prefactor row has no roots to host "
                                     "the pole %r" % (r,))
            j = min(range(len(self.roots)),
                    key=lambda k: abs(self.roots[k] - r))
            if abs(self.roots[j] - r) > 1e-6 * max(abs(r), 1e-300):
                raise NumVerifyError(
                    "pole %r is not a root of coefficient row %d"
                    % (r, term.row_index))
            self.pole_data.append((cc, j))
        self._selfcheck()

    def phi(self, x):
        tot = 0j
        for cc, j in self.pole_data:
            prod = self.lead
            for k, rho in enumerate(self.roots):
                if k != j:
                    prod = prod * (x - rho)
            tot += cc * prod
        return tot

    def _selfcheck(self):
        """The product form must match its defining identity
        row(x) * sum c_j / (x - r_j) at sample points."""
        R = max([abs(r) for r in self.roots] + [1.0]) * 2.0
        for k in range(20):
            x = R * cmath.exp(1j * (0.11 + 2 * math.pi * k / 20))
            direct = _horner(self.cs, x) * sum(
                cc / (x - self.roots[j]) for cc, j in self.pole_data)
            mine = self.phi(x)
            ref = max(abs(mine), abs(direct), 1e-300)
            if abs(mine - direct) > 1e-8 * ref:
                raise NumVerifyError(
                    "prefactor self-check failed: relative error %.2e"
                    % (abs(mine - direct) / ref))


def _integrate_term(tn: _TermNum, term: DiffTerm, pts):
    nc = tn.nc
    data = []
    for x, y in pts:
        num = tn.phi(x)
        if term.y_power:
            num *= y ** term.y_power
        if term.extra_x_power:
            num *= x ** term.extra_x_power
        data.append((x, y, num, nc.dx(x, y), nc.dy(x, y)))
    acc = 0j
    for d0, d1 in zip(data, data[1:]):
        x0, y0, n0, fx0, fy0 = d0
        x1, y1, n1, fx1, fy1 = d1
        score_dx = min(abs(fy0) * abs(y0), abs(fy1) * abs(y1))
        score_dy = min(abs(fx0) * abs(x0), abs(fx1) * abs(x1))
        if score_dx >= score_dy:
            acc += 0.5 * (n0 / fy0 + n1 / fy1) * (x1 - x0)
        else:
            acc += -0.5 * (n0 / fx0 + n1 / fx1) * (y1 - y0)
    return acc


class SpecEvaluator:
    def __init__(self, spec: DifferentialSpec):
        self.spec = spec
        self.tnums = [_TermNum(t, spec.eps) for t in spec.terms]

    def over(self, samples) -> complex:
        total = 0j
        for term, tn in zip(self.spec.terms, self.tnums):
            pts = _map_samples(samples, term.theta)
            total += term.coeff * _integrate_term(tn, term, pts)
        return total


def integrate_spec(f, ctx: EpsilonContext, spec: DifferentialSpec,
                   samples) -> complex:
    if abs(spec.eps - ctx.eps) > 0:
        raise NumVerifyError("spec built for eps=%g, context has %g"
                             % (spec.eps, ctx.eps))
    return SpecEvaluator(spec).over(samples)


def integrate_converged(ctx: EpsilonContext, specs, builder):
    """Integrals of the specs over builder(steps) paths, Richardson-refined
    until the relative update is below quad_tol."""
    single = isinstance(specs, DifferentialSpec)
    spec_list = [specs] if single else list(specs)
    evs = [SpecEvaluator(s) for s in spec_list]
    steps = ctx.base_steps
    prev = None
    prev_rich = None
    for _ in range(ctx.max_refine):
        path = builder(steps)
        cur = np.array([ev.over(path.samples) for ev in evs])
        if prev is not None:
            rich = cur + (cur - prev) / 3.0
            if prev_rich is not None:
                err = float(np.max(np.abs(rich - prev_rich)))
                if err <= ctx.quad_tol * (1.0 + float(np.max(np.abs(rich)))):
                    out = [complex(v) for v in rich]
                    return (out[0] if single else out), path
            prev_rich = rich
        prev = cur
        steps *= 2
    raise NumVerifyError(
        "quadrature did not converge below %.1e" % ctx.quad_tol)


def _row_pole(g2, row_index, eps, target):
    _N, rows = pl.as_y_polynomial(g2)
    cs = [pu.eval_at(c, eps) for c in rows[row_index].coeffs]
    roots = _poly_roots(cs)
    if not roots:
        raise NumVerifyError("coefficient row %d has no roots" % row_index)
    r = min(roots, key=lambda z: abs(z - target))
    if abs(r - target) > 0.3 * max(abs(target), 1e-300):
        raise NumVerifyError(
            "no coefficient root near the expected tube position %r"
            % (target,))
    return _poly_newton(cs, r)


def omega_edge_spec(f, ctx: EpsilonContext, curve=None, index=0, copy=0,
                    theta=None) -> DifferentialSpec:
    """Edge differential: simple pole on the chosen cylinder copy, residue
    normalized so its own loop integral is one."""
    g, _ = pl.clear_negative_exponents(f)
    if curve is None:
        curve = tc.tropicalize(g)
    theta, g2, framed, fi, _sgn = _frame_for(g, curve, "E", index, theta)
    B, I, N, centers = _tube_roots(g2, framed, "E", fi)
    if copy >= len(centers):
        raise NumVerifyError("edge %d has %d copies, copy %d requested"
                             % (index, len(centers), copy))
    r = _row_pole(g2, I, ctx.eps, centers[copy] * ctx.et_pow(B))
    term = DiffTerm(1.0 + 0j, theta, g2, I, N - I - 1,
                    [(-1.0 / TWO_PI_I, r)])
    return DifferentialSpec("omega_edge", ctx.eps, [term])


def omega_leaf_spec(f, ctx: EpsilonContext, curve=None, index=0,
                    copy_plus=0, copy_minus=1, theta=None
                    ) -> DifferentialSpec:
    """Leaf differential: opposite simple poles on two horn copies of one
    unbounded cylinder; residues +1 at copy_plus, -1 at copy_minus."""
    g, _ = pl.clear_negative_exponents(f)
    if curve is None:
        curve = tc.tropicalize(g)
    theta, g2, framed, fi, _sgn = _frame_for(g, curve, "R", index, theta)
    B, I, N, centers = _tube_roots(g2, framed, "R", fi)
    if max(copy_plus, copy_minus) >= len(centers):
        raise NumVerifyError("leaf %d has %d horn copies" % (index,
                                                             len(centers)))
    rp = _row_pole(g2, I, ctx.eps, centers[copy_plus] * ctx.et_pow(B))
    rm = _row_pole(g2, I, ctx.eps, centers[copy_minus] * ctx.et_pow(B))
    term = DiffTerm(1.0 + 0j, theta, g2, I, N - I - 1,
                    [(-1.0 / TWO_PI_I, rp), (1.0 / TWO_PI_I, rm)])
    return DifferentialSpec("omega_leaf", ctx.eps, [term])


def omega_tilde_spec(f, ctx: EpsilonContext, curve=None, mg=None, index=0,
                     copy=0, theta=None) -> DifferentialSpec:
    """Edge differential with averaging corrections over every multi-copy
    edge met by the directed route (inactive when all those are simple)."""
    g, _ = pl.clear_negative_exponents(f)
    if curve is None:
        curve = tc.tropicalize(g)
    if mg is None:
        mg = pd.expand_curve(curve)
    base = omega_edge_spec(g, ctx, curve, index, copy, theta)
    route = pd.tilde_gamma_for_edge(g, curve, mg, index, copy, theta)
    terms = list(base.terms)
    seen = set()
    for key in route:
        if key[0] != "E":
            continue
        bi = mg.edges[key[1]].base_index
        if bi == index or bi in seen:
            continue
        seen.add(bi)
        m = curve.edges[bi].mult
        if m <= 1:
            continue
        first = omega_edge_spec(g, ctx, curve, bi, 0)
        for k in range(1, m):
            other = omega_edge_spec(g, ctx, curve, bi, k)
            terms += [replace(t, coeff=t.coeff / m) for t in first.terms]
            terms += [replace(t, coeff=-t.coeff / m) for t in other.terms]
    return DifferentialSpec("omega_tilde", ctx.eps, terms)


def omega_combined_spec(f, ctx: EpsilonContext, curve=None, mg=None,
                        cycle=None):
    """Signed sum of corrected edge differentials decomposing a cycle.

    Returns (spec, coefficients); the coefficients are the exact integer
    decomposition of the cycle over the directed route chains."""
    g, _ = pl.clear_negative_exponents(f)
    if curve is None:
        curve = tc.tropicalize(g)
    if mg is None:
        mg = pd.expand_curve(curve)
    if cycle is None:
        raise NumVerifyError("no cycle given")
    pieces = [(bi, k) for bi, e in enumerate(curve.edges)
              for k in range(e.mult)]
    chains = [pd.tilde_gamma_for_edge(g, curve, mg, bi, k)
              for bi, k in pieces]
    s = pd.solve_chain_decomposition(cycle, chains)
    terms = []
    for (bi, k), sk in zip(pieces, s):
        if not sk:
            continue
        sp = omega_tilde_spec(g, ctx, curve, mg, bi, k)
        terms += [replace(t, coeff=t.coeff * sk) for t in sp.terms]
    if not terms:
        raise NumVerifyError("cycle decomposed to the zero differential")
    coeffs = [(bi, k, sk) for (bi, k), sk in zip(pieces, s)]
    return DifferentialSpec("omega_combined", ctx.eps, terms), coeffs


# ---------------------------------------------------------------------------
# loop diagnostics


def loop_winding(samples, coord="y") -> float:
    idx = 1 if coord == "y" else 0
    tot = 0.0
    for p0, p1 in zip(samples, samples[1:]):
        tot += cmath.phase(p1[idx] / p0[idx])
    return tot / (2 * math.pi)


def loop_dlog_integral(samples, coord="y") -> complex:
    idx = 1 if coord == "y" else 0
    tot = 0j
    for p0, p1 in zip(samples, samples[1:]):
        tot += cmath.log(p1[idx] / p0[idx])
    return tot


# ---------------------------------------------------------------------------
# period matrix at concrete eps


def period_matrix_numeric(f, ctx: EpsilonContext, curve=None, mg=None,
                          basis=None):
    """Normalized holomorphic period matrix over the tracked cycle basis.

    Loop-normalization: the matrix of loop integrals is inverted against
    the matrix of cycle integrals, so the result is independent of the
    scaling of the differentials."""
    g, _ = pl.clear_negative_exponents(f)
    if curve is None:
        curve = tc.tropicalize(g)
    if mg is None:
        mg = pd.expand_curve(curve)
    if basis is None:
        basis = pd.cycle_basis(mg)
    gsize = len(basis)
    if gsize == 0:
        raise NumVerifyError("graph genus zero; no period matrix")
    markers = pd.alpha_markers(mg)
    specs = []
    coeffs = []
    for cyc in basis:
        sp, s = omega_combined_spec(g, ctx, curve, mg, cyc)
        specs.append(sp)
        coeffs.append(s)
    A = np.zeros((gsize, gsize), dtype=complex)
    Braw = np.zeros((gsize, gsize), dtype=complex)
    for j, mk in enumerate(markers):
        e = mg.edges[mk.edge]
        vals, _path = integrate_converged(
            ctx, specs,
            lambda n, e=e: alpha_cycle(g, ctx, curve, "E", e.base_index,
                                       e.copy, steps=n))
        A[j, :] = vals
    for j, cyc in enumerate(basis):
        vals, _path = integrate_converged(
            ctx, specs,
            lambda n, cyc=cyc: beta_path(g, ctx, cyc, curve, mg, steps=n))
        Braw[j, :] = vals
    try:
        Bhat = np.linalg.solve(A, Braw)
    except np.linalg.LinAlgError:
        raise NumVerifyError("loop-period matrix is singular; "
                             "normalization impossible")
    return {"A": A.tolist(), "B_raw": Braw.tolist(),
            "B_hat": Bhat.tolist(), "decompositions": coeffs}


def _resolve_threads(threads):
    if threads is None:
        envv = os.environ.get("TROPINT_THREADS", "").strip()
        threads = int(envv) if envv else 1
    return max(1, int(threads))


def _map_ordered(fn, items, threads):
    if threads <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(fn, items))


def theorem_report(f, eps_list=(0.2, 0.1, 0.05), final_tol=0.25,
                   strict_genericness=False, threads=None, ctx_kwargs=None):
    """Asymptotic comparison of the scaled numeric period matrix against
    the tropical one over a decreasing eps grid.

    Refuses (GateError, naming the failed condition) unless the
    tropicalization passes the combinatorial checks.  The verdict requires
    strictly decreasing deviations and a final deviation below final_tol.
    """
    g, _ = pl.clear_negative_exponents(f)
    chk = tc.good_tropicalization_check(g, strict_genericness)
    if not chk["ok"]:
        failed = [k for k in ("smooth_vertex_truncations",
                              "nondegenerate_subsurfaces", "regular",
                              "condition_I", "condition_II")
                  if not chk.get(k, True)]
        if not chk["genericness"]["ok"]:
            failed.insert(0, "genericness")
        raise GateError("tropicalization check failed: %s; comparison "
                        "refused" % ", ".join(failed))
    curve = tc.tropicalize(g)
    mg = pd.expand_curve(curve)
    basis = pd.cycle_basis(mg)
    if not basis:
        raise GateError("graph genus is zero; no period matrix to compare")
    BT = pd.period_matrix(mg, basis)
    bt_float = [[float(v) for v in row] for row in BT.entries]
    eps_sorted = sorted(eps_list, reverse=True)

    def one(eps):
        ctx = EpsilonContext(eps, **(ctx_kwargs or {}))
        sep = sheet_separation(g, ctx, curve)
        if sep < ctx.sep_floor:
            return {"eps": eps, "skipped": True, "separation": sep}
        pm = period_matrix_numeric(g, ctx, curve, mg, basis)
        scaled = (-TWO_PI_I * eps) * np.array(pm["B_hat"])
        dev = float(np.max(np.abs(scaled - np.array(bt_float))))
        return {"eps": eps, "skipped": False, "separation": sep,
                "B_hat": pm["B_hat"], "scaled": scaled.tolist(),
                "deviation": dev}

    rows = _map_ordered(one, eps_sorted, _resolve_threads(threads))
    devs = [r["deviation"] for r in rows if not r["skipped"]]
    decreasing = all(a > b for a, b in zip(devs, devs[1:]))
    verdict = (len(devs) >= 2 and decreasing
               and devs[-1] <= final_tol)
    return {
        "genus": len(basis),
        "B_tropical": [[str(v) for v in row] for row in BT.entries],
        "B_tropical_float": bt_float,
        "rows": rows,
        "deviations": devs,
        "decreasing": decreasing,
        "final_tol": final_tol,
        "verdict": bool(verdict),
    }


# ---------------------------------------------------------------------------
# cylinder integral table


def _classify_case(framed, N, E_index, I, B, M_index, copy=0):
    """Case label and scaled prediction for cylinder runs of the edge
    differential of E (pole on copy 0) along M.

    Vertical cylinders are predictable copy by copy (the pole copy carries
    the full drop, the others nothing).  For a non-vertical multiplicity m
    edge the individual copy integrals depend on the unit coefficients of
    the sheets; only their sum is combinatorial, so the prediction covers
    the sum over all m cylinder copies."""
    M = framed.edges[M_index]
    if M.primitive == (0, 1):
        if M_index == E_index and copy == 0:
            Y0 = framed.vertices[M.v0][1]
            Y1 = framed.vertices[M.v1][1]
            return 1, float(Y1 - Y0)
        return 2, 0.0
    ys = [w[1] for w in M.theta]
    a = N - max(ys)
    b = N - min(ys)
    X0 = framed.vertices[M.v0][0]
    X1 = framed.vertices[M.v1][0]
    q = M.vthick
    dmin = min(B, X1) - min(B, X0)
    if b == I:
        return 3, float(Fraction(M.mult * dmin, q))
    if a == I:
        return 4, float(-Fraction(M.mult * dmin, q))
    if a < I < b:
        return 6, 0.0
    return 5, 0.0


def lemma44_table(f, eps_list=(0.2, 0.1, 0.05), frames=None,
                  ctx_kwargs=None):
    """Scaled cylinder-run integrals of edge differentials vs their
    case-by-case predictions, per frame and per eps.

    frames: [(edge index, theta or None)]; default verticalizes every
    bounded edge in its own natural frame.  Values are scaled by
    -2*pi*i*eps so predictions are eps-independent rationals.  Rows are
    per measured edge M, with multi-copy cylinders summed.
    """
    g, _ = pl.clear_negative_exponents(f)
    curve = tc.tropicalize(g)
    if frames is None:
        frames = [(i, None) for i in range(len(curve.edges))]
    out = []
    for index, theta in frames:
        theta_use, g2, framed, fi, _sgn = _frame_for(g, curve, "E", index,
                                                     theta)
        fe = framed.edges[fi]
        if fe.primitive != (0, 1):
            raise NumVerifyError("frame does not verticalize edge %d"
                                 % index)
        B, I, N, _centers = _tube_roots(g2, framed, "E", fi)
        mg2 = pd.expand_curve(framed)
        for mi, M in enumerate(framed.edges):
            if M.primitive == (0, 1):
                groups = [[k] for k in range(M.mult)]
            else:
                groups = [list(range(M.mult))]
            for grp in groups:
                case, pred = _classify_case(framed, N, fi, I, B, mi,
                                            grp[0])
                row = {"edge": index, "theta": theta_use, "M": mi,
                       "copies": grp, "case": case, "predicted": pred,
                       "measured": [], "deviations": []}
                for eps in sorted(eps_list, reverse=True):
                    ctx = EpsilonContext(eps, **(ctx_kwargs or {}))
                    spec = omega_edge_spec(g2, ctx, framed, fi, 0,
                                           _IDENTITY)
                    total = 0j
                    for copy in grp:
                        ei = pd.edge_copy_index(mg2, mi, copy)
                        val, _path = integrate_converged(
                            ctx, spec,
                            lambda n, ei=ei: cylinder_run(g2, ctx, framed,
                                                          mg2, ei,
                                                          steps=n))
                        total += val
                    scaled = complex(-TWO_PI_I * eps * total)
                    row["measured"].append(scaled)
                    row["deviations"].append(abs(scaled - pred))
                out.append(row)
    return out


# ---------------------------------------------------------------------------
# series lift of fiber branches


def lift_roots(f, P, order, x_unit=1.0):
    """Truncated series branches y(x_unit * t^X) through a tropical point.

    Substitutes the scaled coordinate into f, solves the resulting
    univariate problem to the requested order, and returns the branches
    whose valuation matches the point (with the substituted polynomial,
    for residual checks)."""
    g, _ = pl.clear_negative_exponents(f)
    X, Y = Fraction(P[0]), Fraction(P[1])
    if len(pl.theta_set(g, (X, Y))) < 2:
        raise NumVerifyError(
            "dominance set at (%s, %s) is a single monomial; the point is "
            "not on the tropical curve" % (X, Y))
    _N, rows = pl.as_y_polynomial(g)
    cy = []
    for row in rows:
        acc = pu.ZERO
        for k, c in enumerate(row.coeffs):
            acc = pu.add(acc, pu.shift(pu.scale(x_unit ** k, c), k * X))
        cy.append(acc)
    p = pu.poly(list(reversed(cy)))
    roots = pu.newton_puiseux_roots(p, order)
    out = [r for r in roots if pu.val(r) == Y]
    if not out:
        raise NumVerifyError("no branch with valuation %s at this point"
                             % (Y,))
    return out, p


def lift_residual_valuation(p, root):
    """Valuation of p evaluated at a candidate series root."""
    return pu.val(pu.poly_eval(p, root))
