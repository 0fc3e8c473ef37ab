"""Tropical plane curves from polynomials over the Puiseux series field.

The curve is computed exactly (rational arithmetic throughout) from the dual
regular subdivision induced by coefficient valuations: subdivision 2-cells
correspond to curve vertices, interior walls to bounded edges, boundary walls
of the Newton polygon to rays.  Edge data includes the dual support set
(theta), primitive direction, lattice length, vertical/horizontal thickness
and the cylinder multiplicity read off from the distinct roots of the
univariate reduction of the truncation.

Also here: the level functions N_i whose graphs tile the curve together with
the vertical segments at coefficient root valuations, regularity, genus,
the subsurface checks and the combined good-tropicalization report.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import plpoly as pl
from . import puiseux as pu


class TropError(ValueError):
    pass


# ---------------------------------------------------------------------------
# small exact-geometry helpers


def _gcd(a, b):
    return math.gcd(abs(a), abs(b))


def _primitive(dx: Fraction, dy: Fraction):
    """Primitive integer vector parallel to (dx, dy), same orientation."""
    dx, dy = Fraction(dx), Fraction(dy)
    if dx == 0 and dy == 0:
        raise TropError("zero direction has no primitive vector")
    den = (dx.denominator * dy.denominator
           // math.gcd(dx.denominator, dy.denominator))
    ix, iy = int(dx * den), int(dy * den)
    g = _gcd(ix, iy)
    return (ix // g, iy // g)


def _cross(o, a, b):
    return ((a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]))


def convex_hull(points):
    """Extreme points in counterclockwise order (collinear interiors dropped)."""
    pts = sorted(set(points))
    if len(pts) <= 2:
        return pts
    lower, upper = [], []
    for p in pts:
        while len(lower) >= 2 and _cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    for p in reversed(pts):
        while len(upper) >= 2 and _cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    return lower[:-1] + upper[:-1]


def _collinear(points):
    if len(points) <= 2:
        return True
    o = points[0]
    d = None
    for p in points[1:]:
        if p == o:
            continue
        if d is None:
            d = (p[0] - o[0], p[1] - o[1])
        elif d[0] * (p[1] - o[1]) != d[1] * (p[0] - o[0]):
            return False
    return True


# ---------------------------------------------------------------------------
# curve data types


@dataclass
class Edge:
    v0: int
    v1: int
    theta: list
    primitive: tuple      # v0 -> v1 direction
    lattice_length: Fraction
    vthick: int
    hthick: int
    mult: int


@dataclass
class Ray:
    vertex: int
    direction: tuple      # primitive, pointing away from the vertex
    theta: list
    vthick: int
    hthick: int
    mult: int


@dataclass
class TropicalCurve:
    vertices: list        # [(Fraction, Fraction)], lexicographically sorted
    edges: list           # [Edge]
    rays: list            # [Ray]
    dual_cells: dict      # vertex index -> theta set


def vertical_thickness(theta) -> int:
    js = [w[1] for w in theta]
    return max(js) - min(js)


def horizontal_thickness(theta) -> int:
    xs = [w[0] for w in theta]
    return max(xs) - min(xs)


def dual_segment(theta):
    """(base point, primitive direction, lattice content) of a collinear set."""
    if not _collinear(theta):
        raise TropError("theta set is not collinear: %s" % (theta,))
    pts = sorted(theta)
    w0, w1 = pts[0], pts[-1]
    d = _primitive(w1[0] - w0[0], w1[1] - w0[1])
    s = (w1[0] - w0[0]) // d[0] if d[0] else (w1[1] - w0[1]) // d[1]
    return w0, d, s


def multiplicity(f: pl.PLPolynomial, P, cluster_tol=1e-6) -> int:
    """Distinct-root count of the univariate reduction of the truncation at P.

    P must lie in the interior of an edge or ray (collinear theta set).
    Nearly-but-not-quite merged root clusters raise a diagnostic error
    instead of returning a silently ambiguous count.
    """
    tr = pl.truncation(f, P)
    w0, d, s = dual_segment(tr.theta)
    g = [tr.main.get((w0[0] + k * d[0], w0[1] + k * d[1]), 0j)
         for k in range(s + 1)]
    roots = list(np.roots(g[::-1]))
    scale = max(abs(z) for z in roots)
    reps = []
    for z in sorted(roots, key=lambda z: (z.real, z.imag)):
        for r in reps:
            if abs(z - r[0] / r[1]) <= cluster_tol * scale:
                r[0] += z
                r[1] += 1
                break
        else:
            reps.append([z, 1])
    centers = [r[0] / r[1] for r in reps]
    for i in range(len(centers)):
        for j in range(i + 1, len(centers)):
            gap = abs(centers[i] - centers[j])
            if cluster_tol * scale < gap <= 5 * cluster_tol * scale:
                raise TropError(
                    "ambiguous root clustering at separation %.3g "
                    "(tolerance %.3g); adjust cluster_tol" %
                    (gap, cluster_tol * scale))
    return len(centers)


def _root_multiplicities(f: pl.PLPolynomial, P, cluster_tol=1e-6):
    """Cluster sizes of the univariate reduction (for the thickness split)."""
    tr = pl.truncation(f, P)
    w0, d, s = dual_segment(tr.theta)
    g = [tr.main.get((w0[0] + k * d[0], w0[1] + k * d[1]), 0j)
         for k in range(s + 1)]
    roots = list(np.roots(g[::-1]))
    scale = max(abs(z) for z in roots)
    reps = []
    for z in sorted(roots, key=lambda z: (z.real, z.imag)):
        for r in reps:
            if abs(z - r[0] / r[1]) <= cluster_tol * scale:
                r[0] += z
                r[1] += 1
                break
        else:
            reps.append([z, 1])
    return [r[1] for r in reps]


# ---------------------------------------------------------------------------
# tropicalization


def tropicalize(f: pl.PLPolynomial) -> TropicalCurve:
    """Exact tropical curve of f via the dual regular subdivision."""
    support = f.support()
    if len(support) < 2:
        raise TropError("support has fewer than two points; no curve")
    vals = {w: pu.val(f.coeffs[w]) for w in support}
    if any(v == math.inf for v in vals.values()):
        raise TropError("coefficient with no visible terms in support")

    if _collinear(support):
        return _line_curve(f, support, vals)

    # candidate vertices: tie points of non-collinear support triples
    verts = []
    n = len(support)
    for a in range(n):
        for b in range(a + 1, n):
            for c in range(b + 1, n):
                wa, wb, wc = support[a], support[b], support[c]
                m00 = wb[0] - wa[0]
                m01 = wb[1] - wa[1]
                m10 = wc[0] - wa[0]
                m11 = wc[1] - wa[1]
                det = m00 * m11 - m01 * m10
                if det == 0:
                    continue
                r0 = vals[wa] - vals[wb]
                r1 = vals[wa] - vals[wc]
                X = Fraction(r0 * m11 - r1 * m01, det)
                Y = Fraction(m00 * r1 - m10 * r0, det)
                form = vals[wa] + wa[0] * X + wa[1] * Y
                if form != pl.tropical_val(f, (X, Y)):
                    continue
                if (X, Y) not in verts:
                    verts.append((X, Y))
    vertices = []
    cells = {}
    for P in sorted(verts):
        theta = pl.theta_set(f, P)
        if not _collinear(theta):
            cells[len(vertices)] = theta
            vertices.append(P)

    edges = []
    for i in range(len(vertices)):
        for j in range(i + 1, len(vertices)):
            shared = sorted(set(cells[i]) & set(cells[j]))
            if len(shared) < 2:
                continue
            Pi, Pj = vertices[i], vertices[j]
            mid = ((Pi[0] + Pj[0]) / 2, (Pi[1] + Pj[1]) / 2)
            assert pl.theta_set(f, mid) == shared
            prim = _primitive(Pj[0] - Pi[0], Pj[1] - Pi[1])
            ell = ((Pj[0] - Pi[0]) / prim[0] if prim[0]
                   else (Pj[1] - Pi[1]) / prim[1])
            edges.append(Edge(
                i, j, shared, prim, ell,
                vertical_thickness(shared), horizontal_thickness(shared),
                multiplicity(f, mid)))

    rays = []
    for i, P in enumerate(vertices):
        hull = convex_hull(cells[i])
        cell_pts = set(cells[i])
        used_walls = {tuple(e.theta) for e in edges if i in (e.v0, e.v1)}
        for k in range(len(hull)):
            w0, w1 = hull[k], hull[(k + 1) % len(hull)]
            side = sorted(w for w in cell_pts
                          if _cross(w0, w1, w) == 0
                          and min(w0[0], w1[0]) <= w[0] <= max(w0[0], w1[0])
                          and min(w0[1], w1[1]) <= w[1] <= max(w0[1], w1[1]))
            if tuple(side) in used_walls:
                continue
            sp = _primitive(w1[0] - w0[0], w1[1] - w0[1])
            found = None
            for d in ((-sp[1], sp[0]), (sp[1], -sp[0])):
                Q = (P[0] + d[0], P[1] + d[1])
                if pl.theta_set(f, Q) == side:
                    found = d
                    break
            if found is None:
                continue
            rays.append(Ray(
                i, found, side,
                vertical_thickness(side), horizontal_thickness(side),
                multiplicity(f, (P[0] + found[0], P[1] + found[1]))))
    rays.sort(key=lambda r: (r.vertex, r.direction))
    return TropicalCurve(vertices, edges, rays, cells)


def _line_curve(f, support, vals):
    """Collinear support: the curve is a union of parallel lines, returned
    as opposite ray pairs anchored on each line."""
    pts = sorted(support)
    dsup = _primitive(pts[-1][0] - pts[0][0], pts[-1][1] - pts[0][1])
    ldir = (-dsup[1], dsup[0])   # line direction, perpendicular to support
    vertices = []
    cells = {}
    rays = []
    # walls = consecutive support pairs on the lower hull of lifted values
    lifted = []
    for w in pts:
        t = (w[0] - pts[0][0]) * dsup[0] + (w[1] - pts[0][1]) * dsup[1]
        lifted.append((Fraction(t), vals[w], w))
    hull = []
    for t, v, w in sorted(lifted):
        while len(hull) >= 2 and ((hull[-1][0] - hull[-2][0]) * (v - hull[-2][1])
                                  <= (t - hull[-2][0]) * (hull[-1][1] - hull[-2][1])):
            hull.pop()
        hull.append((t, v, w))
    anchors = []
    for (t0, v0, w0), (t1, v1, w1) in zip(hull, hull[1:]):
        # anchor: a point where the two forms tie; solve <w1-w0, P> = v0-v1
        dw = (w1[0] - w0[0], w1[1] - w0[1])
        rhs = v0 - v1
        if dw[0]:
            anchor = (Fraction(rhs, dw[0]), Fraction(0))
        else:
            anchor = (Fraction(0), Fraction(rhs, dw[1]))
        anchors.append(anchor)
    for anchor in sorted(anchors):
        idx = len(vertices)
        theta = pl.theta_set(f, anchor)
        cells[idx] = theta
        vertices.append(anchor)
        for d in (ldir, (-ldir[0], -ldir[1])):
            rays.append(Ray(idx, d, theta,
                            vertical_thickness(theta),
                            horizontal_thickness(theta),
                            multiplicity(f, (anchor[0] + d[0],
                                             anchor[1] + d[1]))))
    return TropicalCurve(vertices, [], rays, cells)


# ---------------------------------------------------------------------------
# genus, regularity, expansion bookkeeping


def graph_genus(curve: TropicalCurve) -> int:
    """First Betti number of the bounded part, E - V + C."""
    parent = list(range(len(curve.vertices)))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for e in curve.edges:
        parent[find(e.v0)] = find(e.v1)
    comps = len({find(i) for i in range(len(curve.vertices))})
    return len(curve.edges) - len(curve.vertices) + comps


def expanded_genus(curve: TropicalCurve) -> int:
    return graph_genus(curve) + sum(e.mult - 1 for e in curve.edges)


def is_regular(curve: TropicalCurve) -> bool:
    """All vertex dual cells are triangles (exactly three extreme points)."""
    return all(len(convex_hull(cell)) == 3 for cell in curve.dual_cells.values())


def edge_level_range(N: int, theta):
    """Indices i with the edge on the graph of N_i: a+1..b from the theta
    y-degree range (empty for vertical edges)."""
    js = [w[1] for w in theta]
    a, b = N - max(js), N - min(js)
    return list(range(a + 1, b + 1))


def vertical_floor_index(N: int, theta) -> int:
    """Floor level I of a vertical edge (ceiling is I + 1)."""
    js = {w[1] for w in theta}
    if len(js) != 1:
        raise TropError("not a vertical edge theta set: %s" % (theta,))
    return N - js.pop()


def expand_multiplicities(curve: TropicalCurve):
    """Metric graph with every edge and ray split into mult unit copies."""
    from . import periods
    return periods.expand_curve(curve)


# ---------------------------------------------------------------------------
# level functions


@dataclass
class VerticalSegment:
    i: int                  # floor level; ceiling is i + 1
    x: Fraction
    y_lo: Fraction | None   # None = unbounded below (i = 0)
    y_hi: Fraction | None   # None = unbounded above (i = N)
    count: int              # number of coefficient roots at this valuation


@dataclass
class LevelFunctions:
    N: int
    piecewise: list         # per level 1..N: dict with breakpoints and slopes
    vertical: list          # [VerticalSegment]
    _fdata: list = field(repr=False, default=None)

    def value(self, i: int, X) -> Fraction:
        return _level_value(self._fdata, self.N, i, Fraction(X))


def _coeff_val_form(data, X: Fraction) -> Fraction:
    """F_i(X) = A + m X + sum_j min(X, B_j) from the factored root data."""
    acc = data.A + data.m * X
    for B, _ in data.roots:
        acc += min(X, B)
    return acc


def _level_value(fdata, N, i, X):
    """Solve for Y with min over j<i of F_j + (N-j)Y equal to min over j>=i."""
    if not 1 <= i <= N:
        raise TropError("level index out of range: %d" % i)
    lows = [(j, _coeff_val_form(fdata[j], X)) for j in range(i)
            if fdata[j] is not None]
    highs = [(j, _coeff_val_form(fdata[j], X)) for j in range(i, N + 1)
             if fdata[j] is not None]
    if not lows or not highs:
        raise TropError("level function undefined: a side is empty")
    best = None
    for j1, F1 in lows:
        for j2, F2 in highs:
            Y = Fraction(F2 - F1, j2 - j1)
            lo = min(F + (N - j) * Y for j, F in lows)
            hi = min(F + (N - j) * Y for j, F in highs)
            if lo == hi:
                best = Y
                break
        if best is not None:
            break
    if best is None:
        raise TropError("no level crossing found at X=%s" % X)
    return best


def level_functions(f: pl.PLPolynomial) -> LevelFunctions:
    """Level functions N_1..N_N and the vertical segments L_{i,j}.

    The union of the level graphs and the vertical segments is the tropical
    curve; each vertical segment knows its floor index.
    """
    N, rows = pl.as_y_polynomial(f)
    fdata = []
    for a in rows:
        if pu.poly_degree(a) == 0 and pu.is_zero(a.coeffs[0]):
            fdata.append(None)
        else:
            fdata.append(pl.coefficient_root_data(a))
    # candidate kink positions: all root valuations, all pairwise form ties
    cands = set()
    for d in fdata:
        if d is None:
            continue
        for B, _ in d.roots:
            cands.add(B)
    curve = tropicalize(f)
    for P in curve.vertices:
        cands.add(P[0])
    cands = sorted(cands)

    piecewise = []
    for i in range(1, N + 1):
        if not cands:
            X0 = Fraction(0)
            slope = _level_value(fdata, N, i, X0 + 1) - _level_value(
                fdata, N, i, X0)
            piecewise.append({"breakpoints": [],
                              "slopes": [slope],
                              "anchor": (X0, _level_value(fdata, N, i, X0))})
            continue
        probes = [cands[0] - 1] + cands + [cands[-1] + 1]
        vals_at = {X: _level_value(fdata, N, i, X) for X in probes}
        # slope on each open interval, sampled at midpoints
        seg_slopes = []
        for X0, X1 in zip(probes, probes[1:]):
            seg_slopes.append((vals_at[X1] - vals_at[X0]) / (X1 - X0))
        left = vals_at[probes[0]] - seg_slopes[0] * 0  # noqa: placeholder
        outer_left = seg_slopes[0]
        outer_right = seg_slopes[-1]
        breaks = []
        slopes = [outer_left]
        for k in range(1, len(probes) - 1):
            if seg_slopes[k] != seg_slopes[k - 1]:
                X = probes[k]
                breaks.append((X, vals_at[X]))
                slopes.append(seg_slopes[k])
        if slopes[-1] != outer_right:
            slopes.append(outer_right)
        piecewise.append({"breakpoints": breaks, "slopes": slopes,
                          "anchor": (probes[0], vals_at[probes[0]])})

    vertical = []
    for i, d in enumerate(fdata):
        if d is None:
            continue
        by_B = {}
        for B, _ in d.roots:
            by_B[B] = by_B.get(B, 0) + 1
        for B, cnt in sorted(by_B.items()):
            y_lo = _level_value(fdata, N, i, B) if i >= 1 else None
            y_hi = _level_value(fdata, N, i + 1, B) if i <= N - 1 else None
            vertical.append(VerticalSegment(i, B, y_lo, y_hi, cnt))
    return LevelFunctions(N, piecewise, vertical, fdata)


def ceiling_floor(lf: LevelFunctions, x, y_lo, y_hi):
    """Floor and ceiling level indices (I, I+1) of the vertical edge at
    X=x spanning [y_lo, y_hi]."""
    x = Fraction(x)
    for seg in lf.vertical:
        if seg.x != x:
            continue
        lo = seg.y_lo if seg.y_lo is not None else None
        hi = seg.y_hi if seg.y_hi is not None else None
        if lo == Fraction(y_lo) and hi == Fraction(y_hi):
            return seg.i, seg.i + 1
    raise TropError("no vertical segment matches X=%s, [%s, %s]"
                    % (x, y_lo, y_hi))


# ---------------------------------------------------------------------------
# subsurface checks and the combined report


def _interior_lattice_points(cell):
    hull = convex_hull(cell)
    xs = [w[0] for w in hull]
    ys = [w[1] for w in hull]
    pts = []
    for x in range(min(xs), max(xs) + 1):
        for y in range(min(ys), max(ys) + 1):
            inside = True
            for k in range(len(hull)):
                a, b = hull[k], hull[(k + 1) % len(hull)]
                if _cross(a, b, (x, y)) <= 0:
                    inside = False
                    break
            if inside:
                pts.append((x, y))
    return pts


def _poly_y_coeffs(main):
    """Dense y-coefficient list of numpy x-polynomials from a support map."""
    imin = min(w[0] for w in main)
    jmin = min(w[1] for w in main)
    shifted = {(i - imin, j - jmin): c for (i, j), c in main.items()}
    degx = max(w[0] for w in shifted)
    degy = max(w[1] for w in shifted)
    rows = []
    for j in range(degy + 1):
        row = np.zeros(degx + 1, dtype=complex)
        for (i, jj), c in shifted.items():
            if jj == j:
                row[degx - i] = c     # numpy poly convention: high degree first
        rows.append(row)
    return rows    # rows[j] = coefficient of y^j as np poly in x


def _polyentry_det(mat):
    """Determinant of a matrix of numpy polynomial coefficient arrays."""
    n = len(mat)
    if n == 1:
        return mat[0][0]
    acc = np.zeros(1, dtype=complex)
    for k in range(n):
        entry = mat[0][k]
        if not np.any(entry):
            continue
        minor = [[row[c] for c in range(n) if c != k] for row in mat[1:]]
        term = np.polymul(entry, _polyentry_det(minor))
        acc = np.polyadd(acc, ((-1) ** k) * term)
    return acc


def _resultant_y(rows_f, rows_g):
    """Res_y of two y-polynomials with numpy-poly-in-x coefficients."""
    n, m = len(rows_f) - 1, len(rows_g) - 1
    size = n + m
    zero = np.zeros(1, dtype=complex)
    mat = [[zero] * size for _ in range(size)]
    for r in range(m):
        for k in range(n + 1):
            mat[r][r + k] = rows_f[n - k]
    for r in range(n):
        for k in range(m + 1):
            mat[m + r][r + k] = rows_g[m - k]
    return _polyentry_det(mat)


def truncation_singular_in_torus(main, tol=1e-8):
    """Probe for a singular point of V(main) in the torus via resultants."""
    rows = _poly_y_coeffs(main)
    if len(rows) == 1:
        # no y: singular iff the x-polynomial has a repeated torus root
        roots = np.roots(rows[0])
        roots = [r for r in roots if abs(r) > 1e-10]
        for i in range(len(roots)):
            for j in range(i + 1, len(roots)):
                if abs(roots[i] - roots[j]) < 1e-6 * max(1, abs(roots[i])):
                    return True
        return False
    rows_fy = [(j + 1) * rows[j + 1] for j in range(len(rows) - 1)]
    R = _resultant_y(rows, rows_fy)
    scale = max(np.max(np.abs(r)) for r in rows)
    if np.max(np.abs(R)) <= tol * scale ** (2 * len(rows)):
        return True     # f and f_y share a factor
    degy = len(rows) - 1
    for xs in np.roots(R) if len(R) > 1 else []:
        if abs(xs) < 1e-10:
            continue
        cy = [np.polyval(rows[j], xs) for j in range(degy + 1)]
        for ys in np.roots(cy[::-1]):
            if abs(ys) < 1e-10:
                continue
            fy = sum(j * cy[j] * ys ** (j - 1) for j in range(1, degy + 1))
            fx = 0j
            for j in range(degy + 1):
                dr = np.polyder(rows[j])
                fx += np.polyval(dr, xs) * ys ** j
            fv = sum(cy[j] * ys ** j for j in range(degy + 1))
            s = scale * max(1.0, abs(xs), abs(ys)) ** degy
            if abs(fv) < 1e-6 * s and abs(fy) < 1e-6 * s and abs(fx) < 1e-6 * s:
                return True
    return False


def subsurface_check(f: pl.PLPolynomial, P) -> dict:
    """Genus-zero and irreducibility data for the piece of surface over P."""
    tr = pl.truncation(f, P)
    if _collinear(tr.theta):
        m = multiplicity(f, P)
        return {"kind": "cylinder", "genus_zero": True,
                "irreducible": m == 1, "multiplicity": m}
    cell = tr.theta
    interior = _interior_lattice_points(cell)
    hull = convex_hull(cell)
    contents = []
    for k in range(len(hull)):
        a, b = hull[k], hull[(k + 1) % len(hull)]
        contents.append(_gcd(b[0] - a[0], b[1] - a[1]))
    g = 0
    for c in contents:
        g = math.gcd(g, c)
    if g == 1:
        irreducible = True
    else:
        irreducible = not truncation_singular_in_torus(tr.main)
    return {"kind": "sphere", "genus_zero": not interior,
            "interior_points": interior, "irreducible": irreducible,
            "side_content_gcd": g}


def good_tropicalization_check(f: pl.PLPolynomial, strict_genericness=False,
                               curve: TropicalCurve | None = None) -> dict:
    """Itemized report of every condition behind a good tropicalization."""
    if curve is None:
        curve = tropicalize(f)
    gen = pl.genericness_check(f, strict=strict_genericness)

    smooth = True
    nondeg = True
    vertex_reports = {}
    for i, P in enumerate(curve.vertices):
        sub = subsurface_check(f, P)
        sing = truncation_singular_in_torus(pl.truncation(f, P).main)
        vertex_reports[i] = {"subsurface": sub, "singular": sing}
        smooth = smooth and not sing
        nondeg = nondeg and sub["genus_zero"] and sub["irreducible"]

    regular = is_regular(curve)

    cond1 = True
    cond2 = True
    pieces = []
    for e in curve.edges:
        mid = ((curve.vertices[e.v0][0] + curve.vertices[e.v1][0]) / 2,
               (curve.vertices[e.v0][1] + curve.vertices[e.v1][1]) / 2)
        pieces.append(("edge", e, mid))
    for r in curve.rays:
        P = curve.vertices[r.vertex]
        pieces.append(("ray", r,
                       (P[0] + r.direction[0], P[1] + r.direction[1])))
    cyl_reports = []
    for kind, piece, probe in pieces:
        q, w, m = piece.vthick, piece.hthick, piece.mult
        ok1 = (m == math.gcd(q, w))
        mults = _root_multiplicities(f, probe)
        ok2 = len(set(mults)) == 1
        cond1 = cond1 and ok1
        cond2 = cond2 and ok2
        cyl_reports.append({"kind": kind, "theta": piece.theta,
                            "condition_I": ok1, "condition_II": ok2,
                            "q": q, "w": w, "mult": m,
                            "copy_multiplicities": mults})

    ok = (gen["ok"] and smooth and nondeg and regular and cond1 and cond2)
    return {"ok": ok,
            "genericness": gen,
            "smooth_vertex_truncations": smooth,
            "nondegenerate_subsurfaces": nondeg,
            "regular": regular,
            "condition_I": cond1,
            "condition_II": cond2,
            "vertices": vertex_reports,
            "cylinders": cyl_reports}


# ---------------------------------------------------------------------------
# transforms and serialization


def affine_transform_curve(curve: TropicalCurve, theta) -> TropicalCurve:
    """Image curve under the unimodular change of variables theta."""
    (a, b), (c, d) = pl._check_unimodular(theta)

    def tpoint(P):
        return (a * P[0] + b * P[1], c * P[0] + d * P[1])

    def tsupport(w):
        return (d * w[0] - c * w[1], -b * w[0] + a * w[1])

    new_pos = [tpoint(P) for P in curve.vertices]
    order = sorted(range(len(new_pos)), key=lambda i: new_pos[i])
    rank = {old: new for new, old in enumerate(order)}
    vertices = [new_pos[i] for i in order]
    cells = {rank[i]: sorted(tsupport(w) for w in cell)
             for i, cell in curve.dual_cells.items()}
    edges = []
    for e in curve.edges:
        i, j = rank[e.v0], rank[e.v1]
        th = sorted(tsupport(w) for w in e.theta)
        prim = (a * e.primitive[0] + b * e.primitive[1],
                c * e.primitive[0] + d * e.primitive[1])
        if j < i:
            i, j = j, i
            prim = (-prim[0], -prim[1])
        edges.append(Edge(i, j, th, prim, e.lattice_length,
                          vertical_thickness(th), horizontal_thickness(th),
                          e.mult))
    rays = []
    for r in curve.rays:
        th = sorted(tsupport(w) for w in r.theta)
        dirn = (a * r.direction[0] + b * r.direction[1],
                c * r.direction[0] + d * r.direction[1])
        rays.append(Ray(rank[r.vertex], dirn, th,
                        vertical_thickness(th), horizontal_thickness(th),
                        r.mult))
    rays.sort(key=lambda r: (r.vertex, r.direction))
    edges.sort(key=lambda e: (e.v0, e.v1))
    return TropicalCurve(vertices, edges, rays, cells)


def match_curves(base: TropicalCurve, framed: TropicalCurve, theta) -> dict:
    """Index correspondence between a curve and its image under theta.

    framed must be the tropicalization of the transformed polynomial (or the
    transformed curve).  Returns vertex, edge and ray index maps from base to
    framed; edge entries are (framed index, sign) with sign -1 when the
    framed edge's reference orientation is the reverse of the image of the
    base one.
    """
    (a, b), (c, d) = pl._check_unimodular(theta)

    fpos = {P: k for k, P in enumerate(framed.vertices)}
    vmap = []
    for P in base.vertices:
        Q = (a * P[0] + b * P[1], c * P[0] + d * P[1])
        if Q not in fpos:
            raise TropError("no framed vertex at %s" % (Q,))
        vmap.append(fpos[Q])
    fedge = {(e.v0, e.v1): k for k, e in enumerate(framed.edges)}
    emap = []
    for e in base.edges:
        i, j = vmap[e.v0], vmap[e.v1]
        if (i, j) in fedge:
            emap.append((fedge[(i, j)], 1))
        elif (j, i) in fedge:
            emap.append((fedge[(j, i)], -1))
        else:
            raise TropError("no framed edge joining vertices %d, %d" % (i, j))
    fray = {(r.vertex, r.direction): k for k, r in enumerate(framed.rays)}
    rmap = []
    for r in base.rays:
        dirn = (a * r.direction[0] + b * r.direction[1],
                c * r.direction[0] + d * r.direction[1])
        key = (vmap[r.vertex], dirn)
        if key not in fray:
            raise TropError("no framed ray %s at vertex %d" % (dirn, key[0]))
        rmap.append(fray[key])
    return {"vertices": vmap, "edges": emap, "rays": rmap}


def verticalizing_theta(primitive):
    """A determinant-one integer matrix sending the primitive vector to (0,1)."""
    u, v = primitive
    if _gcd(u, v) != 1:
        raise TropError("direction %s is not primitive" % (primitive,))
    # solve v*z + u*w = 1
    g, z, w = _xgcd(v, u)
    assert g == 1
    return ((v, -u), (w, z))


def _xgcd(a, b):
    old_r, r = a, b
    old_s, s = 1, 0
    old_t, t = 0, 1
    while r:
        qq = old_r // r
        old_r, r = r, old_r - qq * r
        old_s, s = s, old_s - qq * s
        old_t, t = t, old_t - qq * t
    if old_r < 0:
        old_r, old_s, old_t = -old_r, -old_s, -old_t
    return old_r, old_s, old_t


def _frac_str(q):
    return str(Fraction(q))


def curve_to_json(curve: TropicalCurve) -> dict:
    return {
        "vertices": [{"x": _frac_str(P[0]), "y": _frac_str(P[1])}
                     for P in curve.vertices],
        "edges": [{
            "v0": e.v0, "v1": e.v1,
            "primitive": list(e.primitive),
            "length": _frac_str(e.lattice_length),
            "mult": e.mult, "vthick": e.vthick, "hthick": e.hthick,
            "theta": [list(w) for w in e.theta]} for e in curve.edges],
        "rays": [{
            "vertex": r.vertex, "direction": list(r.direction),
            "mult": r.mult, "vthick": r.vthick, "hthick": r.hthick,
            "theta": [list(w) for w in r.theta]} for r in curve.rays],
        "graph_genus": graph_genus(curve),
        "expanded_genus": expanded_genus(curve),
    }


def curve_from_json(data: dict) -> TropicalCurve:
    vertices = [(Fraction(v["x"]), Fraction(v["y"])) for v in data["vertices"]]
    edges = []
    for e in data["edges"]:
        th = [tuple(w) for w in e["theta"]]
        edges.append(Edge(e["v0"], e["v1"], th, tuple(e["primitive"]),
                          Fraction(e["length"]), e["vthick"], e["hthick"],
                          e["mult"]))
    rays = []
    for r in data["rays"]:
        th = [tuple(w) for w in r["theta"]]
        rays.append(Ray(r["vertex"], tuple(r["direction"]), th,
                        r["vthick"], r["hthick"], r["mult"]))
    cells = {}
    for i in range(len(vertices)):
        incident = [tuple(w) for e in edges if i in (e.v0, e.v1)
                    for w in e.theta]
        incident += [tuple(w) for r in rays if r.vertex == i
                     for w in r.theta]
        cells[i] = sorted(set(incident))
    return TropicalCurve(vertices, edges, rays, cells)
