"""Metric-graph homology of the expanded tropical curve.

Every edge and ray of the curve is split into mult unit-multiplicity copies,
each keeping the full lattice length.  On the resulting graph we build a
deterministic fundamental cycle basis, evaluate the signed shared-length
bilinear form, and assemble the tropical period matrix B_T (exact rationals,
symmetric positive definite).

Also here: the directed route chains Gamma_E attached to a vertical edge
(left infinite end, along the floor level graph to the edge, up, back along
the ceiling), their copy-selecting tilde variants, transport of chains
between unimodular frames, the exact integer decomposition of cycles over
tilde chains, and the combinatorial intersection numbers used to pair
alpha-cycles with the basis.

Chains are plain dicts with integer coefficients.  Keys: ("E", i) expanded
edge i, ("R", j) expanded ray j (zero length, kept for route bookkeeping),
("BE", i) / ("BR", j) refer to base curve pieces before copy selection.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from . import plpoly as pl
from . import tropcurve as tc


class PeriodError(ValueError):
    pass


# ---------------------------------------------------------------------------
# expanded metric graph


@dataclass
class GraphEdge:
    v0: int
    v1: int
    length: Fraction
    base_index: int
    copy: int
    q: int          # per-copy vertical thickness
    w: int          # per-copy horizontal thickness


@dataclass
class GraphRay:
    vertex: int
    base_index: int
    copy: int
    direction: tuple


@dataclass
class MetricGraph:
    positions: list     # node coordinates, inherited from the curve
    edges: list         # [GraphEdge] ordered by (base_index, copy)
    rays: list          # [GraphRay] ordered by (base_index, copy)


def lattice_length(piece):
    """Length of a bounded curve edge; rays are rejected."""
    if isinstance(piece, tc.Ray):
        raise PeriodError("ray has infinite length")
    return piece.lattice_length


def expand_curve(curve: tc.TropicalCurve) -> MetricGraph:
    edges = []
    for bi, e in enumerate(curve.edges):
        m = e.mult
        assert m >= 1
        if e.vthick % m or e.hthick % m:
            raise PeriodError(
                "multiplicity %d does not divide thickness (%d, %d) of "
                "edge %d" % (m, e.vthick, e.hthick, bi))
        for k in range(m):
            edges.append(GraphEdge(e.v0, e.v1, e.lattice_length, bi, k,
                                   e.vthick // m, e.hthick // m))
    rays = []
    for bi, r in enumerate(curve.rays):
        m = r.mult
        if r.vthick % m or r.hthick % m:
            raise PeriodError(
                "multiplicity %d does not divide thickness (%d, %d) of "
                "ray %d" % (m, r.vthick, r.hthick, bi))
        for k in range(m):
            rays.append(GraphRay(r.vertex, bi, k, r.direction))
    return MetricGraph(list(curve.vertices), edges, rays)


def edge_copy_index(mg: MetricGraph, base_index: int, copy: int) -> int:
    for i, e in enumerate(mg.edges):
        if e.base_index == base_index and e.copy == copy:
            return i
    raise PeriodError("no expanded edge (%d, copy %d)" % (base_index, copy))


def ray_copy_index(mg: MetricGraph, base_index: int, copy: int) -> int:
    for i, r in enumerate(mg.rays):
        if r.base_index == base_index and r.copy == copy:
            return i
    raise PeriodError("no expanded ray (%d, copy %d)" % (base_index, copy))


# ---------------------------------------------------------------------------
# chains


def chain_add(a: dict, b: dict, sb=1) -> dict:
    out = dict(a)
    for k, c in b.items():
        out[k] = out.get(k, 0) + sb * c
    return {k: c for k, c in out.items() if c}


def chain_scale(a: dict, s: int) -> dict:
    return {k: s * c for k, c in a.items() if s * c}


def chain_boundary(mg: MetricGraph, chain: dict) -> dict:
    """Signed degree at every finite node; ray coefficients count as
    outflow at their anchor vertex (the other end is at infinity)."""
    d = {}
    for key, c in chain.items():
        if key[0] == "E":
            e = mg.edges[key[1]]
            d[e.v1] = d.get(e.v1, 0) + c
            d[e.v0] = d.get(e.v0, 0) - c
        elif key[0] == "R":
            r = mg.rays[key[1]]
            d[r.vertex] = d.get(r.vertex, 0) - c
        else:
            raise PeriodError("chain key %r is not expanded; apply "
                              "tilde_gamma first" % (key,))
    return {v: c for v, c in d.items() if c}


def is_cycle(mg: MetricGraph, chain: dict) -> bool:
    return not chain_boundary(mg, chain)


def path_length_form(mg: MetricGraph, c1: dict, c2: dict) -> Fraction:
    """Bilinear signed shared-length pairing; rays contribute nothing."""
    acc = Fraction(0)
    for key, a in c1.items():
        if key[0] != "E":
            continue
        b = c2.get(key)
        if b:
            acc += a * b * mg.edges[key[1]].length
    return acc


# ---------------------------------------------------------------------------
# cycle basis and period matrix


def _spanning_structure(mg: MetricGraph):
    parent = list(range(len(mg.positions)))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    tree, nontree = [], []
    for i, e in enumerate(mg.edges):
        a, b = find(e.v0), find(e.v1)
        if a == b:
            nontree.append(i)
        else:
            parent[a] = b
            tree.append(i)
    return tree, nontree


def cycle_basis(mg: MetricGraph):
    """Fundamental cycles of the lexicographic spanning forest.

    Each non-tree edge (in index order) is traversed once positively and
    closed through the tree path; returns one +-1 chain per cycle.
    """
    tree, nontree = _spanning_structure(mg)
    adj = {}
    for i in tree:
        e = mg.edges[i]
        adj.setdefault(e.v0, []).append((e.v1, i, 1))
        adj.setdefault(e.v1, []).append((e.v0, i, -1))
    cycles = []
    for i in nontree:
        e = mg.edges[i]
        # tree path from e.v1 back to e.v0
        prev = {e.v1: None}
        queue = [e.v1]
        while queue:
            v = queue.pop(0)
            if v == e.v0:
                break
            for u, ei, s in adj.get(v, []):
                if u not in prev:
                    prev[u] = (v, ei, s)
                    queue.append(u)
        assert e.v0 in prev, "spanning forest misses a tree path"
        chain = {("E", i): 1}
        v = e.v0
        while prev[v] is not None:
            u, ei, s = prev[v]
            chain[("E", ei)] = chain.get(("E", ei), 0) + s
            v = u
        cycles.append({k: c for k, c in chain.items() if c})
    return cycles


@dataclass
class TropicalPeriodMatrix:
    g: int
    entries: list       # g x g nested lists of Fraction


def period_matrix(mg: MetricGraph, basis) -> TropicalPeriodMatrix:
    g = len(basis)
    B = [[path_length_form(mg, basis[i], basis[j]) for j in range(g)]
         for i in range(g)]
    for i in range(g):
        for j in range(g):
            assert B[i][j] == B[j][i]
    # positive definiteness via leading principal minors (exact)
    for k in range(1, g + 1):
        sub = [row[:k] for row in B[:k]]
        if _det(sub) <= 0:
            raise PeriodError("cycle basis dependent or degenerate "
                              "(principal minor %d not positive)" % k)
    return TropicalPeriodMatrix(g, B)


def _det(m):
    m = [row[:] for row in m]
    n = len(m)
    det = Fraction(1)
    for col in range(n):
        piv = next((r for r in range(col, n) if m[r][col] != 0), None)
        if piv is None:
            return Fraction(0)
        if piv != col:
            m[col], m[piv] = m[piv], m[col]
            det = -det
        det *= m[col][col]
        for r in range(col + 1, n):
            fac = m[r][col] / m[col][col]
            for c in range(col, n):
                m[r][c] -= fac * m[col][c]
    return det


# ---------------------------------------------------------------------------
# directed route chains


def gamma_path(curve: tc.TropicalCurve, lf: tc.LevelFunctions,
               edge_index: int) -> dict:
    """Directed route chain of a vertical edge E, at base-curve level.

    Route: from the left infinite end along the floor level graph to the
    bottom of E, up E, back along the ceiling level graph to the left
    infinite end.  Bounded pieces keyed ("BE", i) with the sign of traversal
    against the reference orientation, rays keyed ("BR", j).
    """
    E = curve.edges[edge_index]
    if E.primitive != (0, 1):
        raise PeriodError(
            "edge %d is not vertical; apply verticalizing_theta and "
            "transform the polynomial first" % edge_index)
    N = lf.N
    I = tc.vertical_floor_index(N, E.theta)
    P0, P1 = curve.vertices[E.v0], curve.vertices[E.v1]
    B = P0[0]
    assert tc.ceiling_floor(lf, B, min(P0[1], P1[1]),
                            max(P0[1], P1[1])) == (I, I + 1)
    chain = {("BE", edge_index): 1}
    for level, sgn in ((I, 1), (I + 1, -1)):
        for j, e in enumerate(curve.edges):
            if j == edge_index or e.primitive[0] == 0:
                continue
            if level not in tc.edge_level_range(N, e.theta):
                continue
            x0 = curve.vertices[e.v0][0]
            x1 = curve.vertices[e.v1][0]
            if max(x0, x1) > B:
                continue
            assert e.primitive[0] > 0
            chain[("BE", j)] = chain.get(("BE", j), 0) + sgn
        left = [k for k, r in enumerate(curve.rays)
                if r.direction[0] < 0
                and level in tc.edge_level_range(N, r.theta)
                and curve.vertices[r.vertex][0] <= B]
        if len(left) != 1:
            raise PeriodError("expected one left ray on level %d left of "
                              "x=%s, found %d" % (level, B, len(left)))
        k = left[0]
        # floor: entering from infinity runs against the vertex-to-infinity
        # reference; ceiling: leaving runs with it
        chain[("BR", k)] = chain.get(("BR", k), 0) + (-1 if sgn == 1 else 1)
    return {k: c for k, c in chain.items() if c}


def tilde_gamma(mg: MetricGraph, gamma: dict, edge_index=None,
                copy=0) -> dict:
    """Copy-selecting refinement: first copy of every multi-piece along the
    route; the edge the route belongs to may use a chosen copy."""
    out = {}
    for key, c in gamma.items():
        if key[0] == "BE":
            k = copy if key[1] == edge_index else 0
            out[("E", edge_copy_index(mg, key[1], k))] = c
        elif key[0] == "BR":
            out[("R", ray_copy_index(mg, key[1], 0))] = c
        else:
            out[key] = c
    return out


def transport_chain(frame_chain: dict, match: dict) -> dict:
    """Re-express a base-level chain computed on a framed curve in the base
    curve's piece indices, using a tc.match_curves index map."""
    inv_e = {fi: (bi, s) for bi, (fi, s) in enumerate(match["edges"])}
    inv_r = {fi: bi for bi, fi in enumerate(match["rays"])}
    out = {}
    for key, c in frame_chain.items():
        if key[0] == "BE":
            bi, s = inv_e[key[1]]
            out[("BE", bi)] = out.get(("BE", bi), 0) + s * c
        elif key[0] == "BR":
            bi = inv_r[key[1]]
            out[("BR", bi)] = out.get(("BR", bi), 0) + c
        else:
            raise PeriodError("cannot transport expanded chain key %r"
                              % (key,))
    return {k: c for k, c in out.items() if c}


def frame_data(f: pl.PLPolynomial, curve: tc.TropicalCurve, theta):
    """Transformed polynomial (exponents cleared), its curve, level
    functions, and the base-to-frame index match for the given frame."""
    g = pl.affine_transform_poly(f, theta)
    g, _shift = pl.clear_negative_exponents(g)
    framed = tc.tropicalize(g)
    match = tc.match_curves(curve, framed, theta)
    lf = tc.level_functions(g)
    return g, framed, lf, match


def tilde_gamma_for_edge(f: pl.PLPolynomial, curve: tc.TropicalCurve,
                         mg: MetricGraph, edge_index: int, copy=0,
                         theta=None) -> dict:
    """Route chain of any bounded edge, verticalizing first if needed."""
    e = curve.edges[edge_index]
    if e.primitive == (0, 1):
        g, _ = pl.clear_negative_exponents(f)
        lf = tc.level_functions(g)
        return tilde_gamma(mg, gamma_path(curve, lf, edge_index),
                           edge_index, copy)
    if theta is None:
        theta = tc.verticalizing_theta(e.primitive)
    _, framed, lf, match = frame_data(f, curve, theta)
    fe_idx, _sign = match["edges"][edge_index]
    gp = gamma_path(framed, lf, fe_idx)
    return tilde_gamma(mg, transport_chain(gp, match), edge_index, copy)


# ---------------------------------------------------------------------------
# integer decomposition of cycles over route chains


def solve_chain_decomposition(target: dict, chains, with_rays=True):
    """Exact integer coefficients s with target = sum s_k * chains[k].

    Solved by rational Gaussian elimination over the edge (and optionally
    ray) coordinates; free variables are set to zero.  Raises if the system
    is inconsistent or the solution is not integral.
    """
    keys = set(target)
    for ch in chains:
        keys |= set(ch)
    if not with_rays:
        keys = {k for k in keys if k[0] != "R"}
    keys = sorted(keys)
    rows = [[Fraction(ch.get(k, 0)) for ch in chains] + [Fraction(
        target.get(k, 0))] for k in keys]
    n = len(chains)
    pivots = []
    r = 0
    for col in range(n):
        piv = next((i for i in range(r, len(rows)) if rows[i][col] != 0),
                   None)
        if piv is None:
            continue
        rows[r], rows[piv] = rows[piv], rows[r]
        fac = rows[r][col]
        rows[r] = [x / fac for x in rows[r]]
        for i in range(len(rows)):
            if i != r and rows[i][col] != 0:
                f0 = rows[i][col]
                rows[i] = [a - f0 * b for a, b in zip(rows[i], rows[r])]
        pivots.append(col)
        r += 1
    for i in range(r, len(rows)):
        if rows[i][n] != 0:
            if with_rays:
                # allow boundary slack through the infinite ends
                return solve_chain_decomposition(target, chains,
                                                 with_rays=False)
            raise PeriodError("integer chain decomposition infeasible")
    s = [Fraction(0)] * n
    for i, col in enumerate(pivots):
        s[col] = rows[i][n]
    if any(x.denominator != 1 for x in s):
        raise PeriodError("chain decomposition is not integral: %s" % (s,))
    s = [int(x) for x in s]
    check = {}
    for k, ch in zip(s, chains):
        for key, c in ch.items():
            if not with_rays and key[0] == "R":
                continue
            check[key] = check.get(key, 0) + k * c
    tgt = {k: c for k, c in target.items() if with_rays or k[0] != "R"}
    if {k: c for k, c in check.items() if c} != tgt:
        raise PeriodError("integer chain decomposition infeasible")
    return s


# ---------------------------------------------------------------------------
# intersection numbers


@dataclass(frozen=True)
class AlphaMarker:
    """A small loop around one expanded edge's cylinder, with the fixed
    positive orientation convention."""
    edge: int
    sign: int = 1


def alpha_markers(mg: MetricGraph, basis=None):
    """One marker per fundamental cycle, sitting on its defining non-tree
    edge; pairs with cycle_basis as a Kronecker delta."""
    _, nontree = _spanning_structure(mg)
    return [AlphaMarker(i) for i in nontree]


def intersection_number(marker: AlphaMarker, edge_index: int,
                        direction: int) -> int:
    """+-1 when the directed expanded edge runs through the marker's
    cylinder (sign by direction), else 0."""
    if edge_index != marker.edge:
        return 0
    assert direction in (-1, 1)
    return marker.sign * direction


def chain_intersection(marker: AlphaMarker, chain: dict) -> int:
    acc = 0
    for key, c in chain.items():
        if key[0] == "E" and key[1] == marker.edge:
            acc += marker.sign * c
    return acc
