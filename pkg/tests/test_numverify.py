"""Numeric verification: fiber roots, tracked paths, differentials, the
asymptotic period comparison, and the series lift.

Expected values come from three places: exact algebra done by hand
(square-root fibers, winding counts, residue placement), invariants that
hold by construction (closure, windings, unit normalization), and a
convergence study run with decreasing eps whose endpoints were recorded
once and pinned here as trend constants.
"""

import cmath
import math
from fractions import Fraction as F

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tropint import numverify as nv
from tropint import periods as pd
from tropint import plpoly as pl
from tropint import puiseux as pu
from tropint import tropcurve as tc

EX1 = "x*y^2 + e*y^2 + x^2*y + e^2*x*y + e^5*y + e^8"
EX2 = "y^3 + (x + e^4)*y^2 + e^2*(x + e)*(x + 2*e)*y + e^10"

IDENT = ((1, 0), (0, 1))


# ---------------------------------------------------------------------------
# fiber roots


def test_y_roots_square_fiber_exact():
    # y^2 = et^2 has roots +-et; at eps = 1/ln 10 that is +-0.1
    f = pl.parse("y^2 - e^2")
    ctx = nv.EpsilonContext(1.0 / math.log(10.0))
    roots = sorted(nv.y_roots(f, ctx, 0.3 + 0j), key=lambda z: z.real)
    assert len(roots) == 2
    assert abs(roots[0] + 0.1) <= 1e-6 * 0.1
    assert abs(roots[1] - 0.1) <= 1e-6 * 0.1


def test_y_roots_track_level_functions():
    f = pl.parse(EX1)
    ctx = nv.EpsilonContext(0.05)
    lf = tc.level_functions(f)
    X = F(3, 2)
    vals = sorted(-ctx.eps * math.log(abs(r))
                  for r in nv.y_roots(f, ctx, ctx.et_pow(X)))
    expect = sorted(float(lf.value(i, X)) for i in (1, 2))
    for got, want in zip(vals, expect):
        assert abs(got - want) < 0.1


def test_y_roots_rejects_vanishing_leading_row():
    f = pl.parse(EX1)
    ctx = nv.EpsilonContext(0.1)
    with pytest.raises(nv.NumVerifyError, match="perturb"):
        nv.y_roots(f, ctx, complex(-ctx.et))


def test_x_roots_solve_the_curve():
    f = pl.parse(EX1)
    ctx = nv.EpsilonContext(0.1)
    y0 = ctx.et_pow(F(7, 2)) * cmath.exp(0.7j)
    roots = nv.x_roots(f, ctx, y0)
    assert roots
    for x in roots:
        assert abs(pl.eval_complex(f, x, y0, ctx.eps)) <= 1e-8


@settings(max_examples=20, deadline=None)
@given(st.floats(0.05, 0.25), st.floats(0.0, 2 * math.pi))
def test_fiber_roots_satisfy_curve(eps, phase):
    f = pl.parse(EX1)
    ctx = nv.EpsilonContext(eps)
    x = ctx.et_pow(0.7) * cmath.exp(1j * phase)
    roots = nv.y_roots(f, ctx, x)
    assert len(roots) == 2
    for r in roots:
        assert abs(pl.eval_complex(f, x, r, eps)) <= 1e-8


def test_sheet_separation_examples():
    ctx = nv.EpsilonContext(0.1)
    assert nv.sheet_separation(pl.parse(EX1), ctx) > 0.4
    assert nv.sheet_separation(pl.parse(EX2), ctx) > 0.3


# ---------------------------------------------------------------------------
# tracked paths


def test_alpha_cycle_closes_with_unit_fiber_winding():
    f = pl.parse(EX1)
    ctx = nv.EpsilonContext(0.1)
    path = nv.alpha_cycle(f, ctx, kind="E", index=1)
    assert path.closed
    assert abs(nv.loop_winding(path.samples, "y") - nv.ALPHA_TURNS) < 1e-9
    assert abs(nv.loop_winding(path.samples, "x")) < 1e-9
    dlog = nv.loop_dlog_integral(path.samples, "y")
    assert abs(dlog - nv.ALPHA_TURNS * nv.TWO_PI_I) < 1e-9


def test_cylinder_run_spans_the_edge():
    f = pl.parse(EX1)
    ctx = nv.EpsilonContext(0.1)
    curve = tc.tropicalize(f)
    mg = pd.expand_curve(curve)
    # base edge 2 runs from (2, 3) to (5/2, 7/2) and is its own copy
    path = nv.cylinder_run(f, ctx, curve, mg, expanded_index=2)
    assert not path.closed
    x0, _ = path.samples[0]
    x1, _ = path.samples[-1]
    assert abs(-ctx.eps * math.log(abs(x0)) - 2.0) < 0.2
    assert abs(-ctx.eps * math.log(abs(x1)) - 2.5) < 0.2


def test_beta_paths_close_on_both_examples():
    for src in (EX1, EX2):
        f = pl.parse(src)
        ctx = nv.EpsilonContext(0.1)
        curve = tc.tropicalize(f)
        mg = pd.expand_curve(curve)
        path = nv.beta_path(f, ctx, pd.cycle_basis(mg)[0], curve, mg)
        assert path.closed
        visited = {(float(a), float(b)) for a, b in path.shadow}
        verts = {(float(a), float(b)) for a, b in curve.vertices}
        assert visited <= verts


# ---------------------------------------------------------------------------
# differentials


def test_edge_differential_unit_own_loop():
    f = pl.parse(EX1)
    ctx = nv.EpsilonContext(0.1)
    spec = nv.omega_edge_spec(f, ctx, index=1)
    val, path = nv.integrate_converged(
        ctx, spec,
        lambda n: nv.alpha_cycle(f, ctx, kind="E", index=1, steps=n))
    assert path.closed
    assert abs(val - 1.0) < 2e-3


def test_leaf_differential_residues_split_horns():
    f = pl.parse(EX1)
    ctx = nv.EpsilonContext(0.1)
    curve = tc.tropicalize(f)
    spec = nv.omega_leaf_spec(f, ctx, curve, index=3,
                              copy_plus=0, copy_minus=1)
    vals = {}
    for ri, ray in enumerate(curve.rays):
        for copy in range(ray.mult):
            v, _ = nv.integrate_converged(
                ctx, spec,
                lambda n, ri=ri, copy=copy: nv.alpha_cycle(
                    f, ctx, curve, "R", ri, copy, steps=n))
            vals[(ri, copy)] = v
    assert abs(vals[(3, 0)] - 1.0) < 1e-3
    assert abs(vals[(3, 1)] + 1.0) < 1e-3
    for key, v in vals.items():
        if key[0] != 3:
            assert abs(v) < 1e-3
    assert abs(sum(vals.values())) < 1e-3


def test_tilde_corrections_only_on_multi_copy_routes():
    ctx = nv.EpsilonContext(0.1)
    f1 = pl.parse(EX1)
    assert len(nv.omega_tilde_spec(f1, ctx, index=1).terms) == 1
    f2 = pl.parse(EX2)
    # the route of edge 1 passes the doubled edge: two correction terms
    assert len(nv.omega_tilde_spec(f2, ctx, index=1).terms) == 3
    assert len(nv.omega_tilde_spec(f2, ctx, index=0).terms) == 1


def test_combined_spec_decomposes_over_edge_copies():
    f = pl.parse(EX2)
    ctx = nv.EpsilonContext(0.1)
    curve = tc.tropicalize(f)
    mg = pd.expand_curve(curve)
    spec, coefs = nv.omega_combined_spec(f, ctx, curve, mg,
                                         pd.cycle_basis(mg)[0])
    assert spec.terms
    signs = {(bi, k): s for bi, k, s in coefs}
    assert sorted((signs[(0, 0)], signs[(0, 1)])) == [-1, 1]
    assert signs[(1, 0)] == 0


def test_differential_rejects_foreign_pole():
    f = pl.parse(EX1)
    g, _ = pl.clear_negative_exponents(f)
    term = nv.DiffTerm(1.0 + 0j, IDENT, g, 1, 0,
                       [(1.0 / nv.TWO_PI_I, 123.4 + 0j)])
    with pytest.raises(nv.NumVerifyError, match="pole"):
        nv.SpecEvaluator(nv.DifferentialSpec("bad", 0.1, [term]))


def test_integrate_spec_checks_eps():
    f = pl.parse(EX1)
    spec = nv.omega_edge_spec(f, nv.EpsilonContext(0.1), index=1)
    with pytest.raises(nv.NumVerifyError, match="eps"):
        nv.integrate_spec(f, nv.EpsilonContext(0.2), spec,
                          [(1 + 0j, 1 + 0j), (1 + 0j, 1 + 0j)])


# ---------------------------------------------------------------------------
# period matrix and the asymptotic comparison


def test_period_matrix_normalization_example1():
    f = pl.parse(EX1)
    ctx = nv.EpsilonContext(0.1)
    pm = nv.period_matrix_numeric(f, ctx)
    assert len(pm["A"]) == 1
    assert abs(pm["A"][0][0] - 1.0) < 0.01
    scaled = -nv.TWO_PI_I * ctx.eps * pm["B_hat"][0][0]
    assert abs(scaled - 2.0) < 0.005
    assert pm["decompositions"] == [[(0, 0, 0), (1, 0, 0), (2, 0, -1),
                                     (3, 0, 0)]]


def test_theorem_report_example1_trend():
    rep = nv.theorem_report(pl.parse(EX1))
    assert rep["verdict"] is True
    assert rep["genus"] == 1
    assert rep["B_tropical"] == [["2"]]
    assert rep["decreasing"]
    devs = rep["deviations"]
    assert len(devs) == 3
    assert abs(devs[0] - 0.1644) < 5e-3
    assert devs[1] < 2e-3
    assert devs[2] < 1e-6
    assert all(not r["skipped"] for r in rep["rows"])


def test_theorem_report_example2_metric_correction():
    rep = nv.theorem_report(pl.parse(EX2))
    assert rep["verdict"] is True
    assert rep["B_tropical"] == [["6"]]
    # the doubled tube carries roots at -et and -2*et, so the scaled
    # deviation is eps*log(2) at leading order
    for row in rep["rows"]:
        ratio = row["deviation"] / (row["eps"] * math.log(2.0))
        assert abs(ratio - 1.0) < 0.02


def test_theorem_report_refuses_genus_zero():
    with pytest.raises(nv.GateError, match="genus"):
        nv.theorem_report(pl.parse("x + y + 1"))


def test_theorem_report_names_failed_condition():
    with pytest.raises(nv.GateError, match="regular"):
        nv.theorem_report(pl.parse("x*y + x + y + 1"))


# ---------------------------------------------------------------------------
# cylinder-run table


def test_cylinder_table_identity_frame_cases():
    rows = nv.lemma44_table(pl.parse(EX2), eps_list=(0.2, 0.1),
                            frames=[(0, None)])
    assert sorted(r["case"] for r in rows) == [1, 2, 3]
    for r in rows:
        assert r["deviations"][1] <= r["deviations"][0]
    by_case = {r["case"]: r for r in rows}
    assert by_case[1]["predicted"] == 3.0
    assert by_case[2]["predicted"] == 0.0
    assert by_case[3]["predicted"] == 0.0
    # the doubled vertical edge reports one row per cylinder copy
    assert by_case[1]["copies"] == [0]
    assert by_case[2]["copies"] == [1]


# ---------------------------------------------------------------------------
# series lift


def test_lift_branches_at_vertices():
    f = pl.parse(EX1)
    for P, nb in (((1, 1), 1), ((2, 3), 1), ((2, 4), 1),
                  ((F(5, 2), F(7, 2)), 2)):
        roots, p = nv.lift_roots(f, P, 8)
        assert len(roots) == nb
        for r in roots:
            assert pu.val(r) == F(P[1])
            assert nv.lift_residual_valuation(p, r) >= 8


def test_lift_residual_grows_with_order():
    f = pl.parse(EX1)
    res = []
    for order in (4, 8):
        roots, p = nv.lift_roots(f, (1, 1), order)
        res.append(nv.lift_residual_valuation(p, roots[0]))
    assert res[0] >= 4 and res[1] >= 8
    assert res[1] > res[0]


def test_lift_rejects_off_curve_points():
    with pytest.raises(nv.NumVerifyError, match="not on the tropical"):
        nv.lift_roots(pl.parse(EX1), (0, 5), 4)


def test_lift_evaluates_onto_the_numeric_fiber():
    f = pl.parse(EX1)
    ctx = nv.EpsilonContext(0.1)
    roots, _ = nv.lift_roots(f, (1, 1), 8)
    approx = pu.eval_at(roots[0], ctx.eps)
    fiber = nv.y_roots(f, ctx, complex(ctx.et_pow(1)))
    assert min(abs(approx - r) for r in fiber) <= 1e-6


# ---------------------------------------------------------------------------
# smoothness probe


def test_smoothness_probe_passes_smooth_curves():
    ctx = nv.EpsilonContext(0.05)
    for s in (EX1, EX2):
        r = nv.smoothness_probe(pl.parse(s), ctx)
        assert r["ok"] is True
        assert r["singular_points"] == []
        assert r["starts"] > 0


def test_smoothness_probe_finds_a_node():
    # y^2 - 2*y - x^2 + 2*x factors through (y-1)^2 = (x-1)^2, with a
    # node at (1, 1) inside the torus at every eps
    r = nv.smoothness_probe(pl.parse("y^2 - 2*y - x^2 + 2*x"),
                            nv.EpsilonContext(0.05))
    assert r["ok"] is False
    assert len(r["singular_points"]) == 1
    xr, xi, yr, yi = r["singular_points"][0]
    assert abs(complex(xr, xi) - 1) <= 1e-8
    assert abs(complex(yr, yi) - 1) <= 1e-8
