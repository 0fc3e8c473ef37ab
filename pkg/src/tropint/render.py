"""Figure rendering: tropical curve pictures and convergence plots.

Uses matplotlib's Agg backend.  SVG output is made byte-reproducible by
pinning the hash salt and dropping the date metadata; multiplicity is
drawn as parallel strokes and rays are clipped at an auto-fitted
viewport.
"""

import math

import matplotlib

matplotlib.use("Agg")
matplotlib.rcParams["svg.hashsalt"] = "tropint"

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

EDGE_COLOR = "#1f6fb4"
VERTEX_COLOR = "#222222"


def _viewport(curve):
    xs = [float(P[0]) for P in curve.vertices]
    ys = [float(P[1]) for P in curve.vertices]
    if not xs:
        xs, ys = [0.0], [0.0]
    x0, x1 = min(xs), max(xs)
    y0, y1 = min(ys), max(ys)
    span = max(x1 - x0, y1 - y0, 1.0)
    pad = 0.45 * span
    return (x0 - pad, x1 + pad, y0 - pad, y1 + pad), span


def _clip_ray(p, d, box):
    """First intersection of p + t*d (t > 0) with the box boundary."""
    x0, x1, y0, y1 = box
    t = math.inf
    if d[0] > 0:
        t = min(t, (x1 - p[0]) / d[0])
    elif d[0] < 0:
        t = min(t, (x0 - p[0]) / d[0])
    if d[1] > 0:
        t = min(t, (y1 - p[1]) / d[1])
    elif d[1] < 0:
        t = min(t, (y0 - p[1]) / d[1])
    if not (t < math.inf):
        t = 1.0
    return (p[0] + t * d[0], p[1] + t * d[1])


def _strokes(ax, p0, p1, mult, span):
    """One segment drawn as `mult` parallel strokes."""
    dx, dy = p1[0] - p0[0], p1[1] - p0[1]
    norm = math.hypot(dx, dy)
    if norm == 0:
        return
    ux, uy = -dy / norm, dx / norm
    delta = 0.012 * span
    for k in range(mult):
        off = (k - (mult - 1) / 2.0) * delta
        ax.plot([p0[0] + off * ux, p1[0] + off * ux],
                [p0[1] + off * uy, p1[1] + off * uy],
                color=EDGE_COLOR, lw=1.6, solid_capstyle="round")


def _save(fig, path):
    path = str(path)
    if path.endswith(".svg"):
        fig.savefig(path, metadata={"Date": None})
    else:
        fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def curve_figure(curve, path):
    """Draw a tropical curve (edges, clipped rays, vertex dots) to path.

    Multiplicity appears as the number of parallel strokes.  The format
    follows the file extension (.svg or .png).
    """
    box, span = _viewport(curve)
    fig, ax = plt.subplots(figsize=(6.0, 6.0))
    for e in curve.edges:
        p0 = tuple(map(float, curve.vertices[e.v0]))
        p1 = tuple(map(float, curve.vertices[e.v1]))
        _strokes(ax, p0, p1, e.mult, span)
    for r in curve.rays:
        p0 = tuple(map(float, curve.vertices[r.vertex]))
        p1 = _clip_ray(p0, r.direction, box)
        _strokes(ax, p0, p1, r.mult, span)
    for P in curve.vertices:
        ax.plot(float(P[0]), float(P[1]), "o", ms=4.5, color=VERTEX_COLOR)
    ax.set_xlim(box[0], box[1])
    ax.set_ylim(box[2], box[3])
    ax.set_aspect("equal")
    ax.grid(True, lw=0.4, alpha=0.35)
    ax.set_xlabel("X = val x")
    ax.set_ylabel("Y = val y")
    fig.tight_layout()
    return _save(fig, path)


def convergence_figure(report, path):
    """Log-log plot of the scaled period deviation over the eps grid."""
    rows = [r for r in report["rows"] if not r["skipped"]]
    eps = [r["eps"] for r in rows]
    dev = [max(r["deviation"], 1e-16) for r in rows]
    fig, ax = plt.subplots(figsize=(5.2, 4.0))
    if eps:
        ax.loglog(eps, dev, "o-", color=EDGE_COLOR, lw=1.4)
    ax.invert_xaxis()
    ax.grid(True, which="both", lw=0.4, alpha=0.35)
    ax.set_xlabel("eps (decreasing)")
    ax.set_ylabel("max entry deviation")
    ax.set_title("scaled periods vs tropical period matrix")
    fig.tight_layout()
    return _save(fig, path)
