"""Level curves f^-1(c): extraction, arclength sampling and curvature.

Extraction runs marching squares on the node grid, stitches the cell
segments into oriented polylines (superlevel set on the left, so the
right-hand normal agrees with -grad f), then resamples each loop to
uniform arclength and projects the samples back onto the level set with a
few Newton steps.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field as dc_field
from typing import NamedTuple

import numpy as np

from .errors import DegenerateSegment, LevelOutOfRange, NearCriticalVertex, OpenCurveAtBoundary
from .fields import GridSample, ScalarField, sample_grid

DEFAULT_SAMPLES = 512
Q_NOISE = 0.01
EPS_GRAD_REL = 1e-6


def grad_scale(sample: GridSample, diameter: float) -> float:
    """Typical gradient magnitude, used to make epsilon_grad relative."""
    span = sample.vmax - sample.vmin
    return max(span, abs(sample.vmax), abs(sample.vmin), 1e-300) / diameter


def eps_grad_for(field: ScalarField, sample: GridSample, rel=EPS_GRAD_REL) -> float:
    return rel * grad_scale(sample, field.domain.diameter)


# ---------------------------------------------------------------------------
# marching squares


def _segment_table():
    """(case, centre_high) -> list of (start edge, end edge) in cell-local ids.

    Cell corners 0..3 run counter-clockwise from the lower left; edge k joins
    corner k to corner k+1.  A segment starts on an edge that goes from high
    to low in that order and ends on one that goes from low to high.
    """
    table = {}
    for case in range(16):
        bit = [(case >> k) & 1 for k in range(4)]
        hl = [k for k in range(4) if bit[k] and not bit[(k + 1) % 4]]
        lh = [k for k in range(4) if not bit[k] and bit[(k + 1) % 4]]
        if not hl:
            continue
        if len(hl) == 1:
            table[(case, True)] = table[(case, False)] = [(hl[0], lh[0])]
            continue
        high = [m for m in range(4) if bit[m]]
        low = [m for m in range(4) if not bit[m]]
        table[(case, True)] = [((m - 1) % 4, m) for m in low]
        table[(case, False)] = [(m, (m - 1) % 4) for m in high]
    return table


_TABLE = _segment_table()


def marching_squares(values, mask, xs, ys, c):
    """Oriented closed loops of the level ``c`` plus the number of open chains.

    Returns ``(loops, n_open)`` where each loop is a ``(k, 2)`` array of
    vertices without the repeated closing vertex.
    """
    V = values
    ny, nx = V.shape
    cell_ok = mask[:-1, :-1] & mask[:-1, 1:] & mask[1:, :-1] & mask[1:, 1:]
    above = V > c
    c0, c1, c2, c3 = above[:-1, :-1], above[:-1, 1:], above[1:, 1:], above[1:, :-1]
    case = c0.astype(np.int8) + 2 * c1 + 4 * c2 + 8 * c3
    active = cell_ok & (case != 0) & (case != 15)
    jj, ii = np.nonzero(active)
    if jj.size == 0:
        return [], 0
    cs = case[jj, ii]
    centre = 0.25 * (V[jj, ii] + V[jj, ii + 1] + V[jj + 1, ii + 1] + V[jj + 1, ii]) > c

    base = jj * nx + ii
    edge_ids = np.stack([2 * base, 2 * (base + 1) + 1, 2 * (base + nx), 2 * base + 1], axis=1)

    starts, ends = [], []
    for (cval, chigh), segs in _TABLE.items():
        sel = (cs == cval) & (centre == chigh)
        if not sel.any():
            continue
        rows = edge_ids[sel]
        for a, b in segs:
            starts.append(rows[:, a])
            ends.append(rows[:, b])
    starts = np.concatenate(starts)
    ends = np.concatenate(ends)

    eids = np.unique(np.concatenate([starts, ends]))
    node = eids // 2
    vert = eids % 2
    j = node // nx
    i = node % nx
    j2 = j + vert
    i2 = i + (1 - vert)
    va = V[j, i]
    vb = V[j2, i2]
    tpar = (c - va) / (vb - va)
    px = xs[i] + tpar * (xs[i2] - xs[i])
    py = ys[j] + tpar * (ys[j2] - ys[j])
    where = dict(zip(eids.tolist(), range(len(eids))))

    nxt = dict(zip(starts.tolist(), ends.tolist()))
    heads = set(nxt) - set(ends.tolist())
    visited = set()
    n_open = 0
    for h in sorted(heads):
        e = h
        while e in nxt and e not in visited:
            visited.add(e)
            e = nxt[e]
        n_open += 1
    loops = []
    for s in starts.tolist():
        if s in visited:
            continue
        chain = []
        e = s
        closed = False
        while e not in visited:
            visited.add(e)
            chain.append(where[e])
            if e not in nxt:
                break
            e = nxt[e]
            if e == s:
                closed = True
                break
        if closed:
            idx = np.asarray(chain)
            loops.append(np.column_stack([px[idx], py[idx]]))
        else:
            n_open += 1
    return loops, n_open


# ---------------------------------------------------------------------------
# polyline geometry


def _as_vertices(curve):
    v = curve.vertices if isinstance(curve, LevelCurve) else np.asarray(curve, float)
    if len(v) > 1 and np.array_equal(v[0], v[-1]):
        v = v[:-1]
    return v


def _segments(v):
    d = np.roll(v, -1, axis=0) - v
    ln = np.hypot(d[:, 0], d[:, 1])
    if np.any(ln <= 0):
        raise DegenerateSegment("repeated vertices in polyline")
    return d, ln


def _turning(v):
    d, ln = _segments(v)
    th = np.arctan2(d[:, 1], d[:, 0])
    turn = th - np.roll(th, 1)
    turn = (turn + np.pi) % (2 * np.pi) - np.pi
    return turn, d, ln


def curvature_geometric(curve) -> np.ndarray:
    """Signed curvature per vertex from the turning of the tangent angle."""
    v = _as_vertices(curve)
    if len(v) < 16:
        raise ValueError("curvature needs a closed polyline with at least 16 vertices")
    turn, _, ln = _turning(v)
    return turn / (0.5 * (ln + np.roll(ln, 1)))


def tangents_normals(v):
    d, ln = _segments(v)
    u = d / ln[:, None]
    w = u + np.roll(u, 1, axis=0)
    w /= np.hypot(w[:, 0], w[:, 1])[:, None]
    nu = np.column_stack([w[:, 1], -w[:, 0]])
    return w, nu


def is_simple(vertices) -> bool:
    """True when no two non-adjacent edges of the closed polyline intersect."""
    v = _as_vertices(vertices)
    n = len(v)
    a = v
    b = np.roll(v, -1, axis=0)

    def orient(p, q, r):
        return (q[..., 0] - p[..., 0]) * (r[..., 1] - p[..., 1]) - (q[..., 1] - p[..., 1]) * (r[..., 0] - p[..., 0])

    A, B = a[:, None, :], b[:, None, :]
    C, D = a[None, :, :], b[None, :, :]
    o1 = orient(A, B, C)
    o2 = orient(A, B, D)
    o3 = orient(C, D, A)
    o4 = orient(C, D, B)
    cross = (o1 * o2 < 0) & (o3 * o4 < 0)

    def on_segment(o, p, q, r):
        # r collinear with pq and inside its bounding box
        lo, hi = np.minimum(p, q), np.maximum(p, q)
        return (o == 0) & np.all((r >= lo) & (r <= hi), axis=-1)

    # crossings through a vertex count as well
    cross |= on_segment(o1, A, B, C) | on_segment(o2, A, B, D)
    idx = np.arange(n)
    near = np.abs(idx[:, None] - idx[None, :])
    near = np.minimum(near, n - near) <= 1
    return not np.any(cross & ~near)


class TotalCurvature(NamedTuple):
    value: float
    simple: bool


def total_curvature(curve) -> TotalCurvature:
    """Sum of signed turning angles; +-2 pi for simple closed curves."""
    v = _as_vertices(curve)
    turn, _, _ = _turning(v)
    return TotalCurvature(float(turn.sum()), is_simple(v))


def polygon_mask(v, xs, ys):
    """Grid nodes strictly inside the closed polyline (even-odd rule)."""
    a = v
    b = np.roll(v, -1, axis=0)
    inside = np.zeros((len(ys), len(xs)), dtype=bool)
    ylo, yhi = v[:, 1].min(), v[:, 1].max()
    rows = np.nonzero((ys > ylo) & (ys < yhi))[0]
    if rows.size == 0:
        return inside
    Y = ys[rows][:, None]
    y0, y1 = a[None, :, 1], b[None, :, 1]
    hit = (y0 > Y) != (y1 > Y)
    with np.errstate(divide="ignore", invalid="ignore"):
        xc = a[None, :, 0] + (Y - y0) * (b[None, :, 0] - a[None, :, 0]) / (y1 - y0)
    xc = np.where(hit, xc, np.inf)
    xc.sort(axis=1)
    counts = hit.sum(axis=1)
    for r, row, k in zip(rows, xc, counts):
        for p in range(0, k - 1, 2):
            lo = np.searchsorted(xs, row[p], side="right")
            hi = np.searchsorted(xs, row[p + 1], side="left")
            inside[r, lo:hi] = True
    return inside


# ---------------------------------------------------------------------------
# level curves


@dataclass(eq=False)
class LevelCurve:
    level: float
    vertices: np.ndarray          # (n + 1, 2), first == last
    arclength: np.ndarray         # (n + 1,)
    tangents: np.ndarray          # (n, 2)
    normals: np.ndarray           # (n, 2)
    curvature_geom: np.ndarray    # (n,)
    curvature_hess: np.ndarray | None
    grad_norm: np.ndarray         # (n,)
    raw_vertices: int = 0
    flags: list = dc_field(default_factory=list)

    @property
    def points(self):
        return self.vertices[:-1]

    @property
    def length(self) -> float:
        return float(self.arclength[-1])

    @property
    def segment_lengths(self):
        return np.diff(self.arclength)

    @property
    def vertex_weights(self):
        """Arclength attributed to each vertex (half of each adjacent segment)."""
        ln = self.segment_lengths
        return 0.5 * (ln + np.roll(ln, 1))

    @property
    def min_grad_norm(self) -> float:
        return float(self.grad_norm.min())

    @property
    def turning(self) -> float:
        return float(np.sum(self.curvature_geom * self.vertex_weights))

    @property
    def abs_turning(self) -> float:
        return float(np.sum(np.abs(self.curvature_geom) * self.vertex_weights))

    def total_curvature(self) -> TotalCurvature:
        return total_curvature(self.vertices)

    def rows(self):
        k_h = self.curvature_hess if self.curvature_hess is not None else np.full(len(self.points), np.nan)
        s = self.arclength[:-1]
        return zip(s, self.points[:, 0], self.points[:, 1], self.curvature_geom, k_h)

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["s", "x", "y", "kappa_geom", "kappa_hess"])
            for row in self.rows():
                w.writerow([repr(float(v)) for v in row])


@dataclass(eq=False)
class LevelSetDecomposition:
    level: float
    curves: list
    rejected: int = 0
    flags: list = dc_field(default_factory=list)

    @property
    def beta(self) -> int:
        return len(self.curves)

    def summary(self, with_convexity=None):
        out = {
            "c": self.level,
            "beta": self.beta,
            "lengths": [cv.length for cv in self.curves],
            "total_curvatures": [cv.turning for cv in self.curves],
        }
        if with_convexity is not None:
            out["convex"] = [bool(r.convex) for r in with_convexity]
        if self.rejected:
            out["rejected_open_curves"] = self.rejected
        return out

    def to_json(self, **kw):
        return json.dumps(self.summary(**kw), sort_keys=True)


def _resample(loop, n):
    # start at the leftmost vertex for deterministic output
    k = int(np.lexsort((loop[:, 1], loop[:, 0]))[0])
    loop = np.roll(loop, -k, axis=0)
    closed = np.vstack([loop, loop[:1]])
    seg = np.hypot(*np.diff(closed, axis=0).T)
    s = np.concatenate([[0.0], np.cumsum(seg)])
    u = np.linspace(0.0, s[-1], n, endpoint=False)
    return np.column_stack([np.interp(u, s, closed[:, 0]), np.interp(u, s, closed[:, 1])])


def _project(field, pts, c, iters=4):
    """Newton steps along the gradient onto f = c."""
    p = pts.copy()
    for _ in range(iters):
        f = field.value(p[:, 0], p[:, 1])
        gx, gy = field.gradient(p[:, 0], p[:, 1])
        g2 = gx * gx + gy * gy
        ok = g2 > 1e-300
        step = np.where(ok, (f - c) / np.where(ok, g2, 1.0), 0.0)
        p[:, 0] -= step * gx
        p[:, 1] -= step * gy
    return p


def curvature_from_hessian(field: ScalarField, curve, eps_grad=0.0, tangents=None) -> np.ndarray:
    """Signed curvature from -<H w, w> / |grad f| at each vertex.

    Its absolute value is |<H w, w>| / |grad f|; the sign follows the
    orientation convention (superlevel set on the left).
    """
    if isinstance(curve, LevelCurve):
        pts, w = curve.points, curve.tangents
    else:
        pts = _as_vertices(curve)
        w = tangents if tangents is not None else tangents_normals(pts)[0]
    gx, gy = field.gradient(pts[:, 0], pts[:, 1])
    gn = np.hypot(gx, gy)
    if np.any(gn < eps_grad) or np.any(gn == 0):
        raise NearCriticalVertex(f"|grad f| = {gn.min():.3g} below {eps_grad:.3g} on the curve")
    a, b, cc = field.hessian(pts[:, 0], pts[:, 1])
    q = a * w[:, 0] ** 2 + 2 * b * w[:, 0] * w[:, 1] + cc * w[:, 1] ** 2
    return -q / gn


def build_curve(field, loop, c, samples=DEFAULT_SAMPLES, eps_grad=0.0, project=True):
    pts = _resample(loop, samples)
    if project:
        moved = _project(field, pts, c)
        # keep the raw samples if Newton wandered off (near-critical curves)
        if np.all(np.isfinite(moved)):
            pts = moved
    closed = np.vstack([pts, pts[:1]])
    seg = np.hypot(*np.diff(closed, axis=0).T)
    if np.any(seg <= 0):
        raise DegenerateSegment("repeated vertices after resampling")
    arclen = np.concatenate([[0.0], np.cumsum(seg)])
    w, nu = tangents_normals(pts)
    kg = curvature_geometric(pts)
    gx, gy = field.gradient(pts[:, 0], pts[:, 1])
    gn = np.hypot(gx, gy)
    flags = []
    try:
        kh = curvature_from_hessian(field, pts, eps_grad, tangents=w)
    except NearCriticalVertex:
        kh = None
        flags.append("near-critical-vertex")
    if gn.min() < 10 * eps_grad:
        flags.append("near-critical-level")
    return LevelCurve(float(c), closed, arclen, w, nu, kg, kh, gn, len(loop), flags)


def extract_level_set(field: ScalarField, c: float, resolution: int = 512, domain=None,
                      sample: GridSample | None = None, samples: int = DEFAULT_SAMPLES,
                      strict: bool = True, eps_grad: float | None = None) -> LevelSetDecomposition:
    """Decompose f^-1(c) into oriented closed curves.

    Loops lying entirely outside the closed domain (in the sampling collar)
    are ignored; loops that are open or straddle the boundary are rejected
    and, with ``strict``, raise :class:`OpenCurveAtBoundary`.
    """
    if resolution < 64:
        raise ValueError("resolution must be at least 64")
    domain = domain or field.domain
    if sample is None:
        sample = sample_grid(field, resolution, domain)
    if not (sample.vmin < c < sample.vmax):
        raise LevelOutOfRange(f"level {c:g} outside ({sample.vmin:g}, {sample.vmax:g})")
    if eps_grad is None:
        eps_grad = eps_grad_for(field, sample)
    loops, n_open = marching_squares(sample.values, sample.mask, sample.xs, sample.ys, c)
    curves = []
    rejected = n_open
    tol = 1e-9 * domain.diameter
    for loop in loops:
        ins = domain.contains(loop[:, 0], loop[:, 1], tol=tol)
        if not ins.any():
            continue
        if not ins.all():
            rejected += 1
            continue
        if len(loop) < 3:
            rejected += 1
            continue
        curves.append(build_curve(field, loop, c, samples, eps_grad))
    if strict and rejected:
        raise OpenCurveAtBoundary(f"{rejected} curve(s) at level {c:g} run into the boundary")
    curves.sort(key=lambda cv: (float(cv.points[:, 0].min()), float(cv.points[0, 1])))
    flags = sorted({f for cv in curves for f in cv.flags})
    return LevelSetDecomposition(float(c), curves, rejected, flags)


class ConvexityResult(NamedTuple):
    convex: bool
    violating_fraction: float
    superlevel_inside: bool | None
    superlevel_violation: float | None


def convexity_test(curve: LevelCurve, field: ScalarField | None = None, sample: GridSample | None = None,
                   q_noise: float = Q_NOISE) -> ConvexityResult:
    """Single-sign curvature test, plus a check that the bounded region is superlevel.

    The region enclosed by the curve must satisfy f > c up to a small band;
    a clockwise curve around a sublevel hole therefore fails.
    """
    k = np.asarray(curve.curvature_geom)
    scale = np.median(np.abs(k))
    tiny = 1e-9 * max(scale, 1.0)
    pos = np.sum(k > tiny)
    neg = np.sum(k < -tiny)
    frac = float(min(pos, neg)) / len(k)
    ok = frac <= q_noise
    sup_ok = sup_frac = None
    if field is not None:
        if sample is None:
            sample = sample_grid(field, 256)
        inside = polygon_mask(curve.points, sample.xs, sample.ys) & sample.inside
        band = 1e-6 * max(sample.vmax - sample.vmin, 1e-300)
        wrong = inside & (sample.values < curve.level - band)
        sup_frac = float(np.sum(wrong)) / max(int(np.sum(inside)), 1)
        sup_ok = bool(inside.any()) and sup_frac <= q_noise
        ok = ok and sup_ok
    return ConvexityResult(bool(ok), frac, sup_ok, sup_frac)
