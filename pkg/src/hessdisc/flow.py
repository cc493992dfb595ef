"""Integral curves of the unit normal field nu = -grad f / |grad f|.

Traces follow nu (outward, decreasing f) or -nu (inward) with classical
RK4.  Along equality solutions these curves are straight radii, the value
and gradient-norm profiles depend only on the starting level, and the
gradient norm obeys |dh/dt| <= (2 pi / Length) |h|.
"""

from __future__ import annotations

import csv
import math
import weakref
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import (
    AlphaOutOfRange,
    HessdiscError,
    StartCritical,
    StartOutsideDomain,
    TraceTooShort,
    ZeroH0,
)
from .fields import Disc, ScalarField, sample_grid

TAU_ENV = 1e-6
TAU_VAL = 1e-6
MAX_HALVINGS = 40

_scale_cache: "weakref.WeakKeyDictionary[ScalarField, tuple]" = weakref.WeakKeyDictionary()


def field_range(field: ScalarField) -> tuple[float, float]:
    """(min, max) of the field over a coarse grid, cached per field object."""
    try:
        return _scale_cache[field]
    except KeyError:
        s = sample_grid(field, 128)
        out = (s.vmin, s.vmax)
        _scale_cache[field] = out
        return out


def default_eps_grad(field: ScalarField, rel=1e-6) -> float:
    lo, hi = field_range(field)
    span = max(hi - lo, abs(hi), abs(lo), 1e-300)
    return rel * span / field.domain.diameter


def _grad(field, p):
    gx, gy = field.gradient(p[0], p[1])
    return np.array([float(gx), float(gy)])


def _value(field, p):
    return float(field.value(p[0], p[1]))


def _inside(domain, p, tol=0.0):
    return bool(np.all(domain.contains(p[0], p[1], tol=tol)))


@dataclass(eq=False)
class FlowTrace:
    start: np.ndarray
    h_step: float
    direction: str
    t: np.ndarray
    points: np.ndarray
    g: np.ndarray        # f along the trace
    h: np.ndarray        # |grad f| along the trace
    termination: str

    @property
    def end(self):
        return self.points[-1]

    @property
    def length(self) -> float:
        return float(self.t[-1])

    def __len__(self):
        return len(self.t)

    def rows(self):
        return zip(self.t, self.points[:, 0], self.points[:, 1], self.g, self.h)

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "x", "y", "f", "grad_norm"])
            for row in self.rows():
                w.writerow([repr(float(v)) for v in row])


def trace_normal_flow(field: ScalarField, start, direction: str = "outward", h_step: float | None = None,
                      max_steps: int = 100_000, eps_grad: float | None = None) -> FlowTrace:
    """Integrate the (signed) unit normal field from ``start``.

    The step is halved when a stage lands near a critical point or the value
    fails to move monotonically; when the step can no longer be halved the
    trace ends with ``hit-critical``.  Leaving a disc lands exactly on the
    circle (``hit-boundary``); leaving a grid mask ends with ``left-grid``.
    """
    if direction not in ("outward", "inward"):
        raise ValueError("direction must be 'outward' or 'inward'")
    dom = field.domain
    p = np.asarray(start, dtype=float).reshape(2)
    if not np.all(np.isfinite(p)) or not _inside(dom, p) or float(dom.distance_to_boundary(*p)) <= 0:
        raise StartOutsideDomain(f"start {tuple(p)} is not interior to the domain")
    if eps_grad is None:
        eps_grad = default_eps_grad(field)
    if h_step is None:
        h_step = 1e-3 * dom.diameter
    if not h_step > 0:
        raise ValueError("h_step must be positive")
    sgn = -1.0 if direction == "outward" else 1.0
    g0 = _grad(field, p)
    if np.hypot(*g0) < eps_grad:
        raise StartCritical(f"|grad f| = {np.hypot(*g0):.3g} at the start is below {eps_grad:.3g}")
    disc = isinstance(dom, Disc)

    def vel(q):
        gq = _grad(field, q)
        n = math.hypot(gq[0], gq[1])
        if not n >= eps_grad:
            return None
        return sgn * gq / n

    def rk4(q, s):
        k1 = vel(q)
        if k1 is None:
            return None
        pts = q + 0.5 * s * k1
        if not disc and not _inside(dom, pts):
            return "out"
        k2 = vel(pts)
        if k2 is None:
            return None
        pts = q + 0.5 * s * k2
        if not disc and not _inside(dom, pts):
            return "out"
        k3 = vel(pts)
        if k3 is None:
            return None
        pts = q + s * k3
        if not disc and not _inside(dom, pts):
            return "out"
        k4 = vel(pts)
        if k4 is None:
            return None
        return q + s / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)

    ts, pts, gs, hs = [0.0], [p.copy()], [_value(field, p)], [float(np.hypot(*g0))]
    t = 0.0
    term = "max-steps"
    for _ in range(max_steps):
        s = h_step
        q = None
        for _ in range(MAX_HALVINGS):
            q = rk4(p, s)
            if isinstance(q, str):
                break
            if q is not None:
                if disc and float(dom.distance_to_boundary(*q)) < 0:
                    break
                fq = _value(field, q)
                if sgn * (fq - gs[-1]) > 0:
                    break
            q = None
            s *= 0.5
        if q is None:
            term = "hit-critical"
            break
        if isinstance(q, str):
            term = "left-grid"
            break
        if disc and float(dom.distance_to_boundary(*q)) < 0:
            # bisect on the step length for the boundary crossing
            lo, hi = 0.0, s
            q_lo, q_hi = p, q
            for _ in range(60):
                mid = 0.5 * (lo + hi)
                qm = rk4(p, mid)
                if qm is None:
                    break
                if float(dom.distance_to_boundary(*qm)) >= 0:
                    lo, q_lo = mid, qm
                else:
                    hi, q_hi = mid, qm
            qb = dom.exit_point(q_lo, q_hi)
            t += lo + float(np.hypot(*(qb - q_lo)))
            ts.append(t)
            pts.append(qb)
            gs.append(_value(field, qb))
            hs.append(float(np.hypot(*_grad(field, qb))))
            term = "hit-boundary"
            break
        t += s
        p = q
        gq = _grad(field, p)
        ts.append(t)
        pts.append(p.copy())
        gs.append(_value(field, p))
        hs.append(float(np.hypot(*gq)))
        if np.hypot(*gq) < eps_grad:
            term = "hit-critical"
            break
    return FlowTrace(np.asarray(start, float), float(h_step), direction, np.asarray(ts), np.asarray(pts),
                     np.asarray(gs), np.asarray(hs), term)


def straightness_residual(trace: FlowTrace) -> float:
    """Max distance from the samples to the end-to-end chord, over the trace length."""
    if len(trace) < 4:
        raise TraceTooShort(f"trace has {len(trace)} samples; need at least 4")
    a, b = trace.points[0], trace.points[-1]
    d = b - a
    n = math.hypot(*d)
    rel = trace.points - a
    if n == 0:
        dist = np.hypot(rel[:, 0], rel[:, 1])
    else:
        dist = np.abs(rel[:, 0] * d[1] - rel[:, 1] * d[0]) / n
    return float(dist.max() / max(trace.length, 1e-300))


class ProfileDeviation(NamedTuple):
    g_dev: float
    h_dev: float
    n_traces: int
    t_common: float

    @property
    def max_dev(self):
        return max(self.g_dev, self.h_dev)


def starts_on_level(decomp, n_starts: int):
    """Points spread by arclength over all curves of a decomposition."""
    curves = decomp.curves
    total = sum(cv.length for cv in curves)
    if total <= 0 or not curves:
        raise HessdiscError("level set is empty")
    targets = (np.arange(n_starts) + 0.5) / n_starts * total
    offsets = np.cumsum([0.0] + [cv.length for cv in curves])
    out = []
    for s in targets:
        k = min(int(np.searchsorted(offsets, s, side="right")) - 1, len(curves) - 1)
        cv = curves[k]
        u = s - offsets[k]
        out.append((np.interp(u, cv.arclength, cv.vertices[:, 0]), np.interp(u, cv.arclength, cv.vertices[:, 1])))
    return np.asarray(out)


def _project_to_level(field, p, c, iters=6):
    p = np.asarray(p, float).copy()
    for _ in range(iters):
        gq = _grad(field, p)
        g2 = gq @ gq
        if g2 <= 0:
            break
        p -= (_value(field, p) - c) * gq / g2
    return p


def profile_independence(field: ScalarField, c: float, n_starts: int = 8, directions=("outward", "inward"),
                         h_step=None, max_steps=100_000, resolution=512, decomp=None, eps_grad=None,
                         n_common=256) -> ProfileDeviation:
    """Spread of the value and gradient-norm profiles across starts on f = c."""
    if n_starts < 4:
        raise ValueError("need at least 4 starts")
    from .levelsets import extract_level_set
    if decomp is None:
        decomp = extract_level_set(field, c, resolution, strict=False)
    starts = [_project_to_level(field, p, c) for p in starts_on_level(decomp, n_starts)]
    g_dev = h_dev = 0.0
    n = 0
    t_min = math.inf
    for direction in directions:
        traces = [trace_normal_flow(field, s, direction, h_step, max_steps, eps_grad) for s in starts]
        n += len(traces)
        tc = min(tr.length for tr in traces)
        t_min = min(t_min, tc)
        if tc <= 0:
            continue
        tt = np.linspace(0.0, tc, n_common)
        G = np.array([np.interp(tt, tr.t, tr.g) for tr in traces])
        H = np.array([np.interp(tt, tr.t, tr.h) for tr in traces])
        g_dev = max(g_dev, float(np.max(G.max(axis=0) - G.min(axis=0))))
        h_dev = max(h_dev, float(np.max(H.max(axis=0) - H.min(axis=0))))
    return ProfileDeviation(g_dev, h_dev, n, t_min)


@dataclass(eq=False)
class DecayReport:
    K: float
    hdot: np.ndarray
    bound: np.ndarray
    margins: np.ndarray          # K_t |h| + tau - |hdot|
    ratio: np.ndarray            # h / h(0)
    integrated_ok: np.ndarray    # informational: e^{-K|t|} - tau <= ratio <= e^{K|t|} + tau
    tau: float

    @property
    def passed(self) -> np.ndarray:
        return self.margins >= 0

    @property
    def pass_fraction(self) -> float:
        return float(np.mean(self.passed)) if len(self.margins) else 1.0

    @property
    def min_margin(self) -> float:
        return float(self.margins.min())

    def to_dict(self):
        return {
            "K": self.K,
            "samples": int(len(self.margins)),
            "pass_fraction": self.pass_fraction,
            "min_margin": self.min_margin,
            "integrated_pass_fraction": float(np.mean(self.integrated_ok)),
            "tau_env": self.tau,
        }


def decay_envelope_check(trace: FlowTrace, length, tau_env: float = TAU_ENV) -> DecayReport:
    """Check |dh/dt| <= (2 pi / Length) |h| at every recorded sample.

    ``length`` is either the length of the start level curve (a constant K)
    or a callable ``length(c)`` giving the length of f^-1(c), so that each
    sample uses the level it sits on.  The integrated exponential envelope
    with the start-level constant is reported alongside for information.
    """
    h = trace.h
    if not h[0] > 0:
        raise ZeroH0("gradient norm vanishes at the start of the trace")
    if len(trace) < 3:
        raise TraceTooShort("need at least 3 samples for a centred derivative")
    t = trace.t
    hdot = np.gradient(h, t)
    if callable(length):
        L = np.asarray([length(c) for c in trace.g], float)
        L0 = float(length(trace.g[0]))
    else:
        L = np.full(len(h), float(length))
        L0 = float(length)
    if not (L0 > 0 and np.all(L > 0)):
        raise ValueError("level lengths must be positive")
    K_t = 2 * np.pi / L
    K = 2 * np.pi / L0
    bound = K_t * np.abs(h)
    margins = bound + tau_env - np.abs(hdot)
    ratio = h / h[0]
    at = np.abs(t)
    integ = (ratio >= np.exp(-K * at) - tau_env) & (ratio <= np.exp(K * at) + tau_env)
    return DecayReport(K, hdot, bound, margins, ratio, integ, tau_env)


def level_length_function(field: ScalarField, resolution: int = 256, n_levels: int = 48,
                          lo: float | None = None, hi: float | None = None) -> Callable[[float], float]:
    """Length of f^-1(c) as a function of c, interpolated from extracted levels.

    Interpolates the squared length, which is smooth through the maximum
    for fields with a nondegenerate peak, and extrapolates linearly.
    """
    from .levelsets import extract_level_set
    s = sample_grid(field, resolution)
    vmin, vmax = s.vmin, s.vmax
    span = vmax - vmin
    lo = vmin + 0.01 * span if lo is None else lo
    hi = vmax - 0.01 * span if hi is None else hi
    cs, L2 = [], []
    for c in np.linspace(lo, hi, n_levels):
        try:
            d = extract_level_set(field, c, resolution, sample=s, strict=True)
        except HessdiscError:
            continue
        cs.append(c)
        L2.append(sum(cv.length for cv in d.curves) ** 2)
    if len(cs) < 4:
        raise HessdiscError("too few regular levels to interpolate lengths")
    cs = np.asarray(cs)
    L2 = np.asarray(L2)
    spline = CubicSpline(cs, L2, bc_type="natural")
    d_lo = spline(cs[0], 1)
    d_hi = spline(cs[-1], 1)

    def length(c):
        c = float(c)
        if c < cs[0]:
            v = L2[0] + d_lo * (c - cs[0])
        elif c > cs[-1]:
            v = L2[-1] + d_hi * (c - cs[-1])
        else:
            v = float(spline(c))
        return math.sqrt(max(v, 1e-300))

    return length


def value_parametrized_flow(field: ScalarField, start, alpha: float, tau_val: float = TAU_VAL,
                            eps_grad: float | None = None, max_refine: int = 6):
    """Follow Psi = -grad f / |grad f|^2 for a value drop of ``alpha``.

    The result satisfies f(result) = f(start) - alpha within ``tau_val``;
    steps are clamped so each changes f by at most 1e-3 of the value range
    and are doubled until the postcondition holds and successive results
    agree within ``tau_val``.
    """
    p0 = np.asarray(start, float).reshape(2)
    dom = field.domain
    if not _inside(dom, p0):
        raise StartOutsideDomain(f"start {tuple(p0)} is outside the domain")
    if alpha == 0:
        return p0.copy()
    if eps_grad is None:
        eps_grad = default_eps_grad(field)
    lo, hi = field_range(field)
    span = hi - lo
    f0 = _value(field, p0)
    target = f0 - alpha
    if not (lo - 1e-12 * span <= target <= hi + 1e-12 * span):
        raise AlphaOutOfRange(f"target value {target:g} outside the field range")
    if np.hypot(*_grad(field, p0)) < eps_grad:
        raise StartCritical("start is a critical point")

    def psi(q):
        gq = _grad(field, q)
        g2 = gq @ gq
        if not math.sqrt(g2) >= eps_grad:
            raise AlphaOutOfRange("flow reached a critical point before the target value")
        return -gq / g2

    def run(n):
        da = alpha / n
        q = p0.copy()
        for _ in range(n):
            k1 = psi(q)
            k2 = psi(q + 0.5 * da * k1)
            k3 = psi(q + 0.5 * da * k2)
            k4 = psi(q + da * k3)
            q = q + da / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
            if not _inside(dom, q, tol=1e-12 * dom.diameter):
                raise AlphaOutOfRange("flow left the domain before the target value")
        return q

    n = max(1, math.ceil(abs(alpha) / (1e-3 * span)))
    q = run(n)
    for _ in range(max_refine):
        # the value can be on target while the point has drifted along the level
        n *= 2
        q_prev, q = q, run(n)
        if abs(_value(field, q) - target) <= tau_val and np.hypot(*(q - q_prev)) <= tau_val:
            break
    return q
