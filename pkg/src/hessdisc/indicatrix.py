"""Banach indicatrix, the inequality chain, co-area cross-check and equality certificate.

The chain compares, for f vanishing on the boundary,

    max|f|  <=  B(1, f)  <=  (1/2 pi) int L(c) dc
            <=  (1/2 pi) int  sum over curves of  oint ||H|| / |grad f| ds  dc
            <=  (1/2 pi) int_M ||H|| dA,

where B(u, f) = int u(c) beta(c) dc counts level-set components and L(c)
is the total absolute curvature of f^-1(c).

Level integrals use a uniform level grid in the interior of the value
range plus geometrically refined levels toward both ends of the range.
Intervals inside the end bands are integrated as local power laws in the
distance to the end value, and the last gap is closed with a fitted power
law tail; this keeps integrable end singularities (e.g. the co-area
density of (1 - r^2)^2 near c = 0) under control.
"""

from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field as dc_field
from typing import Callable

import numpy as np
from scipy.optimize import minimize

from .config import SCHEMA_VERSION, Tolerances, thread_count
from .errors import ChainOrderViolated, HessdiscError
from .fields import Disc, GridSample, ScalarField, operator_norm, sample_grid
from .levelsets import LevelSetDecomposition, convexity_test, eps_grad_for, extract_level_set

TWO_PI = 2.0 * math.pi
# curves with fewer marching-squares vertices are not resolved by the grid
MIN_RAW_VERTICES = 16
CHAIN_NAMES = ("max_abs_f", "B1", "curv_term", "coarea_term", "hessian_term")


@dataclass(frozen=True)
class ChainConfig:
    resolution: int = 512
    n_levels: int = 100
    band_fraction: float = 0.01
    band_levels: int = 12
    samples: int = 512
    quad_resolution: int | None = None
    threads: int | None = None
    tolerances: Tolerances = dc_field(default_factory=Tolerances)

    def to_dict(self):
        return {
            "resolution": self.resolution,
            "n_levels": self.n_levels,
            "band_fraction": self.band_fraction,
            "band_levels": self.band_levels,
            "samples": self.samples,
            "quad_resolution": self.quad_resolution or self.resolution,
            "tolerances": self.tolerances.to_dict(),
        }


# ---------------------------------------------------------------------------
# extrema


def _refine_extremum(field, sample, sign):
    vals = np.where(sample.inside, sign * sample.values, -np.inf)
    j, i = np.unravel_index(int(np.argmax(vals)), vals.shape)
    best = float(vals[j, i])
    x0 = np.array([sample.xs[i], sample.ys[j]])
    dom = field.domain
    if float(np.min(dom.distance_to_boundary(*x0))) <= 2 * sample.spacing:
        return sign * best
    x_lo, x_hi, y_lo, y_hi = dom.bbox()

    def obj(p):
        return -sign * float(field.value(p[0], p[1]))

    def jac(p):
        gx, gy = field.gradient(p[0], p[1])
        return -sign * np.array([float(gx), float(gy)])

    try:
        res = minimize(obj, x0, jac=jac, method="L-BFGS-B", bounds=[(x_lo, x_hi), (y_lo, y_hi)],
                       options={"ftol": 1e-15, "gtol": 1e-12, "maxiter": 200})
        if res.success or res.status == 2:
            p = res.x
            if bool(np.all(dom.contains(p[0], p[1]))) and -res.fun > best:
                best = -float(res.fun)
    except (ValueError, HessdiscError):
        pass
    return sign * best


def field_extrema(field: ScalarField, sample: GridSample):
    """(min, max) of f over the closed domain: grid values refined by local optimisation."""
    fmax = _refine_extremum(field, sample, 1.0)
    fmin = _refine_extremum(field, sample, -1.0)
    if isinstance(field.domain, Disc):
        bx, by = field.domain.boundary_points(1024)
        bv = field.value(bx, by)
        fmax = max(fmax, float(np.max(bv)))
        fmin = min(fmin, float(np.min(bv)))
    return fmin, fmax


# ---------------------------------------------------------------------------
# per-level records


@dataclass(eq=False)
class LevelRecord:
    c: float
    band: str                    # "uniform", "low" or "high"
    ok: bool = False
    beta: int = 0
    lengths: list = dc_field(default_factory=list)
    abs_curvature: float = 0.0   # L(c)
    coarea_density: float = 0.0  # sum of oint ||H|| / |grad f| ds
    min_grad: float = math.inf
    flags: list = dc_field(default_factory=list)
    error: str | None = None
    decomp: LevelSetDecomposition | None = dc_field(default=None, repr=False)
    curve_stats: list = dc_field(default_factory=list)

    @property
    def length(self):
        return float(sum(self.lengths))

    def row(self):
        return {"c": self.c, "beta": self.beta, "length": self.length, "L": self.abs_curvature,
                "coarea_density": self.coarea_density, "ok": self.ok, "band": self.band,
                "flags": list(self.flags)}


def curve_statistics(field, cv, sample, q_noise):
    """Per-curve diagnostics used by the equality certificate."""
    pts = cv.points
    gx, gy = field.gradient(pts[:, 0], pts[:, 1])
    gn = np.hypot(gx, gy)
    a, b, c = field.hessian(pts[:, 0], pts[:, 1])
    nx, ny = gx / gn, gy / gn
    # derivative of |grad f| along nu = -grad f / |grad f| is -<H n, n>
    lie = -(a * nx * nx + 2 * b * nx * ny + c * ny * ny)
    hn = operator_norm((a, b, c))
    w = cv.vertex_weights
    mean_g = float(np.average(gn, weights=w))
    cv_grad = float(np.sqrt(np.average((gn - mean_g) ** 2, weights=w)) / mean_g)
    mean_l = float(np.average(lie, weights=w))
    scale_l = max(abs(mean_l), float(np.average(hn, weights=w)), 1e-300)
    cv_lie = float(np.sqrt(np.average((lie - mean_l) ** 2, weights=w)) / scale_l)
    excess = (np.abs(lie) * cv.length - TWO_PI * gn) / (TWO_PI * gn)
    conv = convexity_test(cv, field, sample, q_noise)
    return {
        "convex": bool(conv.convex),
        "curvature_sign_violation": conv.violating_fraction,
        "superlevel_violation": conv.superlevel_violation,
        "cv_grad": cv_grad,
        "cv_lie": cv_lie,
        "prop5_excess": float(excess.max()),
        "length": cv.length,
    }


def _level_work(field, sample, c, band, cfg: ChainConfig, eps_grad, with_stats):
    rec = LevelRecord(float(c), band)
    try:
        d = extract_level_set(field, c, cfg.resolution, sample=sample, samples=cfg.samples,
                              strict=False, eps_grad=eps_grad)
    except HessdiscError as exc:
        rec.error = f"{type(exc).__name__}: {exc}"
        return rec
    rec.decomp = d
    rec.beta = d.beta
    rec.flags = list(d.flags)
    if d.rejected:
        rec.flags.append("open-curve-rejected")
        rec.error = f"{d.rejected} open curve(s)"
        return rec
    if d.beta == 0:
        rec.error = "empty level set"
        return rec
    if min(cv.raw_vertices for cv in d.curves) < MIN_RAW_VERTICES:
        rec.flags.append("under-resolved")
        rec.error = "curve not resolved by the extraction grid"
        return rec
    dens = 0.0
    Lc = 0.0
    for cv in d.curves:
        pts = cv.points
        gn = cv.grad_norm
        a, b, cc = field.hessian(pts[:, 0], pts[:, 1])
        hn = operator_norm((a, b, cc))
        w = cv.vertex_weights
        good = gn >= eps_grad
        if not good.all():
            rec.flags.append("near-critical-vertex")
        dens += float(np.sum(np.where(good, hn / np.where(good, gn, 1.0), 0.0) * w))
        Lc += cv.abs_turning
        rec.lengths.append(cv.length)
        rec.min_grad = min(rec.min_grad, cv.min_grad_norm)
    rec.abs_curvature = Lc
    rec.coarea_density = dens
    if "near-critical-level" in rec.flags:
        rec.error = "near-critical level"
        return rec
    if with_stats:
        rec.curve_stats = [curve_statistics(field, cv, sample, cfg.tolerances.q_noise) for cv in d.curves]
    rec.ok = True
    return rec


@dataclass(eq=False)
class LevelScan:
    fmin: float
    fmax: float
    records: list
    sample: GridSample
    eps_grad: float

    def usable(self, band=None):
        return [r for r in self.records if r.ok and (band is None or r.band == band)]

    def excluded_measure(self):
        """Value-range measure of uniform levels that had to be skipped."""
        uni = [r for r in self.records if r.band == "uniform"]
        if len(uni) < 2:
            return 0.0
        dc = (uni[-1].c - uni[0].c) / (len(uni) - 1)
        return dc * sum(1 for r in uni if not r.ok)


def level_grid(fmin, fmax, cfg: ChainConfig):
    span = fmax - fmin
    delta = cfg.band_fraction * span
    uni = np.linspace(fmin + delta, fmax - delta, cfg.n_levels)
    k = np.arange(1, cfg.band_levels + 1)
    low = fmin + delta * 2.0 ** (-k)
    high = fmax - delta * 2.0 ** (-k)
    return uni, low, high


def scan_levels(field: ScalarField, cfg: ChainConfig = ChainConfig(), sample: GridSample | None = None,
                with_stats: bool = False, levels=None) -> LevelScan:
    """Extract every level of the grid (in parallel) and summarise each one."""
    if sample is None:
        sample = sample_grid(field, cfg.resolution)
    fmin, fmax = field_extrema(field, sample)
    eps_grad = eps_grad_for(field, sample, cfg.tolerances.eps_grad_rel)
    workers = cfg.threads or thread_count()
    if levels is not None:
        jobs = [(float(c), "uniform") for c in levels]
        with ThreadPoolExecutor(max_workers=workers) as ex:
            recs = list(ex.map(lambda j: _level_work(field, sample, j[0], j[1], cfg, eps_grad, with_stats), jobs))
        return LevelScan(fmin, fmax, recs, sample, eps_grad)
    uni, low, high = level_grid(fmin, fmax, cfg)
    with ThreadPoolExecutor(max_workers=workers) as ex:
        recs = list(ex.map(lambda c: _level_work(field, sample, c, "uniform", cfg, eps_grad, with_stats), uni))
        # end bands: walk toward each end value and stop at the first failure
        for band, cs in (("low", low), ("high", high)):
            brecs = list(ex.map(lambda c: _level_work(field, sample, c, band, cfg, eps_grad, False), cs))
            for r in brecs:
                if not r.ok:
                    break
                recs.append(r)
    recs.sort(key=lambda r: r.c)
    return LevelScan(fmin, fmax, recs, sample, eps_grad)


# ---------------------------------------------------------------------------
# level integration


def _powerlaw_piece(s_a, y_a, s_b, y_b):
    """int y ds over [s_a, s_b] for y = A s^p through both points (0 < s_a < s_b)."""
    if y_a <= 0 or y_b <= 0:
        return 0.5 * (y_a + y_b) * (s_b - s_a)
    p = math.log(y_b / y_a) / math.log(s_b / s_a)
    if abs(p + 1) < 1e-9:
        return y_a * s_a * math.log(s_b / s_a)
    return (y_b * s_b - y_a * s_a) / (p + 1)


def _tail(s0, y0, s1, y1):
    """int_0^{s0} y ds for a power law fitted through (s0, y0), (s1, y1), s0 < s1."""
    if y0 > 0 and y1 > 0 and s1 > s0 > 0:
        p = math.log(y1 / y0) / math.log(s1 / s0)
        p = min(max(p, -0.9), 4.0)
        return y0 * s0 / (p + 1)
    return y0 * s0


def integrate_levels(scan: LevelScan, values: Callable[[LevelRecord], float]) -> float:
    """int_{fmin}^{fmax} y(c) dc from the usable level records."""
    recs = scan.usable()
    if len(recs) < 2:
        raise HessdiscError("fewer than two usable levels")
    cs = np.array([r.c for r in recs])
    ys = np.array([float(values(r)) for r in recs])
    fmin, fmax = scan.fmin, scan.fmax
    mid = 0.5 * (fmin + fmax)
    total = 0.0
    # power laws in the distance to the nearer extreme absorb the endpoint singularities
    for k in range(len(cs) - 1):
        a, b = cs[k], cs[k + 1]
        if b <= mid:
            total += _powerlaw_piece(a - fmin, ys[k], b - fmin, ys[k + 1])
        elif a >= mid:
            total += _powerlaw_piece(fmax - b, ys[k + 1], fmax - a, ys[k])
        else:
            total += 0.5 * (ys[k] + ys[k + 1]) * (b - a)
    total += _tail(cs[0] - fmin, ys[0], cs[1] - fmin, ys[1])
    total += _tail(fmax - cs[-1], ys[-1], fmax - cs[-2], ys[-2])
    return float(total)


def banach_indicatrix(field: ScalarField, u: Callable[[float], float] | None = None,
                      cfg: ChainConfig = ChainConfig(), scan: LevelScan | None = None) -> float:
    """B(u, f) = int u(c) beta(c) dc over the sampled regular levels."""
    if scan is None:
        scan = scan_levels(field, cfg)
    if u is None:
        return integrate_levels(scan, lambda r: r.beta)
    return integrate_levels(scan, lambda r: u(r.c) * r.beta)


# ---------------------------------------------------------------------------
# Hessian mass


def hessian_mass(field: ScalarField, resolution: int = 512, domain=None, subsamples: int = 4) -> float:
    """int_M ||H_f|| dA by the midpoint rule; boundary cells weighted by coverage.

    Coverage of a cut cell is estimated from ``subsamples**2`` points and
    the norm is evaluated at the centroid of the covered sub-samples.
    """
    if resolution < 128:
        raise ValueError("quadrature resolution must be at least 128")
    domain = domain or field.domain
    if not isinstance(domain, Disc):
        s = sample_grid(field, resolution, domain)
        h = s.spacing
        xc = 0.5 * (s.xs[:-1] + s.xs[1:])
        yc = 0.5 * (s.ys[:-1] + s.ys[1:])
        X, Y = np.meshgrid(xc, yc)
        ok = domain.cell_valid() if hasattr(domain, "cell_valid") else None
        if ok is None:
            m = s.mask
            ok = m[:-1, :-1] & m[:-1, 1:] & m[1:, :-1] & m[1:, 1:]
        a, b, c = field.hessian(X[ok], Y[ok])
        return float(np.sum(operator_norm((a, b, c))) * h * h)
    x0, x1, y0, y1 = domain.bbox()
    h = (x1 - x0) / resolution
    xc = x0 + h * (np.arange(resolution) + 0.5)
    yc = y0 + h * (np.arange(resolution) + 0.5)
    X, Y = np.meshgrid(xc, yc)
    dist = domain.distance_to_boundary(X, Y)
    half_diag = h * math.sqrt(0.5)
    full = dist >= half_diag
    cut = (dist > -half_diag) & ~full
    a, b, c = field.hessian(X[full], Y[full])
    total = float(np.sum(operator_norm((a, b, c)))) * h * h
    # cut cells
    off = (np.arange(subsamples) + 0.5) / subsamples - 0.5
    ox, oy = np.meshgrid(off * h, off * h)
    ox, oy = ox.ravel(), oy.ravel()
    cx, cy = X[cut], Y[cut]
    SX = cx[:, None] + ox[None, :]
    SY = cy[:, None] + oy[None, :]
    ins = domain.distance_to_boundary(SX, SY) >= 0
    cnt = ins.sum(axis=1)
    keep = cnt > 0
    gx = np.where(ins, SX, 0.0).sum(axis=1)[keep] / cnt[keep]
    gy = np.where(ins, SY, 0.0).sum(axis=1)[keep] / cnt[keep]
    a, b, c = field.hessian(gx, gy)
    total += float(np.sum(operator_norm((a, b, c)) * cnt[keep] / subsamples ** 2)) * h * h
    return total


# ---------------------------------------------------------------------------
# chain report


@dataclass(eq=False)
class ChainReport:
    max_abs_f: float
    B1: float
    curv_term: float
    coarea_term: float
    hessian_term: float
    fmin: float
    fmax: float
    levels: list
    uncertainty: float
    boundary_residual: float
    config: dict
    field: dict
    violations: list = dc_field(default_factory=list)

    @property
    def terms(self):
        return tuple(getattr(self, n) for n in CHAIN_NAMES)

    @property
    def coarea_gap(self):
        return abs(self.coarea_term - self.hessian_term) / self.hessian_term if self.hessian_term else math.inf

    @property
    def chain_holds(self):
        return not self.violations

    def to_dict(self):
        return {
            "schema_version": SCHEMA_VERSION,
            "report": "inequality-chain",
            "field": self.field,
            "config": self.config,
            "terms": {n: getattr(self, n) for n in CHAIN_NAMES},
            "f_min": self.fmin,
            "f_max": self.fmax,
            "coarea_gap": self.coarea_gap,
            "chain_holds": self.chain_holds,
            "violations": self.violations,
            "uncertainty": self.uncertainty,
            "boundary_residual": self.boundary_residual,
            "levels": [{k: v for k, v in rec.items() if k != "flags" or v} for rec in self.levels],
        }

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)

    def write_levels_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["c", "beta", "length", "L", "coarea_density"])
            for r in self.levels:
                w.writerow([repr(r["c"]), r["beta"], repr(r["length"]), repr(r["L"]), repr(r["coarea_density"])])


def chain_violations(terms, tau):
    out = []
    for k in range(len(terms) - 1):
        a, b = terms[k], terms[k + 1]
        if a > b + tau * max(abs(a), abs(b)):
            out.append([CHAIN_NAMES[k], CHAIN_NAMES[k + 1]])
    return out


def inequality_chain(field: ScalarField, cfg: ChainConfig = ChainConfig(), check: bool = True,
                     scan: LevelScan | None = None) -> ChainReport:
    """All five chain quantities; raises :class:`ChainOrderViolated` if ``check`` and the order fails."""
    tol = cfg.tolerances
    resid = field.boundary_residual()
    if resid > tol.bc_for(field):
        raise HessdiscError(f"field does not vanish on the boundary (max |f| = {resid:.3g})")
    if scan is None:
        scan = scan_levels(field, cfg)
    max_abs = max(abs(scan.fmin), abs(scan.fmax))
    B1 = integrate_levels(scan, lambda r: r.beta)
    curv = integrate_levels(scan, lambda r: r.abs_curvature) / TWO_PI
    coarea = integrate_levels(scan, lambda r: r.coarea_density) / TWO_PI
    mass = hessian_mass(field, cfg.quad_resolution or cfg.resolution)
    rows = [r.row() for r in scan.records if r.band == "uniform"]
    report = ChainReport(max_abs, B1, curv, coarea, mass / TWO_PI, scan.fmin, scan.fmax, rows,
                         scan.excluded_measure(), resid, cfg.to_dict(), field.describe())
    report.violations = chain_violations(report.terms, tol.tau_chain)
    if check and report.violations:
        a, b = report.violations[0]
        raise ChainOrderViolated(f"chain order fails between {a} and {b}", pair=(a, b), report=report)
    return report


def coarea_cross_check(field: ScalarField, cfg: ChainConfig = ChainConfig(), scan: LevelScan | None = None):
    """(coarea term, |coarea - mass| / mass) with both sides as raw integrals."""
    if scan is None:
        scan = scan_levels(field, cfg)
    coarea = integrate_levels(scan, lambda r: r.coarea_density)
    mass = hessian_mass(field, cfg.quad_resolution or cfg.resolution)
    return coarea, abs(coarea - mass) / mass


# ---------------------------------------------------------------------------
# equality certificate


PROPERTY_NAMES = {
    1: "convex-levels",
    2: "constant-sign",
    3: "straight-normal-flow",
    4: "constant-gradient-on-levels",
    5: "length-lie-derivative-bound",
    6: "critical-set-measure",
}


@dataclass(eq=False)
class EqualityCertificate:
    properties: dict
    overall: str
    max_abs_f: float
    hessian_term: float
    equality_gap: float
    diagnostics: dict
    config: dict
    field: dict

    @property
    def failing(self):
        return [k for k, v in self.properties.items() if v["pass"] is False]

    def to_dict(self):
        return {
            "schema_version": SCHEMA_VERSION,
            "report": "equality-certificate",
            "field": self.field,
            "config": self.config,
            "overall": self.overall,
            "properties": {str(k): v for k, v in self.properties.items()},
            "failing_properties": [PROPERTY_NAMES[k] for k in self.failing],
            "max_abs_f": self.max_abs_f,
            "hessian_term": self.hessian_term,
            "equality_gap": self.equality_gap,
            "diagnostics": self.diagnostics,
        }

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)


def _straightness_probe(field, scan, tol, n_levels=5, n_starts=8):
    from .flow import starts_on_level, straightness_residual, trace_normal_flow
    recs = [r for r in scan.usable("uniform")]
    if not recs:
        return None, []
    idx = np.unique(np.linspace(0, len(recs) - 1, n_levels + 2).round().astype(int)[1:-1])
    worst = 0.0
    details = []
    h_step = 1e-3 * field.domain.diameter
    for k in idx:
        r = recs[k]
        for p in starts_on_level(r.decomp, n_starts):
            try:
                tr = trace_normal_flow(field, p, "outward", h_step=h_step, max_steps=200, eps_grad=scan.eps_grad)
                res = straightness_residual(tr)
            except HessdiscError:
                continue
            worst = max(worst, res)
        details.append({"c": r.c, "max_residual": worst})
    return worst, details


def equality_certificate(field: ScalarField, cfg: ChainConfig = ChainConfig(), scan: LevelScan | None = None,
                         mass: float | None = None) -> EqualityCertificate:
    """Numerical test of the six equality properties plus the equality gap."""
    tol = cfg.tolerances
    resid = field.boundary_residual()
    if scan is None:
        scan = scan_levels(field, cfg, with_stats=True)
    sample = scan.sample
    props = {}
    diag = {"boundary_residual": resid, "eps_grad": scan.eps_grad}

    uni = [r for r in scan.records if r.band == "uniform"]
    used = [r for r in uni if r.ok and r.curve_stats]
    diag["levels_used"] = len(used)
    diag["levels_skipped"] = len(uni) - len(used)
    diag["uncertainty"] = scan.excluded_measure()
    betas = [r.beta for r in uni if r.decomp is not None]
    nonconvex = [r.c for r in used if not all(s["convex"] for s in r.curve_stats)]
    multi = sorted({r.c for r in uni if r.beta > 1})
    p1_ok = bool(used) and not nonconvex and not multi
    props[1] = {"name": PROPERTY_NAMES[1], "pass": p1_ok if used else None,
                "max_beta": max(betas) if betas else 0, "levels_beta_gt_1": len(multi),
                "levels_nonconvex": len(nonconvex),
                "margin": max((s["curvature_sign_violation"] for r in used for s in r.curve_stats), default=None)}

    vals = sample.values[sample.inside]
    bc = tol.bc_for(field)
    neg = float(max(0.0, -vals.min()))
    pos = float(max(0.0, vals.max()))
    opp = min(neg, pos)
    props[2] = {"name": PROPERTY_NAMES[2], "pass": opp <= bc, "margin": opp}

    worst, details = _straightness_probe(field, scan, tol)
    props[3] = {"name": PROPERTY_NAMES[3], "pass": None if worst is None else worst <= tol.tau_straight,
                "margin": worst, "levels": details}

    cvg = max((s["cv_grad"] for r in used for s in r.curve_stats), default=None)
    cvl = max((s["cv_lie"] for r in used for s in r.curve_stats), default=None)
    props[4] = {"name": PROPERTY_NAMES[4], "pass": None if cvg is None else (cvg <= tol.tau_cv and cvl <= tol.tau_cv),
                "cv_grad": cvg, "cv_lie": cvl}

    ex = [(s["prop5_excess"], r.c) for r in used for s in r.curve_stats]
    if ex:
        worst5, c5 = max(ex)
        bad5 = sorted({c for e, c in ex if e > tol.tau_prop5})
        props[5] = {"name": PROPERTY_NAMES[5], "pass": worst5 <= tol.tau_prop5, "margin": worst5,
                    "worst_level": c5, "failing_levels": len(bad5),
                    "failing_range": [bad5[0], bad5[-1]] if bad5 else None}
    else:
        props[5] = {"name": PROPERTY_NAMES[5], "pass": None, "margin": None}

    X, Y = np.meshgrid(sample.xs, sample.ys)
    ins = sample.inside
    gx, gy = field.gradient(X[ins], Y[ins])
    crit = float(np.mean(np.hypot(gx, gy) < scan.eps_grad))
    props[6] = {"name": PROPERTY_NAMES[6], "pass": crit <= tol.f_crit, "margin": crit}

    if mass is None:
        mass = hessian_mass(field, cfg.quad_resolution or cfg.resolution)
    hterm = mass / TWO_PI
    max_abs = max(abs(scan.fmin), abs(scan.fmax))
    gap = abs(max_abs - hterm) / max_abs if max_abs > 0 else math.inf

    verdicts = [v["pass"] for v in props.values()]
    if resid > bc:
        overall = "inconclusive"
        diag["reason"] = "field does not vanish on the boundary"
    elif any(v is False for v in verdicts):
        overall = "strict-inequality"
    elif all(v is True for v in verdicts) and gap <= tol.tau_eq:
        overall = "equality"
    else:
        overall = "inconclusive"
        diag["reason"] = "properties pass but the equality gap exceeds tau_eq" if gap > tol.tau_eq \
            else "some properties could not be evaluated"
    return EqualityCertificate(props, overall, max_abs, hterm, gap, diag, cfg.to_dict(), field.describe())
