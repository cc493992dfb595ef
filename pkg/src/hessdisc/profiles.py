"""Equality solutions on the unit disc, parametrised by admissible profiles g.

A profile g on [0, 1] is admissible when -1/t <= g'(t) <= 0 on (0, 1) and
the integral of e^g over [0, 1] is one.  Each admissible profile yields the
radial field f_g(x, y) = h(x^2 + y^2) with h(t) = 1 - int_0^t e^g, and every
normalised equality case arises this way exactly once.
"""

from __future__ import annotations

import csv
import dataclasses
import math
from dataclasses import dataclass, field as dc_field
from pathlib import Path

import numpy as np
from scipy.interpolate import CubicSpline, PchipInterpolator

from .errors import (
    ConstraintViolated,
    IntegralNonFinite,
    NonNegativeHPrime,
    SpecError,
    TOutOfRange,
)
from .fields import RadialField, ScalarField, UNIT_DISC

TAU_NORM = 1e-8
TAU_RT = 1e-6
TAU_INEQ = 1e-9
# violations below this are floating-point slack
VIOLATION_FLOOR = 1e-12
T_MIN = 1e-6
T_MAX = 1.0 - 1e-6


def adaptive_simpson(f, a, b, tol=1e-13, max_depth=50):
    """Adaptive Simpson quadrature with Richardson correction."""

    def simpson(fa, fm, fb, a, b):
        return (b - a) / 6.0 * (fa + 4.0 * fm + fb)

    def recurse(a, b, fa, fm, fb, whole, tol, depth):
        m = 0.5 * (a + b)
        lm = 0.5 * (a + m)
        rm = 0.5 * (m + b)
        flm = f(lm)
        frm = f(rm)
        left = simpson(fa, flm, fm, a, m)
        right = simpson(fm, frm, fb, m, b)
        delta = left + right - whole
        if depth <= 0 or abs(delta) <= 15.0 * tol:
            return left + right + delta / 15.0
        return (recurse(a, m, fa, flm, fm, left, tol / 2, depth - 1)
                + recurse(m, b, fm, frm, fb, right, tol / 2, depth - 1))

    fa, fb = f(a), f(b)
    m = 0.5 * (a + b)
    fm = f(m)
    out = recurse(a, b, fa, fm, fb, simpson(fa, fm, fb, a, b), tol, max_depth)
    if not math.isfinite(out):
        raise IntegralNonFinite("integral is not finite")
    return out


@dataclass(frozen=True, eq=False)
class GProfile:
    """Profile g = raw + shift.

    ``kind`` is one of ``constant``, ``linear`` (raw = -a t), ``log``
    (raw = -ln(1 + b t)), ``spline`` (natural cubic spline through knot
    values of g) or ``slope-spline`` (raw = integral of a monotone cubic
    interpolant of knot slopes).
    """

    kind: str
    params: dict = dc_field(default_factory=dict)
    shift: float = 0.0

    def __post_init__(self):
        kind = self.kind
        p = self.params
        if kind == "constant":
            funcs = (lambda t: np.zeros_like(t), lambda t: np.zeros_like(t), lambda t: np.zeros_like(t))
        elif kind == "linear":
            a = float(p["a"])
            funcs = (lambda t: -a * t, lambda t: np.full_like(t, -a), lambda t: np.zeros_like(t))
        elif kind == "log":
            b = float(p["b"])
            if b <= -1:
                raise SpecError("log profile needs b > -1")
            funcs = (lambda t: -np.log1p(b * t), lambda t: -b / (1 + b * t), lambda t: b * b / (1 + b * t) ** 2)
        elif kind == "spline":
            knots = np.asarray(p["knots"], float)
            vals = np.asarray(p["values"], float)
            if knots.ndim != 1 or knots.shape != vals.shape or len(knots) < 2:
                raise SpecError("spline profile needs matching 1-D knots and values")
            if np.any(np.diff(knots) <= 0):
                raise SpecError("spline knots must be strictly increasing")
            cs = CubicSpline(knots, vals, bc_type="natural")
            d1, d2 = cs.derivative(1), cs.derivative(2)
            funcs = (cs, d1, d2)
        elif kind == "slope-spline":
            knots = np.asarray(p["knots"], float)
            slopes = np.asarray(p["slopes"], float)
            pc = PchipInterpolator(knots, slopes)
            anti = pc.antiderivative()
            funcs = (anti, pc, pc.derivative())
        else:
            raise SpecError(f"unknown profile family {kind!r}")
        object.__setattr__(self, "_funcs", funcs)

    def raw(self, t):
        return self._funcs[0](np.asarray(t, float))

    def __call__(self, t):
        return self.raw(t) + self.shift

    def d1(self, t):
        return self._funcs[1](np.asarray(t, float))

    def d2(self, t):
        return self._funcs[2](np.asarray(t, float))

    def exp(self, t):
        return np.exp(self(t))

    def with_shift(self, shift):
        return dataclasses.replace(self, shift=float(shift))

    def describe(self):
        p = {k: (list(map(float, v)) if isinstance(v, (list, tuple, np.ndarray)) else v)
             for k, v in self.params.items()}
        return {"family": self.kind, "params": p, "shift": self.shift}

    # convenience constructors, unnormalised
    @classmethod
    def constant(cls):
        return cls("constant")

    @classmethod
    def linear(cls, a):
        return cls("linear", {"a": float(a)})

    @classmethod
    def log(cls, b):
        return cls("log", {"b": float(b)})

    @classmethod
    def spline(cls, knots, values):
        return cls("spline", {"knots": np.asarray(knots, float), "values": np.asarray(values, float)})


def exp_integral(g: GProfile, a=0.0, b=1.0, tol=1e-13):
    return adaptive_simpson(lambda t: float(np.exp(g(t))), a, b, tol=tol)


def _derivative_violations(g, t):
    d = g.d1(t)
    upper = np.maximum(d, 0.0)
    lower = np.maximum(-1.0 / t - d, 0.0)
    upper[upper < VIOLATION_FLOOR] = 0.0
    lower[lower < VIOLATION_FLOOR] = 0.0
    return upper, lower


def normalize_profile(raw: GProfile) -> GProfile:
    """Return ``raw`` shifted so that the integral of e^g over [0, 1] is one."""
    t = chebyshev_grid(2000)
    upper, lower = _derivative_violations(raw, t)
    bad = (upper > 0) | (lower > 0)
    if bad.any():
        raise ConstraintViolated(
            "profile derivative leaves [-1/t, 0]",
            t_range=(float(t[bad].min()), float(t[bad].max())),
        )
    base = raw.with_shift(0.0)
    integral = exp_integral(base)
    if not (math.isfinite(integral) and integral > 0):
        raise IntegralNonFinite("normalisation integral is not finite and positive")
    return raw.with_shift(-math.log(integral))


def chebyshev_grid(n, lo=T_MIN, hi=T_MAX):
    k = np.arange(n)
    u = 0.5 * (1.0 - np.cos(np.pi * (k + 0.5) / n))
    return lo + (hi - lo) * u


@dataclass
class ProfileReport:
    samples: int
    max_upper_violation: float
    max_lower_violation: float
    violating_t_range: tuple | None
    normalization_residual: float
    ok: bool
    note: str = "derivative constraints checked on [1e-6, 1 - 1e-6]; g' at t = 1 is unconstrained"

    def to_dict(self):
        return dataclasses.asdict(self)


def validate_g(g: GProfile, samples: int = 1000, tau_norm=TAU_NORM) -> ProfileReport:
    if samples < 100:
        raise ValueError("validate_g needs at least 100 samples")
    t = chebyshev_grid(samples)
    upper, lower = _derivative_violations(g, t)
    bad = (upper > 0) | (lower > 0)
    rng = (float(t[bad].min()), float(t[bad].max())) if bad.any() else None
    resid = abs(exp_integral(g) - 1.0)
    ok = not bad.any() and resid <= tau_norm
    return ProfileReport(samples, float(upper.max()), float(lower.max()), rng, resid, ok)


class RadialSolution:
    """h(t) = 1 - int_0^t e^g tabulated on a uniform grid.

    Values between nodes use monotone cubic interpolation; h' and h'' come
    straight from g.
    """

    def __init__(self, g: GProfile, resolution: int = 4096):
        self.g = g
        self.resolution = int(resolution)
        nodes = np.linspace(0.0, 1.0, self.resolution)
        # 5-point Gauss-Legendre per interval
        x, w = np.polynomial.legendre.leggauss(5)
        a, b = nodes[:-1], nodes[1:]
        mid = 0.5 * (a + b)
        half = 0.5 * (b - a)
        pts = mid[:, None] + half[:, None] * x[None, :]
        seg = half * (np.exp(g(pts)) @ w)
        cum = np.concatenate([[0.0], np.cumsum(seg)])
        if not np.all(np.isfinite(cum)):
            raise IntegralNonFinite("h table is not finite")
        self.nodes = nodes
        self.table = 1.0 - cum
        self._interp = PchipInterpolator(nodes, self.table, extrapolate=False)
        self._h1 = float(self.table[-1])
        self._dh1 = float(-np.exp(g(1.0)))

    def h(self, t):
        t = np.asarray(t, float)
        inside = np.clip(t, 0.0, 1.0)
        out = self._interp(inside)
        # C^1 linear continuation past t = 1 (only used in the sampling collar)
        return np.where(t > 1.0, self._h1 + self._dh1 * (t - 1.0), out)

    def dh(self, t):
        t = np.asarray(t, float)
        return -np.exp(self.g(np.clip(t, 0.0, 1.0)))

    def d2h(self, t):
        t = np.asarray(t, float)
        tc = np.clip(t, 0.0, 1.0)
        out = -self.g.d1(tc) * np.exp(self.g(tc))
        return np.where(t > 1.0, 0.0, out)

    def field(self) -> "RadialGField":
        return RadialGField(self)

    def export_rows(self, n=None):
        t = self.nodes if n is None else np.linspace(0.0, 1.0, n)
        return t, self.g(t), self.h(t), self.dh(t)

    def write_csv(self, path, n=None):
        t, g, h, dh = self.export_rows(n)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "g", "h", "h_prime"])
            for row in zip(t, g, h, dh):
                w.writerow([repr(float(v)) for v in row])


class RadialGField(RadialField):
    name = "radial-g"

    def __init__(self, sol: RadialSolution):
        super().__init__(UNIT_DISC, {"g": sol.g.describe(), "resolution": sol.resolution})
        self.solution = sol

    def h(self, t):
        return self.solution.h(t)

    def dh(self, t):
        return self.solution.dh(t)

    def d2h(self, t):
        return self.solution.d2h(t)


def build_radial_solution(g: GProfile, resolution: int = 4096, samples: int = 1000) -> RadialSolution:
    rep = validate_g(g, samples)
    if not rep.ok:
        if rep.violating_t_range is not None:
            lo, hi = rep.violating_t_range
            raise ConstraintViolated(f"g' out of [-1/t, 0] on t in [{lo:.6g}, {hi:.6g}]", t_range=rep.violating_t_range)
        raise ConstraintViolated(f"normalisation residual {rep.normalization_residual:.3g} exceeds tolerance")
    return RadialSolution(g, resolution)


# ---------------------------------------------------------------------------
# radial reductions of the equality conditions


def _check_t(t, closed_left=True):
    t = float(t)
    ok = (0.0 <= t < 1.0) if closed_left else (0.0 < t < 1.0)
    if not ok:
        raise TOutOfRange(f"t = {t!r} outside the admissible range")
    return t


def radial_gradient_norm(sol, t) -> float:
    """|grad f| at radius sqrt(t): -2 sqrt(t) h'(t)."""
    t = _check_t(t)
    return float(-2.0 * math.sqrt(t) * sol.dh(t))


def radial_lie_derivative(sol, t) -> float:
    """|d/dnu |grad f|| at radius sqrt(t): 2 |h'(t) + 2 t h''(t)|."""
    t = _check_t(t, closed_left=False)
    return float(2.0 * abs(sol.dh(t) + 2.0 * t * sol.d2h(t)))


def check_property5_radial(sol, t, tau=TAU_INEQ):
    """Two-sided bound h' <= h' + 2 t h'' <= -h'.

    Returns ``(holds, margin)`` with margin the signed distance to the
    nearer bound (negative when violated).
    """
    t = _check_t(t, closed_left=False)
    d1 = float(sol.dh(t))
    mid = d1 + 2.0 * t * float(sol.d2h(t))
    margin = min(mid - d1, -d1 - mid)
    return margin >= -tau, margin


def recover_g(field: ScalarField, nodes: int = 2049) -> GProfile:
    """Invert f -> g for a radial field centred at the origin: g = ln(-h').

    h' is read off the field gradient along the positive x-axis,
    h'(t) = f_x(sqrt t, 0) / (2 sqrt t), and at t = 0 from f_xx(0, 0) / 2.
    """
    t = np.linspace(0.0, 1.0, nodes)
    r = np.sqrt(t[1:])
    gx, _ = field.gradient(r, np.zeros_like(r))
    dh = np.empty_like(t)
    dh[1:] = np.asarray(gx) / (2.0 * r)
    fxx, _, _ = field.hessian(0.0, 0.0)
    dh[0] = 0.5 * float(fxx)
    if not np.all(np.isfinite(dh)):
        raise NonNegativeHPrime("h' is not finite")
    if np.any(dh[:-1] >= 0.0):
        bad = t[:-1][dh[:-1] >= 0.0]
        raise NonNegativeHPrime(f"h' >= 0 at t in [{bad.min():.4g}, {bad.max():.4g}]")
    if dh[-1] >= 0.0:
        raise NonNegativeHPrime("h' >= 0 at t = 1")
    return GProfile.spline(t, np.log(-dh))


def minimal_bound_check(sol, samples: int = 1000):
    """min over sampled t in [0, 1] of h(t) - (1 - t), and where it occurs."""
    t = np.linspace(0.0, 1.0, samples)
    gap = np.asarray(sol.h(t)) - (1.0 - t)
    k = int(np.argmin(gap))
    return float(gap[k]), float(t[k])


# ---------------------------------------------------------------------------
# random admissible profiles and spec parsing


def random_profile(rng: np.random.Generator, n_knots: int = 8, slope_floor: float = -3.0) -> GProfile:
    """Admissible profile from random knot slopes.

    Each knot slope lies in [max(-1/t_next, slope_floor), 0]; the monotone
    interpolant cannot overshoot its knot values, so g' stays inside the
    band on every interval.
    """
    knots = np.linspace(0.0, 1.0, n_knots)
    nxt = np.append(knots[1:], 1.0)
    lo = np.maximum(-1.0 / nxt, slope_floor)
    slopes = rng.uniform(lo, 0.0)
    raw = GProfile("slope-spline", {"knots": knots, "slopes": slopes})
    return normalize_profile(raw)


def read_spline_csv(path):
    try:
        with open(path, newline="") as fh:
            rows = [r for r in csv.reader(fh) if r]
    except OSError as exc:
        raise SpecError(f"cannot read spline file {path}: {exc}") from exc
    if rows and not _is_number(rows[0][0]):
        rows = rows[1:]
    try:
        t = [float(r[0]) for r in rows]
        g = [float(r[1]) for r in rows]
    except (IndexError, ValueError) as exc:
        raise SpecError(f"spline file {path} must have rows t,g") from exc
    return GProfile.spline(t, g)


def _is_number(s):
    try:
        float(s)
    except ValueError:
        return False
    return True


def profile_from_spec(spec, normalize=True) -> GProfile:
    """Parse ``{"family": ..., "params": {...}}`` or a short string.

    Short forms: ``constant``, ``linear:A``, ``log:B``, ``spline:path.csv``.
    """
    if isinstance(spec, str):
        name, _, arg = spec.partition(":")
        if name in ("linear", "log", "log-family") and arg and not _is_number(arg):
            raise SpecError(f"bad numeric parameter in profile {spec!r}")
        if name == "constant":
            spec = {"family": "constant", "params": {}}
        elif name == "linear":
            spec = {"family": "linear", "params": {"a": float(arg or 1.0)}}
        elif name in ("log", "log-family"):
            spec = {"family": "log", "params": {"b": float(arg or 1.0)}}
        elif name == "spline":
            spec = {"family": "spline", "params": {"path": arg}}
        else:
            raise SpecError(f"unknown profile {spec!r}")
    if not isinstance(spec, dict) or "family" not in spec:
        raise SpecError("profile spec must have a 'family'")
    fam = spec["family"]
    params = dict(spec.get("params", {}))
    try:
        if fam == "constant":
            g = GProfile.constant()
        elif fam == "linear":
            g = GProfile.linear(params.get("a", 1.0))
        elif fam == "log":
            g = GProfile.log(params.get("b", 1.0))
        elif fam == "spline":
            if "path" in params:
                g = read_spline_csv(params["path"])
            else:
                g = GProfile.spline(params["knots"], params["values"])
        elif fam == "slope-spline":
            g = GProfile("slope-spline", {"knots": np.asarray(params["knots"], float),
                                          "slopes": np.asarray(params["slopes"], float)})
        else:
            raise SpecError(f"unknown profile family {fam!r}")
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, SpecError):
            raise
        raise SpecError(f"bad profile parameters: {exc}") from exc
    if "shift" in spec:
        return g.with_shift(float(spec["shift"]))
    return normalize_profile(g) if normalize else g


def load_profile(arg) -> GProfile:
    """Profile from a short string or a path to a JSON g-spec."""
    if isinstance(arg, str) and arg.endswith(".json"):
        import json
        try:
            spec = json.loads(Path(arg).read_text())
        except (OSError, ValueError) as exc:
            raise SpecError(f"cannot read profile spec {arg}: {exc}") from exc
        return profile_from_spec(spec)
    return profile_from_spec(arg)
