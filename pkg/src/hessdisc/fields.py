"""Planar scalar fields, domains and the 2x2 symmetric operator norm.

Every field exposes vectorised ``value``, ``gradient`` and ``hessian``
methods that accept broadcastable coordinate arrays.  The point-wise
functions :func:`eval_field`, :func:`gradient` and :func:`hessian` wrap
them with the domain checks.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field as dc_field
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .errors import (
    NonFiniteValue,
    PointOutsideDomain,
    PointTooCloseToBoundary,
    SpecError,
    StepUnderflow,
)

EPS = np.finfo(float).eps

# boundary-zero tolerance for closed-form and sampled fields
TAU_BC_CLOSED = 1e-9
TAU_BC_SAMPLED = 1e-6


class Point2(NamedTuple):
    x: float
    y: float


class SymMat2(NamedTuple):
    """Symmetric 2x2 matrix ``[[a, b], [b, c]]``."""

    a: float
    b: float
    c: float

    def as_array(self) -> np.ndarray:
        return np.array([[self.a, self.b], [self.b, self.c]])


def _require_finite(arr, what):
    arr = np.asarray(arr, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise NonFiniteValue(f"non-finite {what}")
    return arr


def operator_norm(m):
    """Largest absolute eigenvalue of a symmetric 2x2 matrix.

    Accepts a :class:`SymMat2` or a tuple ``(a, b, c)`` of arrays, in
    which case the norm is computed element-wise.
    """
    a, b, c = (np.asarray(v, dtype=float) for v in m)
    mean = 0.5 * (a + c)
    rad = np.hypot(0.5 * (a - c), b)
    out = np.abs(mean) + rad
    return float(out) if out.ndim == 0 else out


def eigenvalues(m):
    a, b, c = (np.asarray(v, dtype=float) for v in m)
    mean = 0.5 * (a + c)
    rad = np.hypot(0.5 * (a - c), b)
    return mean + rad, mean - rad


# ---------------------------------------------------------------------------
# domains


@dataclass(frozen=True)
class Disc:
    center: tuple[float, float] = (0.0, 0.0)
    radius: float = 1.0

    def __post_init__(self):
        if not self.radius > 0:
            raise SpecError("disc radius must be positive")
        if not all(math.isfinite(v) for v in (*self.center, self.radius)):
            raise SpecError("disc parameters must be finite")

    @property
    def diameter(self) -> float:
        return 2.0 * self.radius

    def bbox(self):
        cx, cy = self.center
        r = self.radius
        return cx - r, cx + r, cy - r, cy + r

    def distance_to_boundary(self, x, y):
        """Signed distance to the circle, positive inside."""
        cx, cy = self.center
        return self.radius - np.hypot(np.asarray(x) - cx, np.asarray(y) - cy)

    def contains(self, x, y, tol=0.0):
        return self.distance_to_boundary(x, y) >= -tol

    def boundary_points(self, n=256):
        th = np.linspace(0.0, 2 * np.pi, n, endpoint=False)
        cx, cy = self.center
        return cx + self.radius * np.cos(th), cy + self.radius * np.sin(th)

    def exit_point(self, p, q):
        """Point where the segment p->q leaves the disc (p inside, q outside)."""
        c = np.asarray(self.center)
        p = np.asarray(p, float) - c
        d = np.asarray(q, float) - c - p
        a = d @ d
        b = 2 * p @ d
        cc = p @ p - self.radius ** 2
        s = (-b + math.sqrt(max(b * b - 4 * a * cc, 0.0))) / (2 * a)
        return c + p + min(max(s, 0.0), 1.0) * d


@dataclass(frozen=True, eq=False)
class GridMask:
    """Node occupancy mask on a regular grid; ``occupancy[j, i]`` is node (x_i, y_j)."""

    x0: float
    y0: float
    spacing: float
    occupancy: np.ndarray = dc_field(repr=False)

    def __post_init__(self):
        occ = np.asarray(self.occupancy, dtype=bool)
        if occ.ndim != 2 or not occ.any():
            raise SpecError("grid mask must be a non-empty 2-D occupancy array")
        if not self.spacing > 0:
            raise SpecError("grid spacing must be positive")
        object.__setattr__(self, "occupancy", occ)

    @property
    def shape(self):
        return self.occupancy.shape

    @property
    def diameter(self) -> float:
        ny, nx = self.shape
        return self.spacing * math.hypot(nx - 1, ny - 1)

    def bbox(self):
        ny, nx = self.shape
        return (self.x0, self.x0 + (nx - 1) * self.spacing,
                self.y0, self.y0 + (ny - 1) * self.spacing)

    def cell_valid(self):
        o = self.occupancy
        return o[:-1, :-1] & o[:-1, 1:] & o[1:, :-1] & o[1:, 1:]

    def _cell_index(self, x, y):
        fx = (np.asarray(x, float) - self.x0) / self.spacing
        fy = (np.asarray(y, float) - self.y0) / self.spacing
        return fx, fy

    def contains(self, x, y, tol=0.0):
        fx, fy = self._cell_index(x, y)
        ny, nx = self.shape
        inside = (fx >= -1e-12) & (fx <= nx - 1 + 1e-12) & (fy >= -1e-12) & (fy <= ny - 1 + 1e-12)
        i = np.clip(np.floor(fx).astype(int), 0, nx - 2)
        j = np.clip(np.floor(fy).astype(int), 0, ny - 2)
        return inside & self.cell_valid()[j, i]

    def distance_to_boundary(self, x, y):
        """Distance (in length units) to the nearest unoccupied node or grid edge.

        Coarse: resolved to the node spacing.
        """
        occ = self.occupancy
        ny, nx = occ.shape
        bad = np.argwhere(~occ)
        fx, fy = self._cell_index(x, y)
        fx = np.atleast_1d(fx)
        fy = np.atleast_1d(fy)
        edge = np.minimum.reduce([fx + 1, nx - fx, fy + 1, ny - fy])
        if len(bad):
            d = np.sqrt(((fy[:, None] - bad[None, :, 0]) ** 2) + ((fx[:, None] - bad[None, :, 1]) ** 2)).min(axis=1)
            edge = np.minimum(edge, d)
        out = (edge - 1.0) * self.spacing
        return out if out.size > 1 else float(out[0])


UNIT_DISC = Disc()


# ---------------------------------------------------------------------------
# fields


class ScalarField:
    """Base class; subclasses provide ``value`` and, when analytic, derivatives."""

    name = "field"
    analytic = False
    sampled = False
    radial = False

    def __init__(self, domain=UNIT_DISC, params=None):
        self.domain = domain
        self.params = dict(params or {})

    def value(self, x, y):
        raise NotImplementedError

    def gradient(self, x, y):
        raise NotImplementedError

    def hessian(self, x, y):
        raise NotImplementedError

    @property
    def tau_bc(self):
        return TAU_BC_SAMPLED if self.sampled else TAU_BC_CLOSED

    def describe(self):
        return {"kind": self.name, **self.params}

    def boundary_residual(self, n=512):
        """max |f| over sampled boundary points (only for disc domains)."""
        if not isinstance(self.domain, Disc):
            return 0.0
        x, y = self.domain.boundary_points(n)
        return float(np.max(np.abs(self.value(x, y))))

    def vanishes_on_boundary(self, tol=None):
        return self.boundary_residual() <= (self.tau_bc if tol is None else tol)

    def __repr__(self):
        args = ", ".join(f"{k}={v!r}" for k, v in self.params.items())
        return f"{type(self).__name__}({args})"


class RadialField(ScalarField):
    """f(x, y) = h(x^2 + y^2) on the unit disc with closed-form h, h', h''."""

    analytic = True
    radial = True

    def h(self, t):
        raise NotImplementedError

    def dh(self, t):
        raise NotImplementedError

    def d2h(self, t):
        raise NotImplementedError

    def value(self, x, y):
        x = np.asarray(x, float)
        y = np.asarray(y, float)
        return self.h(x * x + y * y)

    def gradient(self, x, y):
        x = np.asarray(x, float)
        y = np.asarray(y, float)
        d = 2.0 * self.dh(x * x + y * y)
        return d * x, d * y

    def hessian(self, x, y):
        x = np.asarray(x, float)
        y = np.asarray(y, float)
        t = x * x + y * y
        d1 = 2.0 * self.dh(t)
        d2 = 4.0 * self.d2h(t)
        return d1 + d2 * x * x, d2 * x * y, d1 + d2 * y * y


class Paraboloid(RadialField):
    name = "paraboloid"

    def h(self, t):
        return 1.0 - np.asarray(t, float)

    def dh(self, t):
        return np.full_like(np.asarray(t, float), -1.0)

    def d2h(self, t):
        return np.zeros_like(np.asarray(t, float))


_E1 = 1.0 - math.exp(-1.0)


class ExpRadial(RadialField):
    """The g(t) = -t - ln(1 - 1/e) member: f = (e^{-r^2} - e^{-1}) / (1 - e^{-1})."""

    name = "exp-radial"

    def h(self, t):
        return (np.exp(-np.asarray(t, float)) - math.exp(-1.0)) / _E1

    def dh(self, t):
        return -np.exp(-np.asarray(t, float)) / _E1

    def d2h(self, t):
        return np.exp(-np.asarray(t, float)) / _E1


class Quartic(RadialField):
    """(1 - r^2)^2: radial, vanishing on the circle, strict inequality."""

    name = "quartic"

    def h(self, t):
        return (1.0 - np.asarray(t, float)) ** 2

    def dh(self, t):
        return -2.0 * (1.0 - np.asarray(t, float))

    def d2h(self, t):
        return np.full_like(np.asarray(t, float), 2.0)


class QuarticCap(RadialField):
    """1 - r^4: flat-topped radial field outside the equality family."""

    name = "quartic-cap"

    def h(self, t):
        t = np.asarray(t, float)
        return 1.0 - t * t

    def dh(self, t):
        return -2.0 * np.asarray(t, float)

    def d2h(self, t):
        return np.full_like(np.asarray(t, float), -2.0)


class Ring(RadialField):
    """(1 - r^2)(1 + 2 r^2): maximum along the circle r^2 = 1/4."""

    name = "ring"

    def h(self, t):
        t = np.asarray(t, float)
        return (1.0 - t) * (1.0 + 2.0 * t)

    def dh(self, t):
        return 1.0 - 4.0 * np.asarray(t, float)

    def d2h(self, t):
        return np.full_like(np.asarray(t, float), -4.0)


class PowerCap(RadialField):
    """(1 - r^2)^k for k >= 1; k = 1 is the paraboloid, k = 2 the quartic."""

    name = "power-cap"

    def __init__(self, k=3.0, domain=UNIT_DISC):
        if not k >= 1:
            raise SpecError("power-cap exponent must be at least 1")
        super().__init__(domain, {"k": k})
        self.k = float(k)

    def h(self, t):
        return np.clip(1.0 - np.asarray(t, float), 0.0, None) ** self.k

    def dh(self, t):
        return -self.k * np.clip(1.0 - np.asarray(t, float), 0.0, None) ** (self.k - 1)

    def d2h(self, t):
        return self.k * (self.k - 1) * np.clip(1.0 - np.asarray(t, float), 0.0, None) ** (self.k - 2) \
            if self.k >= 2 else np.zeros_like(np.asarray(t, float))


class Constant(RadialField):
    name = "constant"

    def __init__(self, level=1.0, domain=UNIT_DISC):
        super().__init__(domain, {"level": level})
        self.level = float(level)

    def h(self, t):
        return np.full_like(np.asarray(t, float), self.level)

    def dh(self, t):
        return np.zeros_like(np.asarray(t, float))

    def d2h(self, t):
        return np.zeros_like(np.asarray(t, float))


class TwoBump(ScalarField):
    """(1 - r^2) * (two Gaussian bumps at (+-sep, 0))."""

    name = "two-bump"
    analytic = True

    def __init__(self, sep=0.4, width=0.05, domain=UNIT_DISC):
        super().__init__(domain, {"sep": sep, "width": width})
        self.sep = float(sep)
        self.width = float(width)

    def _bumps(self, x, y):
        s = self.width
        out = []
        for a in (self.sep, -self.sep):
            dx = x - a
            b = np.exp(-(dx * dx + y * y) / s)
            out.append((dx, b))
        return out

    def value(self, x, y):
        x = np.asarray(x, float)
        y = np.asarray(y, float)
        q = 1.0 - x * x - y * y
        return q * sum(b for _, b in self._bumps(x, y))

    def gradient(self, x, y):
        x = np.asarray(x, float)
        y = np.asarray(y, float)
        s = self.width
        q = 1.0 - x * x - y * y
        B = Bx = By = 0.0
        for dx, b in self._bumps(x, y):
            B = B + b
            Bx = Bx - 2.0 * dx / s * b
            By = By - 2.0 * y / s * b
        return -2.0 * x * B + q * Bx, -2.0 * y * B + q * By

    def hessian(self, x, y):
        x = np.asarray(x, float)
        y = np.asarray(y, float)
        s = self.width
        q = 1.0 - x * x - y * y
        B = Bx = By = Bxx = Bxy = Byy = 0.0
        for dx, b in self._bumps(x, y):
            B = B + b
            Bx = Bx - 2.0 * dx / s * b
            By = By - 2.0 * y / s * b
            Bxx = Bxx + (4.0 * dx * dx / s ** 2 - 2.0 / s) * b
            Byy = Byy + (4.0 * y * y / s ** 2 - 2.0 / s) * b
            Bxy = Bxy + 4.0 * dx * y / s ** 2 * b
        fxx = -2.0 * B - 4.0 * x * Bx + q * Bxx
        fyy = -2.0 * B - 4.0 * y * By + q * Byy
        fxy = -2.0 * x * By - 2.0 * y * Bx + q * Bxy
        return fxx, fxy, fyy


class Tilted(ScalarField):
    """(1 - r^2)(1 + k x): non-radial, convex levels, single maximum."""

    name = "tilted"
    analytic = True

    def __init__(self, k=0.3, domain=UNIT_DISC):
        super().__init__(domain, {"k": k})
        self.k = float(k)

    def value(self, x, y):
        x = np.asarray(x, float)
        y = np.asarray(y, float)
        return (1.0 - x * x - y * y) * (1.0 + self.k * x)

    def gradient(self, x, y):
        x = np.asarray(x, float)
        y = np.asarray(y, float)
        q = 1.0 - x * x - y * y
        lin = 1.0 + self.k * x
        return -2.0 * x * lin + self.k * q, -2.0 * y * lin

    def hessian(self, x, y):
        x = np.asarray(x, float)
        y = np.asarray(y, float)
        lin = 1.0 + self.k * x
        return -2.0 * lin - 4.0 * self.k * x, -2.0 * self.k * y, -2.0 * lin


class FiniteDifferenceField(ScalarField):
    """Central-difference derivatives of another field's values."""

    def __init__(self, base: ScalarField, step=None):
        super().__init__(base.domain, dict(base.params))
        self.base = base
        self.name = base.name
        self.sampled = base.sampled
        diam = base.domain.diameter
        if step is None:
            step = base.spacing if isinstance(base, GridField) else 1e-4 * diam
        if step < 8 * EPS * diam:
            raise StepUnderflow(f"finite-difference step {step:g} below 8*eps*scale")
        self.step = float(step)
        self.params["fd_step"] = self.step

    def value(self, x, y):
        return self.base.value(x, y)

    def gradient(self, x, y):
        h = self.step
        x = np.asarray(x, float)
        y = np.asarray(y, float)
        f = self.base.value
        return (f(x + h, y) - f(x - h, y)) / (2 * h), (f(x, y + h) - f(x, y - h)) / (2 * h)

    def hessian(self, x, y):
        h = self.step
        x = np.asarray(x, float)
        y = np.asarray(y, float)
        f = self.base.value
        f0 = f(x, y)
        fxx = (f(x + h, y) - 2 * f0 + f(x - h, y)) / (h * h)
        fyy = (f(x, y + h) - 2 * f0 + f(x, y - h)) / (h * h)
        fxy = (f(x + h, y + h) - f(x + h, y - h) - f(x - h, y + h) + f(x - h, y - h)) / (4 * h * h)
        return fxx, fxy, fyy


GRID_COLLAR = 4


class GridField(ScalarField):
    """Sampled values on a regular grid with bilinear interpolation.

    Derivatives are central differences of the interpolant with the grid
    spacing as step, so at nodes they reduce to the usual node stencils.

    Without ``disc`` the domain is the set of cells whose four nodes hold
    finite values.  With ``disc`` the domain is that disc and the values
    must cover it with a collar of ``GRID_COLLAR`` nodes, so stencils near
    the circle stay inside the data.
    """

    name = "grid"
    sampled = True

    def __init__(self, values, spacing, x0=None, y0=None, mask=None, params=None, disc: Disc | None = None):
        vals = np.asarray(values, dtype=float)
        if vals.ndim != 2 or min(vals.shape) < 3:
            raise SpecError("grid field needs a 2-D array of at least 3x3 values")
        ny, nx = vals.shape
        if mask is None:
            mask = np.isfinite(vals)
        mask = np.asarray(mask, bool) & np.isfinite(vals)
        if x0 is None:
            x0 = -0.5 * (nx - 1) * spacing
        if y0 is None:
            y0 = -0.5 * (ny - 1) * spacing
        self.nodes = GridMask(float(x0), float(y0), float(spacing), mask)
        if disc is not None:
            xs = x0 + spacing * np.arange(nx)
            ys = y0 + spacing * np.arange(ny)
            X, Y = np.meshgrid(xs, ys)
            need = disc.distance_to_boundary(X, Y) >= -GRID_COLLAR * spacing * (1 - 1e-9)
            if not np.all(mask[need]):
                raise SpecError(f"grid values must cover the disc plus a {GRID_COLLAR}-node collar")
            lo_x, hi_x, lo_y, hi_y = disc.bbox()
            pad = (GRID_COLLAR - 1) * spacing
            if lo_x - pad < xs[0] - 1e-12 or hi_x + pad > xs[-1] + 1e-12 \
                    or lo_y - pad < ys[0] - 1e-12 or hi_y + pad > ys[-1] + 1e-12:
                raise SpecError(f"grid must extend {GRID_COLLAR} nodes beyond the disc")
            params = {**(params or {}), "disc": [*disc.center, disc.radius]}
        super().__init__(disc if disc is not None else self.nodes, params or {})
        self.values = np.where(mask, vals, 0.0)
        self.spacing = float(spacing)
        self.step = float(spacing)

    def _interp(self, x, y):
        d = self.nodes
        fx, fy = d._cell_index(x, y)
        ny, nx = self.values.shape
        i = np.clip(np.floor(fx).astype(int), 0, nx - 2)
        j = np.clip(np.floor(fy).astype(int), 0, ny - 2)
        u = fx - i
        v = fy - j
        V = self.values
        return ((1 - u) * (1 - v) * V[j, i] + u * (1 - v) * V[j, i + 1]
                + (1 - u) * v * V[j + 1, i] + u * v * V[j + 1, i + 1])

    def value(self, x, y):
        return self._interp(x, y)

    def gradient(self, x, y):
        h = self.step
        x = np.asarray(x, float)
        y = np.asarray(y, float)
        f = self._interp
        return (f(x + h, y) - f(x - h, y)) / (2 * h), (f(x, y + h) - f(x, y - h)) / (2 * h)

    def hessian(self, x, y):
        h = self.step
        x = np.asarray(x, float)
        y = np.asarray(y, float)
        f = self._interp
        f0 = f(x, y)
        fxx = (f(x + h, y) - 2 * f0 + f(x - h, y)) / (h * h)
        fyy = (f(x, y + h) - 2 * f0 + f(x, y - h)) / (h * h)
        fxy = (f(x + h, y + h) - f(x + h, y - h) - f(x - h, y + h) + f(x - h, y - h)) / (4 * h * h)
        return fxx, fxy, fyy

    def boundary_residual(self, n=512):
        if isinstance(self.domain, Disc):
            return super().boundary_residual(n)
        occ = self.domain.occupancy
        pad = np.pad(occ, 1, constant_values=False)
        inner = pad[1:-1, 1:-1] & pad[:-2, 1:-1] & pad[2:, 1:-1] & pad[1:-1, :-2] & pad[1:-1, 2:]
        rim = occ & ~inner
        return float(np.max(np.abs(self.values[rim]))) if rim.any() else 0.0


# ---------------------------------------------------------------------------
# point-wise API


def _check_inside(field, p, strict=False):
    x, y = float(p[0]), float(p[1])
    if not (math.isfinite(x) and math.isfinite(y)):
        raise PointOutsideDomain(f"non-finite point {p!r}")
    if not bool(field.domain.contains(x, y, tol=1e-12)):
        raise PointOutsideDomain(f"point ({x:g}, {y:g}) outside the domain")
    if strict and not float(field.domain.distance_to_boundary(x, y)) > 0:
        raise PointOutsideDomain(f"point ({x:g}, {y:g}) is on the boundary, not interior")
    return x, y


def eval_field(field: ScalarField, p) -> float:
    x, y = _check_inside(field, p)
    return float(_require_finite(field.value(x, y), "field value"))


def gradient(field: ScalarField, p) -> tuple[float, float]:
    x, y = _check_inside(field, p, strict=True)
    step = getattr(field, "step", None)
    if step is not None and field.domain.distance_to_boundary(x, y) < step:
        raise PointTooCloseToBoundary(f"({x:g}, {y:g}) within one step of the boundary")
    gx, gy = field.gradient(x, y)
    gx, gy = _require_finite((gx, gy), "gradient")
    return float(gx), float(gy)


def hessian(field: ScalarField, p) -> SymMat2:
    x, y = _check_inside(field, p, strict=True)
    step = getattr(field, "step", None)
    if step is not None and field.domain.distance_to_boundary(x, y) < 2 * step:
        raise PointTooCloseToBoundary(f"({x:g}, {y:g}) within two steps of the boundary")
    a, b, c = _require_finite(field.hessian(x, y), "hessian")
    return SymMat2(float(a), float(b), float(c))


# ---------------------------------------------------------------------------
# grid sampling


@dataclass(eq=False)
class GridSample:
    """Field values on the node grid used for level extraction and quadrature."""

    xs: np.ndarray
    ys: np.ndarray
    values: np.ndarray
    mask: np.ndarray
    inside: np.ndarray
    spacing: float

    @property
    def vmin(self):
        return float(self.values[self.inside].min())

    @property
    def vmax(self):
        return float(self.values[self.inside].max())


def sample_grid(field: ScalarField, resolution: int = 512, domain=None) -> GridSample:
    """Sample a field on the node grid covering its domain.

    For discs the grid has ``resolution`` cells across the diameter plus a
    two-cell collar, so curves lying just inside the circle stay within
    the mask.  Sampled fields are returned on their native grid.
    """
    domain = domain or field.domain
    if isinstance(field, GridField) and isinstance(domain, GridMask):
        d = field.domain
        ny, nx = d.shape
        xs = d.x0 + d.spacing * np.arange(nx)
        ys = d.y0 + d.spacing * np.arange(ny)
        return GridSample(xs, ys, field.values.copy(), d.occupancy.copy(), d.occupancy.copy(), d.spacing)
    if isinstance(domain, GridMask):
        ny, nx = domain.shape
        xs = domain.x0 + domain.spacing * np.arange(nx)
        ys = domain.y0 + domain.spacing * np.arange(ny)
        X, Y = np.meshgrid(xs, ys)
        vals = np.where(domain.occupancy, field.value(X, Y), 0.0)
        _require_finite(vals, "field value")
        return GridSample(xs, ys, vals, domain.occupancy.copy(), domain.occupancy.copy(), domain.spacing)
    cx, cy = domain.center
    r = domain.radius
    h = 2.0 * r / resolution
    k = np.arange(-2, resolution + 3)
    xs = cx - r + h * k
    ys = cy - r + h * k
    X, Y = np.meshgrid(xs, ys)
    dist = domain.distance_to_boundary(X, Y)
    mask = dist >= -2.0 * h - 1e-12
    inside = dist >= -1e-12
    vals = np.zeros_like(X)
    vals[mask] = field.value(X[mask], Y[mask])
    _require_finite(vals, "field value")
    return GridSample(xs, ys, vals, mask, inside, h)


# ---------------------------------------------------------------------------
# spec parsing


def load_grid_csv(path, spacing=None) -> GridField:
    """Load a sampled field: header ``nx,ny,spacing`` then row-major values.

    The header may extend to ``nx,ny,spacing,x0,y0,cx,cy,radius``, giving
    the lower-left node and a disc domain (see :class:`GridField`).
    Empty cells or ``nan`` mark nodes outside the domain.
    """
    path = Path(path)
    try:
        with path.open(newline="") as fh:
            rows = [r for r in csv.reader(fh) if r]
    except OSError as exc:
        raise SpecError(f"cannot read grid file {path}: {exc}") from exc
    if not rows:
        raise SpecError(f"empty grid file {path}")
    head = [c.strip().lower() for c in rows[0]]
    start = 1
    hrow = rows[0]
    extended = ["nx", "ny", "spacing", "x0", "y0", "cx", "cy", "radius"]
    if head[:3] == ["nx", "ny", "spacing"]:
        if len(head) not in (3, 8) or (len(head) == 8 and head != extended):
            raise SpecError("grid header must be nx,ny,spacing[,x0,y0,cx,cy,radius]")
        if len(rows) < 2 or len(rows[1]) != len(head):
            raise SpecError("bad grid header values")
        hrow = rows[1]
        start = 2
    try:
        nx, ny, dx = int(hrow[0]), int(hrow[1]), float(hrow[2])
        geo = [float(v) for v in hrow[3:8]] if head[:3] == ["nx", "ny", "spacing"] and len(head) == 8 else None
    except (IndexError, ValueError) as exc:
        raise SpecError("grid header must be nx,ny,spacing[,x0,y0,cx,cy,radius]") from exc
    flat = []
    for r in rows[start:]:
        for c in r:
            c = c.strip()
            flat.append(float("nan") if c in ("", "nan", "NaN") else float(c))
    if len(flat) != nx * ny:
        raise SpecError(f"grid file has {len(flat)} values, expected {nx * ny}")
    vals = np.asarray(flat).reshape(ny, nx)
    params = {"path": str(path)}
    if geo is None:
        return GridField(vals, spacing or dx, params=params)
    x0, y0, cx, cy, r = geo
    return GridField(vals, spacing or dx, x0, y0, params=params, disc=Disc((cx, cy), r))


def write_grid_csv(path, field: ScalarField, resolution: int = 128):
    """Sample ``field`` to a grid CSV.

    Disc domains are written with the extended header and a collar of
    ``GRID_COLLAR`` nodes beyond the circle, so the file reloads as a field
    on the same disc.  Other domains are written as their occupied nodes.
    """
    dom = field.domain
    if isinstance(dom, Disc):
        (cx, cy), r = dom.center, dom.radius
        h = 2.0 * r / resolution
        k = np.arange(-GRID_COLLAR, resolution + GRID_COLLAR + 1)
        xs, ys = cx - r + h * k, cy - r + h * k
        X, Y = np.meshgrid(xs, ys)
        vals = np.asarray(field.value(X, Y), float)
        header = ["nx", "ny", "spacing", "x0", "y0", "cx", "cy", "radius"]
        meta = [len(xs), len(ys), repr(h), repr(float(xs[0])), repr(float(ys[0])), repr(float(cx)), repr(float(cy)),
                repr(float(r))]
    else:
        s = sample_grid(field, resolution)
        sel = np.ix_(np.any(s.inside, axis=1), np.any(s.inside, axis=0))
        vals = np.where(s.inside, s.values, np.nan)[sel]
        header = ["nx", "ny", "spacing"]
        meta = [vals.shape[1], vals.shape[0], repr(s.spacing)]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerow(meta)
        for row in vals:
            w.writerow(["" if not np.isfinite(v) else repr(float(v)) for v in row])


CLOSED_FORM = {
    "paraboloid": Paraboloid,
    "exp-radial": ExpRadial,
    "quartic": Quartic,
    "quartic-cap": QuarticCap,
    "ring": Ring,
    "two-bump": TwoBump,
    "tilted": Tilted,
    "power-cap": PowerCap,
    "constant": Constant,
}


def field_from_spec(spec) -> ScalarField:
    """Build a field from a JSON-like dict ``{"kind": ..., parameters...}``.

    ``radial-g`` fields take a ``g`` sub-spec (see :mod:`hessdisc.profiles`)
    and an optional ``resolution``; ``grid`` fields take a CSV ``path``.
    A ``"fd_step"`` entry switches the field to finite-difference mode.
    """
    if not isinstance(spec, dict) or "kind" not in spec:
        raise SpecError("field spec must be an object with a 'kind'")
    spec = dict(spec)
    kind = spec.pop("kind")
    fd_step = spec.pop("fd_step", None)
    finite_difference = spec.pop("finite_difference", False)
    if kind in CLOSED_FORM:
        try:
            fld = CLOSED_FORM[kind](**spec)
        except TypeError as exc:
            raise SpecError(f"bad parameters for {kind}: {exc}") from exc
    elif kind == "radial-g":
        from .profiles import build_radial_solution, profile_from_spec
        if "g" not in spec:
            raise SpecError("radial-g field needs a 'g' profile spec")
        g = profile_from_spec(spec["g"])
        fld = build_radial_solution(g, int(spec.get("resolution", 4096))).field()
    elif kind == "grid":
        if "path" not in spec:
            raise SpecError("grid field needs a 'path'")
        fld = load_grid_csv(spec["path"], spec.get("spacing"))
    else:
        raise SpecError(f"unknown field kind {kind!r}")
    if fd_step is not None or finite_difference:
        fld = FiniteDifferenceField(fld, fd_step)
    return fld


def load_field_json(path) -> ScalarField:
    try:
        spec = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise SpecError(f"cannot read field spec {path}: {exc}") from exc
    return field_from_spec(spec)
