import json
import math

import numpy as np
import pytest
from conftest import circle_polyline, figure_eight, rounded_square
from scipy import ndimage

from hessdisc.errors import DegenerateSegment, LevelOutOfRange, NearCriticalVertex, OpenCurveAtBoundary
from hessdisc.fields import field_from_spec, sample_grid
from hessdisc.levelsets import (
    convexity_test,
    curvature_from_hessian,
    curvature_geometric,
    extract_level_set,
    is_simple,
    marching_squares,
    polygon_mask,
    total_curvature,
)


def flood_fill_components(field, c, n=2048):
    s = sample_grid(field, n)
    _, count = ndimage.label(s.inside & (s.values > c))
    return count


# ---------------------------------------------------------------------------
# extraction


def test_paraboloid_level_length(paraboloid):
    d = extract_level_set(paraboloid, 0.5, 512)
    assert d.beta == 1
    assert d.curves[0].length == pytest.approx(2 * math.pi * math.sqrt(0.5), rel=5e-3)


def test_level_out_of_range(paraboloid):
    with pytest.raises(LevelOutOfRange):
        extract_level_set(paraboloid, 2.0)
    with pytest.raises(LevelOutOfRange):
        extract_level_set(paraboloid, -0.5)


def test_resolution_floor(paraboloid):
    with pytest.raises(ValueError):
        extract_level_set(paraboloid, 0.5, resolution=32)


def test_two_bump_has_two_components(two_bump):
    d = extract_level_set(two_bump, 0.5, 512)
    assert d.beta == 2 == flood_fill_components(two_bump, 0.5)
    xs = [cv.points[:, 0].mean() for cv in d.curves]
    assert xs[0] < 0 < xs[1]  # sorted by leftmost vertex


@pytest.mark.parametrize("c", [0.06, 0.2, 0.35])
def test_two_bump_components_match_flood_fill(two_bump, c):
    assert extract_level_set(two_bump, c, 512).beta == flood_fill_components(two_bump, c)


def test_level_touching_the_boundary_is_rejected():
    f = field_from_spec({"kind": "tilted", "k": 0.3})
    # a plane-like field that does not vanish on a sub-disc boundary
    from hessdisc.fields import Disc, Tilted
    g = Tilted(0.3, domain=Disc((0.0, 0.0), 0.5))
    with pytest.raises(OpenCurveAtBoundary):
        extract_level_set(g, 0.8, 256)
    d = extract_level_set(g, 0.8, 256, strict=False)
    assert d.beta == 0 and d.rejected >= 1
    assert extract_level_set(f, 0.8, 256).beta == 1


def test_curve_frame_invariants(exp_radial):
    d = extract_level_set(exp_radial, 0.4, 512)
    cv = d.curves[0]
    assert np.array_equal(cv.vertices[0], cv.vertices[-1])
    assert np.abs(np.hypot(*cv.tangents.T) - 1).max() < 1e-12
    assert np.abs(np.hypot(*cv.normals.T) - 1).max() < 1e-12
    assert np.abs(np.sum(cv.tangents * cv.normals, axis=1)).max() < 1e-10
    assert is_simple(cv.vertices)
    # outward normal agrees with -grad f
    gx, gy = exp_radial.gradient(cv.points[:, 0], cv.points[:, 1])
    dot = cv.normals[:, 0] * gx + cv.normals[:, 1] * gy
    assert np.all(dot < 0)
    # samples sit on the level
    assert np.abs(exp_radial.value(cv.points[:, 0], cv.points[:, 1]) - 0.4).max() < 1e-12


def test_marching_squares_orientation_and_saddles():
    # checkerboard-like saddle: values 1 at two opposite corners
    v = np.array([[1.0, 0.0], [0.0, 1.0]])
    xs = ys = np.array([0.0, 1.0])
    mask = np.ones_like(v, dtype=bool)
    loops, n_open = marching_squares(v, mask, xs, ys, 0.5)
    assert loops == [] and n_open == 2
    # a single high node in a 3x3 grid gives one ccw loop around it
    v = np.zeros((3, 3))
    v[1, 1] = 1.0
    loops, n_open = marching_squares(v, np.ones_like(v, bool), np.arange(3.0), np.arange(3.0), 0.5)
    assert n_open == 0 and len(loops) == 1
    assert total_curvature(loops[0]).value == pytest.approx(2 * math.pi)


def test_length_converges_with_resolution(paraboloid):
    for c in (0.2, 0.5, 0.8):
        a = extract_level_set(paraboloid, c, 256).curves[0].length
        b = extract_level_set(paraboloid, c, 512).curves[0].length
        assert abs(a - b) / b <= 5e-3


@pytest.mark.parametrize("kind", ["paraboloid", "exp-radial", "quartic"])
def test_radial_levels_are_single_and_nested(kind):
    f = field_from_spec({"kind": kind})
    lengths = []
    for c in np.linspace(0.05, 0.95, 10):
        d = extract_level_set(f, c, 256)
        assert d.beta == 1
        lengths.append(d.curves[0].length)
    assert np.all(np.diff(lengths) < 0)


# ---------------------------------------------------------------------------
# curvature


def test_geometric_curvature_of_circle():
    k = curvature_geometric(circle_polyline(0.5, 512))
    assert np.allclose(k, 2.0, rtol=1e-2)


def test_geometric_curvature_on_flats():
    sq = rounded_square()
    k = curvature_geometric(sq)
    flat = np.abs(np.abs(sq).max(axis=1) - 0.5) < 1e-12
    interior_flat = flat & (np.abs(np.abs(sq).min(axis=1)) < 0.3)
    assert interior_flat.sum() > 100
    assert np.abs(k[interior_flat]).max() < 1e-9


def test_geometric_curvature_on_paraboloid_level(paraboloid):
    cv = extract_level_set(paraboloid, 0.75, 512).curves[0]
    assert np.allclose(cv.curvature_geom, 2.0, rtol=2e-2)


def test_degenerate_segment():
    pts = circle_polyline(0.5, 64)
    pts[5] = pts[4]
    with pytest.raises(DegenerateSegment):
        curvature_geometric(pts)


def test_too_few_vertices():
    with pytest.raises(ValueError):
        curvature_geometric(circle_polyline(0.5, 8))


@pytest.mark.parametrize("kind, c", [("paraboloid", 0.75), ("exp-radial", None), ("quartic", 0.5625)])
def test_hessian_curvature_on_radius_half(kind, c):
    f = field_from_spec({"kind": kind})
    if c is None:
        c = float(f.value(0.5, 0.0))
    cv = extract_level_set(f, c, 512).curves[0]
    k = curvature_from_hessian(f, cv)
    assert np.allclose(k, 2.0, rtol=2e-2)
    assert np.allclose(cv.curvature_hess, k)


def test_near_critical_vertex(paraboloid):
    cv = extract_level_set(paraboloid, 0.75, 256).curves[0]
    with pytest.raises(NearCriticalVertex):
        curvature_from_hessian(paraboloid, cv, eps_grad=10.0)


def test_dual_curvature_agreement(two_bump):
    for f, c in [(two_bump, 0.06), (two_bump, 0.5), (field_from_spec({"kind": "tilted"}), 0.4)]:
        for cv in extract_level_set(f, c, 512).curves:
            rel = np.abs(cv.curvature_geom - cv.curvature_hess) / np.maximum(np.abs(cv.curvature_geom), 1.0)
            assert np.median(rel) <= 0.02


def test_total_curvature_examples(paraboloid):
    for c in (0.1, 0.5, 0.9):
        tc = extract_level_set(paraboloid, c, 512).curves[0].total_curvature()
        assert tc.simple and tc.value == pytest.approx(2 * math.pi, rel=1e-2)
    tc = total_curvature(rounded_square())
    assert tc.simple and tc.value == pytest.approx(2 * math.pi, rel=1e-2)
    tc = total_curvature(figure_eight())
    assert not tc.simple and abs(tc.value) < 1e-6


# ---------------------------------------------------------------------------
# convexity


def test_paraboloid_levels_convex(paraboloid):
    s = sample_grid(paraboloid, 256)
    for c in (0.1, 0.5, 0.9):
        r = convexity_test(extract_level_set(paraboloid, c, 256).curves[0], paraboloid, s)
        assert r.convex and r.violating_fraction == 0


def test_two_bump_components_convex(two_bump):
    s = sample_grid(two_bump, 512)
    d = extract_level_set(two_bump, 0.5, 512, sample=s)
    assert d.beta == 2
    assert all(convexity_test(cv, two_bump, s).convex for cv in d.curves)


def test_peanut_level_is_not_convex(two_bump):
    # just below the saddle value the two bumps merge into one waisted curve
    saddle = float(two_bump.value(0.0, 0.0))
    d = extract_level_set(two_bump, 0.75 * saddle, 512)
    assert d.beta == 1
    r = convexity_test(d.curves[0])
    assert not r.convex and r.violating_fraction > 0.01


def test_hole_around_sublevel_set_is_not_convex():
    ring = field_from_spec({"kind": "ring"})
    d = extract_level_set(ring, 1.05, 512)
    assert d.beta == 2
    inner = min(d.curves, key=lambda cv: cv.length)
    assert inner.total_curvature().value == pytest.approx(-2 * math.pi, rel=1e-2)
    assert not convexity_test(inner, ring).convex


def test_polygon_mask_of_square():
    sq = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
    xs = ys = np.linspace(-0.5, 1.5, 9)
    m = polygon_mask(sq, xs, ys)
    X, Y = np.meshgrid(xs, ys)
    assert np.array_equal(m, (X > 0) & (X < 1) & (Y > 0) & (Y < 1))


# ---------------------------------------------------------------------------
# export


def test_curve_csv_and_summary(tmp_path, paraboloid):
    d = extract_level_set(paraboloid, 0.5, 256)
    path = tmp_path / "curve.csv"
    d.curves[0].write_csv(path)
    rows = path.read_text().splitlines()
    assert rows[0] == "s,x,y,kappa_geom,kappa_hess"
    assert len(rows) == 513
    summary = json.loads(d.to_json(with_convexity=[convexity_test(cv) for cv in d.curves]))
    assert summary["beta"] == 1 and summary["convex"] == [True]
    assert set(summary) >= {"c", "beta", "lengths", "total_curvatures", "convex"}
