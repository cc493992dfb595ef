import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hessdisc.errors import (
    NonFiniteValue,
    PointOutsideDomain,
    PointTooCloseToBoundary,
    SpecError,
    StepUnderflow,
)
from hessdisc.fields import (
    Disc,
    FiniteDifferenceField,
    GridField,
    ScalarField,
    SymMat2,
    eigenvalues,
    eval_field,
    field_from_spec,
    gradient,
    hessian,
    load_field_json,
    load_grid_csv,
    operator_norm,
    sample_grid,
    write_grid_csv,
)

E1 = 1.0 - math.exp(-1.0)
finite = st.floats(min_value=-1e6, max_value=1e6, allow_nan=False, allow_infinity=False)


# ---------------------------------------------------------------------------
# evaluation


def test_paraboloid_values(paraboloid):
    assert eval_field(paraboloid, (0.0, 0.0)) == 1.0
    assert eval_field(paraboloid, (1.0, 0.0)) == 0.0


def test_exp_radial_value(exp_radial):
    # f = (e^{-r^2} - e^{-1}) / (1 - e^{-1}) at r = 0.5
    expected = (math.exp(-0.25) - math.exp(-1.0)) / E1
    assert eval_field(exp_radial, (0.5, 0.0)) == pytest.approx(expected, abs=1e-14)
    assert expected == pytest.approx(0.650068, abs=1e-6)


def test_point_outside_domain(paraboloid):
    with pytest.raises(PointOutsideDomain):
        eval_field(paraboloid, (1.2, 0.0))
    with pytest.raises(PointOutsideDomain):
        gradient(paraboloid, (1.0, 0.0))


def test_non_finite_value_is_an_error():
    class Broken(ScalarField):
        def value(self, x, y):
            return np.full_like(np.asarray(x, float), np.nan)

    with pytest.raises(NonFiniteValue):
        eval_field(Broken(), (0.1, 0.1))


def test_gradients(paraboloid, exp_radial):
    assert gradient(paraboloid, (0.5, 0.0)) == pytest.approx((-1.0, 0.0))
    assert gradient(paraboloid, (0.0, 0.0)) == (0.0, 0.0)
    gx, gy = gradient(exp_radial, (0.5, 0.0))
    assert gx == pytest.approx(-2 * 0.5 * math.exp(-0.25) / E1, abs=1e-12)
    assert gx == pytest.approx(-1.2321, abs=1e-4)
    assert gy == 0.0


def test_hessian_examples(paraboloid, quartic):
    assert hessian(paraboloid, (0.3, -0.2)) == pytest.approx((-2.0, 0.0, -2.0))
    assert hessian(quartic, (0.0, 0.0)) == pytest.approx((-4.0, 0.0, -4.0))


@pytest.mark.parametrize("t", [0.05, 0.3, 1 / 3, 0.7, 0.95])
def test_quartic_eigenvalues(quartic, t):
    r = math.sqrt(t)
    p = (r * math.cos(0.7), r * math.sin(0.7))
    lam = sorted(eigenvalues(hessian(quartic, p)))
    assert lam == pytest.approx(sorted([12 * t - 4, 4 * t - 4]), abs=1e-12)


# ---------------------------------------------------------------------------
# operator norm


@pytest.mark.parametrize("m, expected", [((-2, 0, -2), 2.0), ((0, 0, 0), 0.0), ((1, 2, 1), 3.0)])
def test_operator_norm_examples(m, expected):
    assert operator_norm(SymMat2(*m)) == pytest.approx(expected, abs=1e-15)


@given(finite, finite, finite)
def test_operator_norm_matches_eigendecomposition(a, b, c):
    ref = np.max(np.abs(np.linalg.eigvalsh(np.array([[a, b], [b, c]]))))
    assert operator_norm((a, b, c)) == pytest.approx(ref, rel=1e-9, abs=1e-9)


@given(finite, finite, finite, st.floats(min_value=-1e3, max_value=1e3, allow_nan=False))
def test_operator_norm_homogeneous(a, b, c, s):
    n = operator_norm((a, b, c))
    assert n >= 0
    assert operator_norm((s * a, s * b, s * c)) == pytest.approx(abs(s) * n, rel=1e-12, abs=1e-300 + 1e-12 * abs(s) * n)


@settings(max_examples=50)
@given(st.integers(min_value=0, max_value=2**32 - 1))
def test_rayleigh_quotient_bound(seed):
    rng = np.random.default_rng(seed)
    a, b, c = rng.normal(size=3) * rng.uniform(0.1, 10)
    th = rng.uniform(0, 2 * np.pi, 1000)
    w = np.column_stack([np.cos(th), np.sin(th)])
    q = a * w[:, 0] ** 2 + 2 * b * w[:, 0] * w[:, 1] + c * w[:, 1] ** 2
    assert np.all(np.abs(q) <= operator_norm((a, b, c)) * (1 + 1e-12))


def test_operator_norm_on_field_samples(quartic):
    # Rayleigh bound along a sample of the quartic's Hessians
    rng = np.random.default_rng(3)
    xy = rng.uniform(-0.7, 0.7, size=(50, 2))
    a, b, c = quartic.hessian(xy[:, 0], xy[:, 1])
    norms = operator_norm((a, b, c))
    th = rng.uniform(0, 2 * np.pi, 1000)
    wx, wy = np.cos(th), np.sin(th)
    q = a[:, None] * wx ** 2 + 2 * b[:, None] * wx * wy + c[:, None] * wy ** 2
    assert np.all(np.abs(q) <= norms[:, None] * (1 + 1e-12))


# ---------------------------------------------------------------------------
# finite differences


SAMPLE_POINTS = [(0.1, 0.2), (-0.4, 0.3), (0.5, -0.5), (0.0, -0.7), (0.25, 0.05)]


@pytest.mark.parametrize("kind", ["paraboloid", "exp-radial", "quartic", "tilted", "two-bump"])
def test_finite_difference_matches_analytic(kind):
    base = field_from_spec({"kind": kind})
    step = 1e-3
    fd = FiniteDifferenceField(base, step)
    for p in SAMPLE_POINTS:
        g_ref = np.array(gradient(base, p))
        h_ref = np.array(hessian(base, p))
        scale = 1.0 + np.abs(h_ref).max()
        # third/fourth derivatives of these fields are O(10^3) for the narrow bump
        C = 5e3 if kind == "two-bump" else 50.0
        assert np.abs(np.array(gradient(fd, p)) - g_ref).max() <= C * step ** 2 * scale
        assert np.abs(np.array(hessian(fd, p)) - h_ref).max() <= C * step ** 2 * scale


def test_default_fd_step_is_relative_to_diameter(paraboloid):
    fd = FiniteDifferenceField(paraboloid)
    assert fd.step == pytest.approx(1e-4 * 2.0)


def test_step_underflow(paraboloid):
    with pytest.raises(StepUnderflow):
        FiniteDifferenceField(paraboloid, 1e-17)


def test_fd_hessian_refuses_points_near_boundary(paraboloid):
    fd = FiniteDifferenceField(paraboloid, 1e-2)
    hessian(fd, (0.97, 0.0))
    with pytest.raises(PointTooCloseToBoundary):
        hessian(fd, (0.99, 0.0))


@pytest.mark.parametrize("kind", ["tilted", "two-bump", "quartic"])
def test_clairaut_symmetry(kind):
    f = field_from_spec({"kind": kind})
    d = 1e-5
    for x, y in SAMPLE_POINTS:
        dxy = (f.gradient(x, y + d)[0] - f.gradient(x, y - d)[0]) / (2 * d)
        dyx = (f.gradient(x + d, y)[1] - f.gradient(x - d, y)[1]) / (2 * d)
        assert float(dxy) == pytest.approx(float(dyx), abs=1e-5 * (1 + abs(float(dxy))))
        assert float(dxy) == pytest.approx(float(f.hessian(x, y)[1]), abs=1e-5 * (1 + abs(float(dxy))))


# ---------------------------------------------------------------------------
# boundary behaviour and specs


@pytest.mark.parametrize("kind", ["paraboloid", "exp-radial", "quartic", "quartic-cap", "ring", "two-bump", "tilted"])
def test_closed_forms_vanish_on_the_circle(kind):
    f = field_from_spec({"kind": kind})
    assert f.vanishes_on_boundary()
    assert f.tau_bc == 1e-9


def test_constant_field_does_not_vanish():
    assert not field_from_spec({"kind": "constant"}).vanishes_on_boundary()


def test_field_spec_errors(tmp_path):
    with pytest.raises(SpecError):
        field_from_spec({"kind": "nope"})
    with pytest.raises(SpecError):
        field_from_spec({"name": "paraboloid"})
    with pytest.raises(SpecError):
        field_from_spec({"kind": "radial-g"})
    with pytest.raises(SpecError):
        load_field_json(tmp_path / "missing.json")


def test_field_spec_json(tmp_path):
    p = tmp_path / "f.json"
    p.write_text('{"kind": "radial-g", "g": {"family": "linear", "params": {"a": 1}}}')
    f = load_field_json(p)
    assert eval_field(f, (0.5, 0.0)) == pytest.approx((math.exp(-0.25) - math.exp(-1)) / E1, abs=1e-8)
    fd = field_from_spec({"kind": "paraboloid", "fd_step": 1e-3})
    assert isinstance(fd, FiniteDifferenceField)


def test_disc_domain():
    d = Disc((1.0, -1.0), 2.0)
    assert d.diameter == 4.0
    assert d.contains(2.9, -1.0) and not d.contains(3.1, -1.0)
    with pytest.raises(SpecError):
        Disc((0, 0), 0.0)


# ---------------------------------------------------------------------------
# sampled grids


def test_grid_csv_round_trip(tmp_path, paraboloid):
    path = tmp_path / "grid.csv"
    write_grid_csv(path, paraboloid, 128)
    g = load_grid_csv(path)
    assert isinstance(g, GridField) and g.sampled
    assert g.tau_bc == 1e-6
    assert g.domain == Disc((0.0, 0.0), 1.0)
    # bilinear interpolation of a quadratic: error below h^2 / 4 per axis
    h = g.spacing
    for p in [(0.1, 0.2), (-0.3, 0.45), (0.0, 0.0)]:
        assert eval_field(g, p) == pytest.approx(eval_field(paraboloid, p), abs=h * h)
    assert gradient(g, (0.3, 0.1)) == pytest.approx((-0.6, -0.2), abs=5 * h)
    a, b, c = hessian(g, (0.2, -0.1))
    assert (a, c) == pytest.approx((-2.0, -2.0), abs=0.1)


def test_grid_field_mask_excludes_outside(tmp_path, paraboloid):
    path = tmp_path / "grid.csv"
    write_grid_csv(path, paraboloid, 64)
    g = load_grid_csv(path)
    with pytest.raises(PointOutsideDomain):
        eval_field(g, (0.99, 0.99))


def test_grid_boundary_residual_is_second_order(tmp_path, paraboloid):
    res = []
    for n in (128, 256):
        path = tmp_path / f"grid{n}.csv"
        write_grid_csv(path, paraboloid, n)
        res.append(load_grid_csv(path).boundary_residual())
    assert res[1] == pytest.approx(res[0] / 4, rel=0.1)
    assert res[1] <= (2 / 256) ** 2 / 2


def test_node_mask_grid(tmp_path):
    # without disc geometry the domain is the set of fully occupied cells
    x = np.linspace(-1, 1, 21)
    X, Y = np.meshgrid(x, x)
    vals = np.where(X ** 2 + Y ** 2 < 0.81, 0.81 - X ** 2 - Y ** 2, np.nan)
    path = tmp_path / "mask.csv"
    path.write_text("nx,ny,spacing\n21,21,0.1\n" + "".join(
        ",".join("" if np.isnan(v) else repr(float(v)) for v in row) + "\n" for row in vals))
    g = load_grid_csv(path)
    assert eval_field(g, (0.0, 0.0)) == pytest.approx(0.81)
    with pytest.raises(PointOutsideDomain):
        eval_field(g, (0.85, 0.0))
    assert g.boundary_residual() == pytest.approx(np.nanmin(vals), abs=0.2)


def test_disc_grid_requires_collar(tmp_path, paraboloid):
    path = tmp_path / "grid.csv"
    write_grid_csv(path, paraboloid, 64)
    lines = path.read_text().splitlines()
    # shrink the radius claim beyond the data
    meta = lines[1].split(",")
    meta[7] = "1.2"
    path.write_text("\n".join([lines[0], ",".join(meta), *lines[2:]]) + "\n")
    with pytest.raises(SpecError):
        load_grid_csv(path)


def test_grid_csv_errors(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("nx,ny,spacing\n3,3,0.1\n1,2,3\n")
    with pytest.raises(SpecError):
        load_grid_csv(p)


def test_sample_grid_collar(paraboloid):
    s = sample_grid(paraboloid, 128)
    assert s.spacing == pytest.approx(2 / 128)
    assert s.values.shape == (133, 133)
    assert s.vmax == pytest.approx(1.0) and s.vmin == pytest.approx(0.0, abs=1e-12)
