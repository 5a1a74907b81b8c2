import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from floatlab.convexfn import catalog, gradient_weighted_integral, precompose_affine, quadratic_form
from floatlab.epigraph import (DomainError, EllipsoidSpec, HyperplaneCut, cap_moments, cap_volume, dry_offset,
                               ellipsoid_cap_bounds, ellipsoid_cap_volume, graph_curvature,
                               graph_normal_component, rolling_function, rolling_radii,
                               rolling_weighted_integral)

CAT = catalog()


def test_parabola_cap_closed_form():
    psi = CAT["parabola"]
    assert cap_volume(psi, HyperplaneCut((0.0,), 0.5)) == pytest.approx(0.666667, abs=1e-6)
    assert cap_volume(psi, HyperplaneCut((1.0,), 0.0)) == pytest.approx(2 / 3, rel=1e-10)


def test_dry_cut():
    assert cap_volume(CAT["parabola"], HyperplaneCut((0.3,), -5.0)) == 0.0


def test_paraboloid_cap_and_moments():
    psi = CAT["paraboloid"]
    a = np.array([0.2, -0.1])
    apex, b_dry = dry_offset(psi, a)
    assert np.allclose(apex, a)
    cm = cap_moments(psi, a, b_dry + 0.3)
    assert cm.volume == pytest.approx(math.pi * 0.09, rel=1e-10)
    assert cm.area == pytest.approx(2 * math.pi * 0.3, rel=1e-10)
    assert np.allclose(cm.centroid, a, atol=1e-12)


def test_huber_cap():
    # wet interval [-1, 3]: quadratic part plus a triangle on the affine piece
    assert cap_volume(CAT["huber"], HyperplaneCut((0.5,), 1.0)) == pytest.approx(8 / 3, rel=1e-10)


@settings(max_examples=25, deadline=None)
@given(a=st.floats(-2, 2), t=st.floats(0.01, 2), q=st.floats(0.3, 3))
def test_parabola_family_depends_on_shifted_offset(a, t, q):
    psi = quadratic_form([[q / 2]])
    b = t - a * a / (2 * q)
    v = cap_volume(psi, HyperplaneCut((a,), b))
    assert v == pytest.approx((2 / 3) * (2 * t) ** 1.5 / math.sqrt(q), rel=1e-9)


@settings(max_examples=20, deadline=None)
@given(b1=st.floats(0.0, 1.0), db=st.floats(1e-3, 1.0))
def test_cap_volume_monotone_in_offset(b1, db):
    psi = CAT["aniso-quad"]
    v1 = cap_volume(psi, HyperplaneCut((0.1, 0.2), b1))
    v2 = cap_volume(psi, HyperplaneCut((0.1, 0.2), b1 + db))
    assert v2 > v1


def test_ellipsoid_disk():
    e = EllipsoidSpec((1.0, 1.0))
    exact = math.acos(0.9) - 0.9 * math.sqrt(0.19)
    v = ellipsoid_cap_volume(e, 0.1)
    assert v == pytest.approx(exact, abs=1e-12)
    assert v == pytest.approx(0.058726, abs=1e-6)
    assert ellipsoid_cap_volume(e, 1.0) == pytest.approx(math.pi / 2, abs=1e-12)
    lo, hi = ellipsoid_cap_bounds(e, 0.1)
    assert hi == pytest.approx(0.059629, abs=1e-6)
    assert lo == pytest.approx(hi * math.sqrt(0.95), rel=1e-12)
    assert 0.056647 <= lo <= v <= hi


def test_ellipsoid_domain():
    with pytest.raises(DomainError):
        ellipsoid_cap_volume(EllipsoidSpec((1.0, 2.0)), 2.5)
    with pytest.raises(DomainError):
        ellipsoid_cap_bounds(EllipsoidSpec((1.0, 2.0)), -0.1)


@settings(max_examples=60, deadline=None)
@given(axes=st.lists(st.floats(0.2, 3.0), min_size=2, max_size=5), frac=st.floats(0.0, 1.0))
def test_ellipsoid_sandwich(axes, frac):
    e = EllipsoidSpec(tuple(axes))
    h = frac * axes[-1]
    v = ellipsoid_cap_volume(e, h)
    lo, hi = ellipsoid_cap_bounds(e, h)
    assert lo * (1 - 1e-12) <= v <= hi * (1 + 1e-12)


def test_curvature_and_normal():
    psi = CAT["parabola"]
    assert graph_curvature(psi, 0.0) == pytest.approx(1.0)
    assert graph_normal_component(psi, 0.0) == pytest.approx(1.0)
    assert graph_curvature(psi, 1.0) == pytest.approx(2 ** -1.5)
    assert graph_normal_component(psi, 1.0) == pytest.approx(2 ** -0.5)
    x = np.array([0.4, -1.3])
    assert graph_curvature(CAT["paraboloid"], x) == pytest.approx((1 + x @ x) ** -2)


def test_curvature_affine_consistency():
    psi = CAT["aniso-quad"]
    A = np.array([[1.5, 0.4], [0.2, 0.9]])
    comp = precompose_affine(psi, A)
    X = np.random.default_rng(0).normal(size=(10, 2))
    lhs = comp.hessian_det(X)
    rhs = np.linalg.det(A) ** 2 * psi.hessian_det(X @ A.T)
    assert np.allclose(lhs, rhs, rtol=1e-6)


def test_rolling_examples():
    assert rolling_function(CAT["parabola"], 0.0) == pytest.approx(1.0, rel=1e-5)
    assert rolling_function(CAT["x^2"], 0.0) == pytest.approx(0.5, rel=1e-5)
    assert rolling_function(CAT["max(x^2,-x)"], -1.0) == 0.0
    # balls touching the parabola at x are centred on the axis: radius sqrt(1 + x^2)
    assert rolling_function(CAT["parabola"], 3.0) == pytest.approx(math.sqrt(10), rel=1e-5)
    assert rolling_function(CAT["paraboloid"], [1.0, 0.5]) == pytest.approx(1.5, rel=1e-5)


def test_rolling_below_curvature_bound():
    for key in ("parabola", "x^2/2+x^4/4", "aniso-quad"):
        psi = CAT[key]
        X = np.random.default_rng(1).uniform(-2, 2, size=(15, psi.dim))
        r = rolling_radii(psi, X)
        G = psi.gradient(X)
        n = psi.dim
        bound = (1 + np.sum(G * G, -1)) ** ((n + 2) / (2 * n)) / psi.hessian_det(X) ** (1 / n)
        assert np.all(r <= bound * (1 + 1e-5))


def test_rolling_weighted_integral():
    psi = CAT["parabola"]
    assert rolling_weighted_integral(psi, 0.0) == pytest.approx(gradient_weighted_integral(psi))
    res = rolling_weighted_integral(psi, 1 / 3, full_output=True)
    assert math.isfinite(res.value) and res.skipped_nodes == 0
    # r >= 1 on the parabola, so the weight r^{-alpha} only decreases the integral
    assert res.value <= gradient_weighted_integral(psi)
    assert rolling_weighted_integral(psi, 2 / 3) <= res.value
    with pytest.raises(DomainError):
        rolling_weighted_integral(psi, 1.0)


def test_rolling_weighted_kinked_reports_floor():
    res = rolling_weighted_integral(CAT["max(x^2,-x)"], 1 / 3, full_output=True)
    assert math.isfinite(res.value)
    assert res.floor_contribution >= 0.0
