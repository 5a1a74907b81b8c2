import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from floatlab.convexfn import (ConstructionError, ConvexFunction, Ellipse, NotCoerciveError, SymmetricPolygon,
                               catalog, fit_coercive_minorant, gauge_square_half, gradient_weighted_integral,
                               huber, integral_of_density, linear_1d, max_of, piecewise_1d, power_norm,
                               precompose_affine, quadratic_form, spot_check_convexity, spot_check_minorant,
                               spec_for, tail_bound, truncation_radius)
from floatlab.numerics import fd_gradient, fd_hessian

CAT = catalog()


def test_quadratic_identity():
    psi = quadratic_form([[1.0]])
    assert psi(2.0) == pytest.approx(4.0)


def test_unit_disk_gauge():
    psi = gauge_square_half(Ellipse(1.0, 1.0))
    x = np.array([0.3, -1.1])
    assert psi(x) == pytest.approx(0.5 * (0.09 + 1.21))
    assert np.allclose(psi.hessian(x), np.eye(2))


def test_max_of_branch():
    psi = max_of([quadratic_form([[1.0]]), linear_1d(-1.0)])
    assert psi(-0.5) == pytest.approx(0.5)
    assert psi.breakpoints == pytest.approx((-1.0, 0.0), abs=1e-12)


def test_construction_errors():
    with pytest.raises(ConstructionError):
        quadratic_form([[1.0, 2.0], [2.0, 1.0]])
    with pytest.raises(ConstructionError):
        power_norm(0.5)
    with pytest.raises(ConstructionError):
        piecewise_1d([0.0, 1.0, 2.0], [0.0, 1.0, 1.0], -1.0, 1.0)


def test_polygon_gauge_is_convex():
    sq = SymmetricPolygon(((1.0, 0.0), (0.0, 1.0), (-1.0, 0.0), (0.0, -1.0)))
    psi = gauge_square_half(sq)
    assert psi(np.array([0.5, 0.5])) == pytest.approx(0.5)
    assert spot_check_convexity(psi)


def test_minorant_parabola():
    g, b = fit_coercive_minorant(CAT["parabola"])
    assert g > 0 and b <= -g * g / 2 + 1e-9


def test_minorant_abs():
    g, b = fit_coercive_minorant(power_norm(1.0))
    assert 0 < g <= 1 and b <= 0


def test_not_coercive():
    psi = ConvexFunction(1, lambda X: np.log1p(X[..., 0] ** 2), name="log(1+x^2)")
    with pytest.raises(NotCoerciveError):
        fit_coercive_minorant(psi)


@pytest.mark.parametrize("key,exact", [("parabola", math.sqrt(2 * math.pi)), ("x^2", math.sqrt(math.pi)),
                                       ("paraboloid", 2 * math.pi)])
def test_density_integrals(key, exact):
    assert integral_of_density(CAT[key]) == pytest.approx(exact, abs=1e-6)


def test_gradient_weighted_lower_bound():
    psi = CAT["parabola"]
    assert gradient_weighted_integral(psi) >= integral_of_density(psi)
    assert math.isfinite(gradient_weighted_integral(CAT["huber"]))


def test_truncation_radius():
    psi = CAT["parabola"]
    assert truncation_radius(psi, 1e-10) <= 16
    assert truncation_radius(psi, 1e-3) < truncation_radius(psi, 1e-10)
    R = 20.0
    assert tail_bound(1, 1.0, 0.0, R) == pytest.approx(2 * math.exp(-R))


def test_spec_for_matches_dimension():
    spec = spec_for(CAT["paraboloid"], None)
    assert spec.dimension == 2 and spec.truncation_radius > 0


def test_affine_unimodular_preserves_density():
    psi = CAT["aniso-quad"]
    A = np.array([[2.0, 0.3], [0.0, 0.5]])
    val = integral_of_density(precompose_affine(psi, A, [0.2, -0.1]))
    assert val == pytest.approx(integral_of_density(psi), rel=2e-3)


def test_huber_values():
    psi = huber(1.0)
    assert psi(0.5) == pytest.approx(0.125)
    assert psi(3.0) == pytest.approx(2.5)


@pytest.mark.parametrize("key", sorted(CAT))
def test_catalog_convex_and_minorant(key):
    psi = CAT[key]
    assert spot_check_convexity(psi)
    assert spot_check_minorant(psi, radius=spec_for(psi, None).truncation_radius)


@pytest.mark.parametrize("key", [k for k in sorted(CAT) if CAT[k].meta.get("positive_hessian")])
def test_analytic_matches_fd(key):
    psi = CAT[key]
    X = np.random.default_rng(3).uniform(-2, 2, size=(50, psi.dim))
    G = psi.gradient(X)
    assert np.allclose(G, fd_gradient(psi.value, X), rtol=1e-5, atol=1e-6)
    H = psi.hessian(X)
    assert np.allclose(H, fd_hessian(psi.value, X), rtol=1e-5, atol=1e-4)
    assert np.allclose(H, np.swapaxes(H, -1, -2))
    assert np.all(np.linalg.eigvalsh(H) >= -1e-12)


@settings(max_examples=25, deadline=None)
@given(a=st.floats(0.2, 3), c=st.floats(-0.9, 0.9), d=st.floats(0.2, 3))
def test_random_quadratic_properties(a, c, d):
    b = c * math.sqrt(a * d)
    psi = quadratic_form([[a, b], [b, d]])
    assert spot_check_convexity(psi, m=100)
    det = a * d - b * b
    assert integral_of_density(psi) == pytest.approx(math.pi / math.sqrt(det), rel=1e-6)
