import numpy as np
import pytest
from hypothesis import given, strategies as st
from numpy.testing import assert_allclose
from scipy.special import elliprg

from wallcascade.differences import gradient
from wallcascade.geometry import Ellipsoid, Sphere, gauss_legendre, make_body, sphere_rule

from conftest import shell_points


def test_gauss_legendre_interval():
    x, w = gauss_legendre(5, 1.0, 3.0)
    assert_allclose(w.sum(), 2.0)
    assert_allclose(w @ x**9, (3.0**10 - 1.0) / 10, rtol=1e-14)


def test_sphere_rule_is_exact_for_low_degree():
    dirs, w = sphere_rule(6)
    assert_allclose(w.sum(), 4 * np.pi, rtol=1e-14)
    assert_allclose(w @ dirs[:, 0] ** 2, 4 * np.pi / 3, rtol=1e-14)
    assert_allclose(w @ (dirs[:, 0] ** 2 * dirs[:, 1] ** 2), 4 * np.pi / 15, rtol=1e-13)
    # central symmetry
    assert abs(w @ dirs[:, 2] ** 3) < 1e-14


def test_sphere_area_and_divergence_theorem(sphere):
    q = sphere.surface_quadrature(12)
    assert_allclose(q.weights.sum(), 4 * np.pi, rtol=1e-12)
    # div x = 3, so int x . n dS = 3 |B| = 4 pi
    assert_allclose(q.integrate(np.sum(q.nodes * q.normals, axis=-1)), 4 * np.pi, rtol=1e-10)


def test_ellipsoid_area_against_carlson_form(ellipsoid):
    a, b, c = ellipsoid.semi_axes
    exact = 4 * np.pi * a * b * c * elliprg(1 / a**2, 1 / b**2, 1 / c**2)
    q = ellipsoid.surface_quadrature(40)
    assert_allclose(q.weights.sum(), exact, rtol=1e-10)
    assert_allclose(q.integrate(np.sum(q.nodes * q.normals, axis=-1)), 4 * np.pi * a * b * c, rtol=1e-10)


@pytest.mark.parametrize("body", [Sphere(), Ellipsoid((1.5, 1.0, 0.8))], ids=["sphere", "ellipsoid"])
def test_shell_volume_steiner(body):
    # volume of {0 < d < a} is A a + (int H) a^2 + (int K) a^3 / 3, int K = 4 pi
    a = 0.2
    q = body.tube_quadrature(a, 30, 6)
    s = body.surface_quadrature(30)
    H, K = body.curvatures(s.nodes)
    assert_allclose(s.integrate(K), 4 * np.pi, rtol=1e-9)
    expected = s.weights.sum() * a + s.integrate(H) * a**2 + 4 * np.pi * a**3 / 3
    assert_allclose(q.weights.sum(), expected, rtol=1e-9)


def test_sphere_shell_volume_exact(sphere):
    q = sphere.shell_quadrature(0.1, 0.2, 8, 4)
    assert_allclose(q.weights.sum(), 4 * np.pi / 3 * (1.3**3 - 1.1**3), rtol=1e-14)


@pytest.mark.parametrize("body", [Sphere(), Ellipsoid((1.5, 1.0, 0.8))], ids=["sphere", "ellipsoid"])
def test_projection_idempotent_and_distance_gradient(body):
    rng = np.random.default_rng(1)
    x = shell_points(body, rng, 50, 0.01, 0.9 * body.tubular_radius)
    y = body.project(x)
    assert_allclose(body.project(y), y, atol=1e-12)
    assert_allclose(body.distance(y), 0.0, atol=1e-12)
    g = gradient(body.signed_distance, x, 1e-4)
    assert_allclose(g, body.normal(y), atol=1e-8)
    # the foot point is the nearest: x - y is along the normal
    assert_allclose(x - y, body.distance(x)[:, None] * body.normal(y), atol=1e-10)


@given(st.floats(0.0, np.pi), st.floats(0.0, 2 * np.pi), st.floats(0.0, 0.3))
def test_ellipsoid_projection_property(theta, phi, d):
    body = Ellipsoid((1.5, 1.0, 0.8))
    a, b, c = body.semi_axes
    s = np.array([a * np.sin(theta) * np.cos(phi), b * np.sin(theta) * np.sin(phi), c * np.cos(theta)])
    x = s + d * body.normal(s[None])[0]
    assert_allclose(body.distance(x[None])[0], d, atol=1e-10)
    assert_allclose(body.project(x[None])[0], s, atol=1e-9)


def test_sphere_curvatures_and_area_factor(sphere):
    s = sphere.surface_quadrature(4).nodes
    H, K = sphere.curvatures(s)
    assert_allclose(H, 1.0)
    assert_allclose(K, 1.0)
    assert_allclose(sphere.area_factor(s, 0.3), 1.3**2)


def test_geometry_errors(sphere):
    with pytest.raises(ValueError, match="point inside body"):
        sphere.distance(np.array([[0.1, 0.0, 0.0]]))
    with pytest.raises(ValueError, match="outside tubular neighborhood"):
        sphere.project(np.array([[3.0, 0.0, 0.0]]))
    with pytest.raises(ValueError, match="point not on surface"):
        sphere.normal(np.array([[1.2, 0.0, 0.0]]))
    with pytest.raises(ValueError, match="band exits tubular neighborhood"):
        sphere.tube_quadrature(0.6, 4)
    with pytest.raises(ValueError, match="tubular radius"):
        Ellipsoid((3.0, 1.0, 1.0), tubular_radius=0.5)


def test_make_body():
    assert isinstance(make_body({"kind": "sphere", "radius": 2.0}), Sphere)
    e = make_body({"kind": "ellipsoid", "semi_axes": [1.2, 1.0, 1.0]})
    assert isinstance(e, Ellipsoid)
    with pytest.raises(ValueError, match="unsupported surface kind"):
        make_body({"kind": "torus"})
