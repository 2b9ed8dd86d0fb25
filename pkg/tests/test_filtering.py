import numpy as np
import pytest
from hypothesis import given, strategies as st
from numpy.testing import assert_allclose
from scipy import integrate

from wallcascade.differences import gradient
from wallcascade.filtering import (
    DEFAULT_KERNEL,
    MollifierKernel,
    WindowProfile,
    advective_stress,
    filtered_state,
    mollify,
    window_gradient,
    window_value,
)
from wallcascade.profiles import STEP, mollifier_profile

from conftest import shell_points

vec = st.floats(-2.0, 2.0)


def test_kernel_normalized_and_symmetric():
    k = MollifierKernel(8, 6)
    assert_allclose(k.integral(), 1.0, rtol=1e-15)
    assert_allclose(k.weights @ k.offsets, 0.0, atol=1e-15)
    assert np.all(k.weights > 0)
    assert np.all(np.linalg.norm(k.offsets, axis=-1) < 1)


def test_kernel_second_moment_against_radial_quadrature():
    # int |r|^2 G / int G with G radial, in spherical shells
    num = integrate.quad(lambda r: r**4 * mollifier_profile(r), 0, 1, epsabs=1e-15)[0]
    den = integrate.quad(lambda r: r**2 * mollifier_profile(r), 0, 1, epsabs=1e-15)[0]
    assert_allclose(MollifierKernel(64, 2).second_moment(), num / den, rtol=1e-10)
    # the default 6-node radial rule defines the filter; its moment is within 1%
    assert_allclose(DEFAULT_KERNEL.second_moment(), num / den, rtol=1e-2)


@given(vec, vec, vec, vec, st.floats(0.01, 0.5))
def test_affine_fields_pass_through(a, b, c, d, ell):
    x = np.array([[0.3, -0.2, 0.1], [1.0, 2.0, -1.0]])
    f = lambda y: d + y @ np.array([a, b, c])
    assert_allclose(mollify(f, x, ell), f(x), atol=1e-12)


def test_quadratic_bias_is_second_moment():
    ell = 0.1
    x = np.array([[0.4, 0.1, -0.3]])
    f = lambda y: np.sum(y**2, axis=-1)
    # Lap |x|^2 = 6, bias = l^2 m2 Lap f / 6
    expected = f(x) + ell**2 * DEFAULT_KERNEL.second_moment()
    assert_allclose(mollify(f, x, ell), expected, rtol=1e-14)


def test_discrete_filter_commutes_with_derivatives(potential, sphere):
    x = shell_points(sphere, np.random.default_rng(0), 10, 0.2, 0.4)
    ell = 0.05
    u = lambda y: potential.velocity(y, 0.0)
    G = lambda y: potential.velocity_gradient(y, 0.0)
    lhs = gradient(lambda y: mollify(u, y, ell), x, 1e-4)
    assert_allclose(lhs, mollify(G, x, ell), atol=1e-9)


def test_filtered_state_consistent_with_separate_filters(stokes, sphere):
    x = shell_points(sphere, np.random.default_rng(1), 8, 0.1, 0.3)
    ell = 0.05
    fs = filtered_state(stokes, ell, x, 0.5)
    assert_allclose(fs.velocity, mollify(lambda y: stokes.velocity(y, 0.5), x, ell), rtol=1e-14)
    assert_allclose(fs.stress, advective_stress(stokes, ell, x, 0.5), rtol=1e-13, atol=1e-16)
    assert_allclose(fs.laplacian, mollify(lambda y: stokes.velocity_laplacian(y, 0.5), x, ell), rtol=1e-13)


def test_stencil_must_stay_in_flow(potential, sphere):
    x = np.array([[1.02, 0.0, 0.0]])
    with pytest.raises(ValueError, match="mollification stencil exits Omega"):
        mollify(lambda y: potential.velocity(y, 0.0), x, 0.05, body=sphere)
    with pytest.raises(ValueError):
        mollify(lambda y: y, x, 0.0)


def test_window_profile(sphere):
    w = WindowProfile(0.1, 0.05)
    assert w.value(0.09) == 0.0 and w.value(0.16) == 1.0
    assert_allclose(w.value(0.125), 0.5, atol=1e-14)
    assert_allclose(w.derivative_bound, STEP.sup_derivative / 0.05)
    d = np.linspace(0.1, 0.15, 11)
    assert_allclose(w.derivative(d), (w.value(d + 1e-7) - w.value(d - 1e-7)) / 2e-7, rtol=1e-6, atol=1e-6)
    x = np.array([[0.0, 1.125, 0.0]])
    assert_allclose(window_value(w, sphere, x), 0.5, atol=1e-14)
    assert_allclose(window_gradient(w, sphere, x), [[0.0, w.derivative(0.125), 0.0]], rtol=1e-14)
    with pytest.raises(ValueError):
        WindowProfile(0.1, 0.0)
