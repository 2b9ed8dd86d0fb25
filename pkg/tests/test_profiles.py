import numpy as np
from hypothesis import given, strategies as st
from numpy.testing import assert_allclose
from scipy import integrate

from wallcascade.profiles import STEP, TimeBump, flat_bump, mollifier_profile

from conftest import BETA_INTEGRAL


def test_step_endpoints_and_symmetry():
    assert STEP(0.0) == 0.0 and STEP(1.0) == 1.0
    assert_allclose(STEP(-3.0), 0.0)
    assert_allclose(STEP(5.0), 1.0)
    s = np.linspace(0, 1, 101)
    # the bump is symmetric about 1/2, so Theta(s) + Theta(1-s) = 1
    assert_allclose(STEP(s) + STEP(1 - s), 1.0, atol=1e-13)


@given(st.floats(0.0, 1.0), st.floats(0.0, 1.0))
def test_step_monotone(a, b):
    lo, hi = sorted((a, b))
    assert STEP(lo) <= STEP(hi) + 1e-15


def test_step_derivatives_match_differences():
    s = np.linspace(0.05, 0.95, 19)
    h = 1e-5
    assert_allclose(STEP.derivative(s), (STEP(s + h) - STEP(s - h)) / (2 * h), rtol=1e-7, atol=1e-9)
    assert_allclose(STEP.second_derivative(s), (STEP.derivative(s + h) - STEP.derivative(s - h)) / (2 * h),
                    rtol=1e-6, atol=1e-7)


def test_step_matches_running_integral():
    norm = integrate.quad(lambda t: flat_bump(t), 0, 1, epsabs=1e-15)[0]
    for s in (0.1, 0.37, 0.5, 0.81):
        ref = integrate.quad(lambda t: flat_bump(t), 0, s, epsabs=1e-15)[0] / norm
        assert_allclose(STEP(s), ref, atol=1e-13)


def test_sup_derivative():
    s = np.linspace(0, 1, 20001)
    assert_allclose(STEP.sup_derivative, STEP.derivative(s).max(), rtol=1e-8)


def test_time_bump_peak_and_integral():
    tb = TimeBump()
    assert_allclose(tb(0.5), 1.0, rtol=1e-15)
    assert tb(0.2) == 0.0 and tb(0.8) == 0.0
    t, w = tb.gauss_rule(64)
    assert_allclose(w @ tb(t), BETA_INTEGRAL, rtol=1e-13)
    # beta' integrates to zero over its support
    assert abs(w @ tb.derivative(t)) < 1e-12


def test_time_bump_rejects_bad_support():
    import pytest

    with pytest.raises(ValueError):
        TimeBump(1.0, (0.5, 0.4))
    with pytest.raises(ValueError):
        TimeBump(-1.0)


def test_mollifier_profile_support():
    assert mollifier_profile(1.0) == 0.0
    assert mollifier_profile(1.5) == 0.0
    assert mollifier_profile(0.0) > mollifier_profile(0.5) > 0.0
