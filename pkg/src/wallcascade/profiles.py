"""Smooth one-dimensional profiles shared by the window, time and mollifier code.

All profiles are built from the flat bump ``exp(-1/(s(1-s)))`` on (0, 1),
which is C-infinity with every derivative vanishing at both endpoints.
The smoothstep is the normalized running integral of that bump; it has no
closed form, so it is carried as a Chebyshev series of the bump integrated
term by term (accurate to ~1e-14).
"""

from functools import cached_property

import numpy as np
from numpy.polynomial import chebyshev as cheb

_CHEB_DEGREE = 160


def flat_bump(s):
    """``exp(-1/(s(1-s)))`` on (0, 1), zero elsewhere."""
    s = np.asarray(s, dtype=float)
    inside = (s > 0.0) & (s < 1.0)
    q = np.where(inside, s * (1.0 - s), 1.0)
    return np.where(inside, np.exp(-1.0 / q), 0.0)


def _bump_log_derivative(s):
    # d/ds log(bump) = (1 - 2s) / (s(1-s))^2 on (0, 1)
    s = np.asarray(s, dtype=float)
    inside = (s > 0.0) & (s < 1.0)
    q = np.where(inside, s * (1.0 - s), 1.0)
    return np.where(inside, (1.0 - 2.0 * s) / q**2, 0.0)


class SmoothStep:
    """C-infinity nondecreasing step: 0 for s <= 0, 1 for s >= 1.

    ``value(s) = N * int_0^s exp(-1/(t(1-t))) dt`` with ``N`` fixing
    ``value(1) = 1``.
    """

    def __init__(self, degree=_CHEB_DEGREE):
        series = cheb.Chebyshev.interpolate(flat_bump, degree, domain=[0.0, 1.0])
        integral = series.integ(lbnd=0.0)
        self.normalization = 1.0 / float(integral(1.0))
        self._integral = integral * self.normalization

    def value(self, s):
        s = np.asarray(s, dtype=float)
        mid = np.clip(s, 0.0, 1.0)
        out = self._integral(mid)
        out = np.where(s <= 0.0, 0.0, out)
        return np.where(s >= 1.0, 1.0, out)

    __call__ = value

    def derivative(self, s):
        return self.normalization * flat_bump(s)

    def second_derivative(self, s):
        return self.derivative(s) * _bump_log_derivative(s)

    @cached_property
    def sup_derivative(self):
        """``C = sup |value'|``; the bump peaks at s = 1/2."""
        return float(self.derivative(0.5))

    def antiderivative_series(self):
        """Chebyshev series of ``value`` on [0, 1] (for exact products/integrals)."""
        return self._integral


STEP = SmoothStep()


class TimeBump:
    """Time profile ``beta(t)``: a flat bump on ``[lo*T, hi*T]`` with peak value 1."""

    def __init__(self, T=1.0, support=(0.2, 0.8)):
        lo, hi = support
        if not 0.0 <= lo < hi <= 1.0:
            raise ValueError("time support must satisfy 0 <= lo < hi <= 1")
        if T <= 0:
            raise ValueError("time horizon must be positive")
        self.T = float(T)
        self.support = (float(lo), float(hi))
        self.t0 = lo * T
        self.t1 = hi * T

    @property
    def width(self):
        return self.t1 - self.t0

    def _s(self, t):
        return (np.asarray(t, dtype=float) - self.t0) / self.width

    def value(self, t):
        # exp(4) makes the peak (s = 1/2) exactly 1
        return np.exp(4.0) * flat_bump(self._s(t))

    __call__ = value

    def derivative(self, t):
        s = self._s(t)
        return self.value(t) * _bump_log_derivative(s) / self.width

    def gauss_rule(self, n):
        """Gauss-Legendre nodes and weights over the bump support."""
        x, w = np.polynomial.legendre.leggauss(int(n))
        half = 0.5 * self.width
        return self.t0 + half * (x + 1.0), half * w


def mollifier_profile(r):
    """Unnormalized radial mollifier ``exp(-1/(1-r^2))`` on the unit ball."""
    r = np.asarray(r, dtype=float)
    inside = r < 1.0
    q = np.where(inside, 1.0 - r * r, 1.0)
    return np.where(inside, np.exp(-1.0 / q), 0.0)
