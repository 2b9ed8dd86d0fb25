"""Coarse-graining by a compactly supported mollifier, and wall windows.

The convolution ``f_l(x) = int G_l(r) f(x + r) dr`` is replaced by a fixed
ball quadrature, so the *discrete* filter is itself a finite weighted sum of
translates.  It therefore commutes exactly with every derivative, and the
weak identities built on filtered fields hold to the accuracy of the outer
(space-time) quadrature alone.  The kernel weights are positive, centrally
symmetric and sum to one, so constants and affine fields pass through
unchanged.
"""

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .geometry import gauss_legendre, sphere_rule
from .profiles import STEP, mollifier_profile

# evaluation chunk, in stencil points
_CHUNK = 1 << 20


class MollifierKernel:
    """Radial mollifier ``G(r) ~ exp(-1/(1-|r|^2))`` with a stored ball rule.

    Parameters
    ----------
    radial_order : int
        Gauss-Legendre nodes in the radius (with the ``r^2`` volume factor).
    angular_order : int
        Order of the product sphere rule for directions.
    """

    def __init__(self, radial_order=6, angular_order=4):
        rho, wr = gauss_legendre(radial_order, 0.0, 1.0)
        dirs, wa = sphere_rule(angular_order)
        self.radial_order = int(radial_order)
        self.angular_order = int(angular_order)
        self.offsets = (rho[:, None, None] * dirs[None, :, :]).reshape(-1, 3)
        raw = (mollifier_profile(rho) * rho**2 * wr)[:, None] * wa[None, :]
        self.volume_integral = float(raw.sum())
        self.weights = (raw / self.volume_integral).reshape(-1)

    @property
    def size(self):
        return len(self.weights)

    def integral(self):
        """``int G dV`` under the stored rule (1 by construction)."""
        return float(self.weights.sum())

    def second_moment(self):
        """``int |r|^2 G dV``; the O(l^2) bias of the filter is ``l^2/6`` times this times ``Lap f``."""
        return float(np.sum(self.weights * np.sum(self.offsets**2, axis=-1)))


DEFAULT_KERNEL = MollifierKernel()


def mollify(fun, x, ell, kernel=DEFAULT_KERNEL, body=None):
    """Filtered values ``sum_m w_m fun(x + ell r_m)``.

    Parameters
    ----------
    fun : callable
        Maps points ``(N, 3)`` to values ``(N, ...)``.
    x : array_like, shape (..., 3)
    ell : float
        Filter scale.
    body : Body, optional
        When given, every stencil must stay in the flow domain
        (``d(x) >= ell``).

    Raises
    ------
    ValueError
        "mollification stencil exits Omega" if some ``d(x) < ell``.
    """
    if not ell > 0:
        raise ValueError("filter scale must be positive")
    x = np.asarray(x, dtype=float)
    lead = x.shape[:-1]
    pts = x.reshape(-1, 3)
    if body is not None:
        d = body.signed_distance(pts)
        if np.any(d < ell * (1.0 - 1e-12)):
            raise ValueError("mollification stencil exits Omega")
    offs = ell * kernel.offsets
    m = kernel.size
    per_chunk = max(1, _CHUNK // m)
    out = None
    for start in range(0, len(pts), per_chunk):
        block = pts[start : start + per_chunk]
        stencil = (block[:, None, :] + offs[None, :, :]).reshape(-1, 3)
        vals = np.asarray(fun(stencil))
        vals = vals.reshape((len(block), m) + vals.shape[1:])
        reduced = np.einsum("m,bm...->b...", kernel.weights, vals)
        if out is None:
            out = np.empty((len(pts),) + reduced.shape[1:])
        out[start : start + len(block)] = reduced
    return out.reshape(lead + out.shape[1:])


def advective_stress(field, ell, x, t, kernel=DEFAULT_KERNEL, check=True):
    """Filtered outer product ``T_l = (u (x) u)_l`` (filter of the product)."""

    def uu(y):
        u = field.velocity(y, t)
        return u[..., :, None] * u[..., None, :]

    return mollify(uu, x, ell, kernel, field.body if check else None)


@dataclass
class FilteredState:
    """Filtered quantities at a set of points (one time)."""

    velocity: np.ndarray
    pressure: np.ndarray
    stress: np.ndarray
    laplacian: np.ndarray
    forcing: np.ndarray


def filtered_state(field, ell, x, t, kernel=DEFAULT_KERNEL, check=True):
    """All filtered fields needed by the windowed budget in one stencil pass."""
    viscous = field.nu != 0.0
    forced = not field.forcing_is_zero

    def pack(y):
        u, p = field.velocity_pressure(y, t)
        cols = [u, p[..., None], (u[..., :, None] * u[..., None, :]).reshape(u.shape[:-1] + (9,))]
        if viscous:
            cols.append(field.velocity_laplacian(y, t))
        if forced:
            cols.append(field.forcing(y, t))
        return np.concatenate(cols, axis=-1)

    v = mollify(pack, x, ell, kernel, field.body if check else None)
    zeros = np.zeros(v.shape[:-1] + (3,))
    k = 13
    lap = zeros
    if viscous:
        lap, k = v[..., k : k + 3], k + 3
    forcing = v[..., k : k + 3] if forced else zeros
    return FilteredState(
        velocity=v[..., 0:3],
        pressure=v[..., 3],
        stress=v[..., 4:13].reshape(v.shape[:-1] + (3, 3)),
        laplacian=lap,
        forcing=forcing,
    )


class WindowProfile:
    """``theta_{h,l}(s) = Theta((s - h)/l)``: 0 up to ``h``, 1 from ``h + l``."""

    def __init__(self, h, ell, step=STEP):
        if not (h >= 0 and ell > 0):
            raise ValueError("window needs h >= 0 and l > 0")
        self.h = float(h)
        self.ell = float(ell)
        self.step = step

    @cached_property
    def derivative_bound(self):
        """``C / l`` with ``C = sup |Theta'|``."""
        return self.step.sup_derivative / self.ell

    def value(self, d):
        return self.step((np.asarray(d, dtype=float) - self.h) / self.ell)

    def derivative(self, d):
        return self.step.derivative((np.asarray(d, dtype=float) - self.h) / self.ell) / self.ell

    def second_derivative(self, d):
        return self.step.second_derivative((np.asarray(d, dtype=float) - self.h) / self.ell) / self.ell**2


def window_value(profile, body, x):
    """``eta_{h,l}(x) = theta_{h,l}(d(x))``."""
    return profile.value(body.distance(x))


def window_gradient(profile, body, x):
    """``theta'_{h,l}(d(x)) n(pi(x))``; requires ``x`` inside the tube."""
    x = np.asarray(x, dtype=float)
    y = body.project(x)
    d = np.linalg.norm(x - y, axis=-1)
    return profile.derivative(d)[..., None] * body._normal_unchecked(y)
