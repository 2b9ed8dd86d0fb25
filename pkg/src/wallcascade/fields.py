"""Flow fields ``(u, p, nu, g)`` on the exterior of a body.

Every field is an exact solution of the forced Navier-Stokes system

    d_t u + div(u (x) u + p I) - nu Lap u = g

where the forcing ``g`` is *defined* as the residual of the left-hand side.
For the potential sphere ``g = 0`` (steady Euler), for the Stokes sphere
``g = (u . grad) u`` (the neglected inertia), and for the boundary-layer
family ``g`` is whatever the damping profile leaves behind.  Carrying ``g``
through the weak identities makes them exact without a flow solver.

Fields are vectorized: points have shape ``(..., 3)`` and ``t`` is a scalar
or broadcasts against the leading point axes.  The velocity gradient is
stored as ``G[..., i, j] = d_j u_i``.
"""

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import sympy
from numpy.polynomial import chebyshev as cheb
from scipy.interpolate import RegularGridInterpolator

from . import differences
from .errors import DataCoverageError, DataError
from .geometry import Sphere
from .profiles import STEP

WALL_RTOL = 1e-8


@dataclass(frozen=True)
class VelocityGradient:
    tensor: np.ndarray

    @property
    def strain(self):
        return 0.5 * (self.tensor + np.swapaxes(self.tensor, -1, -2))

    @property
    def vorticity(self):
        G = self.tensor
        # omega_i = eps_ijk d_j u_k
        return np.stack(
            [G[..., 2, 1] - G[..., 1, 2], G[..., 0, 2] - G[..., 2, 0], G[..., 1, 0] - G[..., 0, 1]],
            axis=-1,
        )

    @property
    def divergence(self):
        return np.trace(self.tensor, axis1=-2, axis2=-1)


class FlowState:
    """Base field; subclasses override the analytic derivatives they know.

    Attributes
    ----------
    nu : float
        Kinematic viscosity (0 for Euler fields).
    T : float
        Time horizon.
    steady : bool
        True when no quantity depends on ``t``; budgets then evaluate space
        integrals once.
    residual_kind : str
        Which momentum residual vanishes identically: ``"euler"``,
        ``"stokes"``, ``"navier_stokes"`` or ``"none"``.
    no_slip : bool
        Whether ``u = 0`` on the wall (otherwise only ``u . n = 0``).
    """

    nu = 0.0
    T = 1.0
    steady = True
    residual_kind = "none"
    no_slip = False
    body = None
    ident = "field"
    length_scale = 1.0
    forcing_is_zero = False

    @property
    def fd_step(self):
        return 1e-4 * self.length_scale

    def velocity(self, x, t):
        raise NotImplementedError

    def pressure(self, x, t):
        raise NotImplementedError

    def velocity_pressure(self, x, t):
        return self.velocity(x, t), self.pressure(x, t)

    def velocity_gradient(self, x, t):
        return differences.gradient(lambda y: self.velocity(y, t), x, self.fd_step)

    def velocity_laplacian(self, x, t):
        return differences.laplacian(lambda y: self.velocity(y, t), x, 1e2 * self.fd_step)

    def pressure_gradient(self, x, t):
        return differences.gradient(lambda y: self.pressure(y, t), x, self.fd_step)

    def velocity_dt(self, x, t):
        x = np.asarray(x, dtype=float)
        if self.steady:
            return np.zeros(x.shape)
        return differences.derivative(lambda s: self.velocity(x, s), t, 1e-4 * self.T)

    def convective_flux_divergence(self, x, t):
        """``div(u (x) u) = (grad u) u + (div u) u``."""
        u = self.velocity(x, t)
        G = self.velocity_gradient(x, t)
        return np.einsum("...ij,...j->...i", G, u) + np.trace(G, axis1=-2, axis2=-1)[..., None] * u

    def forcing(self, x, t):
        """Residual ``g`` of the forced momentum equation."""
        if self.forcing_is_zero:
            return np.zeros(np.shape(x))
        g = self.convective_flux_divergence(x, t) + self.pressure_gradient(x, t)
        g = g + self.velocity_dt(x, t)
        if self.nu != 0.0:
            g = g - self.nu * self.velocity_laplacian(x, t)
        return g

    def wall_pressure(self, s, t):
        return self.pressure(s, t)

    def limit_state(self):
        """Designated inviscid-limit field (itself for Euler fields)."""
        return self


# --------------------------------------------------------------------------
# axisymmetric closed forms: u = alpha(r) e + beta(r) (e . x) x


class AxisymmetricField(FlowState):
    """Fields of the form ``u = alpha(r) e + beta(r) z x`` with ``z = e . x``."""

    def __init__(self, U=1.0, radius=1.0, direction=(1.0, 0.0, 0.0), T=1.0, p_inf=0.0):
        e = np.asarray(direction, dtype=float)
        self.e = e / np.linalg.norm(e)
        self.U = float(U)
        self.radius = float(radius)
        self.T = float(T)
        self.p_inf = float(p_inf)
        self.body = Sphere(self.radius)
        self.length_scale = self.radius

    def _profiles(self, r):
        raise NotImplementedError

    def _geom(self, x):
        x = np.asarray(x, dtype=float)
        r = np.linalg.norm(x, axis=-1)
        z = x @ self.e
        return x, r, z

    def velocity(self, x, t=None):
        x, r, z = self._geom(x)
        al, _, _, be, _, _ = self._profiles(r)
        return al[..., None] * self.e + (be * z)[..., None] * x

    def velocity_gradient(self, x, t=None):
        x, r, z = self._geom(x)
        al, a1, _, be, b1, _ = self._profiles(r)
        xh = x / r[..., None]
        G = a1[..., None, None] * self.e[:, None] * xh[..., None, :]
        G = G + (b1 * z)[..., None, None] * x[..., :, None] * xh[..., None, :]
        G = G + be[..., None, None] * (x[..., :, None] * self.e + z[..., None, None] * np.eye(3))
        return G

    def velocity_laplacian(self, x, t=None):
        x, r, z = self._geom(x)
        al, a1, a2, be, b1, b2 = self._profiles(r)
        return (a2 + 2 * a1 / r + 2 * be)[..., None] * self.e + (z * (b2 + 6 * b1 / r))[..., None] * x

    def velocity_dt(self, x, t=None):
        return np.zeros(np.shape(x))

    def divergence(self, x, t=None):
        x, r, z = self._geom(x)
        al, a1, _, be, b1, _ = self._profiles(r)
        return z * (a1 / r + r * b1 + 4 * be)


def _potential_profiles(U, a, r):
    a3 = a**3
    al = U * (1.0 + 0.5 * a3 / r**3)
    a1 = -1.5 * U * a3 / r**4
    a2 = 6.0 * U * a3 / r**5
    be = -1.5 * U * a3 / r**5
    b1 = 7.5 * U * a3 / r**6
    b2 = -45.0 * U * a3 / r**7
    return al, a1, a2, be, b1, b2


class PotentialSphere(AxisymmetricField):
    """Irrotational flow past a sphere, free stream ``U e``; Bernoulli pressure.

    Velocity potential ``U (r + a^3 / (2 r^2)) cos(theta)``.  A steady Euler
    solution with ``u . n = 0`` on the wall.
    """

    residual_kind = "euler"
    no_slip = False
    nu = 0.0
    forcing_is_zero = True

    def __init__(self, U=1.0, radius=1.0, direction=(1.0, 0.0, 0.0), T=1.0, p_inf=0.0):
        super().__init__(U, radius, direction, T, p_inf)
        self.ident = f"potential_sphere(U={self.U:g},a={self.radius:g})"

    def _profiles(self, r):
        return _potential_profiles(self.U, self.radius, r)

    def pressure(self, x, t=None):
        return self.velocity_pressure(x)[1]

    def velocity_pressure(self, x, t=None):
        u = self.velocity(x)
        return u, self.p_inf + 0.5 * self.U**2 - 0.5 * np.sum(u * u, axis=-1)

    def pressure_gradient(self, x, t=None):
        u = self.velocity(x)
        G = self.velocity_gradient(x)
        return -np.einsum("...ji,...j->...i", G, u)


class StokesSphere(AxisymmetricField):
    """Creeping flow past a sphere at rest in a uniform stream ``U e``.

    Satisfies ``grad p = nu Lap u`` and no-slip; the residual forcing is the
    neglected inertia ``(u . grad) u``.
    """

    residual_kind = "stokes"
    no_slip = True

    def __init__(self, U=1.0, radius=1.0, nu=1.0, direction=(1.0, 0.0, 0.0), T=1.0, p_inf=0.0):
        if nu <= 0:
            raise ValueError("Stokes flow needs nu > 0")
        super().__init__(U, radius, direction, T, p_inf)
        self.nu = float(nu)
        self.ident = f"stokes_sphere(U={self.U:g},a={self.radius:g},nu={self.nu:g})"

    def _profiles(self, r):
        U, a = self.U, self.radius
        a3 = a**3
        al = U * (1.0 - 0.75 * a / r - 0.25 * a3 / r**3)
        a1 = U * (0.75 * a / r**2 + 0.75 * a3 / r**4)
        a2 = U * (-1.5 * a / r**3 - 3.0 * a3 / r**5)
        be = U * (-0.75 * a / r**3 + 0.75 * a3 / r**5)
        b1 = U * (2.25 * a / r**4 - 3.75 * a3 / r**6)
        b2 = U * (-9.0 * a / r**5 + 22.5 * a3 / r**7)
        return al, a1, a2, be, b1, b2

    def pressure(self, x, t=None):
        x, r, z = self._geom(x)
        return self.p_inf - 1.5 * self.nu * self.radius * self.U * z / r**3

    def pressure_gradient(self, x, t=None):
        x, r, z = self._geom(x)
        c = -1.5 * self.nu * self.radius * self.U
        return c * (self.e / r[..., None] ** 3 - 3.0 * (z / r**5)[..., None] * x)


class BoundaryLayerFamily(AxisymmetricField):
    """Potential flow with its wall slip damped over a layer of thickness delta.

    ``u = u_pot - chi((r - a)/delta) (3U/2) P_t e + B(r) z x / r^2`` where
    ``P_t e = e - z x / r^2`` is the tangential part of ``e`` on the sphere
    of radius ``r``.  The factor ``(3U/2) P_t e`` is the wall slip of the
    potential flow transported along the normal, ``chi(s) = (1-s)(1-Theta(s))``
    vanishes for ``s >= 1`` and has ``chi(0) = 1``, ``chi'(0) = -1``.

    ``B = -3U I(r)/r^2`` with ``I = int_a^r rho chi d rho`` restores zero
    divergence; it is a purely radial (normal) correction of size
    ``O(delta)``.  With ``normal_correction=False`` it is dropped, so the
    normal velocity equals that of the outer flow exactly (the field is then
    not solenoidal and ``g`` absorbs the ``(div u) u`` term).

    The wall shear stress is ``(3 nu U / 2)(1/delta - 1/a) sin(theta)``,
    i.e. it scales like ``nu / delta(nu)``.
    """

    residual_kind = "none"
    no_slip = True

    def __init__(
        self,
        nu,
        exponent=0.5,
        U=1.0,
        radius=1.0,
        direction=(1.0, 0.0, 0.0),
        T=1.0,
        p_inf=0.0,
        delta_scale=1.0,
        normal_correction=True,
    ):
        if nu <= 0:
            raise ValueError("boundary-layer family needs nu > 0")
        if not 0 < exponent <= 1:
            raise ValueError("layer exponent must lie in (0, 1]")
        super().__init__(U, radius, direction, T, p_inf)
        self.nu = float(nu)
        self.exponent = float(exponent)
        self.delta = float(delta_scale) * self.nu**self.exponent
        self.normal_correction = bool(normal_correction)
        self.ident = (
            f"boundary_layer(U={self.U:g},a={self.radius:g},nu={self.nu:g},"
            f"delta=nu^{self.exponent:g})"
        )
        a, d = self.radius, self.delta
        lin = cheb.Chebyshev.identity(domain=[0.0, 1.0])
        one_minus_step = 1.0 - STEP.antiderivative_series()
        self._J = ((a + d * lin) * (1.0 - lin) * one_minus_step).integ(lbnd=0.0)
        self._J1 = float(self._J(1.0))

    def limit_state(self):
        return PotentialSphere(self.U, self.radius, self.e, self.T, self.p_inf)

    def _chi(self, s):
        inside = (s > 0) & (s < 1)
        th = STEP(s)
        d1 = STEP.derivative(s)
        d2 = STEP.second_derivative(s)
        chi = np.where(s >= 1, 0.0, (1 - s) * (1 - th))
        c1 = np.where(s <= 0, -1.0, np.where(inside, -(1 - th) - (1 - s) * d1, 0.0))
        c2 = np.where(inside, 2 * d1 - (1 - s) * d2, 0.0)
        return chi, c1, c2

    def _J_of(self, s):
        a, d = self.radius, self.delta
        sc = np.clip(s, 0.0, 1.0)
        inner = self._J(sc)
        below = a * s + 0.5 * (d - a) * s**2 - d * s**3 / 3.0
        return np.where(s <= 0, below, np.where(s >= 1, self._J1, inner))

    def _profiles(self, r):
        U, d = self.U, self.delta
        al, a1, a2, be, b1, b2 = _potential_profiles(U, self.radius, r)
        s = (r - self.radius) / d
        chi, c1, c2 = self._chi(s)
        A = 1.5 * U * chi
        A1 = 1.5 * U * c1 / d
        A2 = 1.5 * U * c2 / d**2
        C, C1, C2 = A, A1, A2
        if self.normal_correction:
            I0 = d * self._J_of(s)
            I1 = r * chi
            I2 = chi + r * c1 / d
            B = -3.0 * U * I0 / r**2
            B1 = -3.0 * U * (I1 / r**2 - 2 * I0 / r**3)
            B2 = -3.0 * U * (I2 / r**2 - 4 * I1 / r**3 + 6 * I0 / r**4)
            C, C1, C2 = A + B, A1 + B1, A2 + B2
        return (
            al - A,
            a1 - A1,
            a2 - A2,
            be + C / r**2,
            b1 + C1 / r**2 - 2 * C / r**3,
            b2 + C2 / r**2 - 4 * C1 / r**3 + 6 * C / r**4,
        )

    def _outer(self):
        return PotentialSphere(self.U, self.radius, self.e, self.T, self.p_inf)

    def pressure(self, x, t=None):
        return self._outer().pressure(x)

    def pressure_gradient(self, x, t=None):
        return self._outer().pressure_gradient(x)

    def wall_shear_magnitude(self, theta):
        """Closed-form ``|tau_w|`` at polar angle ``theta`` from the stream axis."""
        return 1.5 * self.nu * self.U * abs(1.0 / self.delta - 1.0 / self.radius) * np.sin(theta)


class UniformField(FlowState):
    """Constant velocity ``V`` and pressure ``p``; no body unless one is given."""

    residual_kind = "navier_stokes"
    forcing_is_zero = True

    def __init__(self, V=(0.0, 0.0, 0.0), p=0.0, nu=0.0, T=1.0, body=None):
        self.V = np.asarray(V, dtype=float)
        self.p = float(p)
        self.nu = float(nu)
        self.T = float(T)
        self.body = body
        self.no_slip = not np.any(self.V)
        self.ident = f"uniform(V={tuple(self.V.tolist())},p={self.p:g})"

    def velocity(self, x, t=None):
        x = np.asarray(x, dtype=float)
        return np.broadcast_to(self.V, x.shape).copy()

    def pressure(self, x, t=None):
        return np.full(np.shape(x)[:-1], self.p)

    def velocity_gradient(self, x, t=None):
        return np.zeros(np.shape(x) + (3,))

    def velocity_laplacian(self, x, t=None):
        return np.zeros(np.shape(x))

    def pressure_gradient(self, x, t=None):
        return np.zeros(np.shape(x))


class PerturbedPressure(FlowState):
    """Wrap a field and add a pressure perturbation ``c . x`` (negative controls).

    The forcing is taken from the *unperturbed* field, so the result is
    deliberately inconsistent with the momentum equation.
    """

    def __init__(self, base, gradient=(1.0, 0.0, 0.0)):
        self.base = base
        self.c = np.asarray(gradient, dtype=float)
        for name in ("nu", "T", "steady", "no_slip", "body", "length_scale"):
            setattr(self, name, getattr(base, name))
        self.ident = f"{base.ident}+pressure_perturbation"

    def velocity(self, x, t=None):
        return self.base.velocity(x, t)

    def pressure(self, x, t=None):
        return self.base.pressure(x, t) + np.asarray(x, dtype=float) @ self.c

    def velocity_gradient(self, x, t=None):
        return self.base.velocity_gradient(x, t)

    def velocity_laplacian(self, x, t=None):
        return self.base.velocity_laplacian(x, t)

    def velocity_dt(self, x, t=None):
        return self.base.velocity_dt(x, t)

    def pressure_gradient(self, x, t=None):
        return self.base.pressure_gradient(x, t) + self.c

    def forcing(self, x, t):
        return self.base.forcing(x, t)


# --------------------------------------------------------------------------
# manufactured fields from closed-form expressions

_X, _Y, _Z, _T = sympy.symbols("x y z t", real=True)


class ManufacturedField(FlowState):
    """Field given by closed-form expressions in ``x, y, z, t``.

    Derivatives are formed symbolically once and compiled with
    ``sympy.lambdify``; the forcing follows from them exactly.
    """

    residual_kind = "none"

    def __init__(self, u, p, nu=0.0, T=1.0, body=None, no_slip=False, ident="manufactured"):
        coords = (_X, _Y, _Z)
        ue = [sympy.sympify(c, locals={"x": _X, "y": _Y, "z": _Z, "t": _T}) for c in u]
        pe = sympy.sympify(p, locals={"x": _X, "y": _Y, "z": _Z, "t": _T})
        if len(ue) != 3:
            raise ValueError("velocity needs three components")
        self.nu = float(nu)
        self.T = float(T)
        self.body = body
        self.no_slip = bool(no_slip)
        self.ident = ident
        self.steady = not any(e.has(_T) for e in ue + [pe])
        args = (_X, _Y, _Z, _T)
        self._u = [sympy.lambdify(args, e, "numpy") for e in ue]
        self._p = sympy.lambdify(args, pe, "numpy")
        self._G = [[sympy.lambdify(args, sympy.diff(ui, xj), "numpy") for xj in coords] for ui in ue]
        self._lap = [
            sympy.lambdify(args, sum(sympy.diff(ui, xj, 2) for xj in coords), "numpy") for ui in ue
        ]
        self._dt = [sympy.lambdify(args, sympy.diff(ui, _T), "numpy") for ui in ue]
        self._gp = [sympy.lambdify(args, sympy.diff(pe, xj), "numpy") for xj in coords]
        self.expressions = {"u": [str(e) for e in ue], "p": str(pe)}

    @staticmethod
    def _call(fn, x, t):
        x = np.asarray(x, dtype=float)
        val = fn(x[..., 0], x[..., 1], x[..., 2], t)
        return np.broadcast_to(np.asarray(val, dtype=float), np.broadcast_shapes(x.shape[:-1], np.shape(t)))

    def _vec(self, fns, x, t):
        return np.stack([self._call(f, x, t) for f in fns], axis=-1)

    def velocity(self, x, t):
        return self._vec(self._u, x, t)

    def pressure(self, x, t):
        return np.array(self._call(self._p, x, t))

    def velocity_gradient(self, x, t):
        return np.stack([self._vec(row, x, t) for row in self._G], axis=-2)

    def velocity_laplacian(self, x, t):
        return self._vec(self._lap, x, t)

    def velocity_dt(self, x, t):
        return self._vec(self._dt, x, t)

    def pressure_gradient(self, x, t):
        return self._vec(self._gp, x, t)


# --------------------------------------------------------------------------
# sampled fields on a regular grid


def _second_difference(f, h, axis):
    """Three-point second derivative; one-sided second-order at the edges."""
    f = np.moveaxis(f, axis, 0)
    out = np.empty_like(f)
    out[1:-1] = (f[2:] - 2 * f[1:-1] + f[:-2]) / h**2
    out[0] = (2 * f[0] - 5 * f[1] + 4 * f[2] - f[3]) / h**2
    out[-1] = (2 * f[-1] - 5 * f[-2] + 4 * f[-3] - f[-4]) / h**2
    return np.moveaxis(out, 0, axis)


class SampledField(FlowState):
    """Velocity and pressure sampled on a regular grid at one or more times.

    Values are interpolated trilinearly in space and linearly in time;
    derivatives are second-order central differences on the grid,
    interpolated the same way.  Queries outside the grid box raise
    :class:`DataCoverageError`.

    Parameters
    ----------
    data : ndarray, shape (nt, nx, ny, nz, 4)
        Columns ``u1 u2 u3 p``.
    """

    residual_kind = "none"

    def __init__(self, origin, spacing, data, times=(0.0,), nu=0.0, T=None, body=None,
                 no_slip=None, ident="sampled", wall_rtol=1e-3):
        data = np.asarray(data, dtype=float)
        if data.ndim != 5 or data.shape[-1] != 4:
            raise DataError("sampled data must have shape (nt, nx, ny, nz, 4)")
        if min(data.shape[1:4]) < 4:
            raise DataError("sampled grid needs at least 4 nodes per axis")
        if not np.all(np.isfinite(data)):
            raise DataError("sampled data contains non-finite values")
        self.origin = np.asarray(origin, dtype=float)
        self.spacing = np.asarray(spacing, dtype=float)
        if np.any(self.spacing <= 0):
            raise DataError("grid spacing must be positive")
        self.times = np.asarray(times, dtype=float)
        if len(self.times) != data.shape[0]:
            raise DataError("number of time stamps does not match data blocks")
        if len(self.times) > 1 and np.any(np.diff(self.times) <= 0):
            raise DataError("time stamps must increase")
        self.data = data
        self.nu = float(nu)
        self.T = float(T) if T is not None else (float(self.times[-1]) if self.times[-1] > 0 else 1.0)
        self.body = body
        self.no_slip = bool(no_slip) if no_slip is not None else self.nu > 0
        self.ident = ident
        self.steady = len(self.times) == 1
        self.wall_rtol = float(wall_rtol)
        self.axes = [self.origin[k] + self.spacing[k] * np.arange(data.shape[k + 1]) for k in range(3)]
        self.length_scale = float(np.max(self.spacing))

    @property
    def upper(self):
        return np.array([ax[-1] for ax in self.axes])

    def _check(self, x, t):
        x = np.asarray(x, dtype=float)
        tol = 1e-12 * (1.0 + np.abs(self.upper))
        if np.any(x < self.origin - tol) or np.any(x > self.upper + tol):
            raise DataCoverageError("out of data coverage")
        if not self.steady:
            tt = np.asarray(t, dtype=float)
            if np.any(tt < self.times[0]) or np.any(tt > self.times[-1]):
                raise DataCoverageError("out of data coverage")
        return x

    def _interpolator(self, values):
        if self.steady:
            return RegularGridInterpolator(self.axes, values[0], bounds_error=False, fill_value=None)
        return RegularGridInterpolator([self.times] + self.axes, values, bounds_error=False, fill_value=None)

    def _interp(self, interp, x, t):
        x = self._check(x, t)
        x = np.clip(x, self.origin, self.upper)
        if self.steady:
            return interp(x)
        tt = np.broadcast_to(np.asarray(t, dtype=float), x.shape[:-1])
        return interp(np.concatenate([tt[..., None], x], axis=-1))

    @cached_property
    def _state_interp(self):
        return self._interpolator(self.data)

    @cached_property
    def _derivative_interp(self):
        u = self.data[..., :3]
        p = self.data[..., 3]
        h = self.spacing
        G = np.stack([np.gradient(u, h[j], axis=j + 1, edge_order=2) for j in range(3)], axis=-1)
        lap = sum(_second_difference(u, h[j], j + 1) for j in range(3))
        gp = np.stack([np.gradient(p, h[j], axis=j + 1, edge_order=2) for j in range(3)], axis=-1)
        if self.steady:
            dt = np.zeros_like(u)
        else:
            dt = np.gradient(u, self.times, axis=0, edge_order=2 if len(self.times) > 2 else 1)
        packed = np.concatenate([G.reshape(G.shape[:-2] + (9,)), lap, gp, dt], axis=-1)
        return self._interpolator(packed)

    def _derivs(self, x, t):
        out = self._interp(self._derivative_interp, x, t)
        return out[..., :9].reshape(out.shape[:-1] + (3, 3)), out[..., 9:12], out[..., 12:15], out[..., 15:18]

    def velocity(self, x, t=None):
        return self._interp(self._state_interp, x, t)[..., :3]

    def pressure(self, x, t=None):
        return self._interp(self._state_interp, x, t)[..., 3]

    def velocity_gradient(self, x, t=None):
        return self._derivs(x, t)[0]

    def velocity_laplacian(self, x, t=None):
        return self._derivs(x, t)[1]

    def pressure_gradient(self, x, t=None):
        return self._derivs(x, t)[2]

    def velocity_dt(self, x, t=None):
        return self._derivs(x, t)[3]

    def wall_pressure(self, s, t=None):
        """Quadratic extrapolation from ``s + k H n``, ``k = 1, 2, 3``.

        ``H`` is the largest grid spacing; the stencil is recorded in
        :attr:`wall_pressure_stencil`.
        """
        if self.body is None:
            raise DataError("wall pressure of a sampled field needs a body")
        s = np.asarray(s, dtype=float)
        n = self.body._normal_unchecked(s)
        H = float(np.max(self.spacing))
        try:
            p = [self.pressure(s + k * H * n, t) for k in (1, 2, 3)]
        except DataCoverageError as exc:
            raise DataCoverageError("insufficient near-wall samples for wall pressure") from exc
        return 3.0 * p[0] - 3.0 * p[1] + p[2]

    wall_pressure_stencil = {"offsets": (1, 2, 3), "weights": (3.0, -3.0, 1.0)}


def sample_field(field, origin, spacing, dims, times=(0.0,)):
    """Evaluate ``field`` on a grid; returns ``(nt, nx, ny, nz, 4)`` data."""
    axes = [origin[k] + spacing[k] * np.arange(dims[k]) for k in range(3)]
    X = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
    blocks = []
    for t in times:
        u = field.velocity(X, t)
        p = field.pressure(X, t)
        blocks.append(np.concatenate([u, p[..., None]], axis=-1))
    return np.stack(blocks)


def write_snapshot(path, data, origin, spacing, times=(0.0,), nu=0.0, T=None):
    """Write sampled data in the text snapshot format.

    Header of ``key = value`` lines, a blank line, then one ``u1 u2 u3 p``
    record per node with x varying fastest, one block per time stamp.
    """
    data = np.asarray(data, dtype=float)
    nt, nx, ny, nz, _ = data.shape
    lines = [
        f"origin = {' '.join(repr(float(v)) for v in origin)}",
        f"spacing = {' '.join(repr(float(v)) for v in spacing)}",
        f"dims = {nx} {ny} {nz}",
        f"times = {' '.join(repr(float(v)) for v in times)}",
        f"nu = {float(nu)!r}",
    ]
    if T is not None:
        lines.append(f"T = {float(T)!r}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n\n")
        for k in range(nt):
            # (nx, ny, nz, 4) -> rows with x fastest: iterate z, y, x
            block = np.transpose(data[k], (2, 1, 0, 3)).reshape(-1, 4)
            np.savetxt(fh, block, fmt="%.17g")


def read_snapshot(path, body=None, ident=None):
    """Read a snapshot file into a :class:`SampledField`."""
    header = {}
    try:
        with open(path) as fh:
            for line in fh:
                if not line.strip():
                    break
                key, sep, value = line.partition("=")
                if not sep:
                    raise DataError(f"malformed header line: {line.strip()!r}")
                header[key.strip()] = value.split()
            records = np.loadtxt(fh, ndmin=2)
    except OSError as exc:
        raise DataError(f"cannot read snapshot: {exc}") from exc
    except ValueError as exc:
        raise DataError(f"malformed snapshot records: {exc}") from exc
    try:
        origin = [float(v) for v in header["origin"]]
        spacing = [float(v) for v in header["spacing"]]
        dims = [int(v) for v in header["dims"]]
        times = [float(v) for v in header.get("times", ["0"])]
        nu = float(header.get("nu", ["0"])[0])
        T = float(header["T"][0]) if "T" in header else None
    except (KeyError, ValueError) as exc:
        raise DataError(f"incomplete snapshot header: {exc}") from exc
    if len(origin) != 3 or len(spacing) != 3 or len(dims) != 3:
        raise DataError("origin, spacing and dims need three entries")
    nx, ny, nz = dims
    expected = len(times) * nx * ny * nz
    if records.shape != (expected, 4):
        raise DataError(f"expected {expected} records of 4 columns, found {records.shape}")
    data = records.reshape(len(times), nz, ny, nx, 4).transpose(0, 3, 2, 1, 4)
    return SampledField(origin, spacing, data, times, nu=nu, T=T, body=body,
                        ident=ident or f"snapshot:{path}")


# --------------------------------------------------------------------------
# module-level operations


def eval_state(field, x, t):
    """Velocity and pressure at ``x``."""
    return field.velocity(x, t), field.pressure(x, t)


def grad_velocity(field, x, t):
    return VelocityGradient(field.velocity_gradient(x, t))


def forcing_residual(field, x, t):
    """``g = d_t u + div(u (x) u + p I) - nu Lap u``."""
    return field.forcing(x, t)


def wall_pressure(field, s, t):
    return field.wall_pressure(s, t)


def wall_shear_stress(field, s, t, rtol=None):
    """``nu du/dn`` at wall points, after checking the three equivalent forms.

    Under no-slip and zero divergence, ``nu du/dn = 2 nu S n = nu omega x n``.
    The check is skipped for inviscid fields, which carry no shear stress.
    """
    s = np.asarray(s, dtype=float)
    if field.nu == 0.0:
        return np.zeros(s.shape)
    rtol = WALL_RTOL if rtol is None else rtol
    rtol = max(rtol, getattr(field, "wall_rtol", 0.0))
    n = field.body._normal_unchecked(s)
    G = grad_velocity(field, s, t)
    gmax = np.max(np.abs(G.tensor)) + 1e-300
    u = field.velocity(s, t)
    if np.max(np.abs(u)) > rtol * gmax * field.length_scale:
        raise ValueError("no-slip violated; tau_w formulas inequivalent")
    dudn = np.einsum("...ij,...j->...i", G.tensor, n)
    via_strain = 2.0 * np.einsum("...ij,...j->...i", G.strain, n)
    via_vorticity = np.cross(G.vorticity, n)
    if max(np.max(np.abs(via_strain - dudn)), np.max(np.abs(via_vorticity - dudn))) > rtol * gmax:
        raise ValueError("no-slip violated; tau_w formulas inequivalent")
    return field.nu * dudn


@dataclass(frozen=True)
class DivergenceReport:
    max_abs: float
    rms: float
    count: int
    threshold: float

    @property
    def flagged(self):
        return self.max_abs > self.threshold


def check_divergence_free(field, points, times=None, threshold=1e-10):
    """Maximum and RMS of ``div u`` over sample points (and times)."""
    times = [0.5 * field.T] if times is None else list(times)
    vals = np.concatenate(
        [np.trace(field.velocity_gradient(points, t), axis1=-2, axis2=-1).ravel() for t in times]
    )
    return DivergenceReport(
        float(np.max(np.abs(vals))), float(np.sqrt(np.mean(vals**2))), int(vals.size), float(threshold)
    )
