"""Surface test sections and their extensions into the flow domain.

A section is separable, ``psi(s, t) = beta(t) psi_s(s)``, with ``beta`` a
flat bump compactly supported inside ``(0, T)``.  Tangential sections are
tangential projections of an ambient polynomial vector field,
``psi_s = P_t (b + M s + (c . s) K s)``; normal sections are ``sigma(s) n(s)``.

Extensions are built from the nearest-point projection ``pi`` and distance
``d``; the canonical ones multiply the section transported along normals by
``w(d) = exp(-d / (eps - d))``.  Spatial derivatives are central differences
with one Richardson level.  Near the wall the stencils reach slightly into
the body, where ``d`` and ``pi`` continue smoothly as the signed distance and
its projection; the derivatives at the wall are therefore the one-sided
limits from the flow side.
"""

from dataclasses import dataclass

import numpy as np

from . import differences
from .profiles import STEP, TimeBump

FD_RELATIVE_STEP = 1e-4


class SurfaceSection:
    """``psi(s, t) = beta(t) psi_s(s)`` on the body surface.

    Parameters
    ----------
    kind : {"tangential", "normal"}
    body : Body
    surface_fn : callable
        Maps surface points ``(N, 3)`` to ambient vectors ``(N, 3)``.
    time : TimeBump
    scalar_fn : callable, optional
        For normal sections, ``sigma`` with ``psi_s = sigma n``.
    """

    def __init__(self, kind, body, surface_fn, time=None, scalar_fn=None, ident="section"):
        if kind not in ("tangential", "normal"):
            raise ValueError("section kind must be 'tangential' or 'normal'")
        self.kind = kind
        self.body = body
        self._surface_fn = surface_fn
        self.time = time if time is not None else TimeBump()
        self._scalar_fn = scalar_fn
        self.ident = ident

    def surface_value(self, s):
        return self._surface_fn(np.asarray(s, dtype=float))

    def scalar(self, s):
        """Normal scalar ``sigma = psi_s . n`` (normal sections)."""
        s = np.asarray(s, dtype=float)
        if self._scalar_fn is not None:
            return self._scalar_fn(s)
        return np.sum(self.surface_value(s) * self.body._normal_unchecked(s), axis=-1)

    def value(self, s, t):
        return np.asarray(self.time(t))[..., None] * self.surface_value(s)

    def _compatible(self, other):
        if self.kind != other.kind or self.body is not other.body or self.time is not other.time:
            raise ValueError("sections must share kind, body and time profile")

    def __add__(self, other):
        self._compatible(other)
        sc = None
        if self.kind == "normal":
            sc = lambda s: self.scalar(s) + other.scalar(s)
        return SurfaceSection(self.kind, self.body, lambda s: self.surface_value(s) + other.surface_value(s),
                              self.time, sc, f"({self.ident})+({other.ident})")

    def scaled(self, a):
        a = float(a)
        sc = (lambda s: a * self.scalar(s)) if self.kind == "normal" else None
        return SurfaceSection(self.kind, self.body, lambda s: a * self.surface_value(s), self.time, sc,
                              f"{a:g}*({self.ident})")

    def seminorm(self, order=2, quadrature_order=12):
        """Measured ``max_{j+k <= order} sup |d_t^k D^j psi|`` over surface nodes.

        Spatial derivatives are of the normal-constant extension ``psi_s o pi``.
        """
        nodes = self.body.surface_quadrature(quadrature_order).nodes
        fn = lambda y: self.surface_value(self.body.signed_projection(y))
        step = 1e-3 * self.body.characteristic_length
        v, g, _ = differences.gradient_and_laplacian(fn, nodes, step)
        spatial = [np.max(np.linalg.norm(v, axis=-1)), np.max(np.linalg.norm(g, axis=(-2, -1)))]
        if order >= 2:
            H = differences.gradient(lambda y: differences.gradient(fn, y, step), nodes, step)
            spatial.append(np.max(np.linalg.norm(H.reshape(len(nodes), -1), axis=-1)))
        tt = np.linspace(self.time.t0, self.time.t1, 401)
        temporal = [np.max(np.abs(self.time(tt))), np.max(np.abs(self.time.derivative(tt)))]
        best = 0.0
        for j in range(min(order, len(spatial) - 1) + 1):
            for k in range(min(order - j, 1) + 1):
                best = max(best, spatial[j] * temporal[k])
        return float(best)


def tangential_section(body, b=(0.0, 0.0, 0.0), M=None, c=None, K=None, time=None, ident=None):
    """Tangential projection of ``F(x) = b + M x + (c . x) K x``."""
    b = np.asarray(b, dtype=float)
    M = np.zeros((3, 3)) if M is None else np.asarray(M, dtype=float)
    c = np.zeros(3) if c is None else np.asarray(c, dtype=float)
    K = np.zeros((3, 3)) if K is None else np.asarray(K, dtype=float)

    def ambient(s):
        return b + s @ M.T + (s @ c)[..., None] * (s @ K.T)

    def fn(s):
        F = ambient(s)
        n = body._normal_unchecked(s)
        return F - np.sum(F * n, axis=-1, keepdims=True) * n

    sec = SurfaceSection("tangential", body, fn, time, ident=ident or "tangential")
    sec.recipe = {"kind": "tangential", "b": b.tolist(), "M": M.tolist(), "c": c.tolist(), "K": K.tolist()}
    return sec


def normal_section(body, c0=0.0, b=(0.0, 0.0, 0.0), m=(0.0, 0.0, 0.0), Q=None, time=None, ident=None):
    """Normal section with ``sigma(s) = c0 + b . s + m . n(s) + s . Q s``."""
    b = np.asarray(b, dtype=float)
    m = np.asarray(m, dtype=float)
    Q = np.zeros((3, 3)) if Q is None else np.asarray(Q, dtype=float)

    def sigma(s):
        return c0 + s @ b + body._normal_unchecked(s) @ m + np.einsum("...i,ij,...j->...", s, Q, s)

    sec = normal_section_from_scalar(body, sigma, time, ident or "normal")
    sec.recipe = {"kind": "normal", "c0": float(c0), "b": b.tolist(), "m": m.tolist(), "Q": Q.tolist()}
    return sec


def normal_section_from_scalar(body, sigma, time=None, ident="normal"):
    def fn(s):
        return sigma(s)[..., None] * body._normal_unchecked(s)

    return SurfaceSection("normal", body, fn, time, scalar_fn=sigma, ident=ident)


def drag_sections(body, direction=(1.0, 0.0, 0.0), time=None):
    """Drag-aligned tangential (``P_t e``) and normal (``(n . e) n``) sections."""
    e = np.asarray(direction, dtype=float)
    e = e / np.linalg.norm(e)
    return (
        tangential_section(body, b=e, time=time, ident="drag_tangential"),
        normal_section(body, m=e, time=time, ident="drag_normal"),
    )


def lighthill_companion_section(section):
    """Normal section with ``sigma = (n x grad) . psi_s = n . curl(psi_s o pi)``.

    The curl of the normal-constant extension involves only tangential
    derivatives of ``psi_s``, so it is a surface operator.
    """
    if section.kind != "tangential":
        raise ValueError("Lighthill companion needs a tangential section")
    body = section.body
    step = FD_RELATIVE_STEP * 10 * body.characteristic_length
    fn = lambda y: section.surface_value(body.signed_projection(y))

    def sigma(s):
        s = np.asarray(s, dtype=float)
        G = differences.gradient(fn, s, step)
        curl = np.stack(
            [G[..., 2, 1] - G[..., 1, 2], G[..., 0, 2] - G[..., 2, 0], G[..., 1, 0] - G[..., 0, 1]], axis=-1
        )
        return np.sum(curl * body._normal_unchecked(s), axis=-1)

    return normal_section_from_scalar(body, sigma, section.time, f"lighthill({section.ident})")


# --------------------------------------------------------------------------
# extensions


@dataclass
class ExtensionDerivatives:
    """Spatial part of an extension and its derivatives at a set of points.

    ``grad[..., i, j] = d_j phi_i``.
    """

    value: np.ndarray
    grad: np.ndarray
    laplacian: np.ndarray

    @property
    def divergence(self):
        return np.trace(self.grad, axis1=-2, axis2=-1)

    @property
    def curl(self):
        G = self.grad
        return np.stack(
            [G[..., 2, 1] - G[..., 1, 2], G[..., 0, 2] - G[..., 2, 0], G[..., 1, 0] - G[..., 0, 1]], axis=-1
        )


def canonical_weight(d, eps):
    """``exp(-d/(eps - d))`` for ``d < eps``, zero beyond."""
    d = np.asarray(d, dtype=float)
    inside = d < eps
    q = np.where(inside, eps - d, 1.0)
    return np.where(inside, np.exp(-d / q), 0.0)


class ExtendedTestField:
    """``phi(x, t) = beta(t) phi_s(x)`` with ``phi_s`` supported in ``d < eps``.

    Subclasses implement :meth:`spatial`.
    """

    kind = "abstract"
    natural = True

    def __init__(self, section, eps):
        body = section.body
        if not 0 < eps < body.tubular_radius:
            raise ValueError("extension cutoff must satisfy 0 < eps < tubular radius")
        self.section = section
        self.body = body
        self.eps = float(eps)
        self.time = section.time
        self.fd_step = FD_RELATIVE_STEP * self.eps

    def _frame(self, x):
        x = np.asarray(x, dtype=float)
        d, y = self.body._signed_map(x)
        return d, y

    def spatial(self, x):
        raise NotImplementedError

    def value(self, x, t):
        return np.asarray(self.time(t))[..., None] * self.spatial(x)

    def time_derivative(self, x, t):
        return np.asarray(self.time.derivative(t))[..., None] * self.spatial(x)

    def derivatives(self, x):
        """Value, Jacobian and Laplacian of ``phi_s`` by central differences."""
        v, g, lap = differences.gradient_and_laplacian(self.spatial, x, self.fd_step)
        return ExtensionDerivatives(v, g, lap)

    @property
    def ident(self):
        return f"{self.kind}[{self.section.ident}](eps={self.eps:g})"


class CanonicalTangentialExtension(ExtendedTestField):
    """``phi_s(x) = w(d(x)) psi_s(pi(x))``; tangent to ``n(pi(x))`` everywhere."""

    kind = "ext0_tangential"

    def __init__(self, section, eps):
        if section.kind != "tangential":
            raise ValueError("tangential extension needs a tangential section")
        super().__init__(section, eps)

    def spatial(self, x):
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape)
        mask = self._support(x)
        if np.any(mask):
            d, y = self._frame(x[mask])
            out[mask] = canonical_weight(d, self.eps)[..., None] * self.section.surface_value(y)
        return out

    def _support(self, x):
        # cheap prefilter: points far from the body carry zero weight
        box = self.body.bounding_box
        pad = self.eps
        return np.all((x >= box[0] - pad) & (x <= box[1] + pad), axis=-1)


class CanonicalNormalExtension(CanonicalTangentialExtension):
    """``phi_s(x) = w(d(x)) sigma(pi(x)) n(pi(x))``."""

    kind = "ext0_normal"

    def __init__(self, section, eps):
        if section.kind != "normal":
            raise ValueError("normal extension needs a normal section")
        ExtendedTestField.__init__(self, section, eps)


class DriftTangentialExtension(CanonicalTangentialExtension):
    """Canonical tangential extension plus a normal drift growing like ``d``.

    ``phi_s = w(d) [psi_s(pi) + kappa (d/eps) (psi_s(pi) . m) n(pi)]``.  It
    still restricts to ``psi`` on the wall, but its normal component over a
    shell at distance ``h`` is of size ``kappa h / eps`` rather than zero.
    """

    kind = "drift_tangential"
    natural = False

    def __init__(self, section, eps, kappa=1.0, m=(1.0, 0.0, 0.0)):
        super().__init__(section, eps)
        self.kappa = float(kappa)
        self.m = np.asarray(m, dtype=float)

    def spatial(self, x):
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape)
        mask = self._support(x)
        if np.any(mask):
            d, y = self._frame(x[mask])
            psi = self.section.surface_value(y)
            n = self.body._normal_unchecked(y)
            drift = (self.kappa * d / self.eps * (psi @ self.m))[..., None] * n
            out[mask] = canonical_weight(d, self.eps)[..., None] * (psi + drift)
        return out


def extend_tangential(section, eps):
    return CanonicalTangentialExtension(section, eps)


def extend_normal(section, eps):
    return CanonicalNormalExtension(section, eps)


def extend(section, eps, kind=None, **kwargs):
    """Extension by name: ``ext0`` (canonical, default) or ``drift``."""
    kind = kind or "ext0"
    if kind == "ext0":
        return extend_tangential(section, eps) if section.kind == "tangential" else extend_normal(section, eps)
    if kind == "drift":
        return DriftTangentialExtension(section, eps, **kwargs)
    raise ValueError(f"unknown extension kind: {kind}")


def extended_derivatives(phi, x, t):
    """``(d_t phi, grad phi, div phi, Lap phi, curl phi)`` at points ``x``, time ``t``."""
    der = phi.derivatives(x)
    b = float(phi.time(t))
    return (
        float(phi.time.derivative(t)) * der.value,
        b * der.grad,
        b * der.divergence,
        b * der.laplacian,
        b * der.curl,
    )


# --------------------------------------------------------------------------
# scalar test functions (weak pressure identity)


class ScalarTestFunction:
    """``phi(x) = q(x) (1 - Theta(d(x)/cutoff))``, ``q`` a quadratic polynomial.

    Smooth, supported in ``d < cutoff``, and equal to ``q`` in a layer at the
    wall (``Theta`` is flat at 0), so ``grad phi = grad q`` there.
    """

    def __init__(self, body, cutoff, a0=1.0, b=(0.0, 0.0, 0.0), A=None):
        if not 0 < cutoff < body.tubular_radius:
            raise ValueError("scalar test cutoff must satisfy 0 < cutoff < tubular radius")
        self.body = body
        self.cutoff = float(cutoff)
        self.a0 = float(a0)
        self.b = np.asarray(b, dtype=float)
        self.A = np.zeros((3, 3)) if A is None else np.asarray(A, dtype=float)
        self.fd_step = 1e-3 * self.cutoff

    def q(self, x):
        return self.a0 + x @ self.b + np.einsum("...i,ij,...j->...", x, self.A, x)

    def q_gradient(self, x):
        return self.b + x @ (self.A + self.A.T)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        d = self.body.signed_distance(x)
        return self.q(x) * (1.0 - STEP(d / self.cutoff))

    def gradient(self, x):
        return differences.gradient(self, x, self.fd_step)

    def hessian(self, x):
        return differences.hessian(self, x, self.fd_step)
