"""Smooth bodies: distance, nearest-point projection, normals and quadrature.

Points are arrays of shape ``(..., 3)``; every query is vectorized over the
leading axes.  The flow domain is the exterior of the body and the unit
normal points into the flow.

Only spheres (closed-form maps) and axis-aligned ellipsoids centred at the
origin are supported.  The ellipsoid projection solves the nearest-point
stationarity condition ``x - y = t * grad f(y) / 2`` for the scalar
multiplier ``t`` with a damped Newton iteration.
"""

from dataclasses import dataclass, field

import numpy as np

NEWTON_MAX_ITER = 50
NEWTON_TOL = 1e-12


def gauss_legendre(n, lo=0.0, hi=1.0):
    """Gauss-Legendre nodes and weights on ``[lo, hi]``."""
    if n < 1:
        raise ValueError("quadrature order must be >= 1")
    x, w = np.polynomial.legendre.leggauss(int(n))
    half = 0.5 * (hi - lo)
    return lo + half * (x + 1.0), half * w


def sphere_rule(order):
    """Product rule on the unit sphere.

    Gauss-Legendre in ``cos(theta)`` (``order`` nodes) times the trapezoid
    rule in azimuth (``2*order`` nodes).  Integrates spherical polynomials
    of degree ``<= 2*order - 1`` exactly and is centrally symmetric.

    Returns
    -------
    directions : ndarray, shape (2*order**2, 3)
    weights : ndarray, shape (2*order**2,)
        Sum to ``4*pi``.
    """
    if order < 1:
        raise ValueError("quadrature order must be >= 1")
    u, wu = np.polynomial.legendre.leggauss(int(order))
    m = 2 * int(order)
    phi = np.pi * np.arange(m) / order
    wphi = np.full(m, 2.0 * np.pi / m)
    U, P = np.meshgrid(u, phi, indexing="ij")
    S = np.sqrt(1.0 - U**2)
    dirs = np.stack([S * np.cos(P), S * np.sin(P), U], axis=-1).reshape(-1, 3)
    weights = np.outer(wu, wphi).reshape(-1)
    return dirs, weights


@dataclass(frozen=True)
class SurfaceQuadrature:
    nodes: np.ndarray
    weights: np.ndarray
    normals: np.ndarray
    order: int

    @property
    def size(self):
        return len(self.weights)

    def integrate(self, values):
        """Weighted sum over nodes along the leading axis."""
        return np.tensordot(self.weights, values, axes=(0, 0))


@dataclass(frozen=True)
class ShellQuadrature:
    """Product rule over a wall-parallel band ``lo < d(x) < hi``."""

    nodes: np.ndarray
    weights: np.ndarray
    distance: np.ndarray
    foot: np.ndarray
    normals: np.ndarray
    band: tuple
    order: int
    radial_order: int
    breaks: tuple = field(default=())

    @property
    def size(self):
        return len(self.weights)

    def integrate(self, values):
        return np.tensordot(self.weights, values, axes=(0, 0))

    def node_spacing(self):
        """Largest gap between neighbouring nodes (used for Lipschitz inflation)."""
        lo, hi = self.band
        radial = (hi - lo) / self.radial_order
        scale = np.max(np.linalg.norm(self.foot, axis=-1)) + hi
        tangential = np.pi * scale / self.order
        return float(np.hypot(radial, tangential))


class Body:
    """Smooth closed body; subclasses provide the level function and maps."""

    kind = "abstract"

    def __init__(self, tubular_radius):
        if not tubular_radius > 0:
            raise ValueError("tubular radius must be positive")
        self.tubular_radius = float(tubular_radius)

    # subclasses implement: level, level_gradient, level_hessian,
    # _signed_map, _surface_points, characteristic_length, bounding_box

    def signed_distance(self, x):
        """Smooth signed distance (negative inside) valid in the two-sided tube."""
        return self._signed_map(x)[0]

    def signed_projection(self, x):
        return self._signed_map(x)[1]

    def distance(self, x):
        """Distance to the surface for points outside or on the body."""
        d, _ = self._signed_map(x)
        if np.any(d < -self._on_surface_tol()):
            raise ValueError("point inside body")
        return np.maximum(d, 0.0)

    def project(self, x):
        """Unique nearest surface point, for points in the tubular neighborhood."""
        d, y = self._signed_map(x)
        if np.any(d < -self._on_surface_tol()):
            raise ValueError("point inside body")
        if np.any(d >= self.tubular_radius):
            raise ValueError("outside tubular neighborhood")
        return y

    def normal(self, s):
        """Unit normal into the flow domain at surface points ``s``."""
        s = np.asarray(s, dtype=float)
        g = self.level_gradient(s)
        gn = np.linalg.norm(g, axis=-1)
        if np.any(gn < 1e-12):
            raise ValueError("degenerate surface point")
        if np.any(np.abs(self.level(s)) / gn > self._on_surface_tol()):
            raise ValueError("point not on surface")
        return g / gn[..., None]

    def _normal_unchecked(self, s):
        g = self.level_gradient(s)
        return g / np.linalg.norm(g, axis=-1, keepdims=True)

    def _on_surface_tol(self):
        return 1e-9 * self.characteristic_length

    def curvatures(self, s):
        """Mean curvature ``H`` (sum over two, halved) and Gauss curvature ``K``.

        Sign convention: positive for a convex body with the normal pointing
        outward, so the area factor at offset ``d`` is ``1 + 2Hd + Kd^2``.
        """
        g = self.level_gradient(s)
        Hs = self.level_hessian(s)
        gn = np.linalg.norm(g, axis=-1)
        trace = np.trace(Hs, axis1=-2, axis2=-1)
        gHg = np.einsum("...i,...ij,...j->...", g, Hs, g)
        H = (gn**2 * trace - gHg) / (2.0 * gn**3)
        adj = _adjugate(Hs)
        K = np.einsum("...i,...ij,...j->...", g, adj, g) / gn**4
        return H, K

    def area_factor(self, s, d):
        H, K = self.curvatures(s)
        return 1.0 + 2.0 * H * d + K * d * d

    def surface_quadrature(self, order):
        nodes, weights = self._surface_points(int(order))
        normals = self._normal_unchecked(nodes)
        return SurfaceQuadrature(nodes, weights, normals, int(order))

    def shell_quadrature(self, h, ell, order, radial_order=None, breaks=()):
        """Product rule over the band ``h < d < h + ell``.

        Nodes are ``s + d n(s)`` for surface nodes ``s`` and Gauss nodes ``d``;
        weights carry the exact offset-surface area factor.  ``breaks`` splits
        the normal coordinate into panels (each with ``radial_order`` nodes).
        """
        if not (h >= 0 and ell > 0):
            raise ValueError("band requires h >= 0 and ell > 0")
        lo, hi = float(h), float(h + ell)
        radial_order = int(radial_order or order)
        edges = [lo] + sorted(b for b in breaks if lo < b < hi) + [hi]
        panels = [(a, b, radial_order) for a, b in zip(edges[:-1], edges[1:])]
        return self.panel_quadrature(panels, order)

    def panel_quadrature(self, panels, order):
        """Product rule over consecutive normal panels ``[(lo, hi, n_nodes), ...]``."""
        lo, hi = panels[0][0], panels[-1][1]
        if lo < 0:
            raise ValueError("band requires h >= 0 and ell > 0")
        if hi >= self.tubular_radius:
            raise ValueError("band exits tubular neighborhood")
        dn, dw = [], []
        for a, b, m in panels:
            x, w = gauss_legendre(m, a, b)
            dn.append(x)
            dw.append(w)
        dn = np.concatenate(dn)
        dw = np.concatenate(dw)
        surf = self.surface_quadrature(order)
        s = surf.nodes[:, None, :]
        n = surf.normals[:, None, :]
        nodes = (s + dn[None, :, None] * n).reshape(-1, 3)
        jac = self.area_factor(surf.nodes[:, None, :], dn[None, :])
        weights = (surf.weights[:, None] * dw[None, :] * jac).reshape(-1)
        m = len(dn)
        return ShellQuadrature(
            nodes=nodes,
            weights=weights,
            distance=np.tile(dn, surf.size),
            foot=np.repeat(surf.nodes, m, axis=0),
            normals=np.repeat(surf.normals, m, axis=0),
            band=(float(lo), float(hi)),
            order=int(order),
            radial_order=int(max(p[2] for p in panels)),
            breaks=tuple(float(p[0]) for p in panels[1:]),
        )

    def tube_quadrature(self, a, order, radial_order=None, breaks=()):
        """Quadrature over ``0 < d < a``."""
        if not 0 < a < self.tubular_radius:
            raise ValueError("band exits tubular neighborhood")
        return self.shell_quadrature(0.0, a, order, radial_order, breaks)


def _adjugate(M):
    a, b, c = M[..., 0, 0], M[..., 0, 1], M[..., 0, 2]
    d, e, f = M[..., 1, 0], M[..., 1, 1], M[..., 1, 2]
    g, h, i = M[..., 2, 0], M[..., 2, 1], M[..., 2, 2]
    rows = [
        [e * i - f * h, c * h - b * i, b * f - c * e],
        [f * g - d * i, a * i - c * g, c * d - a * f],
        [d * h - e * g, b * g - a * h, a * e - b * d],
    ]
    return np.stack([np.stack(r, axis=-1) for r in rows], axis=-2)


class Sphere(Body):
    kind = "sphere"

    def __init__(self, radius=1.0, tubular_radius=None):
        if not radius > 0:
            raise ValueError("radius must be positive")
        self.radius = float(radius)
        super().__init__(tubular_radius if tubular_radius is not None else 0.5 * radius)
        if self.tubular_radius >= self.radius:
            raise ValueError("tubular radius must be below the curvature radius")

    @property
    def characteristic_length(self):
        return self.radius

    @property
    def bounding_box(self):
        r = self.radius
        return np.array([[-r, -r, -r], [r, r, r]])

    def level(self, x):
        x = np.asarray(x, dtype=float)
        return np.sum(x * x, axis=-1) / self.radius**2 - 1.0

    def level_gradient(self, x):
        return 2.0 * np.asarray(x, dtype=float) / self.radius**2

    def level_hessian(self, x):
        x = np.asarray(x, dtype=float)
        return np.broadcast_to(2.0 * np.eye(3) / self.radius**2, x.shape + (3,)).copy()

    def _signed_map(self, x):
        x = np.asarray(x, dtype=float)
        r = np.linalg.norm(x, axis=-1)
        if np.any(r == 0.0):
            raise ValueError("projection undefined at the centre")
        return r - self.radius, self.radius * x / r[..., None]

    def curvatures(self, s):
        s = np.asarray(s, dtype=float)
        shape = s.shape[:-1]
        return np.full(shape, 1.0 / self.radius), np.full(shape, 1.0 / self.radius**2)

    def area_factor(self, s, d):
        return (1.0 + d / self.radius) ** 2 * np.ones(np.shape(s)[:-1])

    def _surface_points(self, order):
        dirs, w = sphere_rule(order)
        return self.radius * dirs, self.radius**2 * w


class Ellipsoid(Body):
    kind = "ellipsoid"

    def __init__(self, semi_axes=(2.0, 1.0, 1.0), tubular_radius=None):
        axes = np.asarray(semi_axes, dtype=float)
        if axes.shape != (3,) or np.any(axes <= 0):
            raise ValueError("ellipsoid needs three positive semi-axes")
        self.semi_axes = axes
        # smallest principal radius of curvature of an axis-aligned ellipsoid
        a = np.sort(axes)
        self.min_curvature_radius = float(a[0] ** 2 / a[2])
        default = 0.4 * float(a[0])
        super().__init__(tubular_radius if tubular_radius is not None else default)
        if self.tubular_radius >= self.min_curvature_radius:
            raise ValueError("tubular radius must be below the smallest curvature radius")

    @property
    def characteristic_length(self):
        return float(np.max(self.semi_axes))

    @property
    def bounding_box(self):
        return np.stack([-self.semi_axes, self.semi_axes])

    def level(self, x):
        x = np.asarray(x, dtype=float)
        return np.sum((x / self.semi_axes) ** 2, axis=-1) - 1.0

    def level_gradient(self, x):
        return 2.0 * np.asarray(x, dtype=float) / self.semi_axes**2

    def level_hessian(self, x):
        x = np.asarray(x, dtype=float)
        return np.broadcast_to(np.diag(2.0 / self.semi_axes**2), x.shape + (3,)).copy()

    def _signed_map(self, x):
        x = np.asarray(x, dtype=float)
        A2 = self.semi_axes**2
        rho = np.sqrt(np.sum(x * x / A2, axis=-1))
        if np.any(rho == 0.0):
            raise ValueError("projection undefined at the centre")
        # radial initial guess y0 = x / rho, then t from x - y0 = t y0 / A^2
        y0 = x / rho[..., None]
        g0 = np.linalg.norm(y0 / A2, axis=-1)
        t = np.sign(rho - 1.0) * np.linalg.norm(x - y0, axis=-1) / g0
        floor = -np.min(A2)
        x2A2 = x * x * A2

        def F(t):
            return np.sum(x2A2 / (A2 + t[..., None]) ** 2, axis=-1) - 1.0

        f = F(t)
        for _ in range(NEWTON_MAX_ITER):
            dF = -2.0 * np.sum(x2A2 / (A2 + t[..., None]) ** 3, axis=-1)
            step = -f / dF
            t_new = t + step
            # damping: stay right of the pole and do not increase |F|
            for _ in range(30):
                bad = t_new <= floor
                if np.any(bad):
                    t_new = np.where(bad, 0.5 * (t + floor), t_new)
                    continue
                f_new = F(t_new)
                worse = np.abs(f_new) > np.abs(f) * (1 + 1e-12) + 1e-15
                if not np.any(worse):
                    break
                t_new = np.where(worse, 0.5 * (t + t_new), t_new)
            f_new = F(t_new)
            done = np.abs(t_new - t) <= NEWTON_TOL * (1.0 + np.abs(t))
            t, f = t_new, f_new
            if np.all(done):
                break
        y = x * A2 / (A2 + t[..., None])
        d = np.sign(t) * np.linalg.norm(x - y, axis=-1)
        return d, y

    def _surface_points(self, order):
        u, wu = np.polynomial.legendre.leggauss(int(order))
        m = 2 * int(order)
        phi = np.pi * np.arange(m) / order
        U, P = np.meshgrid(u, phi, indexing="ij")
        S = np.sqrt(1.0 - U**2)
        A, B, C = self.semi_axes
        nodes = np.stack([A * S * np.cos(P), B * S * np.sin(P), C * U], axis=-1)
        # |y_theta x y_phi| / sin(theta): smooth in u = cos(theta)
        jac = np.sqrt(
            (B * C * S * np.cos(P)) ** 2 + (A * C * S * np.sin(P)) ** 2 + (A * B * U) ** 2
        )
        weights = np.outer(wu, np.full(m, 2.0 * np.pi / m)) * jac
        return nodes.reshape(-1, 3), weights.reshape(-1)


def make_body(spec):
    """Build a body from a config mapping (``kind`` plus shape parameters)."""
    spec = dict(spec)
    kind = spec.pop("kind")
    tub = spec.pop("tubular_radius", None)
    if kind == "sphere":
        return Sphere(spec.pop("radius", 1.0), tubular_radius=tub)
    if kind == "ellipsoid":
        return Ellipsoid(spec.pop("semi_axes"), tubular_radius=tub)
    raise ValueError(f"unsupported surface kind: {kind}")
