"""Scale and viscosity sweeps, rate fits and near-wall norm estimates.

Fitted exponents describe the catalog fields and the quadrature used here;
they are properties of this implementation, not of the limits themselves.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field as dc_field

import numpy as np
from scipy import stats

from . import differences
from .budgets import (
    TUBE_BREAKS,
    QuadratureOrders,
    momentum_flux_pairing,
    pair_wall_pressure,
    pair_wall_shear,
    weak_interior_functional,
)
from .filtering import DEFAULT_KERNEL, WindowProfile, mollify
from .sections import extend

DROP_FRACTION = 0.1


def dyadic(base, first, last):
    """``base * 2**-k`` for ``k = first..last`` (decreasing)."""
    return tuple(float(base) * 2.0 ** (-k) for k in range(first, last + 1))


@dataclass
class SweepPlan:
    """Parameter grids for scale and viscosity sweeps.

    ``h_grid`` and ``nu_grid`` are decreasing; ``ell = ell_ratio * h``.
    """

    eps: float = 0.45
    h_grid: tuple = None
    nu_grid: tuple = None
    ell_ratio: float = 0.5
    extension: str = "ext0"
    orders: QuadratureOrders = dc_field(default_factory=QuadratureOrders)
    threads: int = 1

    def __post_init__(self):
        if self.h_grid is None:
            self.h_grid = dyadic(self.eps, 2, 8)
        if self.nu_grid is None:
            self.nu_grid = dyadic(1.0, 4, 14)
        self.h_grid = tuple(float(h) for h in self.h_grid)
        self.nu_grid = tuple(float(v) for v in self.nu_grid)

    def validate(self, need_h=True, need_nu=False):
        if need_h:
            if not self.h_grid:
                raise ValueError("h grid is empty")
            if any(b >= a for a, b in zip(self.h_grid[:-1], self.h_grid[1:])):
                raise ValueError("h grid must be strictly decreasing")
            if not 0 < self.ell_ratio < 1:
                raise ValueError("ell rule must give 0 < l < h")
            if any(h <= 0 or h * (1 + self.ell_ratio) >= self.eps for h in self.h_grid):
                raise ValueError("every shell must satisfy 0 < h and h + l < eps")
        if need_nu:
            if not self.nu_grid:
                raise ValueError("viscosity grid is empty")
            if any(b >= a for a, b in zip(self.nu_grid[:-1], self.nu_grid[1:])) or min(self.nu_grid) <= 0:
                raise ValueError("viscosity grid must be positive and strictly decreasing")
        return self


@dataclass
class RateFit:
    """Log-log least-squares fit ``value ~ C * param**exponent``."""

    abscissa: list
    values: list
    used: list
    exponent: float
    stderr: float
    intercept: float
    residual: float
    identically_zero: bool = False

    def within(self, target, tol):
        return (not self.identically_zero) and abs(self.exponent - target) <= tol

    def as_record(self):
        return asdict(self)


def fit_rate(abscissa, values, errors=None, min_points=3, zero_floor=0.0):
    """Fit a power law through ``|values|`` against ``abscissa``.

    Points whose error estimate exceeds 10% of the value are dropped, as are
    values at or below ``zero_floor`` (roundoff zeros).  Raises
    ``ValueError`` with fewer than ``min_points`` left, unless every value
    is zero (reported as ``identically_zero``).
    """
    x = np.asarray(abscissa, dtype=float)
    y = np.abs(np.asarray(values, dtype=float))
    y = np.where(y <= zero_floor, 0.0, y)
    err = np.zeros_like(y) if errors is None else np.abs(np.asarray(errors, dtype=float))
    if np.all(y == 0.0):
        return RateFit(x.tolist(), y.tolist(), [False] * len(y), float("nan"), float("nan"), float("nan"),
                       float("nan"), identically_zero=True)
    used = (y > 0) & (err <= DROP_FRACTION * y) & np.isfinite(y)
    if used.sum() < min_points:
        raise ValueError(f"rate fit needs at least {min_points} usable points")
    res = stats.linregress(np.log(x[used]), np.log(y[used]))
    pred = res.intercept + res.slope * np.log(x[used])
    resid = float(np.sqrt(np.mean((np.log(y[used]) - pred) ** 2)))
    return RateFit(x.tolist(), y.tolist(), used.tolist(), float(res.slope), float(res.stderr),
                   float(res.intercept), resid)


def limit_estimate(abscissa, values, degree=2, points=4):
    """Polynomial extrapolation of the last ``points`` values to abscissa 0.

    Returns ``(limit, spread)`` where ``spread`` compares with the estimate
    from one fewer point (degree reduced by one).
    """
    x = np.asarray(abscissa, dtype=float)[-points:]
    y = np.asarray(values, dtype=float)[-points:]
    c = np.polynomial.polynomial.polyfit(x, y, min(degree, len(x) - 1))
    c2 = np.polynomial.polynomial.polyfit(x[1:], y[1:], min(degree - 1, len(x) - 2))
    return float(c[0]), float(abs(c[0] - c2[0]))


def eventually_monotone(values, count=3, decreasing=True):
    v = np.abs(np.asarray(values, dtype=float))[-count:]
    d = np.diff(v)
    return bool(np.all(d <= 0) if decreasing else np.all(d >= 0))


def _map(fn, items, threads):
    items = list(items)
    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(fn, items))
    return [fn(i) for i in items]


def _safe(fn):
    def wrapped(arg):
        try:
            return fn(arg), None
        except (ValueError, ArithmeticError) as exc:
            return None, f"{type(exc).__name__}: {exc}"

    return wrapped


# --------------------------------------------------------------------------
# scale sweep


@dataclass
class ScaleSweepResult:
    h: list
    ell: list
    pairings: list
    target: float
    target_error: float
    gaps: list
    gap_errors: list
    fit: RateFit
    failures: list

    @property
    def relative_gaps(self):
        scale = abs(self.target) if self.target != 0 else 1.0
        return [g / scale for g in self.gaps]


def wall_target(field, section, orders):
    """Limit predicted for the flux pairing: ``<p_w n, psi>`` or ``-<tau_w, psi>``."""
    if section.kind == "normal":
        pv = pair_wall_pressure(field, section, orders)
        return pv.value, pv.error
    if field.nu == 0.0:
        return 0.0, 0.0
    pv = pair_wall_shear(field, section, orders)
    return -pv.value, pv.error


def run_scale_sweep(field, section, plan, target=None, component=None, **ext_kwargs):
    """Momentum flux pairings along ``h_grid`` and the fitted gap decay.

    Parameters
    ----------
    target : float, optional
        Limit to compare against; defaults to :func:`wall_target`.
    component : str, optional
        Fit a single component (``"advective"`` or ``"pressure"``) instead
        of the total pairing (the target is then 0).
    """
    plan.validate(need_h=True)
    if component is not None:
        tval, terr = 0.0, 0.0
    elif target is None:
        tval, terr = wall_target(field, section, plan.orders)
    else:
        tval, terr = float(target), 0.0

    def point(h):
        return momentum_flux_pairing(field, h, plan.ell_ratio * h, section, plan.eps, plan.extension,
                                     plan.orders, **ext_kwargs)

    results = _map(_safe(point), plan.h_grid, plan.threads)
    hs, ells, pairs, gaps, gerrs, failures = [], [], [], [], [], []
    for h, (pv, err) in zip(plan.h_grid, results):
        if pv is None:
            failures.append({"h": h, "error": err})
            continue
        val = pv.components[component] if component else pv.value
        hs.append(h)
        ells.append(plan.ell_ratio * h)
        pairs.append(pv)
        gaps.append(abs(val - tval))
        gerrs.append(pv.error + terr)
    # gaps that cancel to roundoff relative to the pairing scale count as zero
    scale = max([1.0, abs(tval)] + [abs(c) for pv in pairs for c in pv.components.values()])
    fit = fit_rate(hs, gaps, gerrs, zero_floor=1e-13 * scale)
    return ScaleSweepResult(hs, ells, pairs, tval, terr, gaps, gerrs, fit, failures)


# --------------------------------------------------------------------------
# viscosity sweep


@dataclass
class ViscositySweepResult:
    nu: list
    shear: list
    shear_errors: list
    pressure: list
    forcing: list
    cauchy: list
    limit: float
    fit: RateFit
    failures: list


def _geometric_tail(values):
    """Limit of a sequence from its last Cauchy differences (geometric tail)."""
    v = np.asarray(values, dtype=float)
    if len(v) < 3:
        return float(v[-1])
    d1, d2 = v[-2] - v[-3], v[-1] - v[-2]
    if d1 == 0 or d2 == 0:
        return float(v[-1])
    r = d2 / d1
    if not 0 < r < 1:
        return float(v[-1])
    return float(v[-1] + d2 * r / (1 - r))


def forcing_pairing(field, phi, orders):
    """``<<g, phi>>`` over the extension tube (resolving any boundary layer)."""
    pv = weak_interior_functional(field, phi, orders)
    return -pv.components["forcing"]


def run_viscosity_sweep(family, plan, tangential, normal=None, with_forcing=False):
    """Wall pairings of a viscosity family along ``nu_grid``.

    ``family(nu)`` returns the field at viscosity ``nu``.  Reports
    ``<tau_w^nu, psi>``, ``<p_w^nu n, psi>``, Cauchy differences, a
    geometric-tail limit estimate and the fitted exponent of
    ``|<tau_w^nu, psi>|`` in ``nu``.  With ``with_forcing`` the forcing
    pairing ``<<g^nu, Ext(psi)>>`` is reported too.
    """
    plan.validate(need_h=False, need_nu=True)

    def point(nu):
        f = family(nu)
        s = pair_wall_shear(f, tangential, plan.orders)
        p = pair_wall_pressure(f, normal, plan.orders).value if normal is not None else float("nan")
        g = float("nan")
        if with_forcing:
            g = forcing_pairing(f, extend(tangential, plan.eps), plan.orders)
        return s, p, g

    results = _map(_safe(point), plan.nu_grid, plan.threads)
    nus, shear, serr, pres, forc, failures = [], [], [], [], [], []
    for nu, (res, err) in zip(plan.nu_grid, results):
        if res is None:
            failures.append({"nu": nu, "error": err})
            continue
        s, p, g = res
        nus.append(nu)
        shear.append(s.value)
        serr.append(s.error)
        pres.append(p)
        forc.append(g)
    cauchy = [abs(b - a) for a, b in zip(shear[:-1], shear[1:])]
    fit = fit_rate(nus, shear, serr)
    return ViscositySweepResult(nus, shear, serr, pres, forc, cauchy, _geometric_tail(shear), fit, failures)


# --------------------------------------------------------------------------
# near-wall norms


@dataclass
class NormCurve:
    """Norm estimates per parameter value, as ``[lower, upper]`` intervals."""

    abscissa: list
    lower: list
    upper: list
    count: list

    def as_record(self):
        return asdict(self)


def _sup_interval(fun, nodes, normals, spacing, step):
    """``[max f, max f + inflation]`` over ``nodes``.

    Every point of the layer lies within half a radial and half a tangential
    node gap of a node; the inflation is the largest normal and tangential
    gradient times those half gaps.
    """
    vals = fun(nodes)
    grad = differences.gradient(fun, nodes, step)
    gn = np.sum(grad * normals, axis=-1)
    gt = np.linalg.norm(grad - gn[:, None] * normals, axis=-1)
    radial, tangential = spacing
    vmax = float(np.max(vals))
    return vmax, vmax + 0.5 * float(np.max(np.abs(gn) * radial + gt * tangential))


def _time_nodes(field, n=8):
    if field.steady:
        return np.array([0.5 * field.T]), np.array([field.T])
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * field.T * (x + 1), 0.5 * field.T * w


def _layer_nodes(body, delta, order, radial_order):
    q = body.tube_quadrature(delta, order, radial_order)
    nodes = np.concatenate([body.surface_quadrature(order).nodes, q.nodes])
    radial = delta / radial_order
    tangential = np.pi * (body.characteristic_length + delta) / order
    return nodes, (radial, tangential)


def _time_sup_norm(field, body, fun_at, nodes, spacing, step):
    times, tw = _time_nodes(field)
    normals = body._normal_unchecked(body.signed_projection(nodes))
    lo, hi = [], []
    for t in times:
        a, b = _sup_interval(lambda x: fun_at(x, t), nodes, normals, spacing, step)
        lo.append(a)
        hi.append(b)
    return float(np.sqrt(tw @ np.square(lo))), float(np.sqrt(tw @ np.square(hi)))


def estimate_no_flow_through(field, deltas, body=None, order=24, radial_order=8):
    """``|| n . u ||_{L^2(0,T; L^inf(Omega_delta))}`` for each ``delta``.

    The sup over the layer is the max over tube nodes (including the wall),
    reported as an interval with a Lipschitz inflation for the upper end.
    ``body`` defaults to the field's body; passing one lets a body-free
    field be tested against a wall geometry.
    """
    body = body if body is not None else field.body

    def normal_speed(x, t):
        normals = body._normal_unchecked(body.signed_projection(x))
        return np.abs(np.sum(field.velocity(x, t) * normals, axis=-1))

    lo, hi, cnt = [], [], []
    for delta in deltas:
        if not 0 < delta < body.tubular_radius:
            raise ValueError("layer thickness must lie in (0, tubular radius)")
        nodes, spacing = _layer_nodes(body, delta, order, radial_order)
        a, b = _time_sup_norm(field, body, normal_speed, nodes, spacing, 1e-6 * delta)
        lo.append(a)
        hi.append(b)
        cnt.append(int(len(nodes)))
    return NormCurve(list(map(float, deltas)), lo, hi, cnt)


def estimate_near_wall_sup(field, eps, body=None, order=24, radial_order=8):
    """``|| u ||_{L^2(0,T; L^inf(Omega_eps))}`` as an interval."""
    body = body if body is not None else field.body
    if not 0 < eps < body.tubular_radius:
        raise ValueError("layer thickness must lie in (0, tubular radius)")
    nodes, spacing = _layer_nodes(body, eps, order, radial_order)
    speed = lambda x, t: np.linalg.norm(field.velocity(x, t), axis=-1)
    a, b = _time_sup_norm(field, body, speed, nodes, spacing, 1e-6 * eps)
    return NormCurve([float(eps)], [a], [b], [int(len(nodes))])


# --------------------------------------------------------------------------
# convergence of windowed filtered fields


def window_convergence_curve(fun, body, annulus, scales, ell_ratio=0.5, p=2, T=1.0, times=None,
                             order=12, radial_order=16, kernel=DEFAULT_KERNEL):
    """``|| eta_{h,l} f_l - f ||_{L^p((0,T) x K)}`` for each ``h`` in ``scales``.

    ``K = {lo < d < hi}`` is a wall-parallel annulus (``lo = 0`` touches the
    wall).  ``fun(x, t)`` returns the component(s) to filter.  The filtered
    field is only needed where ``eta > 0`` (``d > h > l``), so stencils stay
    in the flow domain.
    """
    lo, hi = annulus
    if p not in (1, 2):
        raise ValueError("p must be 1 or 2")
    times = [0.5 * T] if times is None else list(times)
    tw = T / len(times)
    out = []
    for h in scales:
        ell = ell_ratio * h
        edges = sorted({lo, hi} | {e for e in (h, h + ell) if lo < e < hi})
        panels = [(a, b, radial_order) for a, b in zip(edges[:-1], edges[1:])]
        q = body.panel_quadrature(panels, order)
        eta = WindowProfile(h, ell).value(q.distance)
        active = eta > 0
        total = 0.0
        for t in times:
            f = np.asarray(fun(q.nodes, t), dtype=float)
            approx = np.zeros_like(f)
            if np.any(active):
                fbar = mollify(lambda y: fun(y, t), q.nodes[active], ell, kernel, body)
                approx[active] = eta[active].reshape((-1,) + (1,) * (f.ndim - 1)) * fbar
            diff = np.abs(approx - f)
            if diff.ndim > 1:
                diff = np.linalg.norm(diff.reshape(len(diff), -1), axis=-1)
            total += tw * (q.weights @ diff**p)
        out.append(float(total ** (1.0 / p)))
    return out


def step_mollification_deficit(scales, p, kernel_nodes=4001):
    """Negative control: ``|| G_l * H - H ||`` for the unit step ``H`` in 1-D.

    Uses the normalized 1-D bump kernel.  The ``L^inf`` deficit is exactly
    1/2 at every scale (attained at the jump), so uniform convergence fails;
    the ``L^p`` deficit only decays like ``l^{1/p}``.
    """
    from .profiles import mollifier_profile

    r = np.linspace(-1, 1, kernel_nodes)
    g = mollifier_profile(np.abs(r))
    cdf = np.concatenate([[0.0], np.cumsum(0.5 * (g[1:] + g[:-1]) * np.diff(r))])
    cdf /= cdf[-1]
    # (G_l * H)(x) = P(r < x/l) -> deficit |cdf(x/l) - H(x)| on |x| < l
    out = []
    for ell in scales:
        x = ell * r
        deficit = np.where(x < 0, cdf, 1.0 - cdf)
        if p == np.inf:
            out.append(float(np.max(deficit)))
        else:
            out.append(float(np.trapezoid(deficit**p, x) ** (1.0 / p)))
    return out
