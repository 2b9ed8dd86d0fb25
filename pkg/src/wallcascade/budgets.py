"""Wall pairings, weak momentum identities and windowed (coarse-grained) budgets.

Sign conventions (``n`` points from the wall into the flow, ``phi`` is the
extension of a section ``psi``, ``g`` the forcing residual of the field):

* interior functional
  ``W(phi) = -<<u, d_t phi>> - <<u u : grad phi>> - <<p, div phi>>
  - nu <<u, Lap phi>> - <<g, phi>>``;
  integrating by parts against the forced momentum equation gives
  ``W = -<tau_w, psi>`` for tangential and ``W = +<p_w n, psi>`` for normal
  extensions (the viscous wall term of a normal extension vanishes because
  ``n . du/dn = 0`` under no-slip and zero divergence).
* windowed functional, with ``eta = theta_{h,l}(d)`` and filtered fields,
  ``W_eta(phi) = -<<eta u_l, d_t phi>> - <<eta T_l : grad phi>>
  - <<eta p_l, div phi>> - nu <<eta Lap u_l, phi>> - <<eta g_l, phi>>``
  equals the flux pairing ``F = <<phi, grad(eta) . T_l + p_l grad(eta)>>``
  because the discrete filter commutes with derivatives.
* as ``h, l -> 0`` the flux pairing tends to ``+<p_w n, psi>`` for normal
  and ``-<tau_w, psi>`` for tangential sections (Euler limit).

All pairings are separable in time: for steady fields the space integral is
evaluated once and multiplied by Gauss-Legendre integrals of ``beta`` and
``beta'``.  Every value carries an error estimate from one refinement step
of the surface, normal and time orders; the filter's own ball rule is part
of the definition of the filtered field and is not refined.
"""

from dataclasses import asdict, dataclass, field as dc_field, replace

import numpy as np

from .fields import wall_shear_stress
from .filtering import MollifierKernel, WindowProfile, filtered_state, mollify
from .sections import extend, lighthill_companion_section

TUBE_BREAKS = (0.5, 0.8)
REFINEMENT = 1.5
TOLERANCE_FACTOR = 10.0
RELATIVE_FLOOR = 1e-12


@dataclass(frozen=True)
class QuadratureOrders:
    surface: int = 12
    radial: int = 12
    shell: int = 32
    time: int = 32
    kernel_radial: int = 6
    kernel_angular: int = 4

    def refined(self):
        up = lambda n: int(np.ceil(REFINEMENT * n))
        return replace(
            self, surface=up(self.surface), radial=up(self.radial), shell=up(self.shell), time=up(self.time)
        )

    def kernel(self):
        return _kernel(self.kernel_radial, self.kernel_angular)


_KERNELS = {}


def _kernel(nr, na):
    key = (nr, na)
    if key not in _KERNELS:
        _KERNELS[key] = MollifierKernel(nr, na)
    return _KERNELS[key]


@dataclass
class PairingValue:
    name: str
    value: float
    error: float
    components: dict = dc_field(default_factory=dict)
    metadata: dict = dc_field(default_factory=dict)
    inputs: dict = dc_field(default_factory=dict)

    def as_record(self):
        return asdict(self)


@dataclass
class IdentityResidual:
    name: str
    left: float
    right: float
    left_error: float
    right_error: float
    floor: float = 1e-300
    inputs: dict = dc_field(default_factory=dict)
    details: dict = dc_field(default_factory=dict)
    factor: float = TOLERANCE_FACTOR

    @property
    def residual(self):
        return abs(self.left - self.right)

    @property
    def scale(self):
        return max(abs(self.left), abs(self.right), self.floor)

    @property
    def relative(self):
        return self.residual / self.scale

    @property
    def tolerance(self):
        """``10 x`` the larger refinement error plus a roundoff floor."""
        return self.factor * max(self.left_error, self.right_error) + RELATIVE_FLOOR * self.scale

    @property
    def passed(self):
        return bool(self.residual <= self.tolerance)

    def as_record(self):
        rec = asdict(self)
        rec.update(residual=self.residual, relative=self.relative, tolerance=self.tolerance, passed=self.passed)
        return rec


# --------------------------------------------------------------------------
# time handling


def _time_integrals(time, n):
    t, w = time.gauss_rule(n)
    return t, w, float(w @ time(t)), float(w @ time.derivative(t))


def _integrate_in_time(field, time, n, spatial):
    """``sum_k w_k spatial(t_k, beta(t_k), beta'(t_k))`` with steady shortcut.

    ``spatial(t, b, db)`` returns a dict of component integrals that are
    linear in ``(b, db)``; for steady fields it is called once with the
    time-integrated weights.
    """
    t, w, ib, idb = _time_integrals(time, n)
    if field.steady:
        return spatial(0.5 * (time.t0 + time.t1), ib, idb)
    total = None
    bt, dbt = time(t), time.derivative(t)
    for tk, wk, bk, dbk in zip(t, w, bt, dbt):
        part = spatial(tk, wk * bk, wk * dbk)
        total = part if total is None else {k: total[k] + part[k] for k in part}
    return total


def _refine(evaluate, orders, name, inputs):
    base = evaluate(orders)
    fine = evaluate(orders.refined())
    value = sum(base.values())
    error = abs(sum(fine.values()) - value)
    return PairingValue(
        name=name,
        value=float(value),
        error=float(error),
        components={k: float(v) for k, v in base.items()},
        metadata={"orders": asdict(orders), "refined_orders": asdict(orders.refined())},
        inputs=inputs,
    )


def _inputs(field, section=None, **extra):
    out = {"field": field.ident, "nu": field.nu}
    if section is not None:
        out["section"] = section.ident
    out.update(extra)
    return out


# --------------------------------------------------------------------------
# wall pairings


def pair_wall_shear(field, section, orders=QuadratureOrders()):
    """``<tau_w, psi> = int int nu du/dn . psi dS dt``."""
    if section.kind != "tangential":
        raise ValueError("wall shear pairs with tangential sections")
    body = field.body if field.body is not None else section.body

    def evaluate(o):
        q = body.surface_quadrature(o.surface)

        def spatial(t, b, db):
            tau = wall_shear_stress(field, q.nodes, t)
            return {"shear": b * q.integrate(np.sum(tau * section.surface_value(q.nodes), axis=-1))}

        return _integrate_in_time(field, section.time, o.time, spatial)

    return _refine(evaluate, orders, "wall_shear", _inputs(field, section))


def pair_wall_pressure(field, section, orders=QuadratureOrders()):
    """``<p_w n, psi> = int int p_w sigma dS dt``."""
    if section.kind != "normal":
        raise ValueError("wall pressure pairs with normal sections")
    body = field.body if field.body is not None else section.body

    def evaluate(o):
        q = body.surface_quadrature(o.surface)

        def spatial(t, b, db):
            pw = field.wall_pressure(q.nodes, t)
            return {"pressure": b * q.integrate(pw * section.scalar(q.nodes))}

        return _integrate_in_time(field, section.time, o.time, spatial)

    return _refine(evaluate, orders, "wall_pressure", _inputs(field, section))


def drag_decomposition(field, direction=(1.0, 0.0, 0.0), time=None, orders=QuadratureOrders()):
    """Skin-friction and form-drag pairings with drag-aligned sections.

    ``skin = <tau_w, P_t e>``, ``form = -<p_w n, (n . e) n>``; their sum is
    the time-weighted force on the body along ``e``.
    """
    from .sections import drag_sections

    tang, norm = drag_sections(field.body, direction, time)
    skin = pair_wall_shear(field, tang, orders)
    form = pair_wall_pressure(field, norm, orders)
    return {
        "skin": skin.value,
        "form": -form.value,
        "total": skin.value - form.value,
        "error": skin.error + form.error,
    }


# --------------------------------------------------------------------------
# interior weak functional and identities


def _tube_quadrature(body, eps, o, layer=None):
    breaks = [f * eps for f in TUBE_BREAKS]
    if layer is not None and 0 < layer < TUBE_BREAKS[0] * eps:
        # resolve a thin boundary layer with its own panels
        breaks = [0.5 * layer, layer, 4.0 * layer] + breaks
        breaks = [b for b in breaks if b < eps]
    return body.tube_quadrature(eps, o.surface, o.radial, breaks=tuple(sorted(set(breaks))))


def weak_interior_functional(field, phi, orders=QuadratureOrders()):
    """Space-time quadrature of the interior weak momentum functional."""
    body = phi.body
    if phi.eps >= body.tubular_radius:
        raise ValueError("extension support exits quadrature coverage")

    def evaluate(o):
        q = _tube_quadrature(body, phi.eps, o, getattr(field, "delta", None))
        der = phi.derivatives(q.nodes)
        w = q.weights

        def spatial(t, b, db):
            u = field.velocity(q.nodes, t)
            p = field.pressure(q.nodes, t)
            g = field.forcing(q.nodes, t)
            out = {
                "time": -db * (w @ np.sum(u * der.value, axis=-1)),
                "advective": -b * (w @ np.einsum("ni,nj,nij->n", u, u, der.grad)),
                "pressure": -b * (w @ (p * der.divergence)),
                "forcing": -b * (w @ np.sum(g * der.value, axis=-1)),
                "viscous": 0.0,
            }
            if field.nu != 0.0:
                out["viscous"] = -b * field.nu * (w @ np.sum(u * der.laplacian, axis=-1))
            return out

        return _integrate_in_time(field, phi.time, o.time, spatial)

    inputs = _inputs(field, phi.section, extension=phi.kind, eps=phi.eps)
    return _refine(evaluate, orders, "weak_interior", inputs)


def identity_residual_tangential(field, section, eps, orders=QuadratureOrders(), extension="ext0", **ext_kwargs):
    """``W(Ext(psi))`` against ``-<tau_w, psi>``."""
    phi = extend(section, eps, extension, **ext_kwargs)
    left = weak_interior_functional(field, phi, orders)
    right = pair_wall_shear(field, section, orders)
    return IdentityResidual(
        "tangential_identity", left.value, -right.value, left.error, right.error,
        inputs=left.inputs, details={"left_components": left.components},
    )


def identity_residual_normal(field, section, eps, orders=QuadratureOrders()):
    """``W(Ext(psi))`` against ``+<p_w n, psi>``."""
    phi = extend(section, eps)
    left = weak_interior_functional(field, phi, orders)
    right = pair_wall_pressure(field, section, orders)
    return IdentityResidual(
        "normal_identity", left.value, right.value, left.error, right.error,
        inputs=left.inputs, details={"left_components": left.components},
    )


# --------------------------------------------------------------------------
# windowed budgets


def _check_scales(phi, h, ell):
    if not (0 < ell < h):
        raise ValueError("window scales need 0 < l < h")
    if h + ell >= phi.eps:
        raise ValueError("window shell must lie inside the extension support (h + l < eps)")


def _as_extension(field, section_or_phi, eps, extension, ext_kwargs):
    if hasattr(section_or_phi, "spatial"):
        return section_or_phi
    if eps is None:
        raise ValueError("extension cutoff eps is required with a bare section")
    return extend(section_or_phi, eps, extension, **ext_kwargs)


def momentum_flux_pairing(field, h, ell, section, eps=None, extension="ext0", orders=QuadratureOrders(), **ext_kwargs):
    """``<<phi, grad(eta) . T_l + p_l grad(eta)>>`` over the shell ``h < d < h + l``.

    Components ``advective`` and ``pressure`` are reported separately.
    """
    phi = _as_extension(field, section, eps, extension, ext_kwargs)
    _check_scales(phi, h, ell)
    body = phi.body
    win = WindowProfile(h, ell)

    def evaluate(o):
        q = body.shell_quadrature(h, ell, o.surface, o.shell)
        grad_eta = win.derivative(q.distance)[:, None] * q.normals
        val = phi.spatial(q.nodes)
        kernel = o.kernel()

        def spatial(t, b, db):
            T = mollify(lambda y: _outer(field.velocity(y, t)), q.nodes, ell, kernel, body)
            pbar = mollify(lambda y: field.pressure(y, t), q.nodes, ell, kernel, body)
            adv = np.einsum("ni,nij,nj->n", grad_eta, T, val)
            prs = pbar * np.sum(grad_eta * val, axis=-1)
            return {"advective": b * (q.weights @ adv), "pressure": b * (q.weights @ prs)}

        return _integrate_in_time(field, phi.time, o.time, spatial)

    inputs = _inputs(field, phi.section, extension=phi.kind, eps=phi.eps, h=h, ell=ell)
    return _refine(evaluate, orders, "momentum_flux", inputs)


def _outer(u):
    return u[..., :, None] * u[..., None, :]


def windowed_interior_functional(field, h, ell, phi, orders=QuadratureOrders()):
    """Windowed weak functional of the filtered fields over ``h < d < eps``."""
    _check_scales(phi, h, ell)
    body = phi.body
    win = WindowProfile(h, ell)

    def evaluate(o):
        edges = [h + ell] + [f * phi.eps for f in TUBE_BREAKS if f * phi.eps > h + ell] + [phi.eps]
        panels = [(h, h + ell, o.shell)] + [(a, b, o.radial) for a, b in zip(edges[:-1], edges[1:])]
        q = body.panel_quadrature(panels, o.surface)
        eta = win.value(q.distance)
        der = phi.derivatives(q.nodes)
        w = q.weights * eta
        kernel = o.kernel()

        def spatial(t, b, db):
            fs = filtered_state(field, ell, q.nodes, t, kernel)
            out = {
                "time": -db * (w @ np.sum(fs.velocity * der.value, axis=-1)),
                "advective": -b * (w @ np.einsum("nij,nij->n", fs.stress, der.grad)),
                "pressure": -b * (w @ (fs.pressure * der.divergence)),
                "forcing": -b * (w @ np.sum(fs.forcing * der.value, axis=-1)),
                "viscous": 0.0,
            }
            if field.nu != 0.0:
                out["viscous"] = -b * field.nu * (w @ np.sum(fs.laplacian * der.value, axis=-1))
            return out

        return _integrate_in_time(field, phi.time, o.time, spatial)

    inputs = _inputs(field, phi.section, extension=phi.kind, eps=phi.eps, h=h, ell=ell)
    return _refine(evaluate, orders, "windowed_interior", inputs)


def coarse_grained_budget_residual(field, h, ell, phi, orders=QuadratureOrders()):
    """Windowed interior functional against the momentum flux pairing."""
    left = windowed_interior_functional(field, h, ell, phi, orders)
    right = momentum_flux_pairing(field, h, ell, phi, orders=orders)
    return IdentityResidual(
        "coarse_grained_budget", left.value, right.value, left.error, right.error,
        inputs=left.inputs, details={"left_components": left.components, "right_components": right.components},
    )


# --------------------------------------------------------------------------
# Lighthill balance


def lighthill_balance(field, h, ell, section, eps, orders=QuadratureOrders(), stress_divergence="fd"):
    """Vorticity-source form of the windowed budget.

    ``left = <<curl(phi) . grad(eta), p_l>>`` and
    ``right = <<-d_t phi . (grad eta x u_l) + phi . (grad eta x (div T_l - g_l - nu Lap u_l))>>``.
    ``div T_l`` is a central difference of the filtered stress
    (``stress_divergence="fd"``) or the filter of the analytic
    ``div(u (x) u)`` (``"analytic"``).
    """
    if section.kind != "tangential":
        raise ValueError("Lighthill balance uses tangential sections")
    phi = extend(section, eps)
    _check_scales(phi, h, ell)
    body = phi.body
    win = WindowProfile(h, ell)
    fd = 1e-4 * eps

    def evaluate(o):
        q = body.shell_quadrature(h, ell, o.surface, o.shell)
        grad_eta = win.derivative(q.distance)[:, None] * q.normals
        der = phi.derivatives(q.nodes)
        kernel = o.kernel()

        def spatial(t, b, db):
            fs = filtered_state(field, ell, q.nodes, t, kernel)
            if stress_divergence == "fd":
                # central differences at steps fd and fd/2, one Richardson level
                levels = []
                for step in (fd, 0.5 * fd):
                    div = np.zeros(q.nodes.shape)
                    for j in range(3):
                        e = np.zeros(3)
                        e[j] = step
                        Tp = mollify(lambda y: _outer(field.velocity(y, t)), q.nodes + e, ell, kernel, body)
                        Tm = mollify(lambda y: _outer(field.velocity(y, t)), q.nodes - e, ell, kernel, body)
                        div += (Tp[:, :, j] - Tm[:, :, j]) / (2 * step)
                    levels.append(div)
                divT = (4.0 * levels[1] - levels[0]) / 3.0
            elif stress_divergence == "analytic":
                divT = mollify(lambda y: field.convective_flux_divergence(y, t), q.nodes, ell, kernel, body)
            else:
                raise ValueError("stress_divergence must be 'fd' or 'analytic'")
            src = divT - fs.forcing
            if field.nu != 0.0:
                src = src - field.nu * fs.laplacian
            left = b * (q.weights @ (fs.pressure * np.sum(der.curl * grad_eta, axis=-1)))
            r_time = -db * (q.weights @ np.sum(der.value * np.cross(grad_eta, fs.velocity), axis=-1))
            r_flux = b * (q.weights @ np.sum(der.value * np.cross(grad_eta, src), axis=-1))
            return {"step1": left, "step2_time": r_time, "step2_flux": r_flux}

        return _integrate_in_time(field, phi.time, o.time, spatial)

    base = evaluate(orders)
    fine = evaluate(orders.refined())
    left, right = base["step1"], base["step2_time"] + base["step2_flux"]
    left_err = abs(fine["step1"] - left)
    right_err = abs(fine["step2_time"] + fine["step2_flux"] - right)
    inputs = _inputs(field, section, extension=phi.kind, eps=eps, h=h, ell=ell, stress_divergence=stress_divergence)
    return IdentityResidual("lighthill_balance", float(left), float(right), float(left_err), float(right_err),
                            inputs=inputs, details={k: float(v) for k, v in base.items()})


def lighthill_pressure_pairing(field, h, ell, section, eps, orders=QuadratureOrders()):
    """Step-1 pairing ``<<curl(phi) . grad(eta), p_l>>`` alone (for h-sweeps)."""
    if section.kind != "tangential":
        raise ValueError("Lighthill balance uses tangential sections")
    phi = extend(section, eps)
    _check_scales(phi, h, ell)
    body = phi.body
    win = WindowProfile(h, ell)

    def evaluate(o):
        q = body.shell_quadrature(h, ell, o.surface, o.shell)
        weight = q.weights * np.sum(phi.derivatives(q.nodes).curl * q.normals, axis=-1) * win.derivative(q.distance)
        kernel = o.kernel()

        def spatial(t, b, db):
            pbar = mollify(lambda y: field.pressure(y, t), q.nodes, ell, kernel, body)
            return {"step1": b * (weight @ pbar)}

        return _integrate_in_time(field, phi.time, o.time, spatial)

    return _refine(evaluate, orders, "lighthill_pressure", _inputs(field, section, eps=eps, h=h, ell=ell))


def lighthill_surface_pairing(field, section, orders=QuadratureOrders()):
    """``<p_w n, ((n x grad) . psi) n>``: the limit of the step-1 pairing."""
    return pair_wall_pressure(field, lighthill_companion_section(section), orders)


# --------------------------------------------------------------------------
# weak Neumann problem for the pressure


def pressure_weak_neumann_residual(field, scalar_phi, t=None, orders=QuadratureOrders()):
    """``int_Omega [p Lap phi + u u : grad grad phi + s . grad phi] dV`` against ``int p dphi/dnu dA``.

    ``nu`` is the outward normal of the flow domain (``-n``), so the right
    side is ``-int p_w n . grad phi dS``.  The source ``s = g - d_t u +
    nu Lap u`` vanishes for steady unforced Euler fields.  Evaluated at one time ``t``
    (default ``T/2``).  The test function is supported in the tube
    ``d < cutoff`` so no far-field truncation enters.
    """
    body = scalar_phi.body
    t = 0.5 * field.T if t is None else t

    def evaluate(o):
        q = body.tube_quadrature(scalar_phi.cutoff, o.surface, o.radial,
                                 breaks=tuple(f * scalar_phi.cutoff for f in TUBE_BREAKS))
        H = scalar_phi.hessian(q.nodes)
        u = field.velocity(q.nodes, t)
        p = field.pressure(q.nodes, t)
        integrand = p * np.trace(H, axis1=-2, axis2=-1) + np.einsum("ni,nj,nij->n", u, u, H)
        if not (field.forcing_is_zero and field.steady and field.nu == 0.0):
            src = field.forcing(q.nodes, t) - field.velocity_dt(q.nodes, t)
            if field.nu != 0.0:
                src = src + field.nu * field.velocity_laplacian(q.nodes, t)
            integrand = integrand + np.sum(src * scalar_phi.gradient(q.nodes), axis=-1)
        lhs = q.weights @ integrand
        s = body.surface_quadrature(o.surface)
        dphi = np.sum(scalar_phi.q_gradient(s.nodes) * s.normals, axis=-1)
        rhs = -s.integrate(field.wall_pressure(s.nodes, t) * dphi)
        return lhs, rhs

    (l0, r0), (l1, r1) = evaluate(orders), evaluate(orders.refined())
    return IdentityResidual(
        "pressure_weak_neumann", float(l0), float(r0), float(abs(l1 - l0)), float(abs(r1 - r0)),
        inputs={"field": field.ident, "t": t, "cutoff": scalar_phi.cutoff},
    )
