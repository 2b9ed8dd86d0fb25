import numpy as np
import pytest
from hypothesis import given, strategies as st
from numpy.testing import assert_allclose

from wallcascade.differences import gradient, laplacian
from wallcascade.errors import DataCoverageError, DataError
from wallcascade.fields import (
    BoundaryLayerFamily,
    ManufacturedField,
    PotentialSphere,
    StokesSphere,
    UniformField,
    check_divergence_free,
    grad_velocity,
    read_snapshot,
    sample_field,
    wall_shear_stress,
    write_snapshot,
)

from conftest import shell_points

CATALOG = [
    PotentialSphere(),
    StokesSphere(nu=0.5),
    BoundaryLayerFamily(0.01, 0.5),
    BoundaryLayerFamily(0.01, 1.0),
    BoundaryLayerFamily(0.01, 0.5, normal_correction=False),
]


def _theta(s):
    return np.arccos(np.clip(s[:, 0], -1, 1))


@pytest.mark.parametrize("field", CATALOG[:4], ids=lambda f: f.ident)
def test_catalog_fields_are_solenoidal(field, sphere):
    x = shell_points(sphere, np.random.default_rng(0), 200, 0.0, 0.45)
    rep = check_divergence_free(field, x)
    assert not rep.flagged, rep


def test_uncorrected_family_is_not_solenoidal(sphere):
    # dropping the normal correction leaves an O(1) divergence inside the layer
    x = shell_points(sphere, np.random.default_rng(0), 200, 0.0, 0.1)
    assert check_divergence_free(CATALOG[4], x).flagged


@pytest.mark.parametrize("field", CATALOG, ids=lambda f: f.ident)
def test_analytic_gradient_and_laplacian_match_differences(field, sphere):
    x = shell_points(sphere, np.random.default_rng(1), 40, 0.02, 0.45)
    G = field.velocity_gradient(x, 0.5)
    fd = gradient(lambda y: field.velocity(y, 0.5), x, 1e-4)
    assert_allclose(G, fd, atol=1e-8 * max(1.0, np.abs(G).max()))
    L = field.velocity_laplacian(x, 0.5)
    fdl = laplacian(lambda y: field.velocity(y, 0.5), x, 1e-3)
    assert_allclose(L, fdl, atol=1e-5 * max(1.0, np.abs(L).max()))


def test_potential_wall_slip_and_bernoulli(potential, sphere):
    s = sphere.surface_quadrature(6).nodes
    u = potential.velocity(s, 0.5)
    assert_allclose(np.sum(u * sphere.normal(s), axis=-1), 0.0, atol=1e-14)
    assert_allclose(np.linalg.norm(u, axis=-1), 1.5 * np.sin(_theta(s)), atol=1e-14)
    x = shell_points(sphere, np.random.default_rng(2), 30, 0.0, 2.0)
    head = potential.pressure(x, 0.5) + 0.5 * np.sum(potential.velocity(x, 0.5) ** 2, axis=-1)
    assert_allclose(head, 0.5, atol=1e-14)


def test_potential_matches_symbolic_field(potential, sphere):
    r = "sqrt(x**2 + y**2 + z**2)"
    ux = f"1 + (1/(2*{r}**3)) - 3*x**2/(2*{r}**5)"
    uy = f"-3*x*y/(2*{r}**5)"
    uz = f"-3*x*z/(2*{r}**5)"
    p = f"(1 - (({ux})**2 + ({uy})**2 + ({uz})**2))/2"
    m = ManufacturedField([ux, uy, uz], p, body=sphere)
    x = shell_points(sphere, np.random.default_rng(3), 30, 0.0, 0.4)
    assert_allclose(m.velocity(x, 0.0), potential.velocity(x, 0.0), atol=1e-13)
    assert_allclose(m.velocity_gradient(x, 0.0), potential.velocity_gradient(x, 0.0), atol=1e-12)
    # steady Euler: the symbolic residual vanishes
    assert_allclose(m.forcing(x, 0.0), 0.0, atol=1e-12)


def test_stokes_no_slip_and_wall_shear(sphere):
    f = StokesSphere(U=2.0, nu=0.3)
    s = sphere.surface_quadrature(8).nodes
    assert_allclose(f.velocity(s, 0.5), 0.0, atol=1e-14)
    tau = wall_shear_stress(f, s, 0.5)
    assert_allclose(np.linalg.norm(tau, axis=-1), 1.5 * 0.3 * 2.0 * np.sin(_theta(s)), atol=1e-12)
    assert_allclose(np.sum(tau * sphere.normal(s), axis=-1), 0.0, atol=1e-13)


def test_stokes_residual_is_the_convective_term(stokes, sphere):
    x = shell_points(sphere, np.random.default_rng(4), 20, 0.05, 0.4)
    assert_allclose(stokes.forcing(x, 0.5), stokes.convective_flux_divergence(x, 0.5), atol=1e-12)


def test_boundary_layer_family(sphere):
    f = BoundaryLayerFamily(2.0**-8, 0.5)
    assert_allclose(f.delta, 2.0**-4)
    s = sphere.surface_quadrature(8).nodes
    assert_allclose(f.velocity(s, 0.5), 0.0, atol=1e-13)
    tau = wall_shear_stress(f, s, 0.5)
    assert_allclose(np.linalg.norm(tau, axis=-1), f.wall_shear_magnitude(_theta(s)), atol=1e-12)
    assert isinstance(f.limit_state(), PotentialSphere)
    # outside the layer the field is the outer potential flow
    x = shell_points(sphere, np.random.default_rng(5), 20, 1.1 * f.delta, 0.45)
    pot = PotentialSphere()
    g = BoundaryLayerFamily(2.0**-8, 0.5, normal_correction=False)
    assert_allclose(g.velocity(x, 0.5), pot.velocity(x, 0.5), atol=1e-14)


def test_uncorrected_family_keeps_outer_normal_velocity(sphere):
    g = BoundaryLayerFamily(0.01, 0.5, normal_correction=False)
    pot = PotentialSphere()
    x = shell_points(sphere, np.random.default_rng(6), 50, 0.0, 0.2)
    n = sphere.normal(sphere.project(x))
    assert_allclose(np.sum(g.velocity(x, 0.5) * n, -1), np.sum(pot.velocity(x, 0.5) * n, -1), atol=1e-14)


@given(st.floats(0.0, np.pi), st.floats(0.0, 2 * np.pi), st.floats(0.0, 0.45))
def test_velocity_gradient_decomposition(theta, phi, d):
    f = StokesSphere(nu=0.5)
    x = (1 + d) * np.array([[np.cos(theta), np.sin(theta) * np.cos(phi), np.sin(theta) * np.sin(phi)]])
    G = grad_velocity(f, x, 0.5)
    W = 0.5 * (G.tensor - np.swapaxes(G.tensor, -1, -2))
    assert_allclose(G.strain + W, G.tensor, atol=1e-14)
    # omega x v = 2 W v (the rotation part acts as a cross product)
    v = np.array([0.3, -0.2, 0.9])
    assert_allclose(np.cross(G.vorticity, v), 2 * W @ v, atol=1e-13)
    assert abs(G.divergence[0]) < 1e-12


def test_wall_shear_rejects_slip(sphere):
    f = UniformField((1.0, 0.0, 0.0), 0.0, nu=0.1, body=sphere)
    with pytest.raises(ValueError, match="no-slip violated"):
        wall_shear_stress(f, sphere.surface_quadrature(4).nodes, 0.5)
    assert_allclose(wall_shear_stress(PotentialSphere(), sphere.surface_quadrature(4).nodes, 0.5), 0.0)


def test_divergence_check_flags_compressible_field(sphere):
    m = ManufacturedField(["x", "0", "0"], "0", body=sphere)
    rep = check_divergence_free(m, np.array([[1.2, 0.0, 0.0]]))
    assert rep.flagged and rep.max_abs == pytest.approx(1.0)


def test_snapshot_round_trip(tmp_path, potential, sphere):
    origin, spacing, dims = (-1.85, -1.85, -1.85), (0.1, 0.1, 0.1), (38, 38, 38)
    data = sample_field(potential, origin, spacing, dims)
    path = tmp_path / "snap.txt"
    write_snapshot(path, data, origin, spacing, nu=0.0, T=1.0)
    f = read_snapshot(path, body=sphere)
    assert_allclose(f.data, data, rtol=0, atol=0)
    x = shell_points(sphere, np.random.default_rng(7), 20, 0.1, 0.4)
    assert_allclose(f.velocity(x, 0.0), potential.velocity(x, 0.0), atol=0.02)
    s = sphere.surface_quadrature(4).nodes
    assert_allclose(f.wall_pressure(s, 0.0), potential.pressure(s, 0.0), atol=0.05)


def test_sampled_field_coverage_and_format_errors(tmp_path, potential, sphere):
    data = sample_field(potential, (1.0, 1.0, 1.0), (0.1, 0.1, 0.1), (5, 5, 5))
    path = tmp_path / "snap.txt"
    write_snapshot(path, data, (1.0, 1.0, 1.0), (0.1, 0.1, 0.1))
    f = read_snapshot(path, body=sphere)
    with pytest.raises(DataCoverageError, match="out of data coverage"):
        f.velocity(np.array([[0.0, 0.0, 0.0]]), 0.0)
    bad = tmp_path / "bad.txt"
    bad.write_text("origin = 0 0 0\nspacing = 1 1\ndims = 4 4 4\n\n0 0 0 0\n")
    with pytest.raises(DataError):
        read_snapshot(bad)
    with pytest.raises(DataError, match="cannot read snapshot"):
        read_snapshot(tmp_path / "missing.txt")
