import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from plapeig import fem
from plapeig.core import Annulus, Ball, EccentricAnnulus, HalfBall
from plapeig.fem import (ScalarField, constrained_field, energy_J, grad_G, grad_J, mass_G, mass_matrix,
                         stiffness_matrix)
from plapeig.mesh import build_mesh

DISK = build_mesh(Ball(), 0.1)
COARSE = {
    "disk": build_mesh(Ball(), 0.25),
    "half": build_mesh(HalfBall(), 0.25),
    "annulus": build_mesh(Annulus(0.4), 0.25),
}


def _xfield(mesh):
    return ScalarField(mesh, mesh.vertices[:, 0], constrained=False)


def _random_field(mesh, rng):
    # smooth bump times noise, so no triangle has a vanishing gradient
    r2 = np.sum(mesh.vertices**2, axis=1)
    vals = (1.0 - r2 + 0.3 * rng.standard_normal(mesh.n_vertices)) * (1 + r2)
    return constrained_field(mesh, vals)


def test_zero_field():
    z = constrained_field(DISK, np.zeros(DISK.n_vertices))
    for p in (1.5, 2.0, 3.0):
        assert energy_J(z, p) == 0.0
        assert mass_G(z, p) == 0.0
    assert not np.any(grad_J(z, 2.0, eps=0.0))
    assert not np.any(grad_G(z, 2.0))
    assert fem.stationarity(z, 3.0, 2.0) == 0.0


def test_energy_of_linear_field_is_area():
    assert energy_J(_xfield(DISK), 3.0) == pytest.approx(DISK.area, rel=1e-13)
    assert DISK.area == pytest.approx(math.pi, rel=5e-3)


def test_energy_on_eccentric_annulus():
    mesh = build_mesh(EccentricAnnulus(0.3, 0.0), 0.05)
    assert energy_J(_xfield(mesh), 2.0) == pytest.approx(math.pi * 0.91, rel=5e-3)


def test_mass_of_constant_is_area():
    one = ScalarField(DISK, np.ones(DISK.n_vertices), constrained=False)
    assert mass_G(one, 2.0) == pytest.approx(math.pi, rel=5e-3)


def test_mass_of_x_squared():
    assert mass_G(_xfield(DISK), 2.0) == pytest.approx(math.pi / 4, rel=1e-2)


def _directional_check(fun, grad, u, mesh, rng, step=1e-6):
    d = rng.standard_normal(mesh.n_vertices)
    d[mesh.boundary_mask] = 0.0
    fd = (fun(u.values + step * d) - fun(u.values - step * d)) / (2 * step)
    an = float(grad @ d)
    return abs(fd - an) / abs(an)


@pytest.mark.parametrize("name", sorted(COARSE))
@pytest.mark.parametrize("p,eps,tol", [(2.0, 0.0, 1e-5), (3.5, 1e-8, 1e-4), (1.5, 1e-8, 1e-4)])
def test_grad_J_finite_differences(name, p, eps, tol):
    mesh = COARSE[name]
    rng = np.random.default_rng(1)
    for _ in range(20):
        u = _random_field(mesh, rng)
        g = grad_J(u, p, eps=eps)
        err = _directional_check(lambda v: energy_J(v, p, mesh, eps=eps), g, u, mesh, rng)
        assert err < tol


@pytest.mark.parametrize("name", sorted(COARSE))
@pytest.mark.parametrize("p,tol", [(2.0, 1e-6), (1.5, 1e-4), (3.0, 1e-6)])
def test_grad_G_finite_differences(name, p, tol):
    mesh = COARSE[name]
    rng = np.random.default_rng(2)
    for _ in range(20):
        u = _random_field(mesh, rng)
        err = _directional_check(lambda v: mass_G(v, p, mesh), grad_G(u, p), u, mesh, rng)
        assert err < tol


def test_gradients_vanish_on_boundary():
    u = _random_field(DISK, np.random.default_rng(3))
    for p in (1.5, 2.0, 4.0):
        assert not np.any(grad_J(u, p)[DISK.boundary_mask])
        assert not np.any(grad_G(u, p)[DISK.boundary_mask])


def test_gradients_as_fields():
    u = _random_field(DISK, np.random.default_rng(4))
    g = grad_J(u, 2.0, as_field=True)
    assert isinstance(g, ScalarField) and g.constrained
    assert isinstance(grad_G(u, 2.0, as_field=True), ScalarField)


@pytest.mark.parametrize("p", [1.5, 2.0, 3.0, 7.0])
@pytest.mark.parametrize("c", [-2.0, 0.5, 3.0])
def test_homogeneity(p, c):
    u = _random_field(DISK, np.random.default_rng(5))
    assert energy_J(c * u, p) == pytest.approx(abs(c) ** p * energy_J(u, p), rel=1e-13)
    assert mass_G(c * u, p) == pytest.approx(abs(c) ** p * mass_G(u, p), rel=1e-13)


@settings(max_examples=30, deadline=None)
@given(st.floats(-10, 10).filter(lambda c: abs(c) > 1e-3), st.floats(1.1, 10.0))
def test_homogeneity_property(c, p):
    u = _random_field(COARSE["half"], np.random.default_rng(6))
    assert energy_J(c * u, p) == pytest.approx(abs(c) ** p * energy_J(u, p), rel=1e-12)
    assert mass_G(c * u, p) == pytest.approx(abs(c) ** p * mass_G(u, p), rel=1e-12)


def test_quadratic_forms_at_p2():
    u = _random_field(DISK, np.random.default_rng(7))
    k, m = stiffness_matrix(DISK), mass_matrix(DISK)
    v = u.values
    assert energy_J(u, 2.0) == pytest.approx(v @ (k @ v), rel=1e-12)
    assert mass_G(u, 2.0) == pytest.approx(v @ (m @ v), rel=1e-12)
    assert np.allclose(grad_J(u, 2.0, eps=0.0), np.where(DISK.boundary_mask, 0, 2 * (k @ v)), atol=1e-12)


def test_bitwise_reproducible():
    u = _random_field(DISK, np.random.default_rng(8))
    a = (energy_J(u, 1.7), mass_G(u, 1.7), grad_J(u, 1.7).tobytes())
    b = (energy_J(u, 1.7), mass_G(u, 1.7), grad_J(u, 1.7).tobytes())
    assert a == b


def test_scalar_field_invariants():
    with pytest.raises(ValueError, match="values"):
        ScalarField(DISK, np.zeros(3))
    bad = np.ones(DISK.n_vertices)
    with pytest.raises(ValueError, match="boundary"):
        ScalarField(DISK, bad, constrained=True)
    f = constrained_field(DISK, bad)
    assert np.all(f.values[DISK.boundary_mask] == 0.0)
    with pytest.raises(ValueError):
        f.values[0] = 2.0
    assert np.array_equal((-f).values, -f.values)


def test_regularized_energy_tends_to_exact():
    u = _random_field(DISK, np.random.default_rng(9))
    exact = energy_J(u, 1.5)
    assert energy_J(u, 1.5, eps=1e-8) == pytest.approx(exact, rel=1e-12)
    # regularization is a no-op for p >= 2
    assert energy_J(u, 3.0, eps=0.1) == energy_J(u, 3.0)


def test_stationarity_of_linear_eigenpair():
    # the discrete p=2 eigenvector from scipy has zero residual
    from scipy.sparse.linalg import eigsh

    mesh = build_mesh(Ball(), 0.1)
    inner = ~mesh.boundary_mask
    k = stiffness_matrix(mesh)[inner][:, inner]
    m = mass_matrix(mesh)[inner][:, inner]
    lam, vec = eigsh(k.tocsc(), k=1, M=m.tocsc(), sigma=0.0)
    vals = np.zeros(mesh.n_vertices)
    vals[inner] = vec[:, 0]
    u = constrained_field(mesh, vals)
    assert fem.stationarity(u, lam[0], 2.0) < 1e-10
    assert fem.stationarity(u, 1.1 * lam[0], 2.0) > 0.05
