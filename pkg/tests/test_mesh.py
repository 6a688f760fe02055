import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from plapeig.core import Annulus, Ball, EccentricAnnulus, HalfBall, MeshError, Sector
from plapeig.mesh import (TriMesh, build_mesh, prolong, read_plain, refine, validate_mesh, write_plain,
                          write_vtk)

DOMAINS = [
    (Ball(), True),
    (HalfBall(), True),
    (Sector(0.0, math.pi / 2), True),
    (Sector(0.0, math.pi / 4), True),
    (Sector(0.3, 2.0), True),
    (Annulus(0.4356, 1.0), False),
    (EccentricAnnulus(0.3, 0.0), False),
    (EccentricAnnulus(0.3, 0.4), False),
]


def _on_boundary_distance(mesh, domain):
    """Distance of each boundary vertex to the analytic boundary."""
    x, y = mesh.vertices[mesh.boundary_mask].T
    r = np.hypot(x, y)
    cands = [np.abs(r - 1.0)]
    if isinstance(domain, Annulus):
        cands.append(np.abs(r - domain.inner))
    if isinstance(domain, EccentricAnnulus):
        cands.append(np.abs(np.hypot(x - domain.t, y) - domain.r))
    if isinstance(domain, (Sector, HalfBall)):
        lo, hi = (0.0, math.pi) if isinstance(domain, HalfBall) else (domain.angle_lo, domain.angle_hi)
        for a in (lo, hi):
            # distance to the ray at angle a
            cands.append(np.abs(-math.sin(a) * x + math.cos(a) * y))
    return np.min(cands, axis=0)


@pytest.mark.parametrize("domain,simply", DOMAINS)
def test_mesh_invariants(domain, simply):
    h = 0.1
    mesh = build_mesh(domain, h)
    validate_mesh(mesh, simply_connected=simply)
    assert mesh.h <= 1.5 * h
    assert mesh.min_angle() >= 20.0
    assert np.max(_on_boundary_distance(mesh, domain)) < 1e-12
    assert mesh.euler_characteristic == (1 if simply else 0)


def test_disk_area():
    assert build_mesh(Ball(), 0.1).area == pytest.approx(math.pi, rel=5e-3)


def test_half_disk_area_and_side():
    mesh = build_mesh(Sector(0.0, math.pi), 0.1)
    assert mesh.area == pytest.approx(math.pi / 2, rel=5e-3)
    assert mesh.vertices[:, 1].min() >= -1e-12


def test_eccentric_annulus_area_and_hole():
    spec = EccentricAnnulus(0.3, 0.2)
    mesh = build_mesh(spec, 0.05)
    assert mesh.area == pytest.approx(math.pi * (1 - 0.09), rel=5e-3)
    d = np.hypot(mesh.vertices[:, 0] - 0.2, mesh.vertices[:, 1])
    assert d.min() >= 0.3 - 1e-12


def test_gap_too_small():
    with pytest.raises(MeshError, match="mesh too coarse for gap"):
        build_mesh(EccentricAnnulus(0.3, 0.62), 0.05)


def test_gap_exactly_two_h_is_allowed():
    build_mesh(EccentricAnnulus(0.3, 0.6), 0.05)


@pytest.mark.parametrize("h", [0.0, -0.1, 0.6])
def test_bad_h(h):
    with pytest.raises(MeshError):
        build_mesh(Ball(), h)


def test_full_sector_is_disk():
    a = build_mesh(Sector(0.0, 2 * math.pi), 0.1)
    assert a.euler_characteristic == 1
    assert not a.boundary_mask[np.argmin(np.hypot(*a.vertices.T))]


def test_sector_apex_is_boundary():
    mesh = build_mesh(Sector(0.0, math.pi / 3), 0.1)
    apex = np.argmin(np.hypot(*mesh.vertices.T))
    assert np.hypot(*mesh.vertices[apex]) < 1e-14
    assert mesh.boundary_mask[apex]


@pytest.mark.parametrize("domain,simply", DOMAINS[:6])
def test_refine_invariants(domain, simply):
    mesh = build_mesh(domain, 0.1)
    fine = refine(mesh)
    validate_mesh(fine, simply_connected=simply)
    assert fine.n_triangles == 4 * mesh.n_triangles
    assert fine.h == pytest.approx(mesh.h / 2, rel=0.1)
    nb, nb_fine = mesh.boundary_mask.sum(), fine.boundary_mask.sum()
    assert abs(nb_fine - 2 * nb) <= 1
    assert np.max(_on_boundary_distance(fine, domain)) < 1e-12


def test_refine_eccentric_annulus_keeps_boundary_on_circles():
    spec = EccentricAnnulus(0.3, 0.3)
    fine = refine(build_mesh(spec, 0.1))
    validate_mesh(fine, simply_connected=False)
    assert np.max(_on_boundary_distance(fine, spec)) < 1e-12


def test_refine_area_converges_quadratically():
    mesh = build_mesh(Ball(), 0.1)
    errs = []
    for _ in range(3):
        errs.append(math.pi - mesh.area)
        mesh = refine(mesh)
    assert errs[0] > 0
    for a, b in zip(errs, errs[1:]):
        assert 3.5 < a / b < 4.5


@pytest.mark.parametrize("domain,simply", DOMAINS)
def test_determinism(domain, simply, tmp_path):
    paths = []
    for k in range(2):
        paths.append(tmp_path / f"m{k}.txt")
        write_plain(paths[-1], build_mesh(domain, 0.1))
    assert paths[0].read_bytes() == paths[1].read_bytes()


def test_plain_round_trip(tmp_path):
    mesh = build_mesh(Annulus(0.5), 0.1)
    path = tmp_path / "annulus.txt"
    write_plain(path, mesh)
    first = path.read_text().splitlines()[0]
    assert first == f"{mesh.n_vertices} {mesh.n_triangles}"
    back = read_plain(path)
    assert np.array_equal(back.vertices, mesh.vertices)
    assert np.array_equal(back.triangles, mesh.triangles)
    assert np.array_equal(back.boundary_mask, mesh.boundary_mask)


def test_read_plain_validates(tmp_path):
    path = tmp_path / "bad.txt"
    # clockwise triangle
    path.write_text("3 1\n0 0 1\n0 1 1\n1 0 1\n0 1 2\n")
    with pytest.raises(MeshError):
        read_plain(path)


def test_vtk_export(tmp_path):
    mesh = build_mesh(Ball(), 0.2)
    path = tmp_path / "disk.vtk"
    write_vtk(path, mesh, {"u": np.arange(mesh.n_vertices, dtype=float)})
    text = path.read_text()
    assert text.startswith("# vtk DataFile Version")
    assert f"POINTS {mesh.n_vertices} double" in text
    assert f"CELLS {mesh.n_triangles} {4 * mesh.n_triangles}" in text
    assert "SCALARS u double" in text


def _square():
    v = np.array([[0, 0], [1, 0], [1, 1], [0, 1], [0.5, 0.5]], dtype=float)
    t = np.array([[0, 1, 4], [1, 2, 4], [2, 3, 4], [3, 0, 4]])
    b = np.array([True, True, True, True, False])
    return v, t, b


def test_validate_accepts_square():
    v, t, b = _square()
    validate_mesh(TriMesh(v, t, b), simply_connected=True)


def test_validate_rejects_flipped_triangle():
    v, t, b = _square()
    t[0] = t[0][::-1]
    with pytest.raises(MeshError, match="signed area"):
        validate_mesh(TriMesh(v, t, b))


def test_validate_rejects_unflagged_boundary():
    v, t, b = _square()
    b[0] = False
    with pytest.raises(MeshError, match="boundary edge"):
        validate_mesh(TriMesh(v, t, b))


def test_validate_rejects_duplicates():
    v, t, b = _square()
    v = np.vstack([v, v[4] + 1e-13])
    b = np.append(b, False)
    t = np.vstack([t, [[0, 1, 5]]])
    with pytest.raises(MeshError):
        validate_mesh(TriMesh(v, t, b))


def test_validate_rejects_disconnected():
    v, t, b = _square()
    v = np.vstack([v, v + 5.0])
    t = np.vstack([t, t + 5])
    b = np.concatenate([b, b])
    with pytest.raises(MeshError, match="connected components"):
        validate_mesh(TriMesh(v, t, b))


def test_mesh_arrays_read_only():
    mesh = build_mesh(Ball(), 0.2)
    with pytest.raises(ValueError):
        mesh.vertices[0, 0] = 1.0


def test_prolong_is_exact_for_linear_fields():
    mesh = build_mesh(HalfBall(), 0.1)
    f = lambda xy: 2.0 * xy[:, 0] - 0.5 * xy[:, 1]
    fine = refine(mesh)
    vals = prolong(mesh, f(mesh.vertices))
    interior = ~fine.boundary_mask
    assert np.allclose(vals[interior], f(fine.vertices)[interior], atol=1e-14)
    new_boundary = fine.boundary_mask.copy()
    new_boundary[:mesh.n_vertices] = False
    assert np.all(vals[new_boundary] == 0.0)


@settings(max_examples=20, deadline=None)
@given(st.floats(0.05, 0.5), st.floats(0.2, 2.0 * math.pi))
def test_sector_mesh_property(h, span):
    domain = Sector(0.0, span)
    mesh = build_mesh(domain, h)
    validate_mesh(mesh)
    assert mesh.area == pytest.approx(domain.area, rel=0.1)
    assert mesh.h <= 1.5 * h
