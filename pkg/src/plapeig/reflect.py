"""Odd reflection of sector eigenfunctions and nodal-domain analysis.

The sector ``S_1 = {0 <= theta <= pi/n}`` is reflected across the lines
``theta = k pi / n`` (k = 1, ..., 2n-1) to tile the unit disk with sectors
``S_1, ..., S_2n``.  Reflecting the mesh itself, instead of remeshing the
disk, gives an exact vertex correspondence between the copies, so the odd
extension ``u_{i+1} = -u_i o sigma`` needs no interpolation.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

from . import fem
from .core import Ball, MeshError, Sector
from .mesh import TriMesh, build_mesh, validate_mesh

MATCH_TOL = 1e-10
NODAL_THRESHOLD = 1e-10


def hyperplane_normal(theta):
    """Unit normal of the line through the origin at angle ``theta``."""
    return np.array([-math.sin(theta), math.cos(theta)])


def sigma(x, a):
    """Reflection ``x - 2 (x . a) a`` across the hyperplane with unit normal ``a``.

    ``x`` may be a single point or an array of points along the last axis.
    """
    x = np.asarray(x, dtype=float)
    a = np.asarray(a, dtype=float)
    return x - 2.0 * (x @ a)[..., None] * a


@dataclass(frozen=True, eq=False)
class ReflectionPlan:
    """Sector mesh, its reflected copies and the assembled disk mesh.

    Attributes
    ----------
    n : int
    sector : TriMesh
        Mesh of ``Sector(0, pi/n)``.
    disk : TriMesh
        Union of the 2n reflected copies with shared vertices merged.
    normals : ndarray, shape (2n-1, 2)
        ``normals[k-1]`` is the unit normal of the line ``theta = k pi / n``.
    copy_index : ndarray, shape (2n, V_sector)
        ``copy_index[i, j]`` is the disk vertex holding vertex ``j`` of copy ``i``.
    triangle_copy : ndarray, shape (T_disk,)
        Copy number of every disk triangle.
    """

    n: int
    sector: TriMesh
    disk: TriMesh
    normals: np.ndarray
    copy_index: np.ndarray
    triangle_copy: np.ndarray

    def copy_vertices(self, i):
        """Coordinates of copy ``i`` (0-based) of the sector vertices."""
        return self.disk.vertices[self.copy_index[i]]


def reflection_plan(n, sector_mesh=None, h=0.05):
    """Build the disk mesh for ``Psi_n`` by reflecting a sector mesh.

    Raises
    ------
    MeshError
        If copies fail to match within ``MATCH_TOL`` on a shared ray.
    """
    if int(n) != n or n < 1:
        raise ValueError(f"n must be a positive integer, got {n}")
    n = int(n)
    if sector_mesh is None:
        sector_mesh = build_mesh(Sector(0.0, math.pi / n), h)
    normals = np.array([hyperplane_normal(k * math.pi / n) for k in range(1, 2 * n)])

    v1 = sector_mesh.vertices
    copies = [v1]
    for k in range(1, 2 * n):
        copies.append(sigma(copies[-1], normals[k - 1]))
    pts = np.vstack(copies)
    nv = len(v1)

    # merge coincident vertices through the components of the near-pair graph
    pairs = cKDTree(pts).query_pairs(MATCH_TOL, output_type="ndarray")
    graph = sparse.coo_matrix((np.ones(len(pairs)), (pairs[:, 0], pairs[:, 1])), shape=(len(pts),) * 2)
    ncomp, label = connected_components(graph, directed=False)
    # renumber components in order of first appearance
    first = np.full(ncomp, -1)
    order = np.arange(len(pts))[::-1]
    first[label[order]] = order
    rank = np.empty(ncomp, dtype=np.int64)
    rank[np.argsort(first)] = np.arange(ncomp)
    index = rank[label]
    # shared vertices keep the coordinates of their first copy
    verts = np.empty((ncomp, 2))
    verts[rank] = pts[first]
    copy_index = index.reshape(2 * n, nv)

    tris, tcopy = [], []
    for i in range(2 * n):
        t = copy_index[i][sector_mesh.triangles]
        # reflections reverse orientation on odd copies
        tris.append(t[:, ::-1] if i % 2 else t)
        tcopy.append(np.full(len(t), i))
    tris = np.vstack(tris)

    on_circle = np.abs(np.hypot(verts[:, 0], verts[:, 1]) - 1.0) < 1e-9
    disk = TriMesh(verts, tris, on_circle, domain=Ball(2, 1.0))
    bnd = disk.boundary_edges
    if len(bnd) and not np.all(on_circle[bnd]):
        raise MeshError("reflected sector copies do not match on a shared ray "
                        f"(vertex mismatch above {MATCH_TOL:g})")
    validate_mesh(disk, simply_connected=True)
    return ReflectionPlan(n, sector_mesh, disk, normals, copy_index, np.concatenate(tcopy))


def reflect_odd(u1, plan):
    """Odd extension ``Psi_n`` of a Dirichlet field on the sector to the disk.

    Copy ``i`` (0-based) carries ``(-1)**i * u1``; every internal ray is a
    Dirichlet line of the sector, so copies agree (at zero) on shared vertices.
    """
    if u1.mesh is not plan.sector:
        raise ValueError("u1 must live on plan.sector")
    if not u1.constrained:
        raise ValueError("u1 must be a Dirichlet-constrained field")
    values = np.zeros(plan.disk.n_vertices)
    for i in range(2 * plan.n):
        values[plan.copy_index[i]] = (-1) ** i * u1.values
    return fem.ScalarField(plan.disk, values, constrained=True)


def count_nodal_domains(u, threshold=None):
    """Number of connected components of ``{u > thr}`` plus those of ``{u < -thr}``.

    Two vertices are connected when they share a mesh edge and the same
    sign class; vertices with ``|u| <= thr`` are neutral.  The default
    threshold is ``1e-10 * max|u|``.
    """
    values = u.values
    if threshold is None:
        threshold = NODAL_THRESHOLD * float(np.max(np.abs(values), initial=0.0))
    if threshold < 0:
        raise ValueError("threshold must be nonnegative")
    cls = np.where(values > threshold, 1, np.where(values < -threshold, -1, 0))
    if not np.any(cls):
        return 0
    e = u.mesh.edges
    keep = (cls[e[:, 0]] == cls[e[:, 1]]) & (cls[e[:, 0]] != 0)
    e = e[keep]
    nv = u.mesh.n_vertices
    graph = sparse.coo_matrix((np.ones(len(e)), (e[:, 0], e[:, 1])), shape=(nv, nv))
    _, label = connected_components(graph, directed=False)
    return len(np.unique(label[cls != 0]))


def weak_residual(u, lam, p, eps=0.0):
    """Relative residual of the discrete weak eigenvalue equation.

    ``max_v |a(u, phi_v) - lam b(u, phi_v)|`` over interior hat functions,
    divided by ``max_v |lam b(u, phi_v)|``; the same measure the
    eigensolver uses as its stopping criterion.  Zero for ``u = 0``.
    """
    return fem.stationarity(u, lam, p, eps=eps)


def nodal_domain_areas(u, threshold=None):
    """Areas of the nodal domains of ``u``, largest first.

    A triangle is assigned to the nodal domain of its vertices when they
    all belong to one sign component; the few triangles cut by the nodal
    set are split evenly between neighbours of opposite sign.
    """
    values = u.values
    mesh = u.mesh
    if threshold is None:
        threshold = NODAL_THRESHOLD * float(np.max(np.abs(values), initial=0.0))
    cls = np.where(values > threshold, 1, np.where(values < -threshold, -1, 0))
    e = mesh.edges
    keep = (cls[e[:, 0]] == cls[e[:, 1]]) & (cls[e[:, 0]] != 0)
    nv = mesh.n_vertices
    graph = sparse.coo_matrix((np.ones(int(keep.sum())), (e[keep, 0], e[keep, 1])), shape=(nv, nv))
    _, label = connected_components(graph, directed=False)
    label = np.where(cls != 0, label, -1)
    # each vertex takes a third of every adjacent triangle's area
    share = np.bincount(mesh.triangles.ravel(), weights=np.repeat(mesh.areas / 3.0, 3), minlength=nv)
    # neutral vertices split their share among signed neighbours
    adj = mesh.adjacency().tocsr()
    for v in np.flatnonzero(label < 0):
        nb = adj.indices[adj.indptr[v]:adj.indptr[v + 1]]
        nb = nb[label[nb] >= 0]
        if len(nb):
            np.add.at(share, nb, share[v] / len(nb))
        share[v] = 0.0
    comps = np.unique(label[label >= 0])
    areas = [float(share[label == c].sum()) for c in comps]
    return sorted(areas, reverse=True)
