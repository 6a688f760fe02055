"""P1 finite-element versions of the energy and mass functionals.

For a piecewise linear field ``u`` on a triangulation:

* ``energy_J(u) = sum_T |T| |grad u|_T|^p`` is exact, the gradient being
  constant on each triangle;
* ``mass_G(u)`` integrates ``|u|^p`` with the three-point edge-midpoint
  rule, exact for p = 2 and an approximation otherwise.

Reductions over triangles go through :func:`numpy.bincount`, which sums in
a fixed order, so results are reproducible bit for bit.
"""
from __future__ import annotations

import weakref
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import sparse

DEFAULT_EPS = 1e-8
# edge-midpoint rule: midpoint m_k sits between local vertices k and k+1
_MID = ((0, 1), (1, 2), (2, 0))


class _Geometry:
    """Per-mesh quantities needed by the P1 forms."""

    def __init__(self, mesh):
        p = mesh.vertices[mesh.triangles]
        area2 = ((p[:, 1, 0] - p[:, 0, 0]) * (p[:, 2, 1] - p[:, 0, 1])
                 - (p[:, 1, 1] - p[:, 0, 1]) * (p[:, 2, 0] - p[:, 0, 0]))
        self.area = 0.5 * np.abs(area2)
        # gradient of barycentric coordinate k: rot90(opposite edge) / 2|T|
        grads = np.empty((len(p), 3, 2))
        for k in range(3):
            a = p[:, (k + 1) % 3]
            b = p[:, (k + 2) % 3]
            grads[:, k, 0] = (a[:, 1] - b[:, 1]) / area2
            grads[:, k, 1] = (b[:, 0] - a[:, 0]) / area2
        self.grads = grads
        self.triangles = mesh.triangles
        self.n = mesh.n_vertices


_GEOM_CACHE = weakref.WeakKeyDictionary()


def geometry(mesh):
    g = _GEOM_CACHE.get(mesh)
    if g is None:
        g = _GEOM_CACHE[mesh] = _Geometry(mesh)
    return g


@dataclass(frozen=True, eq=False)
class ScalarField:
    """Vertex values of a P1 function on ``mesh``.

    With ``constrained=True`` the values vanish at every boundary vertex.
    """

    mesh: object
    values: np.ndarray
    constrained: bool = True

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.shape != (self.mesh.n_vertices,):
            raise ValueError(f"field has {v.shape} values for {self.mesh.n_vertices} vertices")
        if self.constrained:
            bnd = self.mesh.boundary_mask
            if np.any(np.abs(v[bnd]) > 1e-14):
                raise ValueError("constrained field is nonzero on the boundary")
            v[bnd] = 0.0
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    def with_values(self, values):
        return ScalarField(self.mesh, values, self.constrained)

    def __mul__(self, c):
        return self.with_values(c * self.values)

    __rmul__ = __mul__

    def __neg__(self):
        return self.with_values(-self.values)


def constrained_field(mesh, values):
    """Build a Dirichlet field, zeroing ``values`` on the boundary first."""
    v = np.array(values, dtype=float)
    v[mesh.boundary_mask] = 0.0
    return ScalarField(mesh, v, True)


def _values(u):
    return u.values if isinstance(u, ScalarField) else np.asarray(u, dtype=float)


def _mesh_of(u, mesh):
    return u.mesh if isinstance(u, ScalarField) else mesh


def triangle_gradients(u, mesh=None):
    """Constant gradient of ``u`` on each triangle, shape (T, 2)."""
    mesh = _mesh_of(u, mesh)
    g = geometry(mesh)
    ut = _values(u)[g.triangles]
    return np.einsum("tk,tkd->td", ut, g.grads)


def _midpoint_values(ut):
    return np.column_stack([0.5 * (ut[:, a] + ut[:, b]) for a, b in _MID])


def energy_J(u, p, mesh=None, eps=0.0):
    """``sum_T |T| |grad u|^p``.

    With ``eps > 0`` and p < 2 the integrand becomes ``(|grad u|^2 + eps^2)^(p/2)``,
    the functional whose exact gradient is :func:`grad_J` at the same eps.
    """
    mesh = _mesh_of(u, mesh)
    g = geometry(mesh)
    gu = triangle_gradients(u, mesh)
    if eps and p < 2:
        return float(np.sum(g.area * (gu[:, 0] ** 2 + gu[:, 1] ** 2 + eps * eps) ** (p / 2)))
    return float(np.sum(g.area * np.hypot(gu[:, 0], gu[:, 1]) ** p))


def mass_G(u, p, mesh=None):
    """Edge-midpoint quadrature of ``int |u|^p``."""
    mesh = _mesh_of(u, mesh)
    g = geometry(mesh)
    um = _midpoint_values(_values(u)[g.triangles])
    return float(np.sum(g.area / 3.0 * np.sum(np.abs(um) ** p, axis=1)))


def _scatter(g, local):
    """Assemble per-triangle local vectors (T, 3) into a global vector."""
    return np.bincount(g.triangles.ravel(), weights=local.ravel(), minlength=g.n)


def _finish(vec, u, mesh, as_field):
    vec[mesh.boundary_mask] = 0.0
    if as_field:
        return ScalarField(mesh, vec, constrained=True)
    return vec


def grad_J(u, p, eps=DEFAULT_EPS, mesh=None, as_field=False):
    """Partial derivatives of ``energy_J`` with respect to vertex values.

    For p < 2 the weight ``(|grad u|^2 + eps^2)^((p-2)/2)`` replaces
    ``|grad u|^(p-2)``, matching ``energy_J(..., eps=eps)``; with ``eps = 0``
    and for p >= 2 this is the exact derivative.  Boundary rows are zero.
    """
    mesh = _mesh_of(u, mesh)
    g = geometry(mesh)
    gu = triangle_gradients(u, mesh)
    s = gu[:, 0] ** 2 + gu[:, 1] ** 2
    if p == 2:
        wt = np.ones_like(s)
    elif p > 2:
        wt = s ** ((p - 2) / 2)
    else:
        with np.errstate(divide="ignore", invalid="ignore"):
            wt = (s + eps * eps) ** ((p - 2) / 2)
        wt[~np.isfinite(wt)] = 0.0
    coef = p * g.area * wt
    local = np.einsum("t,td,tkd->tk", coef, gu, g.grads)
    return _finish(_scatter(g, local), u, mesh, as_field)


def grad_G(u, p, mesh=None, as_field=False):
    """Partial derivatives of ``mass_G`` with respect to vertex values."""
    mesh = _mesh_of(u, mesh)
    g = geometry(mesh)
    um = _midpoint_values(_values(u)[g.triangles])
    dm = p * np.sign(um) * np.abs(um) ** (p - 1) * (g.area / 3.0)[:, None]
    local = np.zeros_like(um)
    for m, (a, b) in enumerate(_MID):
        local[:, a] += 0.5 * dm[:, m]
        local[:, b] += 0.5 * dm[:, m]
    return _finish(_scatter(g, local), u, mesh, as_field)


def weighted_stiffness(mesh, weights=None):
    """Sparse matrix of ``sum_T w_T |T| grad phi_i . grad phi_j``."""
    g = geometry(mesh)
    w = g.area if weights is None else g.area * weights
    local = np.einsum("t,tid,tjd->tij", w, g.grads, g.grads)
    rows = np.repeat(g.triangles, 3, axis=1).ravel()
    cols = np.tile(g.triangles, (1, 3)).ravel()
    return sparse.csr_matrix((local.ravel(), (rows, cols)), shape=(g.n, g.n))


def anisotropic_stiffness(mesh, iso, aniso, directions):
    """Sparse matrix of ``sum_T |T| grad phi_i . (iso_T I + aniso_T d_T d_T^T) grad phi_j``."""
    g = geometry(mesh)
    local = np.einsum("t,tid,tjd->tij", g.area * iso, g.grads, g.grads)
    proj = np.einsum("tid,td->ti", g.grads, directions)
    local += (g.area * aniso)[:, None, None] * proj[:, :, None] * proj[:, None, :]
    rows = np.repeat(g.triangles, 3, axis=1).ravel()
    cols = np.tile(g.triangles, (1, 3)).ravel()
    return sparse.csr_matrix((local.ravel(), (rows, cols)), shape=(g.n, g.n))


def stiffness_matrix(mesh):
    """Standard P1 stiffness matrix."""
    return weighted_stiffness(mesh)


@lru_cache(maxsize=1)
def _midpoint_mass_local():
    # exact P1 mass matrix for the edge-midpoint rule, divided by |T|
    m = np.zeros((3, 3))
    for a, b in _MID:
        phi = np.zeros(3)
        phi[a] = phi[b] = 0.5
        m += np.outer(phi, phi) / 3.0
    return m


def mass_matrix(mesh):
    """P1 mass matrix (the midpoint rule is exact for it)."""
    g = geometry(mesh)
    local = g.area[:, None, None] * _midpoint_mass_local()[None]
    rows = np.repeat(g.triangles, 3, axis=1).ravel()
    cols = np.tile(g.triangles, (1, 3)).ravel()
    return sparse.csr_matrix((local.ravel(), (rows, cols)), shape=(g.n, g.n))


def rayleigh_quotient(u, p, mesh=None):
    return energy_J(u, p, mesh) / mass_G(u, p, mesh)


def stationarity(u, lam, p, eps=0.0, mesh=None):
    """Relative residual of the discrete weak equation at interior vertices.

    ``max_v |dJ_v - lam dG_v| / max_v |lam dG_v|`` where ``dJ`` and ``dG``
    are the partial derivatives of J and G.  Zero for ``u = 0``.
    """
    mesh = _mesh_of(u, mesh)
    gj = grad_J(u, p, eps=eps, mesh=mesh)
    gg = lam * grad_G(u, p, mesh=mesh)
    scale = np.max(np.abs(gg)) if len(gg) else 0.0
    if scale == 0.0:
        return 0.0 if not np.any(gj) else float("inf")
    return float(np.max(np.abs(gj - gg)) / scale)
