"""Triangulations of the disk, sectors, annuli and eccentric annuli.

Disks, sectors and concentric annuli use structured polar templates: rings
of equally spaced vertices, ring ``k`` of a disk carrying ``6k`` vertices,
zipped together by angular merging. The eccentric annulus is handed to
Shewchuk's Triangle with its boundary vertices fixed on the two circles.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy import sparse
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

from .core import TWO_PI, Annulus, Ball, EccentricAnnulus, HalfBall, MeshError, Sector

# radial spacing is h / RADIAL_FACTOR so that ring diagonals stay below 1.5 h
RADIAL_FACTOR = 1.2
# arc spacing relative to radial spacing (6 vertices on the first disk ring)
ARC_RATIO = math.pi / 3
ON_CURVE_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class TriMesh:
    """Planar P1 triangulation.

    Attributes
    ----------
    vertices : ndarray, shape (V, 2)
    triangles : ndarray, shape (T, 3)
        Counter-clockwise vertex indices.
    boundary_mask : ndarray of bool, shape (V,)
        True on Dirichlet boundary vertices.
    domain : DomainSpec or None
        Analytic domain, used to project refined boundary points.
    """

    vertices: np.ndarray
    triangles: np.ndarray
    boundary_mask: np.ndarray
    domain: object = None
    circles: tuple = field(default=(), repr=False)

    def __post_init__(self):
        v = np.ascontiguousarray(self.vertices, dtype=float)
        t = np.ascontiguousarray(self.triangles, dtype=np.int64)
        b = np.ascontiguousarray(self.boundary_mask, dtype=bool)
        for a in (v, t, b):
            a.flags.writeable = False
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "triangles", t)
        object.__setattr__(self, "boundary_mask", b)
        if not self.circles and self.domain is not None:
            object.__setattr__(self, "circles", domain_circles(self.domain))

    @property
    def n_vertices(self):
        return len(self.vertices)

    @property
    def n_triangles(self):
        return len(self.triangles)

    @cached_property
    def signed_areas(self):
        p = self.vertices[self.triangles]
        d1 = p[:, 1] - p[:, 0]
        d2 = p[:, 2] - p[:, 0]
        return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])

    @property
    def areas(self):
        return np.abs(self.signed_areas)

    @property
    def area(self):
        return float(self.areas.sum())

    @cached_property
    def _edge_data(self):
        t = self.triangles
        e = np.concatenate([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]])
        e.sort(axis=1)
        edges, inverse, counts = np.unique(e, axis=0, return_inverse=True, return_counts=True)
        return edges, inverse.reshape(-1), counts

    @property
    def edges(self):
        """Unique edges as sorted vertex pairs."""
        return self._edge_data[0]

    @property
    def boundary_edges(self):
        edges, _, counts = self._edge_data
        return edges[counts == 1]

    @property
    def h(self):
        """Longest edge."""
        d = self.vertices[self.edges[:, 0]] - self.vertices[self.edges[:, 1]]
        return float(np.sqrt((d**2).sum(axis=1)).max())

    @property
    def euler_characteristic(self):
        return self.n_vertices - len(self.edges) + self.n_triangles

    @property
    def interior(self):
        return ~self.boundary_mask

    def min_angle(self):
        """Smallest interior angle over all triangles, in degrees."""
        p = self.vertices[self.triangles]
        out = np.inf
        for k in range(3):
            a = p[:, (k + 1) % 3] - p[:, k]
            b = p[:, (k + 2) % 3] - p[:, k]
            cosv = (a * b).sum(1) / np.sqrt((a * a).sum(1) * (b * b).sum(1))
            out = min(out, np.degrees(np.arccos(np.clip(cosv, -1, 1))).min())
        return float(out)

    def adjacency(self):
        """Symmetric vertex adjacency through mesh edges (CSR, boolean)."""
        e = self.edges
        n = self.n_vertices
        a = sparse.coo_matrix((np.ones(len(e), dtype=bool), (e[:, 0], e[:, 1])), shape=(n, n))
        return (a + a.T).tocsr()


def domain_circles(domain):
    """Circles ``(cx, cy, R)`` that carry the curved boundary of ``domain``."""
    if isinstance(domain, Ball):
        return ((0.0, 0.0, float(domain.radius)),)
    if isinstance(domain, Annulus):
        return ((0.0, 0.0, float(domain.inner)), (0.0, 0.0, float(domain.outer)))
    if isinstance(domain, (Sector, HalfBall)):
        return ((0.0, 0.0, 1.0),)
    if isinstance(domain, EccentricAnnulus):
        return ((0.0, 0.0, 1.0), (float(domain.t), 0.0, float(domain.r)))
    return ()


def validate_mesh(mesh, simply_connected=None):
    """Raise :class:`MeshError` unless ``mesh`` satisfies the TriMesh invariants."""
    v, t = mesh.vertices, mesh.triangles
    if v.ndim != 2 or v.shape[1] != 2:
        raise MeshError("vertices must have shape (V, 2)")
    if t.ndim != 2 or t.shape[1] != 3 or len(t) == 0:
        raise MeshError("triangles must have shape (T, 3) with T > 0")
    if t.min() < 0 or t.max() >= len(v):
        raise MeshError("triangle index out of range")
    if len(mesh.boundary_mask) != len(v):
        raise MeshError("boundary mask length differs from vertex count")
    if np.any(mesh.signed_areas <= 0):
        raise MeshError(f"{int(np.sum(mesh.signed_areas <= 0))} triangles with nonpositive signed area")
    be = mesh.boundary_edges
    if not np.all(mesh.boundary_mask[be]):
        raise MeshError("boundary edge with an unflagged endpoint")
    ncomp, _ = connected_components(mesh.adjacency(), directed=False)
    if ncomp != 1:
        raise MeshError(f"mesh has {ncomp} connected components")
    if len(cKDTree(v).query_pairs(1e-12)):
        raise MeshError("duplicate vertices")
    if simply_connected is not None:
        expected = 1 if simply_connected else 0
        if mesh.euler_characteristic != expected:
            raise MeshError(f"Euler characteristic {mesh.euler_characteristic}, expected {expected}")
    return mesh


# --------------------------------------------------------------------------
# structured polar templates

def _ring_counts(radii, span, dr, full):
    counts = []
    for r in radii:
        if r == 0:
            counts.append(0)
            continue
        m = max(1, math.ceil(span * r / (ARC_RATIO * dr) - 1e-9))
        if full:
            m = max(m, 6)
        counts.append(m)
    return counts


def _zip_rings(a, b, ang_a, ang_b, full):
    """Triangulate the band between two rings given as index lists.

    ``ang_a``/``ang_b`` hold normalised angular positions in [0, 1].
    """
    tris = []
    if len(a) == 1:
        for j in range(len(b) - 1 + full):
            tris.append((a[0], b[j], b[(j + 1) % len(b)]))
        return tris
    ma = len(a) if full else len(a) - 1
    mb = len(b) if full else len(b) - 1
    i = j = 0
    while i < ma or j < mb:
        ia, ia1 = a[i % len(a)], a[(i + 1) % len(a)]
        jb, jb1 = b[j % len(b)], b[(j + 1) % len(b)]
        if i == ma:
            advance_b = True
        elif j == mb:
            advance_b = False
        else:
            na = ang_a[i + 1] if i + 1 < len(ang_a) else 1.0
            nb = ang_b[j + 1] if j + 1 < len(ang_b) else 1.0
            advance_b = nb < na - 1e-12 or (abs(nb - na) <= 1e-12 and mb >= ma)
        if advance_b:
            tris.append((ia, jb, jb1))
            j += 1
        else:
            tris.append((ia, jb, ia1))
            i += 1
    return tris


def _polar_mesh(r_in, r_out, theta0, span, h, full, apex_boundary=True):
    n_r = max(1, math.ceil(RADIAL_FACTOR * (r_out - r_in) / h - 1e-9))
    dr = (r_out - r_in) / n_r
    radii = [r_in + k * dr for k in range(n_r)] + [r_out]
    counts = _ring_counts(radii, span, dr, full)
    verts, bmask, rings, angs = [], [], [], []
    for k, (r, m) in enumerate(zip(radii, counts)):
        idx = []
        if m == 0:
            idx.append(len(verts))
            verts.append((0.0, 0.0))
            bmask.append(not full and apex_boundary)
            rings.append(idx)
            angs.append(np.array([0.0]))
            continue
        npts = m if full else m + 1
        frac = np.arange(npts) / m
        on_circle = k == 0 and r_in > 0 or k == n_r
        for jj, f in enumerate(frac):
            th = theta0 + span * f
            idx.append(len(verts))
            verts.append((r * math.cos(th), r * math.sin(th)))
            on_ray = not full and (jj == 0 or jj == npts - 1)
            bmask.append(bool(on_circle or on_ray))
        rings.append(idx)
        angs.append(frac)
    tris = []
    for k in range(n_r):
        tris += _zip_rings(rings[k], rings[k + 1], angs[k], angs[k + 1], full)
    v = np.array(verts)
    t = np.array(tris, dtype=np.int64)
    return v, _orient(v, t), np.array(bmask)


def _orient(v, t):
    p = v[t]
    s = (p[:, 1, 0] - p[:, 0, 0]) * (p[:, 2, 1] - p[:, 0, 1]) - (p[:, 1, 1] - p[:, 0, 1]) * (p[:, 2, 0] - p[:, 0, 0])
    t = t.copy()
    flip = s < 0
    t[flip] = t[flip][:, [0, 2, 1]]
    return t


def _triangle_eccentric(spec, h):
    import triangle

    def circle_pts(cx, cy, rad, m):
        th = TWO_PI * np.arange(m) / m
        return np.column_stack([cx + rad * np.cos(th), cy + rad * np.sin(th)])

    m_out = max(12, math.ceil(TWO_PI / h))
    m_in = max(8, math.ceil(TWO_PI * spec.r / h))
    pts = np.vstack([circle_pts(0.0, 0.0, 1.0, m_out), circle_pts(spec.t, 0.0, spec.r, m_in)])
    seg_out = np.column_stack([np.arange(m_out), (np.arange(m_out) + 1) % m_out])
    seg_in = m_out + np.column_stack([np.arange(m_in), (np.arange(m_in) + 1) % m_in])
    geom = {"vertices": pts, "segments": np.vstack([seg_out, seg_in]),
            "holes": np.array([[spec.t, 0.0]])}
    max_area = math.sqrt(3) / 4 * h**2
    out = triangle.triangulate(geom, f"pq28a{max_area:.12g}YQ")
    v = np.asarray(out["vertices"], dtype=float)
    v[: len(pts)] = pts
    t = _orient(v, np.asarray(out["triangles"], dtype=np.int64))
    bmask = np.zeros(len(v), dtype=bool)
    bmask[: len(pts)] = True
    return v, t, bmask


def build_mesh(spec, h):
    """Triangulate a 2-D domain with target edge length ``h``.

    Parameters
    ----------
    spec : DomainSpec
        A 2-D domain: Ball(dim=2), Annulus, Sector, EccentricAnnulus or HalfBall.
    h : float
        Target edge length in (0, 0.5].

    Returns
    -------
    TriMesh
    """
    if not 0 < h <= 0.5:
        raise MeshError(f"target edge length must lie in (0, 0.5], got {h}")
    if isinstance(spec, Ball):
        if spec.dim != 2:
            raise MeshError("only 2-D balls can be meshed")
        v, t, b = _polar_mesh(0.0, spec.radius, 0.0, TWO_PI, h, full=True)
    elif isinstance(spec, Annulus):
        v, t, b = _polar_mesh(spec.inner, spec.outer, 0.0, TWO_PI, h, full=True)
    elif isinstance(spec, Sector):
        full = spec.span >= TWO_PI - 1e-12
        v, t, b = _polar_mesh(0.0, 1.0, spec.angle_lo, TWO_PI if full else spec.span, h, full=full)
    elif isinstance(spec, HalfBall):
        v, t, b = _polar_mesh(0.0, 1.0, 0.0, math.pi, h, full=False)
    elif isinstance(spec, EccentricAnnulus):
        if spec.gap < 2 * h - 1e-12:
            raise MeshError(f"mesh too coarse for gap: 1 - t - r = {spec.gap:.4g} < 2h = {2 * h:.4g}")
        v, t, b = _triangle_eccentric(spec, h)
    else:
        raise MeshError(f"cannot mesh domain {spec!r}")
    return TriMesh(v, t, b, domain=spec)


# --------------------------------------------------------------------------
# refinement

def project_to_circles(points, circles, ends_a, ends_b):
    """Project edge midpoints onto the circle shared by both edge endpoints."""
    out = points.copy()
    for cx, cy, rad in circles:
        c = np.array([cx, cy])
        on_a = np.abs(np.linalg.norm(ends_a - c, axis=1) - rad) < ON_CURVE_TOL * max(1.0, rad)
        on_b = np.abs(np.linalg.norm(ends_b - c, axis=1) - rad) < ON_CURVE_TOL * max(1.0, rad)
        sel = on_a & on_b
        if np.any(sel):
            d = out[sel] - c
            out[sel] = c + rad * d / np.linalg.norm(d, axis=1)[:, None]
    return out


def refine(mesh):
    """Split every triangle into four through its edge midpoints.

    Midpoints of boundary edges lying on a curved boundary are moved onto
    the circle.
    """
    edges, inverse, counts = mesh._edge_data
    nv, nt = mesh.n_vertices, mesh.n_triangles
    v = mesh.vertices
    ea, eb = v[edges[:, 0]], v[edges[:, 1]]
    mids = 0.5 * (ea + eb)
    bnd_edge = counts == 1
    if mesh.circles and np.any(bnd_edge):
        mids[bnd_edge] = project_to_circles(mids[bnd_edge], mesh.circles, ea[bnd_edge], eb[bnd_edge])
    new_v = np.vstack([v, mids])
    new_b = np.concatenate([mesh.boundary_mask, bnd_edge])
    # inverse is laid out as [edge01 of all T, edge12 of all T, edge20 of all T]
    m01 = nv + inverse[:nt]
    m12 = nv + inverse[nt:2 * nt]
    m20 = nv + inverse[2 * nt:]
    a, b, c = mesh.triangles.T
    t = np.concatenate([
        np.column_stack([a, m01, m20]),
        np.column_stack([b, m12, m01]),
        np.column_stack([c, m20, m12]),
        np.column_stack([m01, m12, m20]),
    ])
    return TriMesh(new_v, t, new_b, domain=mesh.domain, circles=mesh.circles)


def prolong(mesh, values):
    """Interpolate vertex values from ``mesh`` onto ``refine(mesh)``.

    The refined mesh lists the old vertices first, then one midpoint per
    edge in ``mesh.edges`` order; boundary midpoints get zero.
    """
    values = np.asarray(values, dtype=float)
    edges = mesh.edges
    mids = 0.5 * (values[edges[:, 0]] + values[edges[:, 1]])
    mids[mesh._edge_data[2] == 1] = 0.0
    return np.concatenate([values, mids])


# --------------------------------------------------------------------------
# I/O

def write_vtk(path, mesh, fields=None, title="plapeig mesh"):
    """Write a legacy-VTK ASCII unstructured grid with optional point data."""
    fields = fields or {}
    with open(path, "w") as fh:
        fh.write("# vtk DataFile Version 3.0\n")
        fh.write(f"{title}\nASCII\nDATASET UNSTRUCTURED_GRID\n")
        fh.write(f"POINTS {mesh.n_vertices} double\n")
        for x, y in mesh.vertices:
            fh.write(f"{float(x)!r} {float(y)!r} 0.0\n")
        fh.write(f"CELLS {mesh.n_triangles} {4 * mesh.n_triangles}\n")
        for i, j, k in mesh.triangles:
            fh.write(f"3 {i} {j} {k}\n")
        fh.write(f"CELL_TYPES {mesh.n_triangles}\n")
        fh.write("5\n" * mesh.n_triangles)
        fh.write(f"POINT_DATA {mesh.n_vertices}\n")
        fh.write("SCALARS boundary int 1\nLOOKUP_TABLE default\n")
        fh.write("\n".join(str(int(b)) for b in mesh.boundary_mask) + "\n")
        for name, values in fields.items():
            fh.write(f"SCALARS {name} double 1\nLOOKUP_TABLE default\n")
            fh.write("\n".join(repr(float(x)) for x in np.asarray(values)) + "\n")


def write_plain(path, mesh):
    """Plain text: ``V T``, then ``x y b`` per vertex, then ``i j k`` per triangle."""
    with open(path, "w") as fh:
        fh.write(f"{mesh.n_vertices} {mesh.n_triangles}\n")
        for (x, y), b in zip(mesh.vertices, mesh.boundary_mask):
            fh.write(f"{float(x)!r} {float(y)!r} {int(b)}\n")
        for i, j, k in mesh.triangles:
            fh.write(f"{i} {j} {k}\n")


def read_plain(path, domain=None):
    """Read the plain text format and validate the mesh invariants."""
    with open(path) as fh:
        lines = [ln.split() for ln in fh if ln.strip()]
    try:
        nv, nt = (int(x) for x in lines[0])
        vrows = np.array([[float(a), float(b), int(c)] for a, b, c in lines[1:1 + nv]])
        trows = np.array([[int(a), int(b), int(c)] for a, b, c in lines[1 + nv:1 + nv + nt]], dtype=np.int64)
    except (ValueError, IndexError) as exc:
        raise MeshError(f"malformed mesh file {path}: {exc}") from None
    if len(vrows) != nv or len(trows) != nt or len(lines) != 1 + nv + nt:
        raise MeshError(f"mesh file {path} does not match its header {nv} {nt}")
    if not np.isin(vrows[:, 2], (0, 1)).all():
        raise MeshError("boundary flags must be 0 or 1")
    mesh = TriMesh(vrows[:, :2], trows, vrows[:, 2].astype(bool), domain=domain)
    return validate_mesh(mesh)
