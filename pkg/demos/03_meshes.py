"""Triangle meshes of the disk, sectors, annuli and eccentric annuli."""
# %%
import math

from plapeig.core import Annulus, Ball, EccentricAnnulus, Sector
from plapeig.mesh import build_mesh, refine, write_vtk

# %%
for spec in (Ball(), Sector(0.0, math.pi / 3), Annulus(0.4), EccentricAnnulus(0.3, 0.4)):
    mesh = build_mesh(spec, 0.05)
    print(f"{spec.kind:18s} V={mesh.n_vertices:5d} T={mesh.n_triangles:5d} area={mesh.area:.5f} "
          f"(exact {spec.area:.5f}) h={mesh.h:.4f} min angle={mesh.min_angle():.1f} deg")

# %% Red refinement quarters every triangle and keeps the boundary on the circle.
mesh = build_mesh(Ball(), 0.1)
for _ in range(3):
    print(f"T={mesh.n_triangles:6d}  pi - area = {math.pi - mesh.area:.3e}")
    mesh = refine(mesh)

# %% Meshes export to legacy VTK for ParaView.
write_vtk("disk.vtk", build_mesh(Ball(), 0.1))
