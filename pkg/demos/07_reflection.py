"""Nonradial eigenfunctions Psi_n with 2n nodal domains by odd reflection."""
# %%
import math

from plapeig.core import SolverConfig
from plapeig.eigensolver import tau_n
from plapeig.fem import rayleigh_quotient
from plapeig.mesh import write_vtk
from plapeig.reflect import count_nodal_domains, nodal_domain_areas, reflect_odd, reflection_plan, weak_residual

# %%
cfg = SolverConfig(mesh_h=0.04)
for n in (1, 2, 3, 4):
    pair = tau_n(n, 3.0, cfg)
    plan = reflection_plan(n, pair.field.mesh)
    psi = reflect_odd(pair.field, plan)
    areas = nodal_domain_areas(psi)
    print(f"n = {n}: tau_n = {pair.lam:.5f}, Rayleigh(Psi) = {rayleigh_quotient(psi, 3.0):.5f}, "
          f"nodal domains = {count_nodal_domains(psi)}, residual = {weak_residual(psi, pair.lam, 3.0):.1e}, "
          f"areas/(pi/2n) = {min(areas) / (math.pi / (2 * n)):.4f}..{max(areas) / (math.pi / (2 * n)):.4f}")

# %% Psi_4 on the disk, for viewing.
write_vtk("psi_4.vtk", plan.disk, {"psi": psi.values})
