"""Moving a hole off centre lowers the first eigenvalue of the punctured disk."""
# %%
from plapeig.core import SolverConfig
from plapeig.eigensolver import obstacle_sweep
from plapeig.radial import annulus_radial_eigenvalue

# %%
cfg = SolverConfig(mesh_h=0.05)
t_list = [0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.65]
for p in (1.5, 2.0, 3.0):
    rows = obstacle_sweep(0.3, t_list, p, cfg)
    print(f"p = {p}: concentric radial value {annulus_radial_eigenvalue(p, 2, 0.3).lam:.4f}")
    for row in rows:
        print(f"   t = {row.t:.2f}  " + (f"lambda_1 = {row.lam:.4f}" if not row.error else row.error))
