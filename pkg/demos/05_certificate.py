"""Second eigenfunctions of the ball are not radial: tau_1 < gamma_2.

tau_1, the first eigenvalue of the half disk, bounds lambda_2 from above.
If it sits below the second radial eigenvalue gamma_2, no eigenfunction
of lambda_2 can be radial.
"""
# %%
from plapeig.core import SolverConfig
from plapeig.eigensolver import certify_second_asymmetry

# %%
for p in (1.5, 2.0, 3.0, 6.0):
    cert = certify_second_asymmetry(p, SolverConfig(mesh_h=0.02))
    print(f"p = {p}: tau_1 = {cert.tau_1:.5f} +- {cert.tau_1_error:.1e}  gamma_2 = {cert.gamma_2:.5f}  "
          f"{cert.verdict}")
print(cert.note)
