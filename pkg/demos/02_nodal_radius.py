"""The nodal radius r* where the first eigenvalue of B_r* equals gamma_2.

Scaling gives lambda_1(B_r) = gamma_1 / r^p, so r* = (gamma_1 / gamma_2)^(1/p).
"""
# %%
from scipy.special import jn_zeros

from plapeig.core import scale_eigenvalue
from plapeig.radial import nodal_radius_report

# %%
for p in (1.5, 2.0, 3.0, 5.0):
    rep = nodal_radius_report(p, 2)
    print(f"p = {p}: r* = {rep.radius:.7f}, gamma_1(B_r*) = {scale_eigenvalue(rep.gamma_1, rep.radius, p):.6f}, "
          f"gamma_2 = {rep.gamma_2:.6f}")

# %% At p = 2 the radius is a ratio of Bessel zeros.
z = jn_zeros(0, 2)
print("j01 / j02 =", z[0] / z[1])
