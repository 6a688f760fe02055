"""Radial eigenvalues of the p-Laplacian on the unit ball by shooting.

Run with ``python demos/01_radial_spectrum.py``.
"""
# %%
import math

from scipy.special import jn_zeros

from plapeig.radial import integrate_radial, interval_eigenvalue, radial_eigenvalue, radial_spectrum

# %% [markdown]
# At p = 2 in the plane the radial eigenvalues are squares of Bessel zeros.

# %%
for pair, z in zip(radial_spectrum(2.0, 2, 3), jn_zeros(0, 3)):
    print(f"gamma = {pair.lam:.9f}   j0k^2 = {z**2:.9f}")

# %% [markdown]
# The shooter counts sign changes of u on (0, 1); the k-th radial
# eigenfunction has k - 1 interior zeros.

# %%
for lam in (5.0, 20.0, 60.0):
    sol = integrate_radial(2.0, 2, lam)
    print(f"lambda = {lam:5.1f}: {sol.zero_count} zeros, u(1) = {sol.endpoint:+.4f}")

# %% [markdown]
# On an interval the spectrum has a closed form in terms of pi_p.

# %%
for p in (1.5, 3.0, 5.0):
    got = radial_eigenvalue(p, 1, 2).lam
    print(f"p = {p}: shooting {got:.8f}, closed form {interval_eigenvalue(p, 2):.8f}")

# %% In three dimensions at p = 2 the values are (n pi)^2.
print([round(radial_eigenvalue(2.0, 3, n).lam / math.pi**2, 8) for n in (1, 2, 3)])
