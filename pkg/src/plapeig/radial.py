"""Radial spectrum of the p-Laplacian on the unit ball by shooting.

The radial equation

    -(r^{N-1} phi_p(u'))' = lam r^{N-1} phi_p(u),   u'(0) = 0,  u(1) = 0,

with ``phi_p(s) = |s|^{p-2} s`` is integrated as a first-order system in
``u`` and the flux ``w = r^{N-1} phi_p(u')``:

    u' = phi_q(w / r^{N-1}),   w' = -lam r^{N-1} phi_p(u),   q = p / (p - 1).

The flux stays smooth through the origin, so the only singular point is
``r = 0`` itself, which is stepped over with a two-term series.

For ``N = 1`` the problem is posed on the interval (0, 1) with Dirichlet
conditions at both ends (shooting from ``u(0) = 0, u'(0) = 1``); its
eigenvalues are ``(p - 1) (n pi_p)^p``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from .core import ConvergenceError, DomainError, EigenPair, IntegrationError, check_p, scale_eigenvalue

START_RADIUS = 1e-6
RTOL = 1e-10
ATOL = 1e-13
METHOD = "DOP853"
LAMBDA_START = 1.0
MAX_BRACKET_STEPS = 200


def phi(s, p):
    """The odd power map ``|s|^{p-2} s`` (vectorised)."""
    s = np.asarray(s, dtype=float)
    return np.sign(s) * np.abs(s) ** (p - 1)


def pi_p(p):
    """Generalized pi: ``2 pi / (p sin(pi / p))``."""
    return 2.0 * math.pi / (p * math.sin(math.pi / p))


def interval_eigenvalue(p, n):
    """Closed-form n-th Dirichlet eigenvalue of the 1-D p-Laplacian on (0, 1)."""
    return (p - 1) * (n * pi_p(p)) ** p


def count_sign_changes(values, neutral=0.0):
    """Number of strict sign changes, skipping entries with ``|v| <= neutral``."""
    v = np.asarray(values, dtype=float)
    s = np.sign(v)
    s[np.abs(v) <= neutral] = 0
    s = s[s != 0]
    return int(np.count_nonzero(s[1:] != s[:-1]))


def series_start(p, dim, lam, r0):
    """Two-term expansion of the ``u(0) = 1`` solution near the origin.

    Returns ``(u, w)`` at ``r0``.
    """
    c = (p - 1) / p * (lam / dim) ** (1.0 / (p - 1))
    u = 1.0 - c * r0 ** (p / (p - 1))
    w = -(lam / dim) * r0**dim
    return u, w


@dataclass
class RadialSolution:
    """Sampled trajectory of the radial system for one ``(p, N, lam)``."""

    p: float
    dim: int
    lam: float
    r: np.ndarray
    u: np.ndarray
    w: np.ndarray
    zero_count: int
    zeros: np.ndarray

    @property
    def endpoint(self):
        """Value of ``u`` at the outer radius."""
        return float(self.u[-1])


def _rhs(p, dim, lam):
    q = p / (p - 1)
    pm1, qm1, nm1 = p - 1, q - 1, dim - 1

    def f(r, y):
        u, w = y
        v = w / r**nm1 if nm1 else w
        du = math.copysign(abs(v) ** qm1, v)
        dw = -lam * r**nm1 * math.copysign(abs(u) ** pm1, u)
        return (du, dw)

    return f


def _u_event(r, y):
    return y[0]


def _integrate(p, dim, lam, r0, y0, r1=1.0, rtol=RTOL, atol=ATOL, method=METHOD):
    sol = solve_ivp(_rhs(p, dim, lam), (r0, r1), y0, method=method, rtol=rtol, atol=atol,
                    events=_u_event)
    if sol.status == -1:
        raise IntegrationError(f"radial integration failed: {sol.message}", float(sol.t[-1]))
    keep = sol.t_events[0] > r0 * (1 + 1e-9) + 1e-300
    zeros = sol.t_events[0][keep]
    r = np.concatenate([sol.t, zeros])
    u = np.concatenate([sol.y[0], np.zeros(len(zeros))])
    w = np.concatenate([sol.y[1], sol.y_events[0][keep, 1] if len(zeros) else np.empty(0)])
    order = np.argsort(r, kind="stable")
    r, u, w = r[order], u[order], w[order]
    # count located crossings: output samples can be too sparse to show a zero near r1
    zeros = zeros[zeros < r1 * (1 - 1e-9)]
    return RadialSolution(p=p, dim=dim, lam=lam, r=r, u=u, w=w, zero_count=len(zeros), zeros=zeros)


def integrate_radial(p, dim, lam, start_radius=START_RADIUS, rtol=RTOL, atol=ATOL, method=METHOD):
    """Integrate the radial eigenvalue equation from the origin to ``r = 1``.

    Parameters
    ----------
    p : float
        Exponent of the p-Laplacian.
    dim : int
        Space dimension ``N``.
    lam : float
        Spectral parameter, ``lam >= 0``.
    start_radius : float
        Radius where the series start hands over to the integrator
        (ignored for ``dim == 1``).
    rtol, atol, method
        Passed to :func:`scipy.integrate.solve_ivp`.

    Returns
    -------
    RadialSolution
        Trajectory normalised by ``u(0) = 1`` (``u'(0) = 1`` when ``dim == 1``).
    """
    check_p(p)
    if int(dim) != dim or dim < 1:
        raise DomainError(f"dimension must be a positive integer, got {dim}")
    if lam < 0:
        raise DomainError(f"lambda must be nonnegative, got {lam}")
    if dim == 1:
        return _integrate(p, 1, lam, 0.0, (0.0, 1.0), rtol=rtol, atol=atol, method=method)
    u0, w0 = series_start(p, dim, lam, start_radius)
    return _integrate(p, dim, lam, start_radius, (u0, w0), rtol=rtol, atol=atol, method=method)


def _bracket_and_solve(shoot, n, tol, lam_start, max_iter):
    """Locate the lam where the n-th zero of ``shoot(lam)`` reaches r = 1.

    ``shoot`` returns a RadialSolution whose zero count is nondecreasing
    in lam.
    """
    lo, hi = 0.0, lam_start
    sol_hi = shoot(hi)
    steps = 0
    while sol_hi.zero_count < n:
        lo, hi = hi, 2.0 * hi
        sol_hi = shoot(hi)
        steps += 1
        if steps > max_iter:
            raise ConvergenceError("no bracket found while doubling lambda", (lo, hi))
    count_lo = n - 1 if lo > 0 else 0
    if lo > 0:
        count_lo = shoot(lo).zero_count
    # shrink until the bracket separates exactly n-1 and n zeros
    while count_lo != n - 1 or sol_hi.zero_count != n:
        mid = 0.5 * (lo + hi)
        sol_mid = shoot(mid)
        if sol_mid.zero_count >= n:
            hi, sol_hi = mid, sol_mid
        else:
            lo, count_lo = mid, sol_mid.zero_count
        steps += 1
        if steps > max_iter:
            raise ConvergenceError("bisection on the zero count did not settle", (lo, hi))
    # u(1) changes sign exactly once on [lo, hi]
    f_lo = shoot(lo).endpoint
    if f_lo == 0.0:
        return lo, steps
    lam, info = brentq(lambda x: shoot(x).endpoint, lo, hi, xtol=tol * lo,
                       rtol=max(tol, 4.5e-16), maxiter=max_iter, full_output=True, disp=False)
    if not info.converged:
        raise ConvergenceError("secant refinement of u(1) did not converge", (lo, hi))
    return lam, steps + info.iterations


def radial_eigenvalue(p, dim, n, tol=1e-12, lam_start=LAMBDA_START, max_iter=MAX_BRACKET_STEPS, **step):
    """The n-th radial eigenvalue ``gamma_n`` and its eigenfunction.

    The eigenfunction of ``gamma_n`` has exactly ``n - 1`` zeros in (0, 1).
    lam is doubled from ``lam_start`` until ``n`` zeros appear, the bracket
    is bisected on the zero count and then refined by Brent's method on
    ``u(1)``.
    """
    if n < 1:
        raise DomainError(f"n must be at least 1, got {n}")
    check_p(p)

    def shoot(lam):
        return integrate_radial(p, dim, lam, **step)

    lam, iterations = _bracket_and_solve(shoot, n, tol, lam_start, max_iter)
    sol = shoot(lam)
    scale = np.max(np.abs(sol.u))
    return EigenPair(lam=lam, field=sol, iterations=iterations,
                     residual=abs(sol.endpoint) / scale, converged=True)


def radial_spectrum(p, dim, n_max, tol=1e-12, **step):
    """``[gamma_1, ..., gamma_{n_max}]`` as a list of EigenPairs."""
    return [radial_eigenvalue(p, dim, n, tol=tol, **step) for n in range(1, n_max + 1)]


def annulus_radial_eigenvalue(p, dim, inner, n=1, tol=1e-12, **step):
    """n-th radial Dirichlet eigenvalue of the annulus ``inner < |x| < 1``.

    The trajectory starts at ``r = inner`` with ``u = 0, u' = 1``; no series
    is needed since the equation is regular there.
    """
    check_p(p)
    if not 0 < inner < 1:
        raise DomainError(f"inner radius must lie in (0, 1), got {inner}")
    w0 = inner ** (dim - 1)

    def shoot(lam):
        return _integrate(p, dim, lam, inner, (0.0, w0), **step)

    lam, iterations = _bracket_and_solve(shoot, n, tol, LAMBDA_START, MAX_BRACKET_STEPS)
    sol = shoot(lam)
    return EigenPair(lam=lam, field=sol, iterations=iterations,
                     residual=abs(sol.endpoint) / np.max(np.abs(sol.u)), converged=True)


@dataclass
class NodalRadius:
    """Interior nodal radius of the second radial eigenfunction."""

    p: float
    dim: int
    radius: float
    gamma_1: float
    gamma_2: float
    scaled_gamma_1: float
    relative_mismatch: float
    in_stated_interval: bool


def nodal_radius_report(p, dim, tol=1e-8):
    """Nodal radius ``r*`` together with the scaling check behind it.

    ``scaled_gamma_1`` is ``gamma_1 * r*^-p``, the first eigenvalue of the
    ball of radius ``r*``; it must reproduce ``gamma_2``.
    ``in_stated_interval`` records whether ``r*`` lies in (1/2, 1).
    """
    inner_tol = min(1e-12, tol * 1e-3)
    g1 = radial_eigenvalue(p, dim, 1, tol=inner_tol).lam
    g2_pair = radial_eigenvalue(p, dim, 2, tol=inner_tol)
    g2, sol = g2_pair.lam, g2_pair.field
    r_star = _interior_zero(sol)
    scaled = scale_eigenvalue(g1, r_star, p)
    mismatch = abs(scaled - g2) / g2
    if mismatch > 10 * tol:
        raise ConvergenceError(
            f"scaling check failed: gamma_1 r*^-p = {scaled!r} vs gamma_2 = {g2!r}")
    return NodalRadius(p=p, dim=dim, radius=r_star, gamma_1=g1, gamma_2=g2,
                       scaled_gamma_1=scaled, relative_mismatch=mismatch,
                       in_stated_interval=bool(0.5 < r_star < 1.0))


def _interior_zero(sol):
    zeros = sol.zeros[sol.zeros < 1.0 - 1e-9]
    if len(zeros) == 1:
        return float(zeros[0])
    # fall back to the sampled sign change plus bisection on a re-integration
    idx = np.flatnonzero(np.sign(sol.u[1:]) * np.sign(sol.u[:-1]) < 0)
    if len(idx) != 1:
        raise ConvergenceError(f"expected one interior zero, found {len(zeros)}")
    a, b = sol.r[idx[0]], sol.r[idx[0] + 1]

    def u_at(x):
        return integrate_radial_to(sol.p, sol.dim, sol.lam, x)

    return float(brentq(u_at, a, b, xtol=1e-15))


def integrate_radial_to(p, dim, lam, r_end):
    if dim == 1:
        sol = _integrate(p, 1, lam, 0.0, (0.0, 1.0), r1=r_end)
    else:
        sol = _integrate(p, dim, lam, START_RADIUS, series_start(p, dim, lam, START_RADIUS), r1=r_end)
    return sol.endpoint


def nodal_radius(p, dim, tol=1e-8):
    """Radius of the nodal sphere of the ``gamma_2`` eigenfunction."""
    return nodal_radius_report(p, dim, tol).radius
