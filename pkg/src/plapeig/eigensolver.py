"""First Dirichlet eigenpair on a mesh by Rayleigh-quotient descent.

The quotient ``R(u) = J(u) / G(u)`` is minimised over Dirichlet fields by
gradient steps on the level set ``G = 1``: move along the negative
(preconditioned) gradient of R, rescale back to ``G = 1`` and accept the step
by Armijo backtracking.  The preconditioner is the second variation of J,
``p |g|^(p-2) (I + (p-2) g g^T / |g|^2)`` with a small floor on ``|g|``; at
p = 2 a unit step reproduces one inverse-iteration sweep.

For p < 2 the integrand of J is smoothed to ``(|grad u|^2 + eps^2)^(p/2)``
and eps is lowered geometrically from 1e-2 to ``regularization_eps``; each
level is a descent on the smoothed quotient, warm-started from the last.
"""
from __future__ import annotations

import dataclasses
import logging
import math
import time
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse.linalg import splu
from scipy.spatial import cKDTree

from . import fem
from .core import EigenPair, SolverConfig, check_p

logger = logging.getLogger(__name__)

ARMIJO_C = 1e-4
ARMIJO_SHRINK = 0.5
MIN_STEP = 1e-12
# slack for round-off in the sufficient-decrease test
ROUNDOFF = 5e-15
# consecutive accepted steps without any decrease before a level is abandoned
MAX_FLAT_STEPS = 5
# iteration budget of each intermediate regularization level
LEVEL_ITER_CAP = 50
EPS_START = 1e-2
PERTURBATION = 1e-6
SIGN_TOL = 1e-8
# floor on |grad u| inside the preconditioner weights, relative to its RMS
PRECOND_FLOOR = 1e-8


class SignChangeError(RuntimeError):
    """The computed ground state changes sign, which signals a solver defect."""


@dataclass
class ConvergenceTrace:
    rayleigh: list = field(default_factory=list)
    stationarity: list = field(default_factory=list)
    step: list = field(default_factory=list)
    eps: list = field(default_factory=list)
    wall_time: float = 0.0
    status: str = "running"

    def is_monotone(self, tol=1e-14):
        r = np.asarray(self.rayleigh)
        return bool(np.all(np.diff(r) <= tol * np.maximum(1.0, np.abs(r[:-1]))))


def tent_profile(mesh):
    """Distance from each vertex to the nearest boundary vertex (zero on it)."""
    bnd = mesh.vertices[mesh.boundary_mask]
    d, _ = cKDTree(bnd).query(mesh.vertices)
    d[mesh.boundary_mask] = 0.0
    return d


def initial_guess(mesh, seed=0):
    u = tent_profile(mesh)
    rng = np.random.default_rng(seed)
    u = u * (1.0 + PERTURBATION * rng.standard_normal(len(u)))
    return fem.constrained_field(mesh, u)


def _normalize(values, p, mesh):
    g = fem.mass_G(values, p, mesh)
    return values / g ** (1.0 / p)


def _eps_schedule(p, eps_final):
    if p >= 2:
        return [0.0]
    if eps_final >= EPS_START:
        return [eps_final]
    n = max(1, int(round(math.log10(EPS_START / max(eps_final, 1e-300)))))
    return list(np.geomspace(EPS_START, eps_final, n + 1)) if eps_final > 0 else \
        list(np.geomspace(EPS_START, 1e-8, 7)) + [0.0]


class _Preconditioner:
    def __init__(self, mesh, p, interior):
        self.mesh, self.p, self.interior = mesh, p, interior
        self._lu = None

    def solve(self, u_values, rhs, eps):
        p = self.p
        if p == 2:
            if self._lu is None:
                k = fem.stiffness_matrix(self.mesh)[self.interior][:, self.interior]
                self._lu = splu((2.0 * k).tocsc())
            return self._lu.solve(rhs)
        gu = fem.triangle_gradients(u_values, self.mesh)
        s = gu[:, 0] ** 2 + gu[:, 1] ** 2
        floor = (PRECOND_FLOOR**2) * float(np.mean(s)) + eps * eps
        reg = s + floor
        wt = reg ** ((p - 2) / 2)
        # second variation of J: p w (I + (p-2) g g^T / (|g|^2 + floor))
        aniso = (p - 2) * wt / reg
        k = fem.anisotropic_stiffness(self.mesh, p * wt, p * aniso, gu)
        k = k[self.interior][:, self.interior]
        return splu(k.tocsc()).solve(rhs)


def first_eigenpair(mesh, p=None, config=None, initial=None, raise_on_sign_change=True):
    """First Dirichlet eigenpair of the discrete p-Laplacian on ``mesh``.

    Parameters
    ----------
    mesh : TriMesh
    p : float, optional
        Exponent; defaults to ``config.p``.
    config : SolverConfig, optional
    initial : ScalarField or ndarray, optional
        Starting field.  By default the distance-to-boundary tent is used
        at p = 2; for other p the p = 2 ground state computed from the tent
        serves as the start, which avoids the cone tip of the tent.

    Returns
    -------
    EigenPair
        ``field`` is normalised to ``mass_G = 1`` and positive at its
        largest entry; ``trace`` holds the ConvergenceTrace.
    """
    config = config or SolverConfig()
    p = config.p if p is None else p
    check_p(p)
    interior = np.flatnonzero(~mesh.boundary_mask)
    if len(interior) == 0:
        raise ValueError("mesh has no interior vertex")
    if initial is None and p != 2:
        initial = first_eigenpair(mesh, 2.0, config.replace(p=2.0)).field
    if initial is None:
        u = initial_guess(mesh, config.seed).values
    else:
        u = fem.constrained_field(mesh, fem._values(initial)).values
    u = _normalize(u, p, mesh)
    precond = _Preconditioner(mesh, p, interior)
    trace = ConvergenceTrace()
    t0 = time.perf_counter()

    iterations = 0
    converged = False
    res = math.inf
    schedule = _eps_schedule(p, config.regularization_eps)
    for level, eps in enumerate(schedule):
        final_level = level == len(schedule) - 1
        tol_grad = config.tol_grad if final_level else max(config.tol_grad, eps)
        lam = fem.energy_J(u, p, mesh, eps)
        trace.rayleigh.append(lam)
        trace.step.append(0.0)
        trace.eps.append(eps)
        level_start = len(trace.rayleigh)
        flat = 0
        level_end = config.max_iter if final_level else min(config.max_iter, iterations + LEVEL_ITER_CAP)
        while iterations < level_end:
            gj = fem.grad_J(u, p, eps=eps, mesh=mesh)
            gg = fem.grad_G(u, p, mesh=mesh)
            r = (gj - lam * gg)[interior]
            res = float(np.max(np.abs(r)) / np.max(np.abs(lam * gg[interior])))
            trace.stationarity.append(res)
            if len(trace.rayleigh) > level_start:
                change = abs(trace.rayleigh[-2] - lam) / lam
            else:
                change = math.inf
            if res <= tol_grad and (change <= config.tol_eig or not final_level):
                converged = final_level
                break
            d = np.zeros_like(u)
            d[interior] = -precond.solve(u, r, eps)
            slope = float(r @ d[interior])
            if slope >= 0:
                # preconditioned direction lost descent; fall back to the plain gradient
                d[interior] = -r / np.max(np.abs(r)) * np.max(np.abs(u))
                slope = float(r @ d[interior])
            alpha, new_lam, new_u = 1.0, None, None
            while alpha >= MIN_STEP:
                cand = _normalize(u + alpha * d, p, mesh)
                cand_lam = fem.energy_J(cand, p, mesh, eps)
                if cand_lam <= lam + ARMIJO_C * alpha * slope + ROUNDOFF * lam:
                    new_u, new_lam = cand, cand_lam
                    break
                alpha *= ARMIJO_SHRINK
            iterations += 1
            flat = flat + 1 if new_u is not None and new_lam >= lam else 0
            if new_u is None or flat > MAX_FLAT_STEPS:
                # no decrease available at this resolution
                converged = final_level and res <= tol_grad
                break
            u, lam = new_u, new_lam
            trace.rayleigh.append(lam)
            trace.step.append(alpha)
            trace.eps.append(eps)
        if iterations >= config.max_iter:
            break
    lam = fem.energy_J(u, p, mesh)

    trace.wall_time = time.perf_counter() - t0
    trace.status = "converged" if converged else "max_iter" if iterations >= config.max_iter else "stalled"
    imax = int(np.argmax(np.abs(u)))
    if u[imax] < 0:
        u = -u
    field_ = fem.ScalarField(mesh, u, constrained=True)
    negative = float(-u[interior].min() / u[imax]) if len(interior) else 0.0
    pair = EigenPair(lam=float(lam), field=field_, iterations=iterations, residual=res,
                     converged=converged, trace=trace, extra={"p": p, "sign_defect": max(negative, 0.0)})
    logger.debug("first_eigenpair p=%s V=%d lam=%.10g it=%d res=%.2e status=%s",
                 p, mesh.n_vertices, lam, iterations, res, trace.status)
    if negative > SIGN_TOL and raise_on_sign_change:
        raise SignChangeError(f"ground state changes sign (min/max = {-negative:.3e})")
    return pair


# --------------------------------------------------------------------------
# derived quantities

@dataclass
class Extrapolation:
    """Richardson-extrapolated first eigenvalue over a refinement chain.

    ``h`` holds the nominal mesh sizes (coarse to fine) and ``lambdas`` the
    eigenvalues on them.  ``rate`` is the convergence order used: 2 at
    p = 2, measured from the last three levels otherwise.
    """

    value: float
    error: float
    rate: float
    h: list
    lambdas: list
    finest: EigenPair
    converged: bool


def _aitken(l0, l1, l2):
    d1, d2 = l1 - l0, l2 - l1
    if d1 == 0 or d2 / d1 <= 0 or d2 / d1 >= 1:
        return None, math.nan
    q = math.log2(d1 / d2)
    return l2 + d2 / (2.0**q - 1.0), q


def extrapolate(lambdas, p):
    """Richardson extrapolation of eigenvalues on meshes halved in size.

    Returns ``(value, error, rate)``; the error bar is the difference of
    the last two extrapolants.  At p = 2 the rate is fixed at 2; otherwise
    it is read off three consecutive levels, and with only three levels
    the bar falls back to the distance between the extrapolant and the
    finest value.  If the sequence is not in its asymptotic regime the
    finest value is returned with the last increment as error bar.
    """
    lam = [float(x) for x in lambdas]
    if len(lam) < 2:
        raise ValueError("need at least two levels to extrapolate")
    if p == 2:
        ext = [b + (b - a) / 3.0 for a, b in zip(lam[:-1], lam[1:])]
        err = abs(ext[-1] - ext[-2]) if len(ext) > 1 else abs(ext[-1] - lam[-1])
        return ext[-1], err, 2.0
    if len(lam) < 3:
        return lam[-1], abs(lam[-1] - lam[-2]), math.nan
    last, q = _aitken(*lam[-3:])
    if last is None:
        logger.warning("refinement sequence %s is not asymptotic; no extrapolation", lam)
        return lam[-1], abs(lam[-1] - lam[-2]), math.nan
    prev = _aitken(*lam[-4:-1])[0] if len(lam) >= 4 else None
    err = abs(last - prev) if prev is not None else abs(last - lam[-1])
    return last, err, q


def extrapolated_first_eigenvalue(domain, p=None, config=None, levels=4):
    """First eigenvalue on ``domain`` extrapolated over ``levels`` meshes.

    The finest mesh has nominal size ``config.mesh_h``; coarser ones double
    it.  Each level is a red refinement of the previous one and starts from
    the prolongated coarse eigenfunction.
    """
    from .mesh import build_mesh, prolong, refine

    config = config or SolverConfig()
    p = config.p if p is None else p
    if levels < 2:
        raise ValueError("levels must be at least 2")
    h0 = config.mesh_h * 2 ** (levels - 1)
    mesh = build_mesh(domain, h0)
    hs, lams, init, pair, ok = [], [], None, None, True
    for k in range(levels):
        pair = first_eigenpair(mesh, p, config, initial=init)
        ok = ok and pair.converged
        hs.append(h0 / 2**k)
        lams.append(pair.lam)
        if k < levels - 1:
            init = prolong(mesh, pair.field.values)
            mesh = refine(mesh)
    value, err, rate = extrapolate(lams, p)
    return Extrapolation(value, err, rate, hs, lams, pair, ok)


def tau_n(n, p=None, config=None):
    """First eigenpair of the sector of opening ``pi / n``; its eigenvalue is tau_n."""
    from .core import Sector
    from .mesh import build_mesh

    if int(n) != n or n < 1:
        raise ValueError(f"n must be a positive integer, got {n}")
    config = config or SolverConfig()
    mesh = build_mesh(Sector(0.0, math.pi / n), config.mesh_h)
    pair = first_eigenpair(mesh, p, config)
    pair.extra["n"] = int(n)
    return pair


CONJECTURE_NOTE = ("tau_1 is an upper bound for lambda_2; equality lambda_2 = tau_1 is "
                   "conjectured for p != 2 and is not checked here")


@dataclass
class Certificate:
    p: float
    tau_1: float
    tau_1_error: float
    gamma_2: float
    margin: float
    verdict: str
    meshes: list
    converged: bool = True
    note: str = CONJECTURE_NOTE

    def to_dict(self):
        return dataclasses.asdict(self)


def certify_second_asymmetry(p, config=None, levels=4):
    """Check numerically that ``tau_1 < gamma_2`` at exponent ``p``.

    tau_1 (half disk, extrapolated) bounds lambda_2 from above and gamma_2
    is the second radial eigenvalue, so ``tau_1 + error < gamma_2`` means
    no second eigenfunction is radial.  The verdict is ``CONFIRMED`` or
    ``INCONCLUSIVE``; a numerical run never refutes the statement.
    """
    from .core import Sector
    from .radial import radial_eigenvalue

    check_p(p)
    config = (config or SolverConfig()).replace(p=p)
    ext = extrapolated_first_eigenvalue(Sector(0.0, math.pi), p, config, levels)
    gamma_2 = radial_eigenvalue(p, 2, 2).lam
    confirmed = ext.converged and ext.value + ext.error < gamma_2
    return Certificate(p=float(p), tau_1=ext.value, tau_1_error=ext.error, gamma_2=gamma_2,
                       margin=gamma_2 - ext.value,
                       verdict="CONFIRMED" if confirmed else "INCONCLUSIVE",
                       meshes=ext.h, converged=ext.converged)


@dataclass
class SweepRow:
    t: float
    lam: float
    iterations: int = 0
    residual: float = math.nan
    converged: bool = False
    error: str = ""


def _sweep_point(args):
    from .core import DomainError, EccentricAnnulus, MeshError
    from .mesh import build_mesh

    r, t, p, config = args
    try:
        mesh = build_mesh(EccentricAnnulus(r, t), config.mesh_h)
    except (DomainError, MeshError) as exc:
        return SweepRow(t=t, lam=math.nan, error=str(exc))
    pair = first_eigenpair(mesh, p, config)
    return SweepRow(t=t, lam=pair.lam, iterations=pair.iterations, residual=pair.residual,
                    converged=pair.converged)


def obstacle_sweep(r, t_list, p=None, config=None, jobs=1):
    """First eigenvalue of the disk with a hole of radius ``r`` centred at ``(t, 0)``.

    Returns one :class:`SweepRow` per offset, sorted by ``t``.  Offsets
    whose gap ``1 - t - r`` is below ``2 * mesh_h`` (or that are otherwise
    inadmissible) yield a row with ``error`` set and ``lam = nan``.
    """
    config = config or SolverConfig()
    p = config.p if p is None else p
    tasks = [(r, float(t), p, config) for t in sorted(t_list)]
    if jobs > 1 and len(tasks) > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_sweep_point, tasks))
    return [_sweep_point(task) for task in tasks]
