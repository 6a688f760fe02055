"""Domain descriptors, solver configuration and eigenpair records.

Every domain lives inside the unit disk (outer radius 1) unless a radius is
given explicitly; eigenvalues on scaled copies follow from
:func:`scale_eigenvalue`.
"""
from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass, field
from typing import Any, ClassVar, Union

P_MIN = 1.1
P_MAX = 10.0

TWO_PI = 2.0 * math.pi


class DomainError(ValueError):
    """Raised when parameters fall outside the admissible set."""


class MeshError(ValueError):
    """Raised for invalid or unbuildable meshes."""


class IntegrationError(RuntimeError):
    """Raised when the radial integrator cannot reach r = 1."""

    def __init__(self, message, last_r):
        super().__init__(f"{message} (last valid r = {last_r:.6g})")
        self.last_r = last_r


class ConvergenceError(RuntimeError):
    """Raised when an iterative solver exhausts its iteration budget."""

    def __init__(self, message, bracket=None):
        super().__init__(message if bracket is None else f"{message}; last bracket {bracket}")
        self.bracket = bracket


def check_p(p):
    if not (P_MIN <= p <= P_MAX):
        raise DomainError(f"exponent p={p} outside supported range [{P_MIN}, {P_MAX}]")


# --------------------------------------------------------------------------
# domains

@dataclass(frozen=True)
class Ball:
    dim: int = 2
    radius: float = 1.0
    kind: ClassVar[str] = "ball"

    def __post_init__(self):
        if int(self.dim) != self.dim or self.dim < 1:
            raise DomainError(f"Ball dimension must be a positive integer, got {self.dim}")
        if not self.radius > 0:
            raise DomainError(f"Ball radius must be positive, got {self.radius}")

    @property
    def area(self):
        return math.pi * self.radius**2


@dataclass(frozen=True)
class Annulus:
    inner: float
    outer: float = 1.0
    kind: ClassVar[str] = "annulus"

    def __post_init__(self):
        if not (0 < self.inner < self.outer):
            raise DomainError(f"Annulus needs 0 < inner < outer, got ({self.inner}, {self.outer})")

    @property
    def area(self):
        return math.pi * (self.outer**2 - self.inner**2)


@dataclass(frozen=True)
class Sector:
    angle_lo: float
    angle_hi: float
    kind: ClassVar[str] = "sector"

    def __post_init__(self):
        if not (0 <= self.angle_lo < self.angle_hi <= TWO_PI + 1e-12):
            raise DomainError(
                f"Sector needs 0 <= angle_lo < angle_hi <= 2*pi, got ({self.angle_lo}, {self.angle_hi})")

    @property
    def span(self):
        return self.angle_hi - self.angle_lo

    @property
    def area(self):
        return 0.5 * self.span


@dataclass(frozen=True)
class EccentricAnnulus:
    """Unit disk minus the closed disk of radius ``r`` centred at ``(t, 0)``."""

    r: float
    t: float = 0.0
    kind: ClassVar[str] = "eccentric_annulus"

    def __post_init__(self):
        if not self.r > 0:
            raise DomainError(f"obstacle radius must be positive, got {self.r}")
        if not self.t >= 0:
            raise DomainError(f"offset must be nonnegative, got {self.t}")
        if not self.t + self.r < 1:
            raise DomainError(f"obstacle must lie strictly inside the unit disk: t + r = {self.t + self.r}")

    @property
    def gap(self):
        return 1.0 - self.t - self.r

    @property
    def area(self):
        return math.pi * (1.0 - self.r**2)


@dataclass(frozen=True)
class HalfBall:
    """Upper half of the unit disk, ``{y > 0}``."""

    dim: int = 2
    kind: ClassVar[str] = "half_ball"

    def __post_init__(self):
        if self.dim != 2:
            raise DomainError("HalfBall is only available in dimension 2")

    @property
    def area(self):
        return 0.5 * math.pi


DomainSpec = Union[Ball, Annulus, Sector, EccentricAnnulus, HalfBall]

_DOMAIN_KINDS = {cls.kind: cls for cls in (Ball, Annulus, Sector, EccentricAnnulus, HalfBall)}


def domain_to_dict(spec):
    out = {"kind": spec.kind}
    out.update(dataclasses.asdict(spec))
    return out


def domain_from_dict(data):
    data = dict(data)
    kind = data.pop("kind", None)
    if kind not in _DOMAIN_KINDS:
        raise DomainError(f"unknown domain kind {kind!r}; expected one of {sorted(_DOMAIN_KINDS)}")
    try:
        return _DOMAIN_KINDS[kind](**data)
    except TypeError as exc:
        raise DomainError(f"bad fields for {kind}: {exc}") from None


# --------------------------------------------------------------------------
# configuration and results

@dataclass(frozen=True)
class SolverConfig:
    """Settings shared by the iterative solvers.

    ``regularization_eps`` is the final value of the gradient regularization
    used for ``p < 2``; the eigensolver continues down to it from 1e-2.
    """

    p: float = 2.0
    tol_eig: float = 1e-8
    tol_grad: float = 1e-6
    max_iter: int = 500
    mesh_h: float = 0.05
    seed: int = 0
    regularization_eps: float = 1e-8

    def __post_init__(self):
        check_p(self.p)
        for name in ("tol_eig", "tol_grad", "mesh_h"):
            if not getattr(self, name) > 0:
                raise DomainError(f"{name} must be positive")
        if self.max_iter < 1:
            raise DomainError("max_iter must be at least 1")
        if self.regularization_eps < 0:
            raise DomainError("regularization_eps must be nonnegative")

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)

    def to_dict(self):
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data):
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise DomainError(f"unknown solver config keys: {sorted(unknown)}")
        return cls(**data)


@dataclass
class EigenPair:
    """An eigenvalue estimate together with its eigenfunction.

    ``field`` is a :class:`~plapeig.fem.ScalarField` for mesh-based solves
    and a :class:`~plapeig.radial.RadialSolution` for the shooter.
    """

    lam: float
    field: Any
    iterations: int = 0
    residual: float = 0.0
    converged: bool = True
    trace: Any = None
    extra: dict = field(default_factory=dict)

    def summary(self):
        return {"lambda": self.lam, "iterations": self.iterations,
                "residual": self.residual, "converged": self.converged}


def config_to_json(domain=None, config=None, **extra):
    doc = {}
    if domain is not None:
        doc["domain"] = domain_to_dict(domain)
    if config is not None:
        doc["solver"] = config.to_dict()
    doc.update(extra)
    return json.dumps(doc, indent=2, sort_keys=True)


def config_from_json(text):
    """Parse a JSON config document into ``(domain, config, rest)``."""
    doc = json.loads(text)
    domain = domain_from_dict(doc["domain"]) if "domain" in doc else None
    config = SolverConfig.from_dict(doc["solver"]) if "solver" in doc else None
    rest = {k: v for k, v in doc.items() if k not in ("domain", "solver")}
    return domain, config, rest


def scale_eigenvalue(lam, s, p):
    """Eigenvalue on the dilated domain ``s * Omega`` given ``lam`` on ``Omega``.

    Both functionals are p-homogeneous, so eigenvalues scale like ``s**-p``.
    """
    if not s > 0:
        raise DomainError(f"scale factor must be positive, got {s}")
    if not p > 1:
        raise DomainError(f"p must exceed 1, got {p}")
    return lam * s ** (-p)
