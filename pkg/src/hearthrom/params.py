"""Parameter containers for the hearth problem.

A query point is a :class:`ParameterTuple` combining five wall thicknesses,
five diameters, and four physical constants.  The repo-wide ordering
convention for flattened vectors is

    (t0, t1, t2, t3, t4, D0, D1, D2, D3, D4, k, mu, lambda, alpha).
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

#: Canonical ordering of all parameters in flattened vectors.
PARAM_NAMES = (
    "t0", "t1", "t2", "t3", "t4",
    "D0", "D1", "D2", "D3", "D4",
    "k", "mu", "lam", "alpha",
)

#: Reference wall thicknesses (m), bottom to top.
REFERENCE_THICKNESSES = (2.365, 0.6, 0.6, 0.5, 3.2)
#: Reference diameters (m): outer shell D0 and inner steps D1..D4.
REFERENCE_DIAMETERS = (14.10, 8.50, 9.2, 9.9, 10.6)
#: Reference physical constants: conductivity W/(m K), Lame parameters Pa,
#: thermal expansion 1/K.
REFERENCE_PHYSICAL = {"k": 10.0, "mu": 2.08e9, "lam": 1.39e9, "alpha": 1e-6}

#: Sampling box per parameter (SI units).
PARAMETER_BOUNDS = {
    "t0": (2.3, 2.4),
    "t1": (0.5, 0.7),
    "t2": (0.5, 0.7),
    "t3": (0.4, 0.6),
    "t4": (3.05, 3.35),
    "D0": (13.5, 14.5),
    "D1": (8.3, 8.7),
    "D2": (8.8, 9.2),
    "D3": (9.8, 10.2),
    "D4": (10.4, 10.8),
    "k": (9.8, 10.2),
    "mu": (1.9e9, 2.5e9),
    "lam": (1.2e9, 1.8e9),
    "alpha": (0.8e-6, 1.2e-6),
}


def lame_from_E_nu(E, nu):
    """Convert Young modulus / Poisson ratio to the Lame pair (mu, lambda)."""
    if E <= 0.0:
        raise ValueError("Young modulus must be positive")
    if not 0.0 <= nu < 0.5:
        raise ValueError("Poisson ratio must lie in [0, 0.5)")
    mu = E / (2.0 * (1.0 + nu))
    lam = E * nu / ((1.0 - 2.0 * nu) * (1.0 + nu))
    return mu, lam


def E_nu_from_lame(mu, lam):
    """Inverse of :func:`lame_from_E_nu`."""
    E = mu * (3.0 * lam + 2.0 * mu) / (lam + mu)
    nu = lam / (2.0 * (lam + mu))
    return E, nu


@dataclass(frozen=True)
class GeometricParams:
    """Wall thicknesses t0..t4 (m) and diameters D0..D4 (m)."""

    t: tuple = REFERENCE_THICKNESSES
    D: tuple = REFERENCE_DIAMETERS

    def __post_init__(self):
        if len(self.t) != 5 or len(self.D) != 5:
            raise ValueError("need five thicknesses and five diameters")
        if any(v <= 0.0 for v in self.t) or any(v <= 0.0 for v in self.D):
            raise ValueError("thicknesses and diameters must be positive")
        D0, D1, D2, D3, D4 = self.D
        if not (D1 < D2 < D3 < D4 < D0):
            raise ValueError("diameters must satisfy D1 < D2 < D3 < D4 < D0")

    @property
    def radii(self):
        """Radial grid {0, D1/2, D2/2, D3/2, D4/2, D0/2}, increasing."""
        D0, D1, D2, D3, D4 = self.D
        return np.array([0.0, D1 / 2, D2 / 2, D3 / 2, D4 / 2, D0 / 2])

    @property
    def heights(self):
        """Height grid: cumulative thickness sums {0, t0, ..., t0+..+t4}."""
        return np.concatenate([[0.0], np.cumsum(self.t)])

    @property
    def total_height(self):
        return float(sum(self.t))


@dataclass(frozen=True)
class PhysicalParams:
    """Thermal conductivity, Lame parameters, and thermal expansion."""

    k: float = REFERENCE_PHYSICAL["k"]
    mu: float = REFERENCE_PHYSICAL["mu"]
    lam: float = REFERENCE_PHYSICAL["lam"]
    alpha: float = REFERENCE_PHYSICAL["alpha"]

    def __post_init__(self):
        if min(self.k, self.mu, self.lam, self.alpha) <= 0.0:
            raise ValueError("physical parameters must be positive")

    @property
    def E(self):
        return E_nu_from_lame(self.mu, self.lam)[0]

    @property
    def nu(self):
        return E_nu_from_lame(self.mu, self.lam)[1]


@dataclass(frozen=True)
class ParameterTuple:
    """One query point: physical + geometric parameters and the active mask."""

    physical: PhysicalParams = field(default_factory=PhysicalParams)
    geometric: GeometricParams = field(default_factory=GeometricParams)
    active: tuple = ()

    def as_vector(self):
        """Flatten to the canonical 14-vector ordering."""
        g, p = self.geometric, self.physical
        return np.array(list(g.t) + list(g.D) + [p.k, p.mu, p.lam, p.alpha])

    def active_vector(self):
        """Values of the active parameters only, in canonical order."""
        full = self.as_vector()
        idx = [PARAM_NAMES.index(name) for name in self.active]
        return full[idx]

    @staticmethod
    def from_vector(vec, active=()):
        vec = np.asarray(vec, dtype=float)
        if vec.shape != (14,):
            raise ValueError("expected a 14-vector")
        geo = GeometricParams(t=tuple(vec[:5]), D=tuple(vec[5:10]))
        phys = PhysicalParams(k=vec[10], mu=vec[11], lam=vec[12], alpha=vec[13])
        return ParameterTuple(physical=phys, geometric=geo, active=tuple(active))


def reference_tuple(active=()):
    """The reference parameter tuple (all entries at nominal values)."""
    return ParameterTuple(active=tuple(active))


def tuple_with(active, values):
    """Reference tuple with the named parameters replaced by ``values``."""
    vec = reference_tuple().as_vector()
    for name, value in zip(active, values):
        vec[PARAM_NAMES.index(name)] = value
    return ParameterTuple.from_vector(vec, active=active)
