"""Parametrized operating-condition data for the hearth ROM experiments.

The boundary/load configuration is held fixed across a parameter study:
hot-metal temperature inside, coolant temperature outside and below, no
volumetric sources, and a depth-proportional hydrostatic pressure of the
melt column on the inner wall.  Only k, mu, lambda, alpha, and the geometry
vary with the parameter tuple.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import fem
from .params import ParameterTuple


@dataclass(frozen=True)
class HearthConfig:
    """Fixed operating data of the parametrized problem."""

    T_inner: float = 1773.0     # melt-side exchange temperature, K
    T_outer: float = 313.0      # shell coolant, K
    T_bottom: float = 313.0     # foundation coolant, K
    h_inner: float = 200.0      # W/(m^2 K)
    h_outer: float = 2000.0
    h_bottom: float = 2000.0
    Q: float = 0.0              # volumetric heat source, W/m^3
    q_top: float = 0.0          # top-rim flux, W/m^2
    T0: float = 298.0           # stress-free reference temperature, K
    f0: tuple = (0.0, 0.0)      # body force, N/m^3
    g_top: tuple = (0.0, 0.0)   # constant tractions, N/m^2
    g_bottom: tuple = (0.0, 0.0)
    g_outer: tuple = (0.0, 0.0)
    melt_density: float = 7460.0  # kg/m^3
    gravity: float = 9.81         # m/s^2

    @property
    def melt_weight(self):
        """Hydrostatic pressure gradient rho * g of the melt, Pa/m."""
        return self.melt_density * self.gravity


def thermal_data(cfg: HearthConfig, tup: ParameterTuple) -> fem.ThermalData:
    return fem.ThermalData(
        k=tup.physical.k, h_inner=cfg.h_inner, h_outer=cfg.h_outer,
        h_bottom=cfg.h_bottom, T_inner=cfg.T_inner, T_outer=cfg.T_outer,
        T_bottom=cfg.T_bottom, q_top=cfg.q_top, Q=cfg.Q)


def mechanical_data(cfg: HearthConfig, tup: ParameterTuple) -> fem.MechanicalData:
    """Mechanical data at a tuple, including the inner-wall melt pressure.

    The pressure acts against the outward normal and grows linearly with
    depth below the top of the walls.
    """
    y_max = tup.geometric.total_height
    rho_g = cfg.melt_weight

    def g_inner(r, y, nr, ny):
        p = rho_g * (y_max - y)
        return np.stack([-p * nr, -p * ny], axis=-1)

    return fem.MechanicalData(
        mu=tup.physical.mu, lam=tup.physical.lam, alpha=tup.physical.alpha,
        T0=cfg.T0, f0=cfg.f0, g_top=cfg.g_top, g_bottom=cfg.g_bottom,
        g_inner=g_inner, g_outer=cfg.g_outer)
