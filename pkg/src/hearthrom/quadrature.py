"""Gauss quadrature on the unit triangle and unit interval."""

from __future__ import annotations

import numpy as np
from scipy.special import roots_jacobi, roots_legendre


def triangle_rule(n: int):
    """Conical-product Gauss rule on {(x, y): x, y >= 0, x + y <= 1}.

    Tensorizes an n-point Gauss-Jacobi(1, 0) rule (absorbing the collapsed-
    coordinate Jacobian) with an n-point Gauss-Legendre rule; exact for all
    polynomials of total degree <= 2n - 1.  All points are strictly interior.

    Returns (points (n^2, 2), weights (n^2,)); weights sum to the area 1/2.
    """
    xj, wj = roots_jacobi(n, 1.0, 0.0)
    xl, wl = roots_legendre(n)
    u, wu = 0.5 * (xj + 1.0), 0.25 * wj
    v, wv = 0.5 * (xl + 1.0), 0.5 * wl
    U, V = np.meshgrid(u, v, indexing="ij")
    WU, WV = np.meshgrid(wu, wv, indexing="ij")
    pts = np.column_stack([U.ravel(), (V * (1.0 - U)).ravel()])
    return pts, (WU * WV).ravel()


def interval_rule(n: int):
    """n-point Gauss-Legendre rule on [0, 1], exact to degree 2n - 1."""
    x, w = roots_legendre(n)
    return 0.5 * (x + 1.0), 0.5 * w


def volume_rule_for_degree(p: int):
    """Default triangle rule for degree-p elements (exact well past 2p + 2)."""
    return triangle_rule(p + 3)


def edge_rule_for_degree(p: int):
    """Default edge rule for degree-p elements."""
    return interval_rule(p + 3)
