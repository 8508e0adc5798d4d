"""Manufactured-solution data sets and solver verification.

The analytic fields are the cubic polynomials T_a = C' r^2 y and
u_a = C (r y^2, r^2 y).  Substituting them into the strong equations yields
volume sources, fluxes, exchange temperatures, and tractions for which they
are the exact solutions; solving the discrete problems against this data
verifies the assembly end to end (exactness at p = 3, h-convergence at
p = 1, and the hydrostatic-stress identity of the coupled problem).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import fem, geometry
from .params import lame_from_E_nu


#: Default material constants for the verification problems.
DEFAULT_MATERIAL = {
    "k": 10.0, "h_bottom": 2000.0, "h_outer": 2000.0, "h_inner": 200.0,
    "E": 5e9, "nu": 0.2, "alpha": 1e-6, "T0": 298.0,
}

DEFAULT_C = 1e-4   # displacement amplitude, 1/m^2
DEFAULT_CP = 1.0   # temperature amplitude, K/m^3


@dataclass
class ManufacturedCase:
    """Analytic fields plus the problem data that makes them exact."""

    kind: str                       # 'thermal' | 'mechanical' | 'coupled'
    thermal: fem.ThermalData
    mechanical: fem.MechanicalData
    C: float
    Cp: float
    material: dict

    # analytic evaluators -------------------------------------------------
    def temperature(self, r, y):
        return self.Cp * r ** 2 * y

    def temperature_grad(self, r, y):
        return np.stack([2.0 * self.Cp * r * y, self.Cp * r ** 2], axis=-1)

    def displacement(self, r, y):
        return np.stack([self.C * r * y ** 2, self.C * r ** 2 * y], axis=-1)

    def displacement_grad(self, r, y):
        """grad[..., i, j] = d u_i / d x_j with x = (r, y)."""
        C = self.C
        row_r = np.stack([C * y ** 2, 2.0 * C * r * y], axis=-1)
        row_y = np.stack([2.0 * C * r * y, C * r ** 2], axis=-1)
        return np.stack([row_r, row_y], axis=-2)

    def stress(self, r, y):
        """Analytic stress (rr, yy, tt, ry); thermal part for 'coupled'."""
        m = self.material
        E, nu = m["E"], m["nu"]
        C = self.C
        D = E / ((1.0 - 2.0 * nu) * (1.0 + nu))
        s_rr = D * (C * y ** 2 + nu * C * r ** 2)
        s_yy = D * (2.0 * nu * C * y ** 2 + (1.0 - nu) * C * r ** 2)
        s_tt = D * (C * y ** 2 + nu * C * r ** 2)
        s_ry = 2.0 * E * C * r * y / (1.0 + nu)
        if self.kind == "coupled":
            th = (E * m["alpha"] / (1.0 - 2.0 * nu)
                  * (self.Cp * r ** 2 * y - m["T0"]))
            s_rr = s_rr - th
            s_yy = s_yy - th
            s_tt = s_tt - th
        return np.stack([s_rr, s_yy, s_tt, s_ry], axis=-1)

    def von_mises(self, r, y):
        s = self.stress(r, y)
        mean = (s[..., 0] + s[..., 1] + s[..., 2]) / 3.0
        d = s.copy()
        for c in range(3):
            d[..., c] -= mean
        return np.sqrt(1.5 * (d[..., 0] ** 2 + d[..., 1] ** 2
                              + d[..., 2] ** 2 + 2.0 * d[..., 3] ** 2))


def manufactured_case(kind: str, C=DEFAULT_C, Cp=DEFAULT_CP,
                      material=None) -> ManufacturedCase:
    """Build the data whose exact solutions are the analytic fields."""
    if kind not in ("thermal", "mechanical", "coupled"):
        raise ValueError(f"unknown manufactured kind {kind!r}")
    m = dict(DEFAULT_MATERIAL)
    if material:
        m.update(material)
    k, E, nu, alpha, T0 = m["k"], m["E"], m["nu"], m["alpha"], m["T0"]
    mu, lam = lame_from_E_nu(E, nu)
    h_in, h_out, h_bot = m["h_inner"], m["h_outer"], m["h_bottom"]
    D = E / ((1.0 - 2.0 * nu) * (1.0 + nu))
    TH = E * alpha / (1.0 - 2.0 * nu)  # isotropic thermal stress factor

    thermal = fem.ThermalData(
        k=k, h_inner=h_in, h_outer=h_out, h_bottom=h_bot,
        Q=lambda r, y: -4.0 * Cp * k * y,
        q_top=lambda r, y, nr, ny: -Cp * k * r ** 2,
        T_inner=lambda r, y, nr, ny: (Cp * r ** 2 * y
                                      + Cp * (k / h_in)
                                      * (2 * r * y * nr + r ** 2 * ny)),
        T_outer=lambda r, y, nr, ny: Cp * r ** 2 * y
        + 2.0 * Cp * r * y * k / h_out,
        T_bottom=lambda r, y, nr, ny: Cp * r ** 2 * y
        - Cp * r ** 2 * k / h_bot,
    )

    coupled = kind == "coupled"

    def th_stress(r, y):
        return TH * (Cp * r ** 2 * y - T0) if coupled else 0.0

    def f0(r, y):
        fr = -(2.0 * E * nu * C * r / ((1 - 2 * nu) * (1 + nu))
               + 2.0 * E * C * r / (1 + nu))
        fy = -(4.0 * E * C * y / (1 + nu)
               + 4.0 * E * nu * C * y / ((1 - 2 * nu) * (1 + nu)))
        if coupled:
            fr = fr + 2.0 * TH * Cp * r * y
            fy = fy + TH * Cp * r ** 2
        return np.stack([np.broadcast_to(fr, np.shape(r)),
                         np.broadcast_to(fy, np.shape(r))], axis=-1)

    def g_top(r, y, nr, ny):
        gr = 2.0 * E * C * r * y / (1 + nu)
        gy = D * (2 * nu * C * y ** 2 + (1 - nu) * C * r ** 2) - th_stress(r, y)
        return np.stack([np.broadcast_to(gr, np.shape(r)),
                         np.broadcast_to(gy, np.shape(r))], axis=-1)

    def g_bottom(r, y, nr, ny):
        gr = -2.0 * E * C * r * y / (1 + nu)
        return np.stack([np.broadcast_to(gr, np.shape(r)),
                         np.zeros(np.shape(r))], axis=-1)

    def g_inner(r, y, nr, ny):
        s_rr = D * (C * y ** 2 + nu * C * r ** 2) - th_stress(r, y)
        s_yy = (D * (2 * nu * C * y ** 2 + (1 - nu) * C * r ** 2)
                - th_stress(r, y))
        s_ry = 2.0 * E * C * r * y / (1 + nu)
        return np.stack([s_rr * nr + s_ry * ny, s_ry * nr + s_yy * ny],
                        axis=-1)

    def g_outer(r, y, nr, ny):
        gr = D * (C * y ** 2 + nu * C * r ** 2) - th_stress(r, y)
        gy = 2.0 * E * C * r * y / (1 + nu)
        return np.stack([np.broadcast_to(gr, np.shape(r)),
                         np.broadcast_to(gy, np.shape(r))], axis=-1)

    mechanical = fem.MechanicalData(
        mu=mu, lam=lam, alpha=alpha, T0=T0, f0=f0,
        g_top=g_top, g_bottom=g_bottom, g_inner=g_inner, g_outer=g_outer)

    return ManufacturedCase(kind=kind, thermal=thermal, mechanical=mechanical,
                            C=C, Cp=Cp, material=m)


@dataclass
class ValidationReport:
    kind: str
    degree: int
    levels: list
    relative_errors: list       # primary-norm relative error per level
    l2_errors: list             # L2_r relative error per level
    slopes: list                # primary-norm slope per consecutive pair
    l2_slopes: list
    hydrostatic_residual: float = 0.0
    max_thermal_stress: float = 0.0
    von_mises_error: float = 0.0

    def rows(self):
        out = []
        for i, L in enumerate(self.levels):
            out.append({"level": L,
                        "relative_error": self.relative_errors[i],
                        "l2_error": self.l2_errors[i]})
        return out


def _solve_case(case: ManufacturedCase, level: int, degree: int):
    macro = geometry.reference_decomposition()
    mesh = geometry.refine(macro, level)
    if case.kind == "thermal":
        T = fem.solve("WT", mesh, thermal_data=case.thermal, degree=degree)
        return mesh, T, None
    if case.kind == "mechanical":
        u = fem.solve("WM1", mesh, mechanical_data=case.mechanical,
                      degree=degree)
        return mesh, None, u
    T = fem.solve("WT", mesh, thermal_data=case.thermal, degree=degree)
    u = fem.solve("WM", mesh, mechanical_data=case.mechanical, degree=degree,
                  temperature=T)
    return mesh, T, u


def run_validation(kind: str, degree: int, levels, C=DEFAULT_C, Cp=DEFAULT_CP,
                   material=None) -> ValidationReport:
    """Solve per level and compare against the analytic fields.

    Thermal errors in the H1_r norm, displacement errors in the U norm;
    L2_r errors alongside; slopes are log2 ratios between consecutive
    levels.  The coupled kind also evaluates the hydrostatic identity: the
    trace difference of the stresses computed with and without the thermal
    term must cancel the isotropic thermal stress.
    """
    case = manufactured_case(kind, C=C, Cp=Cp, material=material)
    rel, l2rel = [], []
    hydro_res, max_th, vm_err = 0.0, 0.0, 0.0
    for L in levels:
        mesh, T, u = _solve_case(case, L, degree)
        if kind == "thermal":
            err, ref = fem.error_norm(T, case.temperature,
                                      case.temperature_grad, "H1r")
            e2, r2 = fem.error_norm(T, case.temperature,
                                    case.temperature_grad, "L2r")
        else:
            err, ref = fem.error_norm(u, case.displacement,
                                      case.displacement_grad, "U")
            e2, r2 = fem.error_norm(u, case.displacement,
                                    case.displacement_grad, "L2r")
        rel.append(err / ref)
        l2rel.append(e2 / r2)

        if kind == "coupled" and L == levels[-1]:
            hydro_res, max_th = hydrostatic_identity_residual(
                u, T, case.mechanical)
            st = fem.stress_recovery(u, case.mechanical, temperature=T)
            x = st["points"]
            vma = case.von_mises(x[..., 0], x[..., 1])
            scale = np.abs(vma).max()
            vm_err = np.abs(st["von_mises"] - vma).max() / scale
        elif kind == "mechanical" and L == levels[-1]:
            st = fem.stress_recovery(u, case.mechanical)
            x = st["points"]
            vma = case.von_mises(x[..., 0], x[..., 1])
            vm_err = np.abs(st["von_mises"] - vma).max() / np.abs(vma).max()

    slopes = [float(np.log2(rel[i] / rel[i + 1]))
              for i in range(len(rel) - 1)]
    l2_slopes = [float(np.log2(l2rel[i] / l2rel[i + 1]))
                 for i in range(len(l2rel) - 1)]
    return ValidationReport(kind=kind, degree=degree, levels=list(levels),
                            relative_errors=rel, l2_errors=l2rel,
                            slopes=slopes, l2_slopes=l2_slopes,
                            hydrostatic_residual=hydro_res,
                            max_thermal_stress=max_th,
                            von_mises_error=vm_err)


def hydrostatic_identity_residual(u: fem.Field, T: fem.Field,
                                  data: fem.MechanicalData):
    """Residual of the coupled-stress identity.

    The mean of sigma(u)[T] - sigma(u)[T0] is the isotropic thermal stress
    with opposite sign; returns (max residual, max |thermal stress|).
    """
    with_T = fem.stress_recovery(u, data, temperature=T)
    without = fem.stress_recovery(u, data, temperature=None)
    trace_diff = (with_T["mean"] - without["mean"])
    ts = u.space
    scalar = T.space
    Tq = np.einsum("qa,ea->eq", scalar.tables()["N"],
                   T.values[scalar.element_nodes])
    thermal = data.thermal_modulus * (Tq - data.T0)
    residual = np.abs(trace_diff + thermal).max()
    return float(residual), float(np.abs(thermal).max())
