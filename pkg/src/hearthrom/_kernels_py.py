"""Pure-numpy element stiffness kernels (fallback backend).

Both kernels integrate over straight-sided triangles whose geometry is the
affine image of the reference triangle; reference basis tables are shared by
all elements.  Element degree-of-freedom ordering for the mechanical kernel
is interleaved: dof 2*a is the radial component of local node a, dof 2*a + 1
the vertical component.
"""

from __future__ import annotations

import numpy as np

BACKEND = "python"


def _geometry(coords, qp):
    """Jacobians, determinants, inverse transposes, and radii at quad points."""
    v0 = coords[:, 0]
    e1 = coords[:, 1] - v0
    e2 = coords[:, 2] - v0
    det = e1[:, 0] * e2[:, 1] - e2[:, 0] * e1[:, 1]
    # inverse Jacobian: dxhat/dx, rows indexed by reference coordinate
    inv = np.empty((len(coords), 2, 2))
    inv[:, 0, 0] = e2[:, 1] / det
    inv[:, 0, 1] = -e2[:, 0] / det
    inv[:, 1, 0] = -e1[:, 1] / det
    inv[:, 1, 1] = e1[:, 0] / det
    r = (v0[:, None, 0] + np.outer(e1[:, 0], qp[:, 0])
         + np.outer(e2[:, 0], qp[:, 1]))
    return det, inv, r


def _physical_gradients(dN, inv):
    """Map reference gradients to physical ones; shape (ne, nq, nb, 2)."""
    return np.einsum("qbd,edc->eqbc", dN, inv)


def thermal_element_matrices(coords, qp, qw, dN, kq):
    """Per-element conduction matrices of the r-weighted diffusion form.

    Parameters: coords (ne, 3, 2) vertices; qp/qw reference rule; dN
    (nq, nb, 2) reference basis gradients; kq (ne, nq) conductivity at the
    quadrature points.  Returns (ne, nb, nb).
    """
    det, inv, r = _geometry(coords, qp)
    g = _physical_gradients(dN, inv)
    w = kq * r * qw[None, :] * det[:, None]
    return np.einsum("eqac,eqbc,eq->eab", g, g, w, optimize=True)


def mechanical_element_matrices(coords, qp, qw, N, dN, lam, mu):
    """Per-element axisymmetric elasticity matrices (interleaved dofs).

    Integrates A{eps(u)}.{eps(phi)} r with the isotropic 4x4 elasticity
    matrix, including the hoop strain u_r / r.  lam/mu are per-element
    Lame values (ne,).  Returns (ne, 2*nb, 2*nb).
    """
    ne, nb = len(coords), N.shape[1]
    det, inv, r = _geometry(coords, qp)
    g = _physical_gradients(dN, inv)
    dNr, dNy = g[..., 0], g[..., 1]
    Nq = np.broadcast_to(N, (ne,) + N.shape)

    w = qw[None, :] * det[:, None]
    wr = w * r
    wor = w / r
    l2m = (lam + 2.0 * mu)[:, None]
    lamq = lam[:, None]
    muq = mu[:, None]

    def blk(A, B, weight):
        return np.einsum("eqa,eqb,eq->eab", A, B, weight, optimize=True)

    K_rr = (blk(dNr, dNr, l2m * wr) + blk(dNy, dNy, muq * wr)
            + blk(Nq, Nq, l2m * wor)
            + blk(Nq, dNr, lamq * w) + blk(dNr, Nq, lamq * w))
    K_yy = blk(dNy, dNy, l2m * wr) + blk(dNr, dNr, muq * wr)
    K_ry = (blk(dNr, dNy, lamq * wr) + blk(Nq, dNy, lamq * w)
            + blk(dNy, dNr, muq * wr))
    K_yr = (blk(dNy, dNr, lamq * wr) + blk(dNy, Nq, lamq * w)
            + blk(dNr, dNy, muq * wr))

    Ke = np.empty((ne, 2 * nb, 2 * nb))
    Ke[:, 0::2, 0::2] = K_rr
    Ke[:, 0::2, 1::2] = K_ry
    Ke[:, 1::2, 0::2] = K_yr
    Ke[:, 1::2, 1::2] = K_yy
    return Ke
