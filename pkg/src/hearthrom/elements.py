"""Lagrange basis functions of degree p on the reference triangle and edge.

Reference triangle: vertices (0,0), (1,0), (0,1).  Local node ordering:
the three vertices first, then the interior nodes of edges (v0,v1), (v1,v2),
(v2,v0) walking from the first to the second endpoint, then interior lattice
nodes in lexicographic order.  Reference edge: [0, 1] with endpoints first,
then interior nodes left to right.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np


@lru_cache(maxsize=None)
def triangle_nodes(p: int):
    """Lattice nodes (i/p, j/p) of the degree-p triangle, canonical order."""
    if p < 1:
        raise ValueError("degree must be >= 1")
    verts = [(0.0, 0.0), (1.0, 0.0), (0.0, 1.0)]
    nodes = list(verts)
    for a, b in ((0, 1), (1, 2), (2, 0)):
        pa, pb = np.array(verts[a]), np.array(verts[b])
        for i in range(1, p):
            nodes.append(tuple(pa + (i / p) * (pb - pa)))
    for j in range(1, p):
        for i in range(1, p - j):
            nodes.append((i / p, j / p))
    return np.array(nodes)


@lru_cache(maxsize=None)
def _monomials(p: int):
    return [(i, j) for total in range(p + 1) for j in range(total + 1)
            for i in [total - j]]


@lru_cache(maxsize=None)
def _coefficients(p: int):
    """Monomial coefficients of the Lagrange basis (Vandermonde inverse)."""
    nodes = triangle_nodes(p)
    mono = _monomials(p)
    V = np.array([[x ** i * y ** j for (i, j) in mono] for x, y in nodes])
    return np.linalg.inv(V)


def eval_basis(p: int, pts):
    """Basis values at reference points; shape (n_pts, n_basis)."""
    pts = np.atleast_2d(pts)
    mono = _monomials(p)
    M = np.column_stack([pts[:, 0] ** i * pts[:, 1] ** j for (i, j) in mono])
    return M @ _coefficients(p)


def eval_grad(p: int, pts):
    """Basis gradients at reference points; shape (n_pts, n_basis, 2)."""
    pts = np.atleast_2d(pts)
    x, y = pts[:, 0], pts[:, 1]
    mono = _monomials(p)
    Dx = np.column_stack([
        i * x ** max(i - 1, 0) * y ** j if i > 0 else np.zeros_like(x)
        for (i, j) in mono])
    Dy = np.column_stack([
        j * x ** i * y ** max(j - 1, 0) if j > 0 else np.zeros_like(x)
        for (i, j) in mono])
    C = _coefficients(p)
    return np.stack([Dx @ C, Dy @ C], axis=-1)


@lru_cache(maxsize=None)
def edge_nodes(p: int):
    """1-D lattice nodes on [0, 1]: endpoints first, then interior."""
    return np.array([0.0, 1.0] + [i / p for i in range(1, p)])


@lru_cache(maxsize=None)
def _edge_coefficients(p: int):
    nodes = edge_nodes(p)
    V = np.vander(nodes, p + 1, increasing=True)
    return np.linalg.inv(V)


def eval_edge_basis(p: int, t):
    """1-D Lagrange basis values at parameters t; shape (n_t, p + 1)."""
    t = np.atleast_1d(t)
    M = np.vander(t, p + 1, increasing=True)
    return M @ _edge_coefficients(p)
