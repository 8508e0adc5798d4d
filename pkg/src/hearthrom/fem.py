"""Axisymmetric full-order thermal and mechanical finite element solver.

All forms carry the cylindrical radial weight r.  The thermal problem is a
diffusion equation with convective (Robin) exchange on the inner, outer, and
bottom boundaries and a prescribed flux on the top rim; the symmetry axis is
a natural boundary.  The mechanical problem is axisymmetric linear
thermoelasticity with the hoop strain u_r / r, essential conditions u_y = 0
on the bottom and u_r = 0 on the axis, tractions elsewhere, and a thermal
load proportional to (2 mu + 3 lambda) alpha (T - T0).

Data coefficients are constants or evaluators: volume data f(r, y),
boundary data f(r, y, n_r, n_y) with the outward normal.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import elements, kernels, quadrature
from .geometry import (Mesh, TAG_AXIS, TAG_BOTTOM, TAG_INNER, TAG_OUTER,
                       TAG_TOP)


# ---------------------------------------------------------------------------
# function spaces and fields
# ---------------------------------------------------------------------------

class FunctionSpace:
    """Degree-p Lagrange space on a triangle mesh (scalar or 2-vector)."""

    def __init__(self, mesh: Mesh, degree: int = 1, rank: str = "scalar"):
        if degree not in (1, 2, 3):
            raise ValueError("degree must be 1, 2, or 3")
        if rank not in ("scalar", "vector"):
            raise ValueError("rank must be 'scalar' or 'vector'")
        self.mesh = mesh
        self.degree = degree
        self.rank = rank
        self._cache = {}
        self._build_nodes()
        if rank == "vector":
            self._build_constraints()
        else:
            self.constrained = np.array([], dtype=np.int64)

    # -- node layout --------------------------------------------------------
    def _build_nodes(self):
        mesh, p = self.mesh, self.degree
        n_vert = mesh.n_vertices
        coords = [mesh.vertices]
        next_id = n_vert

        edge_nodes = {}  # (min_v, max_v) -> list of p-1 node ids, min -> max

        def edge_ids(a, b):
            nonlocal next_id
            key = (a, b) if a < b else (b, a)
            if key not in edge_nodes:
                ids = list(range(next_id, next_id + p - 1))
                next_id += p - 1
                edge_nodes[key] = ids
                lo, hi = mesh.vertices[key[0]], mesh.vertices[key[1]]
                frac = np.arange(1, p)[:, None] / p
                coords.append(lo + frac * (hi - lo))
            ids = edge_nodes[key]
            return ids if a < b else ids[::-1]

        n_inner = (p - 1) * (p - 2) // 2
        lattice = elements.triangle_nodes(p)
        elem_nodes = np.empty((mesh.n_elements, len(lattice)), dtype=np.int64)
        for e, (a, b, c) in enumerate(mesh.elements):
            local = [a, b, c]
            if p >= 2:
                local += edge_ids(a, b) + edge_ids(b, c) + edge_ids(c, a)
            if n_inner:
                local += list(range(next_id, next_id + n_inner))
                pa, pb, pc = (mesh.vertices[v] for v in (a, b, c))
                inner = lattice[3 + 3 * (p - 1):]
                coords.append(pa + np.outer(inner[:, 0], pb - pa)
                              + np.outer(inner[:, 1], pc - pa))
                next_id += n_inner
            elem_nodes[e] = local

        self.n_nodes = next_id
        self.node_coords = np.vstack(coords)
        self.element_nodes = elem_nodes

        benodes = np.empty((len(mesh.boundary_edges), p + 1), dtype=np.int64)
        for i, (a, b) in enumerate(mesh.boundary_edges):
            benodes[i] = [a, b] + (edge_ids(a, b) if p >= 2 else [])
        self.boundary_edge_nodes = benodes

    def _build_constraints(self):
        """u_y = 0 on the bottom boundary, u_r = 0 on the symmetry axis."""
        tags = self.mesh.boundary_tags
        bottom = np.unique(self.boundary_edge_nodes[tags == TAG_BOTTOM])
        axis = np.unique(self.boundary_edge_nodes[tags == TAG_AXIS])
        self.constrained = np.unique(np.concatenate(
            [2 * bottom + 1, 2 * axis]))

    # -- dof bookkeeping ----------------------------------------------------
    @property
    def n_dofs(self):
        return self.n_nodes * (2 if self.rank == "vector" else 1)

    def element_dofs(self):
        """Element dof ids; interleaved (r, y) per node for vector spaces."""
        if self.rank == "scalar":
            return self.element_nodes
        nodes = self.element_nodes
        dofs = np.empty((nodes.shape[0], 2 * nodes.shape[1]), dtype=np.int64)
        dofs[:, 0::2] = 2 * nodes
        dofs[:, 1::2] = 2 * nodes + 1
        return dofs

    def free_mask(self):
        mask = np.ones(self.n_dofs, dtype=bool)
        mask[self.constrained] = False
        return mask

    # -- cached reference tables and element geometry -----------------------
    def tables(self):
        """Reference quadrature rule and basis tables, plus element coords."""
        if "tables" not in self._cache:
            p = self.degree
            qp, qw = quadrature.volume_rule_for_degree(p)
            tab = {
                "qp": np.ascontiguousarray(qp),
                "qw": np.ascontiguousarray(qw),
                "N": np.ascontiguousarray(elements.eval_basis(p, qp)),
                "dN": np.ascontiguousarray(elements.eval_grad(p, qp)),
                "coords": np.ascontiguousarray(
                    self.mesh.vertices[self.mesh.elements]),
            }
            self._cache["tables"] = tab
        return self._cache["tables"]

    def geometry_factors(self):
        """detJ (ne,), physical gradients (ne, nq, nb, 2), radii (ne, nq)."""
        if "geom" not in self._cache:
            from . import _kernels_py
            t = self.tables()
            det, inv, r = _kernels_py._geometry(t["coords"], t["qp"])
            g = _kernels_py._physical_gradients(t["dN"], inv)
            self._cache["geom"] = (det, g, r)
        return self._cache["geom"]

    def quad_points(self):
        """Physical volume quadrature points (ne, nq, 2)."""
        t = self.tables()
        v0 = t["coords"][:, 0]
        e1 = t["coords"][:, 1] - v0
        e2 = t["coords"][:, 2] - v0
        x = (v0[:, None, :] + np.einsum("ei,q->eqi", e1, t["qp"][:, 0])
             + np.einsum("ei,q->eqi", e2, t["qp"][:, 1]))
        return x

    def edge_tables(self, tag):
        """Quadrature data for the boundary edges carrying ``tag``."""
        key = ("edges", tag)
        if key not in self._cache:
            mesh, p = self.mesh, self.degree
            sel = np.nonzero(mesh.boundary_tags == tag)[0]
            t, w = quadrature.edge_rule_for_degree(p)
            Eb = elements.eval_edge_basis(p, t)
            a = mesh.vertices[mesh.boundary_edges[sel, 0]]
            b = mesh.vertices[mesh.boundary_edges[sel, 1]]
            d = b - a
            length = np.hypot(d[:, 0], d[:, 1])
            with np.errstate(invalid="ignore", divide="ignore"):
                normal = np.column_stack([d[:, 1], -d[:, 0]]) / length[:, None]
            pts = a[:, None, :] + t[None, :, None] * d[:, None, :]
            self._cache[key] = {
                "sel": sel,
                "nodes": self.boundary_edge_nodes[sel],
                "qw": w, "basis": Eb,
                "points": pts, "length": length, "normal": normal,
                "sub": mesh.boundary_sub[sel],
            }
        return self._cache[key]


@dataclass
class Field:
    """Coefficient vector over a function space."""

    space: FunctionSpace
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.space.n_dofs,):
            raise ValueError("coefficient length does not match the space")

    def copy(self):
        return Field(self.space, self.values.copy())


def interpolate(space: FunctionSpace, fn) -> Field:
    """Nodal interpolant of ``fn(r, y)`` (scalar or 2-vector valued)."""
    xy = space.node_coords
    vals = np.asarray(fn(xy[:, 0], xy[:, 1]), dtype=float)
    if space.rank == "scalar":
        return Field(space, vals)
    out = np.empty(space.n_dofs)
    out[0::2] = vals[..., 0] if vals.ndim == 2 else vals[0]
    out[1::2] = vals[..., 1] if vals.ndim == 2 else vals[1]
    return Field(space, out)


# ---------------------------------------------------------------------------
# problem data
# ---------------------------------------------------------------------------

def _eval_volume(data, r, y):
    """Evaluate a constant-or-callable volume coefficient at points."""
    if callable(data):
        return np.broadcast_to(np.asarray(data(r, y), dtype=float), r.shape)
    return np.full(r.shape, float(data))


def _eval_boundary(data, r, y, nr, ny, vector=False):
    """Evaluate boundary data; vector data yields shape (..., 2)."""
    if callable(data):
        out = np.asarray(data(r, y, nr, ny), dtype=float)
        shape = r.shape + ((2,) if vector else ())
        return np.broadcast_to(out, shape)
    data = np.asarray(data, dtype=float)
    if vector:
        return np.broadcast_to(data, r.shape + (2,))
    return np.full(r.shape, float(data))


@dataclass
class ThermalData:
    """Coefficients of the thermal problem (constants or evaluators)."""

    k: object = 10.0
    h_inner: object = 200.0
    h_outer: object = 2000.0
    h_bottom: object = 2000.0
    T_inner: object = 0.0
    T_outer: object = 0.0
    T_bottom: object = 0.0
    q_top: object = 0.0
    Q: object = 0.0


@dataclass
class MechanicalData:
    """Coefficients of the mechanical problem (constants or evaluators)."""

    mu: float = 2.08e9
    lam: float = 1.39e9
    alpha: float = 1e-6
    T0: float = 298.0
    f0: object = (0.0, 0.0)
    g_top: object = (0.0, 0.0)
    g_bottom: object = (0.0, 0.0)
    g_inner: object = (0.0, 0.0)
    g_outer: object = (0.0, 0.0)

    @property
    def thermal_modulus(self):
        """Isotropic thermal stress factor (2 mu + 3 lambda) alpha."""
        return (2.0 * self.mu + 3.0 * self.lam) * self.alpha


@dataclass
class LinearSystem:
    """Assembled sparse system with symmetric constraint elimination."""

    matrix: sp.csr_matrix          # full (unconstrained) operator
    rhs: np.ndarray
    space: FunctionSpace
    eliminated: bool = dc_field(default=False)

    def solve(self) -> Field:
        free = self.space.free_mask()
        x = np.zeros(self.space.n_dofs)
        A = self.matrix
        if free.all():
            Aff, bf = A.tocsc(), self.rhs
            x = spla.splu(Aff).solve(bf)
        else:
            Aff = A[free][:, free].tocsc()
            x[free] = spla.splu(Aff).solve(self.rhs[free])
        return Field(self.space, x)

    def reduced(self):
        """(matrix, rhs) restricted to free dofs (SPD after elimination)."""
        free = self.space.free_mask()
        return self.matrix[free][:, free], self.rhs[free]


def _scatter(space, Ke):
    """Assemble per-element dense blocks into a CSR matrix."""
    dofs = space.element_dofs()
    ne, nd = dofs.shape
    rows = np.repeat(dofs, nd, axis=1).ravel()
    cols = np.tile(dofs, (1, nd)).ravel()
    A = sp.coo_matrix((Ke.ravel(), (rows, cols)),
                      shape=(space.n_dofs, space.n_dofs))
    return A.tocsr()


def _scatter_vector(space, dofs, fe):
    b = np.zeros(space.n_dofs)
    np.add.at(b, dofs.ravel(), fe.ravel())
    return b


# ---------------------------------------------------------------------------
# thermal assembly
# ---------------------------------------------------------------------------

#: Robin boundary tags and their (coefficient, exchange-temperature) fields.
ROBIN_TAGS = ((TAG_INNER, "h_inner", "T_inner"),
              (TAG_OUTER, "h_outer", "T_outer"),
              (TAG_BOTTOM, "h_bottom", "T_bottom"))


def assemble_thermal(space: FunctionSpace, data: ThermalData) -> LinearSystem:
    """r-weighted conduction + Robin terms; Q, Robin data, and top flux rhs."""
    if space.rank != "scalar":
        raise ValueError("thermal problem needs a scalar space")
    t = space.tables()
    x = space.quad_points()
    kq = _eval_volume(data.k, x[..., 0], x[..., 1])
    if np.any(kq <= 0.0):
        raise ValueError("conductivity must be positive at quadrature points")
    Ke = kernels.thermal_element_matrices(
        t["coords"], t["qp"], t["qw"], t["dN"], np.ascontiguousarray(kq))
    A = _scatter(space, np.asarray(Ke))

    det, _, rq = space.geometry_factors()
    w = t["qw"][None, :] * det[:, None] * rq
    Qq = _eval_volume(data.Q, x[..., 0], x[..., 1])
    b = _scatter_vector(space, space.element_nodes,
                        np.einsum("qa,eq->ea", t["N"], w * Qq))

    for tag, h_name, T_name in ROBIN_TAGS:
        ed = space.edge_tables(tag)
        if not len(ed["sel"]):
            continue
        r, y = ed["points"][..., 0], ed["points"][..., 1]
        nr = np.broadcast_to(ed["normal"][:, None, 0], r.shape)
        ny = np.broadcast_to(ed["normal"][:, None, 1], r.shape)
        h = _eval_boundary(getattr(data, h_name), r, y, nr, ny)
        if np.any(h <= 0.0):
            raise ValueError(f"nonpositive Robin coefficient on tag {tag}")
        Tex = _eval_boundary(getattr(data, T_name), r, y, nr, ny)
        w = ed["qw"][None, :] * ed["length"][:, None] * r * h
        Me = np.einsum("qa,qb,eq->eab", ed["basis"], ed["basis"], w)
        A = A + _scatter_like(space, ed["nodes"], Me)
        b += _scatter_vector(space, ed["nodes"],
                             np.einsum("qa,eq->ea", ed["basis"], w * Tex))

    ed = space.edge_tables(TAG_TOP)
    if len(ed["sel"]):
        r, y = ed["points"][..., 0], ed["points"][..., 1]
        nr = np.broadcast_to(ed["normal"][:, None, 0], r.shape)
        ny = np.broadcast_to(ed["normal"][:, None, 1], r.shape)
        q = _eval_boundary(data.q_top, r, y, nr, ny)
        w = ed["qw"][None, :] * ed["length"][:, None] * r
        b -= _scatter_vector(space, ed["nodes"],
                             np.einsum("qa,eq->ea", ed["basis"], w * q))

    return LinearSystem(matrix=A, rhs=b, space=space)


def _scatter_like(space, nodes, Me):
    nd = nodes.shape[1]
    rows = np.repeat(nodes, nd, axis=1).ravel()
    cols = np.tile(nodes, (1, nd)).ravel()
    return sp.coo_matrix((Me.ravel(), (rows, cols)),
                         shape=(space.n_dofs, space.n_dofs)).tocsr()


# ---------------------------------------------------------------------------
# mechanical assembly
# ---------------------------------------------------------------------------

TRACTION_TAGS = ((TAG_TOP, "g_top"), (TAG_BOTTOM, "g_bottom"),
                 (TAG_INNER, "g_inner"), (TAG_OUTER, "g_outer"))


def _temperature_at_quadrature(space, temperature, scalar_space=None):
    """Temperature values at volume quadrature points, or None."""
    if temperature is None:
        return None
    if isinstance(temperature, Field):
        ts = temperature.space
        if ts.mesh is not space.mesh or ts.degree != space.degree:
            raise ValueError("temperature field must share mesh and degree")
        return np.einsum("qa,ea->eq", ts.tables()["N"],
                         temperature.values[ts.element_nodes])
    x = space.quad_points()
    return _eval_volume(temperature, x[..., 0], x[..., 1])


def assemble_mechanical(space: FunctionSpace, data: MechanicalData,
                        temperature=None, include_loads=True) -> LinearSystem:
    """Axisymmetric elasticity operator with thermal / body / traction loads.

    ``temperature`` may be a Field (same mesh and degree), an evaluator, or
    None (meaning T = T0, zero thermal load).  With ``include_loads=False``
    only the thermal-difference load is assembled (the purely thermal
    sub-problem of the superposition split).
    """
    if space.rank != "vector":
        raise ValueError("mechanical problem needs a vector space")
    ne = space.mesh.n_elements
    t = space.tables()
    lam = np.full(ne, float(data.lam))
    mu = np.full(ne, float(data.mu))
    Ke = kernels.mechanical_element_matrices(
        t["coords"], t["qp"], t["qw"], t["N"], t["dN"], lam, mu)
    A = _scatter(space, np.asarray(Ke))

    det, g, rq = space.geometry_factors()
    w = t["qw"][None, :] * det[:, None]
    wr = w * rq
    dofs = space.element_dofs()
    b = np.zeros(space.n_dofs)

    Tq = _temperature_at_quadrature(space, temperature)
    if Tq is not None:
        coef = data.thermal_modulus * (Tq - data.T0)
        fr = (np.einsum("eqa,eq->ea", g[..., 0], coef * wr)
              + np.einsum("qa,eq->ea", t["N"], coef * w))
        fy = np.einsum("eqa,eq->ea", g[..., 1], coef * wr)
        fe = np.empty_like(dofs, dtype=float)
        fe[:, 0::2] = fr
        fe[:, 1::2] = fy
        b += _scatter_vector(space, dofs, fe)

    if include_loads:
        x = space.quad_points()
        f0 = data.f0
        if callable(f0):
            fv = np.broadcast_to(np.asarray(f0(x[..., 0], x[..., 1]),
                                            dtype=float), x.shape)
        else:
            fv = np.broadcast_to(np.asarray(f0, dtype=float), x.shape)
        if np.any(fv):
            fe = np.empty_like(dofs, dtype=float)
            fe[:, 0::2] = np.einsum("qa,eq->ea", t["N"], wr * fv[..., 0])
            fe[:, 1::2] = np.einsum("qa,eq->ea", t["N"], wr * fv[..., 1])
            b += _scatter_vector(space, dofs, fe)

        for tag, g_name in TRACTION_TAGS:
            ed = space.edge_tables(tag)
            if not len(ed["sel"]):
                continue
            r, y = ed["points"][..., 0], ed["points"][..., 1]
            nr = np.broadcast_to(ed["normal"][:, None, 0], r.shape)
            ny = np.broadcast_to(ed["normal"][:, None, 1], r.shape)
            gv = _eval_boundary(getattr(data, g_name), r, y, nr, ny,
                                vector=True)
            if not np.any(gv):
                continue
            wb = ed["qw"][None, :] * ed["length"][:, None] * r
            nodes = ed["nodes"]
            edofs = np.empty((nodes.shape[0], 2 * nodes.shape[1]),
                             dtype=np.int64)
            edofs[:, 0::2] = 2 * nodes
            edofs[:, 1::2] = 2 * nodes + 1
            fe = np.empty_like(edofs, dtype=float)
            fe[:, 0::2] = np.einsum("qa,eq->ea", ed["basis"], wb * gv[..., 0])
            fe[:, 1::2] = np.einsum("qa,eq->ea", ed["basis"], wb * gv[..., 1])
            b += _scatter_vector(space, edofs, fe)

    return LinearSystem(matrix=A, rhs=b, space=space)


# ---------------------------------------------------------------------------
# model driver
# ---------------------------------------------------------------------------

def solve(model: str, mesh: Mesh, thermal_data: ThermalData = None,
          mechanical_data: MechanicalData = None, degree: int = 1,
          temperature: Field = None):
    """Solve one of the discrete models.

    'WT' returns the temperature; 'WM' the total displacement; 'WM1' the
    purely mechanical part; 'WM2' the purely thermal part.  The mechanical
    models that need a temperature solve 'WT' first unless ``temperature``
    is supplied.
    """
    if model == "WT":
        space = FunctionSpace(mesh, degree, "scalar")
        return assemble_thermal(space, thermal_data).solve()
    if model not in ("WM", "WM1", "WM2"):
        raise ValueError(f"unknown model {model!r}")
    space = FunctionSpace(mesh, degree, "vector")
    if model == "WM1":
        return assemble_mechanical(space, mechanical_data, None).solve()
    if temperature is None:
        temperature = solve("WT", mesh, thermal_data, degree=degree)
    include = model == "WM"
    return assemble_mechanical(space, mechanical_data, temperature,
                               include_loads=include).solve()


# ---------------------------------------------------------------------------
# inner products and norms
# ---------------------------------------------------------------------------

def inner_matrix(space: FunctionSpace, kind: str) -> sp.csr_matrix:
    """Gram matrix of an r-weighted inner product ('L2r', 'H1r', or 'U')."""
    key = ("inner", kind)
    if key in space._cache:
        return space._cache[key]
    t = space.tables()
    det, g, rq = space.geometry_factors()
    w = t["qw"][None, :] * det[:, None]
    wr = w * rq
    N = t["N"]
    dNr, dNy = g[..., 0], g[..., 1]

    def blk(Aq, Bq, weight):
        return np.einsum("eqa,eqb,eq->eab", Aq, Bq, weight, optimize=True)

    Nq = np.broadcast_to(N, dNr.shape)
    mass = blk(Nq, Nq, wr)
    stiff = blk(dNr, dNr, wr) + blk(dNy, dNy, wr)

    if space.rank == "scalar":
        if kind == "L2r":
            Me = mass
        elif kind == "H1r":
            Me = mass + stiff
        else:
            raise ValueError(f"unknown scalar inner product {kind!r}")
        M = _scatter(space, Me)
    else:
        nb = N.shape[1]
        Me = np.zeros((space.mesh.n_elements, 2 * nb, 2 * nb))
        if kind == "L2r":
            Me[:, 0::2, 0::2] = mass
            Me[:, 1::2, 1::2] = mass
        elif kind == "U":
            hoop = blk(Nq, Nq, w / rq)
            cross = blk(dNr, dNy, wr)
            Me[:, 0::2, 0::2] = mass + stiff + hoop
            Me[:, 1::2, 1::2] = mass + stiff
            # mixed shear terms: du_r/dy dphi_y/dr + du_y/dr dphi_r/dy
            Me[:, 1::2, 0::2] = cross
            Me[:, 0::2, 1::2] = cross.transpose(0, 2, 1)
        else:
            raise ValueError(f"unknown vector inner product {kind!r}")
        M = _scatter(space, Me)
    space._cache[key] = M
    return M


def inner_product(kind, f: Field, g: Field, operator=None):
    """Inner product of two fields; energy kinds use a supplied operator."""
    if f.space is not g.space:
        raise ValueError("fields live on different spaces")
    if kind in ("energy_T", "energy_M"):
        if operator is None:
            raise ValueError("energy inner products need the assembled operator")
        return float(f.values @ (operator @ g.values))
    M = inner_matrix(f.space, kind)
    return float(f.values @ (M @ g.values))


def norm(kind, f: Field, operator=None):
    return np.sqrt(max(inner_product(kind, f, f, operator), 0.0))


# ---------------------------------------------------------------------------
# quadrature-level field evaluation and true-error norms
# ---------------------------------------------------------------------------

def field_at_quadrature(f: Field):
    """Values and physical gradients at all volume quadrature points.

    Scalar: (values (ne, nq), grad (ne, nq, 2)).
    Vector: (values (ne, nq, 2), grad (ne, nq, 2, 2)) with grad[..., i, j] =
    d u_i / d x_j.
    """
    space = f.space
    t = space.tables()
    det, g, rq = space.geometry_factors()
    N = t["N"]
    if space.rank == "scalar":
        vals = f.values[space.element_nodes]
        return (np.einsum("qa,ea->eq", N, vals),
                np.einsum("eqac,ea->eqc", g, vals))
    vr = f.values[2 * space.element_nodes]
    vy = f.values[2 * space.element_nodes + 1]
    vals = np.stack([np.einsum("qa,ea->eq", N, vr),
                     np.einsum("qa,ea->eq", N, vy)], axis=-1)
    grad = np.stack([np.einsum("eqac,ea->eqc", g, vr),
                     np.einsum("eqac,ea->eqc", g, vy)], axis=-2)
    return vals, grad


def error_norm(f: Field, exact_value, exact_grad, kind: str):
    """Relative error of a field against analytic value/gradient evaluators.

    Scalar evaluators: value(r, y) -> (n,), grad(r, y) -> (n, 2).
    Vector evaluators: value(r, y) -> (n, 2), grad(r, y) -> (n, 2, 2).
    Returns (absolute error, norm of the exact field).
    """
    space = f.space
    t = space.tables()
    det, _, rq = space.geometry_factors()
    w = t["qw"][None, :] * det[:, None]
    wr = w * rq
    x = space.quad_points()
    r, y = x[..., 0], x[..., 1]
    vals, grad = field_at_quadrature(f)
    ev = np.asarray(exact_value(r, y), dtype=float)
    eg = np.asarray(exact_grad(r, y), dtype=float)

    if space.rank == "scalar":
        dv, dg = vals - ev, grad - eg
        if kind == "L2r":
            err2 = np.sum(dv ** 2 * wr)
            ref2 = np.sum(ev ** 2 * wr)
        elif kind == "H1r":
            err2 = np.sum(dv ** 2 * wr) + np.sum(dg ** 2 * wr[..., None])
            ref2 = np.sum(ev ** 2 * wr) + np.sum(eg ** 2 * wr[..., None])
        else:
            raise ValueError(f"unknown scalar error norm {kind!r}")
        return np.sqrt(err2), np.sqrt(ref2)

    def u_norm2(v, gr):
        quad = (np.sum(v ** 2, axis=-1) + np.sum(gr ** 2, axis=(-2, -1))
                + (v[..., 0] / rq) ** 2
                + 2.0 * gr[..., 0, 1] * gr[..., 1, 0])
        return np.sum(quad * wr)

    def l2_norm2(v):
        return np.sum(np.sum(v ** 2, axis=-1) * wr)

    dv, dg = vals - ev, grad - eg
    if kind == "U":
        return np.sqrt(max(u_norm2(dv, dg), 0.0)), np.sqrt(u_norm2(ev, eg))
    if kind == "L2r":
        return np.sqrt(l2_norm2(dv)), np.sqrt(l2_norm2(ev))
    raise ValueError(f"unknown vector error norm {kind!r}")


# ---------------------------------------------------------------------------
# stress recovery
# ---------------------------------------------------------------------------

def _strains_at(space, f_values, pts):
    """Strain vector (e_rr, e_yy, e_tt, 2 e_ry) at reference points ``pts``.

    The hoop strain uses u_r / r, falling back to du_r/dr on the axis.
    """
    from ._kernels_py import _geometry, _physical_gradients
    t = space.tables()
    N = elements.eval_basis(space.degree, pts)
    dN = elements.eval_grad(space.degree, pts)
    det, inv, rq = _geometry(t["coords"], np.atleast_2d(pts))
    g = _physical_gradients(dN, inv)
    vr = f_values[2 * space.element_nodes]
    vy = f_values[2 * space.element_nodes + 1]
    ur = np.einsum("qa,ea->eq", N, vr)
    durdr = np.einsum("eqac,ea->eqc", g, vr)
    duydr = np.einsum("eqac,ea->eqc", g, vy)
    on_axis = rq <= 1e-12
    safe_r = np.where(on_axis, 1.0, rq)
    hoop = np.where(on_axis, durdr[..., 0], ur / safe_r)
    return np.stack([durdr[..., 0], duydr[..., 1], hoop,
                     durdr[..., 1] + duydr[..., 0]], axis=-1), rq


def stress_recovery(u: Field, data: MechanicalData, temperature=None,
                    points: str = "quadrature"):
    """Stress state at quadrature points or nodally averaged.

    Returns a dict with 'sigma' (..., 4) ordered (rr, yy, tt, ry), the Von
    Mises stress, the mean (hydrostatic) stress, and evaluation positions.
    """
    space = u.space
    if points == "quadrature":
        pts = space.tables()["qp"]
    elif points == "nodes":
        pts = elements.triangle_nodes(space.degree)
    else:
        raise ValueError("points must be 'quadrature' or 'nodes'")
    eps, rq = _strains_at(space, u.values, pts)
    lam, mu = data.lam, data.mu
    tr = eps[..., 0] + eps[..., 1] + eps[..., 2]
    sigma = np.empty_like(eps)
    sigma[..., 0] = lam * tr + 2.0 * mu * eps[..., 0]
    sigma[..., 1] = lam * tr + 2.0 * mu * eps[..., 1]
    sigma[..., 2] = lam * tr + 2.0 * mu * eps[..., 2]
    sigma[..., 3] = mu * eps[..., 3]

    x = _reference_to_physical(space, pts)
    if temperature is not None:
        if isinstance(temperature, Field):
            N = elements.eval_basis(temperature.space.degree, pts)
            Tq = np.einsum("qa,ea->eq", N,
                           temperature.values[temperature.space.element_nodes])
        else:
            Tq = _eval_volume(temperature, x[..., 0], x[..., 1])
        th = data.thermal_modulus * (Tq - data.T0)
        for c in range(3):
            sigma[..., c] -= th

    mean = (sigma[..., 0] + sigma[..., 1] + sigma[..., 2]) / 3.0
    dev = sigma.copy()
    for c in range(3):
        dev[..., c] -= mean
    vm = np.sqrt(1.5 * (dev[..., 0] ** 2 + dev[..., 1] ** 2
                        + dev[..., 2] ** 2 + 2.0 * dev[..., 3] ** 2))
    out = {"sigma": sigma, "von_mises": vm, "mean": mean, "points": x}
    if points == "nodes":
        out["nodal"] = _average_at_nodes(space, sigma, vm, mean)
    return out


def _reference_to_physical(space, pts):
    t = space.tables()
    v0 = t["coords"][:, 0]
    e1 = t["coords"][:, 1] - v0
    e2 = t["coords"][:, 2] - v0
    return (v0[:, None, :] + np.einsum("ei,q->eqi", e1, pts[:, 0])
            + np.einsum("ei,q->eqi", e2, pts[:, 1]))


def _average_at_nodes(space, sigma, vm, mean):
    """Average the element-node samples of each quantity per global node."""
    nodes = space.element_nodes
    count = np.zeros(space.n_nodes)
    np.add.at(count, nodes.ravel(), 1.0)
    out = {}
    for name, arr in (("sigma", sigma), ("von_mises", vm), ("mean", mean)):
        if arr.ndim == 3:
            acc = np.zeros((space.n_nodes, arr.shape[-1]))
            for c in range(arr.shape[-1]):
                np.add.at(acc[:, c], nodes.ravel(), arr[..., c].ravel())
            out[name] = acc / count[:, None]
        else:
            acc = np.zeros(space.n_nodes)
            np.add.at(acc, nodes.ravel(), arr.ravel())
            out[name] = acc / count
    return out
