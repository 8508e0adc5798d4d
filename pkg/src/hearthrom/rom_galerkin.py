"""Parameter-separable operator decomposition and reduced Galerkin solves.

Because the subdomain maps are diagonal (r = a rhat + b, y = d yhat + e),
every pulled-back integrand splits over the reference weights {1, rhat}
(boundary terms with depth-linear data additionally over {yhat, rhat*yhat})
with rational coefficients in (a, b, d).  The single exception is the
hoop-hoop stiffness block, whose weight a*d / (a rhat + b) is not separable;
it is integrated exactly online on the reference mesh against the reduced
basis (cost O(N^2 * quadrature points), independent of solver size).

Offline, the reference operators are projected onto the POD bases; online,
scalar coefficients are evaluated per query tuple and the small dense
systems solved.  A direct mode (map the mesh, assemble the full-order
operators, project) serves as the correctness oracle.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np
import scipy.sparse as sp

from . import fem, geometry, problem
from .geometry import TAG_BOTTOM, TAG_INNER, TAG_OUTER, TAG_TOP
from .pod import ReducedBasis


# ---------------------------------------------------------------------------
# coefficient evaluators
# ---------------------------------------------------------------------------

#: Geometric coefficient expressions over the per-subdomain map entries
#: (a, b, d, e), the edge scale s, and the total wall height Ym.
GEOM_EXPRS = {
    "1": lambda a, b, d, e, s, Ym: 1.0,
    "d": lambda a, b, d, e, s, Ym: d,
    "bd/a": lambda a, b, d, e, s, Ym: b * d / a,
    "bd": lambda a, b, d, e, s, Ym: b * d,
    "a2/d": lambda a, b, d, e, s, Ym: a * a / d,
    "ab/d": lambda a, b, d, e, s, Ym: a * b / d,
    "a": lambda a, b, d, e, s, Ym: a,
    "b": lambda a, b, d, e, s, Ym: b,
    "ad": lambda a, b, d, e, s, Ym: a * d,
    "a2": lambda a, b, d, e, s, Ym: a * a,
    "ab": lambda a, b, d, e, s, Ym: a * b,
    "a2d": lambda a, b, d, e, s, Ym: a * a * d,
    "abd": lambda a, b, d, e, s, Ym: a * b * d,
    "s*a": lambda a, b, d, e, s, Ym: s * a,
    "s*b": lambda a, b, d, e, s, Ym: s * b,
    "s*a*(Ym-e)": lambda a, b, d, e, s, Ym: s * a * (Ym - e),
    "s*b*(Ym-e)": lambda a, b, d, e, s, Ym: s * b * (Ym - e),
    "s*a*d": lambda a, b, d, e, s, Ym: s * a * d,
    "s*b*d": lambda a, b, d, e, s, Ym: s * b * d,
}


def geometry_context(g, macro=None):
    """Per-subdomain diagonal map coefficients (a, b, d, e) and Ym."""
    maps = geometry.affine_maps(g, macro)
    abde = np.empty((len(maps.G), 4))
    abde[:, 0] = maps.G[:, 0, 0]
    abde[:, 1] = maps.c[:, 0]
    abde[:, 2] = maps.G[:, 1, 1]
    abde[:, 3] = maps.c[:, 1]
    if np.abs(maps.G[:, 0, 1]).max() > 1e-12 or \
       np.abs(maps.G[:, 1, 0]).max() > 1e-12:
        raise ValueError("subdomain maps are expected to be diagonal")
    return {"abde": abde, "Ym": g.total_height}


def physical_factors(model, tup, cfg: problem.HearthConfig):
    """Scalar physical coefficients referenced by term descriptors."""
    p = tup.physical
    if model == "WT":
        return {
            "k": p.k,
            "h_inner": cfg.h_inner, "h_outer": cfg.h_outer,
            "h_bottom": cfg.h_bottom,
            "hT_inner": cfg.h_inner * cfg.T_inner,
            "hT_outer": cfg.h_outer * cfg.T_outer,
            "hT_bottom": cfg.h_bottom * cfg.T_bottom,
            "Q": cfg.Q, "mq_top": -cfg.q_top,
        }
    return {
        "lam": p.lam, "mu": p.mu, "l2m": p.lam + 2.0 * p.mu,
        "tl": (2.0 * p.mu + 3.0 * p.lam) * p.alpha,
        "press": cfg.melt_weight,
        "f0_r": cfg.f0[0], "f0_y": cfg.f0[1],
        "g_top_r": cfg.g_top[0], "g_top_y": cfg.g_top[1],
        "g_bottom_r": cfg.g_bottom[0], "g_bottom_y": cfg.g_bottom[1],
        "g_outer_r": cfg.g_outer[0], "g_outer_y": cfg.g_outer[1],
        "one": 1.0,
    }


def term_theta(term, ctx, phys):
    a, b, d, e = ctx["abde"][term["sub"]] if term["sub"] is not None \
        else (1.0, 0.0, 1.0, 0.0)
    s = {None: 1.0, "h": a, "v": d}[term.get("dir")]
    g = GEOM_EXPRS[term["geom"]](a, b, d, e, s, ctx["Ym"])
    p = phys[term["phys"]] if term["phys"] else 1.0
    return term.get("const", 1.0) * g * p


def theta_vector(terms, ctx, phys):
    return np.array([term_theta(t, ctx, phys) for t in terms])


# ---------------------------------------------------------------------------
# reference-operator assembly helpers
# ---------------------------------------------------------------------------

def _weight_values(space, wkey):
    """Reference weight monomial at the volume quadrature points (ne, nq)."""
    x = space.quad_points()
    return {"1": np.ones_like(x[..., 0]), "r": x[..., 0],
            "y": x[..., 1], "ry": x[..., 0] * x[..., 1]}[wkey]


def _slot_values(space, slot):
    """Basis-function values of one operator slot at quadrature points.

    ``slot`` is (comp, op) with comp in {None, 0, 1} and op in {'v', 'r',
    'y'} (value / radial / vertical reference derivative).  Vector slots
    are embedded in the interleaved 2*nb element-dof layout.
    """
    comp, op = slot
    t = space.tables()
    _, g, _ = space.geometry_factors()
    if op == "v":
        vals = np.broadcast_to(t["N"], g.shape[:3])
    else:
        vals = g[..., 0] if op == "r" else g[..., 1]
    if comp is None:
        return vals
    ne, nq, nb = vals.shape
    out = np.zeros((ne, nq, 2 * nb))
    out[..., comp::2] = vals
    return out


def _subdomain_masks(space):
    return [np.nonzero(space.mesh.subdomains == i)[0]
            for i in range(int(space.mesh.subdomains.max()) + 1)]


def _volume_matrix_op(space, els, slot_a, slot_b, wkey, symmetrize=False):
    """Sparse ∫ (slot_a u)(slot_b phi) * weight over the given elements."""
    det, _, _ = space.geometry_factors()
    qw = space.tables()["qw"]
    w = (qw[None, :] * det[:, None] * _weight_values(space, wkey))[els]
    A = _slot_values(space, slot_a)[els]
    B = _slot_values(space, slot_b)[els]
    Me = np.einsum("eqb,eqa,eq->eab", A, B, w, optimize=True)
    if symmetrize:
        Me = Me + Me.transpose(0, 2, 1)
    dofs = space.element_dofs()[els]
    return _scatter_partial(space.n_dofs, dofs, Me)


def _volume_load_op(space, els, slot, wkey):
    det, _, _ = space.geometry_factors()
    qw = space.tables()["qw"]
    w = (qw[None, :] * det[:, None] * _weight_values(space, wkey))[els]
    A = _slot_values(space, slot)[els]
    fe = np.einsum("eqa,eq->ea", A, w)
    b = np.zeros(space.n_dofs)
    np.add.at(b, space.element_dofs()[els].ravel(), fe.ravel())
    return b


def _coupling_op(space, scalar_space, els, slot, wkey):
    """Sparse ∫ (slot phi)(psi_j) * weight: vector rows, scalar columns."""
    det, _, _ = space.geometry_factors()
    t = space.tables()
    qw = t["qw"]
    w = (qw[None, :] * det[:, None] * _weight_values(space, wkey))[els]
    A = _slot_values(space, slot)[els]
    Ns = scalar_space.tables()["N"]
    Ce = np.einsum("eqa,qj,eq->eaj", A, Ns, w, optimize=True)
    rows = np.repeat(space.element_dofs()[els], Ns.shape[1], axis=1).ravel()
    cols = np.tile(scalar_space.element_nodes[els], (1, A.shape[2])).ravel()
    return sp.coo_matrix((Ce.ravel(), (rows, cols)),
                         shape=(space.n_dofs, scalar_space.n_nodes)).tocsr()


def _scatter_partial(n, dofs, Me):
    nd = dofs.shape[1]
    rows = np.repeat(dofs, nd, axis=1).ravel()
    cols = np.tile(dofs, (1, nd)).ravel()
    return sp.coo_matrix((Me.ravel(), (rows, cols)), shape=(n, n)).tocsr()


def _edge_groups(space, tag):
    """Boundary edges of a tag grouped by (subdomain, direction)."""
    ed = space.edge_tables(tag)
    groups = {}
    if not len(ed["sel"]):
        return groups, ed
    d = ed["points"][:, -1] - ed["points"][:, 0]
    horiz = np.abs(d[:, 0]) >= np.abs(d[:, 1])
    for i in range(len(ed["sel"])):
        key = (int(ed["sub"][i]), "h" if horiz[i] else "v")
        groups.setdefault(key, []).append(i)
    return groups, ed


def _edge_weight(ed, idx, wkey):
    pts = ed["points"][idx]
    r, y = pts[..., 0], pts[..., 1]
    return {"1": np.ones_like(r), "r": r, "y": y, "ry": r * y}[wkey]


def _edge_matrix_op(space, ed, idx, wkey):
    w = (ed["qw"][None, :] * ed["length"][idx, None]
         * _edge_weight(ed, idx, wkey))
    Me = np.einsum("qa,qb,eq->eab", ed["basis"], ed["basis"], w)
    return _scatter_partial(space.n_dofs, ed["nodes"][idx], Me)


def _edge_load_op(space, ed, idx, wkey, comp=None):
    w = (ed["qw"][None, :] * ed["length"][idx, None]
         * _edge_weight(ed, idx, wkey))
    fe = np.einsum("qa,eq->ea", ed["basis"], w)
    b = np.zeros(space.n_dofs)
    nodes = ed["nodes"][idx]
    dofs = nodes if comp is None else 2 * nodes + comp
    np.add.at(b, dofs.ravel(), fe.ravel())
    return b


# ---------------------------------------------------------------------------
# affine decomposition
# ---------------------------------------------------------------------------

@dataclass
class AffineForm:
    """Parameter-separable operator expansion plus the hoop descriptor."""

    model: str
    space: fem.FunctionSpace
    scalar_space: fem.FunctionSpace = None
    matrix_ops: dict = dc_field(default_factory=dict)
    matrix_terms: list = dc_field(default_factory=list)
    load_ops: dict = dc_field(default_factory=dict)
    load_terms: list = dc_field(default_factory=list)
    coupling_ops: dict = dc_field(default_factory=dict)
    coupling_terms: list = dc_field(default_factory=list)
    has_hoop: bool = False
    geometric: bool = True

    def assemble_matrix(self, ctx, phys):
        """Full-order affine reassembly (hoop term excluded)."""
        A = sp.csr_matrix((self.space.n_dofs, self.space.n_dofs))
        for term in self.matrix_terms:
            A = A + term_theta(term, ctx, phys) * self.matrix_ops[term["key"]]
        return A

    def assemble_load(self, ctx, phys):
        b = np.zeros(self.space.n_dofs)
        for term in self.load_terms:
            b += term_theta(term, ctx, phys) * self.load_ops[term["key"]]
        return b


#: Volume stiffness slots of the mechanical form: (slot_a, slot_b,
#: symmetrize, phys, {wkey: geom}).
_D1, _D2, _D3, _D4, _D5 = (0, "r"), (0, "y"), (1, "r"), (1, "y"), (0, "v")
_MECH_VOLUME_TERMS = [
    (_D1, _D1, False, "l2m", {"r": "d", "1": "bd/a"}),
    (_D4, _D4, False, "l2m", {"r": "a2/d", "1": "ab/d"}),
    (_D1, _D4, True, "lam", {"r": "a", "1": "b"}),
    (_D2, _D2, False, "mu", {"r": "a2/d", "1": "ab/d"}),
    (_D3, _D3, False, "mu", {"r": "d", "1": "bd/a"}),
    (_D2, _D3, True, "mu", {"r": "a", "1": "b"}),
    (_D5, _D1, True, "lam", {"1": "d"}),
    (_D5, _D4, True, "lam", {"1": "a"}),
]

_SC = (None, "v")
_THERMAL_VOLUME_TERMS = [
    ((None, "r"), (None, "r"), False, "k", {"r": "d", "1": "bd/a"}),
    ((None, "y"), (None, "y"), False, "k", {"r": "a2/d", "1": "ab/d"}),
]

_ROBIN = ((TAG_INNER, "inner"), (TAG_OUTER, "outer"), (TAG_BOTTOM, "bottom"))


def affine_decompose(model: str, space: fem.FunctionSpace,
                     cfg: problem.HearthConfig, geometric: bool = True,
                     scalar_space: fem.FunctionSpace = None) -> AffineForm:
    """Decompose a parametrized form into reference operators and thetas.

    With ``geometric=False`` (fixed reference geometry) the terms collapse
    to one operator per physical coefficient.  ``scalar_space`` is needed
    for the thermal-coupling load of 'WM2'.
    """
    if model == "WT":
        return (_decompose_thermal_geometric(space, cfg) if geometric
                else _decompose_thermal_physical(space, cfg))
    if model in ("WM1", "WM2"):
        if model == "WM2" and scalar_space is None:
            raise ValueError("'WM2' needs the scalar space for coupling")
        return (_decompose_mechanical_geometric(model, space, cfg,
                                                scalar_space)
                if geometric else
                _decompose_mechanical_physical(model, space, cfg,
                                               scalar_space))
    raise ValueError(f"unknown model {model!r}")


def _decompose_thermal_geometric(space, cfg):
    form = AffineForm(model="WT", space=space, geometric=True)
    masks = _subdomain_masks(space)
    for i, els in enumerate(masks):
        for slot_a, slot_b, symm, phys, weights in _THERMAL_VOLUME_TERMS:
            for wkey, geom in weights.items():
                key = f"v{i}_{slot_a[1]}{slot_b[1]}_{wkey}"
                form.matrix_ops[key] = _volume_matrix_op(
                    space, els, slot_a, slot_b, wkey, symm)
                form.matrix_terms.append(
                    {"key": key, "sub": i, "geom": geom, "phys": phys})
        if cfg.Q != 0.0:
            for wkey, geom in (("r", "a2d"), ("1", "abd")):
                key = f"q{i}_{wkey}"
                form.load_ops[key] = _volume_load_op(space, els, _SC, wkey)
                form.load_terms.append(
                    {"key": key, "sub": i, "geom": geom, "phys": "Q"})

    for tag, name in _ROBIN:
        groups, ed = _edge_groups(space, tag)
        for (sub, direction), idx in groups.items():
            for wkey, geom in (("r", "s*a"), ("1", "s*b")):
                key = f"rb_{name}_{sub}_{direction}_{wkey}"
                form.matrix_ops[key] = _edge_matrix_op(space, ed, idx, wkey)
                form.matrix_terms.append(
                    {"key": key, "sub": sub, "geom": geom,
                     "phys": f"h_{name}", "dir": direction})
                lkey = "l" + key
                form.load_ops[lkey] = _edge_load_op(space, ed, idx, wkey)
                form.load_terms.append(
                    {"key": lkey, "sub": sub, "geom": geom,
                     "phys": f"hT_{name}", "dir": direction})

    if cfg.q_top != 0.0:
        groups, ed = _edge_groups(space, TAG_TOP)
        for (sub, direction), idx in groups.items():
            for wkey, geom in (("r", "s*a"), ("1", "s*b")):
                key = f"qtop_{sub}_{wkey}"
                form.load_ops[key] = _edge_load_op(space, ed, idx, wkey)
                form.load_terms.append(
                    {"key": key, "sub": sub, "geom": geom,
                     "phys": "mq_top", "dir": direction})
    return form


def _decompose_thermal_physical(space, cfg):
    """Fixed geometry: one conduction operator + one form per Robin tag."""
    from . import kernels
    form = AffineForm(model="WT", space=space, geometric=False)
    t = space.tables()
    ones = np.ones((space.mesh.n_elements, t["qw"].size))
    Ke = kernels.thermal_element_matrices(
        t["coords"], t["qp"], t["qw"], t["dN"], ones)
    form.matrix_ops["conduction"] = fem._scatter(space, np.asarray(Ke))
    form.matrix_terms.append({"key": "conduction", "sub": None, "geom": "1",
                              "phys": "k"})
    det, _, rq = space.geometry_factors()
    if cfg.Q != 0.0:
        w = t["qw"][None, :] * det[:, None] * rq
        form.load_ops["source"] = _volume_load_weighted(space, w)
        form.load_terms.append({"key": "source", "sub": None, "geom": "1",
                                "phys": "Q"})
    for tag, name in _ROBIN:
        ed = space.edge_tables(tag)
        if not len(ed["sel"]):
            continue
        idx = np.arange(len(ed["sel"]))
        r = ed["points"][..., 0]
        w = ed["qw"][None, :] * ed["length"][:, None] * r
        Me = np.einsum("qa,qb,eq->eab", ed["basis"], ed["basis"], w)
        form.matrix_ops[f"robin_{name}"] = _scatter_partial(
            space.n_dofs, ed["nodes"], Me)
        form.matrix_terms.append({"key": f"robin_{name}", "sub": None,
                                  "geom": "1", "phys": f"h_{name}"})
        fe = np.einsum("qa,eq->ea", ed["basis"], w)
        b = np.zeros(space.n_dofs)
        np.add.at(b, ed["nodes"].ravel(), fe.ravel())
        form.load_ops[f"robin_load_{name}"] = b
        form.load_terms.append({"key": f"robin_load_{name}", "sub": None,
                                "geom": "1", "phys": f"hT_{name}"})
    if cfg.q_top != 0.0:
        ed = space.edge_tables(TAG_TOP)
        r = ed["points"][..., 0]
        w = ed["qw"][None, :] * ed["length"][:, None] * r
        fe = np.einsum("qa,eq->ea", ed["basis"], w)
        b = np.zeros(space.n_dofs)
        np.add.at(b, ed["nodes"].ravel(), fe.ravel())
        form.load_ops["flux_top"] = b
        form.load_terms.append({"key": "flux_top", "sub": None, "geom": "1",
                                "phys": "mq_top"})
    return form


def _volume_load_weighted(space, w):
    t = space.tables()
    fe = np.einsum("qa,eq->ea", t["N"], w)
    b = np.zeros(space.n_dofs)
    np.add.at(b, space.element_nodes.ravel(), fe.ravel())
    return b


def _mech_load_terms_geometric(form, space, cfg):
    """Separable mechanical loads: body force, tractions, melt pressure."""
    masks = _subdomain_masks(space)
    if any(cfg.f0):
        for i, els in enumerate(masks):
            for comp, phys in ((0, "f0_r"), (1, "f0_y")):
                for wkey, geom in (("r", "a2d"), ("1", "abd")):
                    key = f"f{i}_{comp}_{wkey}"
                    form.load_ops[key] = _volume_load_op(
                        space, els, (comp, "v"), wkey)
                    form.load_terms.append({"key": key, "sub": i,
                                            "geom": geom, "phys": phys})
    const_tags = ((TAG_TOP, "top", cfg.g_top),
                  (TAG_BOTTOM, "bottom", cfg.g_bottom),
                  (TAG_OUTER, "outer", cfg.g_outer))
    for tag, name, g in const_tags:
        if not any(g):
            continue
        groups, ed = _edge_groups(space, tag)
        for (sub, direction), idx in groups.items():
            for comp in (0, 1):
                if g[comp] == 0.0:
                    continue
                for wkey, geom in (("r", "s*a"), ("1", "s*b")):
                    key = f"g_{name}_{sub}_{comp}_{wkey}"
                    form.load_ops[key] = _edge_load_op(space, ed, idx, wkey,
                                                       comp)
                    form.load_terms.append(
                        {"key": key, "sub": sub, "geom": geom,
                         "phys": f"g_{name}_{comp and 'y' or 'r'}",
                         "dir": direction})

    # melt pressure on the inner wall: -rho g (Ym - y) n, linear in depth
    groups, ed = _edge_groups(space, TAG_INNER)
    for (sub, direction), idx in groups.items():
        normal = ed["normal"][idx[0]]
        for comp in (0, 1):
            nc = normal[comp]
            if nc == 0.0:
                continue
            specs = (("r", "s*a*(Ym-e)", -nc), ("1", "s*b*(Ym-e)", -nc),
                     ("ry", "s*a*d", nc), ("y", "s*b*d", nc))
            for wkey, geom, const in specs:
                key = f"press_{sub}_{direction}_{comp}_{wkey}"
                if key not in form.load_ops:
                    form.load_ops[key] = _edge_load_op(space, ed, idx, wkey,
                                                       comp)
                form.load_terms.append(
                    {"key": key, "sub": sub, "geom": geom, "phys": "press",
                     "const": const, "dir": direction})


#: Thermal-coupling load slots: (slot, phys-independent geom per weight).
_COUPLING_TERMS = [
    (_D1, {"r": "ad", "1": "bd"}),
    (_D4, {"r": "a2", "1": "ab"}),
    (_D5, {"1": "ad"}),
]
# note: D1 pullback carries 1/a * a*d * (a rhat + b) = a*d*rhat + b*d


def _decompose_mechanical_geometric(model, space, cfg, scalar_space):
    form = AffineForm(model=model, space=space, scalar_space=scalar_space,
                      geometric=True, has_hoop=True)
    masks = _subdomain_masks(space)
    for i, els in enumerate(masks):
        for slot_a, slot_b, symm, phys, weights in _MECH_VOLUME_TERMS:
            for wkey, geom in weights.items():
                key = f"v{i}_{slot_a}{slot_b}_{wkey}"
                form.matrix_ops[key] = _volume_matrix_op(
                    space, els, slot_a, slot_b, wkey, symm)
                form.matrix_terms.append(
                    {"key": key, "sub": i, "geom": geom, "phys": phys})
    if model == "WM1":
        _mech_load_terms_geometric(form, space, cfg)
    else:
        for i, els in enumerate(masks):
            for slot, weights in _COUPLING_TERMS:
                for wkey, geom in weights.items():
                    key = f"c{i}_{slot}_{wkey}"
                    form.coupling_ops[key] = _coupling_op(
                        space, scalar_space, els, slot, wkey)
                    form.coupling_terms.append(
                        {"key": key, "sub": i, "geom": geom, "phys": "tl"})
    return form


def _decompose_mechanical_physical(model, space, cfg, scalar_space):
    """Fixed geometry: stiffness = lam * op + mu * op; direct loads."""
    from . import kernels
    form = AffineForm(model=model, space=space, scalar_space=scalar_space,
                      geometric=False, has_hoop=False)
    t = space.tables()
    ne = space.mesh.n_elements
    for phys, lam, mu in (("lam", 1.0, 0.0), ("mu", 0.0, 1.0)):
        Ke = kernels.mechanical_element_matrices(
            t["coords"], t["qp"], t["qw"], t["N"], t["dN"],
            np.full(ne, lam), np.full(ne, mu))
        form.matrix_ops[f"stiff_{phys}"] = fem._scatter(space, np.asarray(Ke))
        form.matrix_terms.append({"key": f"stiff_{phys}", "sub": None,
                                  "geom": "1", "phys": phys})
    if model == "WM1":
        import dataclasses
        ref = _reference_tuple_cached()
        cfg1 = dataclasses.replace(cfg, melt_density=1.0, gravity=1.0)
        cfg0 = dataclasses.replace(cfg, melt_density=0.0)
        sys1 = fem.assemble_mechanical(
            space, problem.mechanical_data(cfg1, ref), None,
            include_loads=True)
        sys0 = fem.assemble_mechanical(
            space, problem.mechanical_data(cfg0, ref), None,
            include_loads=True)
        form.load_ops["pressure"] = sys1.rhs - sys0.rhs
        form.load_terms.append({"key": "pressure", "sub": None, "geom": "1",
                                "phys": "press"})
        # constant tractions and body force scale with no parameter
        if np.any(sys0.rhs):
            form.load_ops["const_loads"] = sys0.rhs
            form.load_terms.append({"key": "const_loads", "sub": None,
                                    "geom": "1", "phys": "one"})
    else:
        det, g, rq = space.geometry_factors()
        w = t["qw"][None, :] * det[:, None]
        els = np.arange(ne)
        C = (_coupling_weighted(space, scalar_space, g[..., 0], w * rq)
             + _coupling_weighted_vals(space, scalar_space, t["N"], w * rq,
                                       comp=1, grad=g[..., 1])
             + _coupling_hoop(space, scalar_space, t["N"], w))
        form.coupling_ops["coupling"] = C
        form.coupling_terms.append({"key": "coupling", "sub": None,
                                    "geom": "1", "phys": "tl"})
    return form


def _reference_tuple_cached():
    from .params import reference_tuple
    return reference_tuple()


def _coupling_scatter(space, scalar_space, Ce):
    nbs = Ce.shape[2]
    rows = np.repeat(space.element_dofs(), nbs, axis=1).ravel()
    cols = np.tile(scalar_space.element_nodes, (1, Ce.shape[1])).ravel()
    return sp.coo_matrix((Ce.ravel(), (rows, cols)),
                         shape=(space.n_dofs, scalar_space.n_nodes)).tocsr()


def _coupling_weighted(space, scalar_space, dNr, wr):
    """∫ psi_j d(phi_r)/dr * r over the physical reference domain."""
    Ns = scalar_space.tables()["N"]
    nb = dNr.shape[2]
    A = np.zeros((dNr.shape[0], dNr.shape[1], 2 * nb))
    A[..., 0::2] = dNr
    Ce = np.einsum("eqa,qj,eq->eaj", A, Ns, wr, optimize=True)
    return _coupling_scatter(space, scalar_space, Ce)


def _coupling_weighted_vals(space, scalar_space, N, wr, comp, grad):
    Ns = scalar_space.tables()["N"]
    nb = grad.shape[2]
    A = np.zeros((grad.shape[0], grad.shape[1], 2 * nb))
    A[..., comp::2] = grad
    Ce = np.einsum("eqa,qj,eq->eaj", A, Ns, wr, optimize=True)
    return _coupling_scatter(space, scalar_space, Ce)


def _coupling_hoop(space, scalar_space, N, w):
    """∫ psi_j phi_r (the r-weight cancels against the hoop 1/r)."""
    Ns = scalar_space.tables()["N"]
    ne = space.mesh.n_elements
    nb = N.shape[1]
    A = np.zeros((ne, N.shape[0], 2 * nb))
    A[..., 0::2] = np.broadcast_to(N, (ne,) + N.shape)
    Ce = np.einsum("eqa,qj,eq->eaj", A, Ns, w, optimize=True)
    return _coupling_scatter(space, scalar_space, Ce)


# ---------------------------------------------------------------------------
# nonseparable hoop term: exact online quadrature
# ---------------------------------------------------------------------------

def hoop_quadrature(space):
    """Flattened per-quadrature-point data for the hoop-strain kernel."""
    key = "hoop_quad"
    if key not in space._cache:
        det, _, rq = space.geometry_factors()
        qw = space.tables()["qw"]
        ne, nq = rq.shape
        space._cache[key] = {
            "sub": np.repeat(space.mesh.subdomains, nq),
            "rhat": rq.ravel(),
            "wdet": (qw[None, :] * det[:, None]).ravel(),
        }
    return space._cache[key]


def hoop_basis_values(space, modes):
    """Radial-component values of basis modes at quadrature points."""
    N = space.tables()["N"]
    Vr = modes[2 * space.element_nodes]        # (ne, nb, N)
    B = np.einsum("qa,eam->eqm", N, Vr)
    return B.reshape(-1, modes.shape[1])


def hoop_reduced_matrix(hoop, ctx, l2m, N=None):
    """N x N hoop-stiffness block at a query tuple (exact quadrature)."""
    abde = ctx["abde"]
    a = abde[hoop["sub"], 0]
    b = abde[hoop["sub"], 1]
    d = abde[hoop["sub"], 2]
    factor = l2m * a * d * hoop["wdet"] / (a * hoop["rhat"] + b)
    B = hoop["B"] if N is None else hoop["B"][:, :N]
    return B.T @ (factor[:, None] * B)


def hoop_matrix(space, ctx, l2m):
    """Full-order hoop-stiffness matrix at a query tuple (for verification)."""
    t = space.tables()
    det, _, rq = space.geometry_factors()
    abde = ctx["abde"][space.mesh.subdomains]
    a, b, d = abde[:, 0, None], abde[:, 1, None], abde[:, 2, None]
    factor = l2m * a * d * t["qw"][None, :] * det[:, None] / (a * rq + b)
    nb = t["N"].shape[1]
    ne = space.mesh.n_elements
    A = np.zeros((ne, t["qw"].size, 2 * nb))
    A[..., 0::2] = np.broadcast_to(t["N"], (ne,) + t["N"].shape)
    Me = np.einsum("eqa,eqb,eq->eab", A, A, factor, optimize=True)
    return _scatter_partial(space.n_dofs, space.element_dofs(), Me)


# ---------------------------------------------------------------------------
# reduction and online solves
# ---------------------------------------------------------------------------

@dataclass
class ReducedModel:
    """Reduced affine operators of one model on one basis."""

    model: str
    basis: ReducedBasis
    cfg: problem.HearthConfig
    geometric: bool
    matrix_terms: list
    matrix_stack: np.ndarray           # (n_terms, N, N)
    load_terms: list
    load_stack: np.ndarray             # (n_terms, N)
    coupling_terms: list = None
    coupling_stack: np.ndarray = None  # (n_terms, N, N_T + 1)
    thermal_basis: ReducedBasis = None
    hoop: dict = None

    @property
    def size(self):
        return self.basis.size


def reduce_operators(form: AffineForm, basis: ReducedBasis,
                     thermal_basis: ReducedBasis = None,
                     cfg: problem.HearthConfig = None) -> ReducedModel:
    """Project every reference operator onto the reduced basis."""
    Phi = basis.modes
    mats = np.array([Phi.T @ (form.matrix_ops[t["key"]] @ Phi)
                     for t in form.matrix_terms])
    loads = (np.array([Phi.T @ form.load_ops[t["key"]]
                       for t in form.load_terms])
             if form.load_terms else np.zeros((0, basis.size)))
    coup_stack, coup_terms = None, None
    if form.coupling_terms:
        if thermal_basis is None:
            raise ValueError("coupling blocks need the thermal basis")
        Tm = np.column_stack([thermal_basis.modes,
                              np.ones(form.scalar_space.n_nodes)])
        coup_stack = np.array([Phi.T @ (form.coupling_ops[t["key"]] @ Tm)
                               for t in form.coupling_terms])
        coup_terms = form.coupling_terms
    hoop = None
    if form.has_hoop:
        hoop = dict(hoop_quadrature(form.space))
        hoop["B"] = hoop_basis_values(form.space, Phi)
    return ReducedModel(model=form.model, basis=basis, cfg=cfg,
                        geometric=form.geometric,
                        matrix_terms=form.matrix_terms, matrix_stack=mats,
                        load_terms=form.load_terms, load_stack=loads,
                        coupling_terms=coup_terms, coupling_stack=coup_stack,
                        thermal_basis=thermal_basis, hoop=hoop)


def _reduced_matrix(rm: ReducedModel, ctx, phys, N):
    th = theta_vector(rm.matrix_terms, ctx, phys)
    A = np.einsum("t,tij->ij", th, rm.matrix_stack[:, :N, :N])
    if rm.hoop is not None:
        A = A + hoop_reduced_matrix(rm.hoop, ctx, phys["l2m"], N)
    return A


def solve_reduced_thermal(rm: ReducedModel, ctx, phys, N=None):
    N = rm.size if N is None else N
    A = _reduced_matrix(rm, ctx, phys, N)
    th = theta_vector(rm.load_terms, ctx, phys)
    b = th @ rm.load_stack[:, :N] if len(th) else np.zeros(N)
    return np.linalg.solve(A, b)


def solve_reduced_wm1(rm: ReducedModel, ctx, phys, N=None):
    N = rm.size if N is None else N
    A = _reduced_matrix(rm, ctx, phys, N)
    th = theta_vector(rm.load_terms, ctx, phys)
    b = th @ rm.load_stack[:, :N] if len(th) else np.zeros(N)
    return np.linalg.solve(A, b)


def solve_reduced_wm2(rm: ReducedModel, ctx, phys, zeta_T, N=None):
    N = rm.size if N is None else N
    A = _reduced_matrix(rm, ctx, phys, N)
    zhat = np.concatenate([zeta_T, [-rm.cfg.T0]])
    th = theta_vector(rm.coupling_terms, ctx, phys)
    b = np.einsum("t,tij,j->i", th, rm.coupling_stack[:, :N, :], zhat)
    return np.linalg.solve(A, b)


def galerkin_online(models: dict, tup, mode: str = "affine", N=None,
                    N_T=None):
    """Reduced thermal + mechanical solves at one parameter tuple.

    ``models`` holds ReducedModels under keys 'WT', 'WM1', 'WM2' (mechanical
    entries optional).  Affine mode evaluates the separable expansion plus
    the exact hoop quadrature; direct mode assembles the full-order
    operators on the mapped mesh and projects them (correctness oracle).
    Returns a dict of coefficient vectors.
    """
    if mode == "direct":
        return _direct_online(models, tup, N=N, N_T=N_T)
    rm_T = models["WT"]
    cfg = rm_T.cfg
    ctx = geometry_context(tup.geometric)
    phys_T = physical_factors("WT", tup, cfg)
    NT_eff = rm_T.size if N_T is None else N_T
    zeta_T = solve_reduced_thermal(rm_T, ctx, phys_T, N=NT_eff)
    out = {"zeta_T": zeta_T}
    if "WM1" in models:
        phys_M = physical_factors("WM", tup, cfg)
        out["zeta_MM"] = solve_reduced_wm1(models["WM1"], ctx, phys_M, N=N)
        zT_full = zeta_T
        if NT_eff != models["WM2"].thermal_basis.size:
            zT_full = np.zeros(models["WM2"].thermal_basis.size)
            zT_full[:NT_eff] = zeta_T
        out["zeta_MT"] = solve_reduced_wm2(models["WM2"], ctx, phys_M,
                                           zT_full, N=N)
    return out


def _direct_online(models, tup, N=None, N_T=None):
    """Assemble the FOM at the tuple, project on the bases, solve."""
    rm_T = models["WT"]
    cfg = rm_T.cfg
    ref_space = rm_T.basis.space
    mesh = geometry.map_mesh(ref_space.mesh,
                             geometry.affine_maps(tup.geometric))
    degree = ref_space.degree
    scalar = fem.FunctionSpace(mesh, degree, "scalar")
    NT = rm_T.size if N_T is None else N_T
    PhiT = rm_T.basis.modes[:, :NT]
    sysT = fem.assemble_thermal(scalar, problem.thermal_data(cfg, tup))
    AT = PhiT.T @ (sysT.matrix @ PhiT)
    zeta_T = np.linalg.solve(AT, PhiT.T @ sysT.rhs)
    out = {"zeta_T": zeta_T}
    if "WM1" not in models:
        return out
    vector = fem.FunctionSpace(mesh, degree, "vector")
    mdata = problem.mechanical_data(cfg, tup)
    NM = models["WM1"].size if N is None else N
    Phi1 = models["WM1"].basis.modes[:, :NM]
    sys1 = fem.assemble_mechanical(vector, mdata, None, include_loads=True)
    A1 = Phi1.T @ (sys1.matrix @ Phi1)
    out["zeta_MM"] = np.linalg.solve(A1, Phi1.T @ sys1.rhs)

    # thermal-difference load from the reduced thermal reconstruction
    T_rec = fem.Field(scalar, rm_T.basis.modes[:, :NT] @ zeta_T)
    N2 = models["WM2"].size if N is None else N
    Phi2 = models["WM2"].basis.modes[:, :N2]
    sys2 = fem.assemble_mechanical(vector, mdata, T_rec, include_loads=False)
    A2 = Phi2.T @ (sys2.matrix @ Phi2)
    out["zeta_MT"] = np.linalg.solve(A2, Phi2.T @ sys2.rhs)
    return out


def reconstruct(models: dict, result: dict):
    """Fields from online coefficients: temperature and total displacement."""
    rm_T = models["WT"]
    NT = len(result["zeta_T"])
    T = fem.Field(rm_T.basis.space, rm_T.basis.modes[:, :NT]
                  @ result["zeta_T"])
    out = {"T": T}
    if "zeta_MM" in result:
        vec_space = models["WM1"].basis.space
        u = (models["WM1"].basis.modes[:, :len(result["zeta_MM"])]
             @ result["zeta_MM"]
             + models["WM2"].basis.modes[:, :len(result["zeta_MT"])]
             @ result["zeta_MT"])
        out["u"] = fem.Field(vec_space, u)
    return out
