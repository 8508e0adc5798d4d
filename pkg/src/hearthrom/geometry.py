"""Reference cross-section geometry, macro decomposition, and meshing.

The hearth cross-section is a 12-vertex polygon in the (r, y) half plane.  It
decomposes into 15 axis-aligned cells bounded by the six radii
{0, D1/2, D2/2, D3/2, D4/2, D0/2} and the six heights {0, t0, ..., t0+...+t4};
cutting each cell along its lower-left/upper-right diagonal gives the 30
macro triangles (subdomains).  Each subdomain moves under a diagonal affine
map when the thicknesses/diameters change, and the maps of neighbouring
subdomains agree on shared edges by construction.

Boundary tags
-------------
``bottom``   y = 0 (cooled foundation)
``outer``    r = r_max (cooled shell)
``top``      upper rim of the outermost wall
``axis``     r = 0 (symmetry axis)
``inner``    stepped profile in contact with the melt
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .params import GeometricParams

#: Boundary tag ids.
TAG_BOTTOM, TAG_OUTER, TAG_TOP, TAG_AXIS, TAG_INNER = 0, 1, 2, 3, 4
TAG_NAMES = {
    TAG_BOTTOM: "bottom",
    TAG_OUTER: "outer",
    TAG_TOP: "top",
    TAG_AXIS: "axis",
    TAG_INNER: "inner",
}

#: (column, row) of the 15 cells present in the stepped profile.
_CELLS = [(c, r) for r in range(5) for c in range(5) if c >= r]


def _grid_nodes():
    """(col, row) grid indices of the 26 macro vertices, with an id map."""
    nodes = []
    for c, r in _CELLS:
        for gc, gr in ((c, r), (c + 1, r), (c + 1, r + 1), (c, r + 1)):
            if (gc, gr) not in nodes:
                nodes.append((gc, gr))
    nodes.sort(key=lambda n: (n[1], n[0]))
    return nodes, {n: i for i, n in enumerate(nodes)}


@dataclass(frozen=True)
class MacroDecomposition:
    """The 30-subdomain macro triangulation of the reference cross-section."""

    vertices: np.ndarray        # (n_mv, 2) reference coordinates
    grid_index: tuple           # (n_mv,) of (col, row) grid indices
    triangles: np.ndarray       # (30, 3) vertex ids, CCW
    subdomain_cell: tuple       # (30,) of (col, row) owning cell
    boundary_edges: np.ndarray  # (n_be, 2) vertex ids (ordered along edge)
    boundary_tags: np.ndarray   # (n_be,)
    boundary_sub: np.ndarray    # (n_be,) adjacent subdomain id

    @property
    def n_subdomains(self):
        return len(self.triangles)


def reference_decomposition():
    """Build the fixed macro triangulation (30 positively oriented triangles)."""
    g = GeometricParams()
    R, Y = g.radii, g.heights
    nodes, node_id = _grid_nodes()
    verts = np.array([[R[c], Y[r]] for c, r in nodes])

    tris, cells = [], []
    for c, r in _CELLS:
        ll = node_id[(c, r)]
        lr = node_id[(c + 1, r)]
        ur = node_id[(c + 1, r + 1)]
        ul = node_id[(c, r + 1)]
        tris.append((ll, lr, ur))   # lower triangle of the cell
        tris.append((ll, ur, ul))   # upper triangle of the cell
        cells.extend([(c, r), (c, r)])
    tris = np.array(tris, dtype=np.int64)

    # Boundary edges with tags; the adjacent subdomain is the triangle of the
    # cell that contains the edge (lower triangle owns bottom/right edges,
    # upper triangle owns top/left edges).
    edges, tags, subs = [], [], []

    def cell_tris(c, r):
        i = 2 * _CELLS.index((c, r))
        return i, i + 1  # (lower, upper)

    present = set(_CELLS)
    for c, r in _CELLS:
        lo, up = cell_tris(c, r)
        ll, lr = node_id[(c, r)], node_id[(c + 1, r)]
        ur, ul = node_id[(c + 1, r + 1)], node_id[(c, r + 1)]
        if r == 0:
            edges.append((ll, lr)); tags.append(TAG_BOTTOM); subs.append(lo)
        if c == 4:
            edges.append((lr, ur)); tags.append(TAG_OUTER); subs.append(lo)
        if (c, r + 1) not in present:  # exposed top edge
            tag = TAG_TOP if c == 4 else TAG_INNER
            edges.append((ur, ul)); tags.append(tag); subs.append(up)
        if (c - 1, r) not in present:  # exposed left edge
            tag = TAG_AXIS if c == 0 else TAG_INNER
            edges.append((ul, ll)); tags.append(tag); subs.append(up)

    return MacroDecomposition(
        vertices=verts,
        grid_index=tuple(nodes),
        triangles=tris,
        subdomain_cell=tuple(cells),
        boundary_edges=np.array(edges, dtype=np.int64),
        boundary_tags=np.array(tags, dtype=np.int64),
        boundary_sub=np.array(subs, dtype=np.int64),
    )


def vertex_positions(g: GeometricParams, macro: MacroDecomposition = None):
    """Macro-vertex coordinates for the given thicknesses/diameters."""
    macro = macro or reference_decomposition()
    R, Y = g.radii, g.heights
    if np.any(np.diff(R) <= 0.0) or np.any(np.diff(Y) <= 0.0):
        raise ValueError("degenerate geometry: non-increasing radius or height grid")
    return np.array([[R[c], Y[r]] for c, r in macro.grid_index])


@dataclass(frozen=True)
class AffineMapSet:
    """Per-subdomain affine maps x = G_i x_hat + c_i."""

    G: np.ndarray  # (n_su, 2, 2)
    c: np.ndarray  # (n_su, 2)

    def apply(self, points, sub):
        """Map reference points (n, 2) belonging to subdomain ``sub``."""
        return points @ self.G[sub].T + self.c[sub]

    def determinants(self):
        return np.linalg.det(self.G)

    def inverse(self):
        Ginv = np.linalg.inv(self.G)
        cinv = -np.einsum("sij,sj->si", Ginv, self.c)
        return AffineMapSet(G=Ginv, c=cinv)


def affine_maps(g: GeometricParams, macro: MacroDecomposition = None):
    """Affine maps sending each reference subdomain onto its parametrized image.

    Solved from the three-vertex correspondence of each macro triangle.
    """
    macro = macro or reference_decomposition()
    target = vertex_positions(g, macro)
    ref = macro.vertices
    n = macro.n_subdomains
    G = np.empty((n, 2, 2))
    c = np.empty((n, 2))
    for i, tri in enumerate(macro.triangles):
        A = np.column_stack([ref[tri[1]] - ref[tri[0]], ref[tri[2]] - ref[tri[0]]])
        B = np.column_stack([target[tri[1]] - target[tri[0]],
                             target[tri[2]] - target[tri[0]]])
        G[i] = B @ np.linalg.inv(A)
        c[i] = target[tri[0]] - G[i] @ ref[tri[0]]
    dets = np.linalg.det(G)
    bad = np.nonzero(dets <= 1e-12)[0]
    if bad.size:
        raise ValueError(f"degenerate affine map on subdomains {bad.tolist()}")
    return AffineMapSet(G=G, c=c)


@dataclass(frozen=True)
class Mesh:
    """Conforming triangle mesh obtained by uniform macro refinement."""

    vertices: np.ndarray        # (n_v, 2)
    elements: np.ndarray        # (n_e, 3) vertex ids, CCW
    subdomains: np.ndarray      # (n_e,) macro subdomain id
    boundary_edges: np.ndarray  # (n_be, 2) vertex ids
    boundary_tags: np.ndarray   # (n_be,)
    boundary_sub: np.ndarray    # (n_be,) adjacent subdomain id
    level: int

    @property
    def n_vertices(self):
        return len(self.vertices)

    @property
    def n_elements(self):
        return len(self.elements)

    def element_areas(self):
        p0 = self.vertices[self.elements[:, 0]]
        p1 = self.vertices[self.elements[:, 1]]
        p2 = self.vertices[self.elements[:, 2]]
        return 0.5 * np.abs(
            (p1[:, 0] - p0[:, 0]) * (p2[:, 1] - p0[:, 1])
            - (p2[:, 0] - p0[:, 0]) * (p1[:, 1] - p0[:, 1])
        )


def _subdivide(verts, elems, subs, bedges, btags, bsubs):
    """One sweep of uniform edge-midpoint subdivision."""
    verts = list(map(tuple, verts))
    midpoint = {}

    def mid(a, b):
        key = (a, b) if a < b else (b, a)
        if key not in midpoint:
            pa, pb = verts[a], verts[b]
            verts.append(((pa[0] + pb[0]) / 2.0, (pa[1] + pb[1]) / 2.0))
            midpoint[key] = len(verts) - 1
        return midpoint[key]

    new_elems, new_subs = [], []
    for (a, b, c), s in zip(elems, subs):
        ab, bc, ca = mid(a, b), mid(b, c), mid(c, a)
        new_elems.extend([(a, ab, ca), (ab, b, bc), (ca, bc, c), (ab, bc, ca)])
        new_subs.extend([s, s, s, s])

    new_bedges, new_btags, new_bsubs = [], [], []
    for (a, b), t, s in zip(bedges, btags, bsubs):
        m = mid(a, b)
        new_bedges.extend([(a, m), (m, b)])
        new_btags.extend([t, t])
        new_bsubs.extend([s, s])

    return (np.array(verts), np.array(new_elems, dtype=np.int64),
            np.array(new_subs, dtype=np.int64),
            np.array(new_bedges, dtype=np.int64),
            np.array(new_btags, dtype=np.int64),
            np.array(new_bsubs, dtype=np.int64))


def refine(macro: MacroDecomposition, level: int) -> Mesh:
    """Uniformly refine the macro triangulation ``level`` times (4^L growth)."""
    if level < 0:
        raise ValueError("refinement level must be nonnegative")
    verts = macro.vertices.copy()
    elems = macro.triangles.copy()
    subs = np.arange(macro.n_subdomains, dtype=np.int64)
    bedges = macro.boundary_edges.copy()
    btags = macro.boundary_tags.copy()
    bsubs = macro.boundary_sub.copy()
    for _ in range(level):
        verts, elems, subs, bedges, btags, bsubs = _subdivide(
            verts, elems, subs, bedges, btags, bsubs)
    return Mesh(vertices=verts, elements=elems, subdomains=subs,
                boundary_edges=bedges, boundary_tags=btags,
                boundary_sub=bsubs, level=level)


def map_mesh(mesh: Mesh, maps: AffineMapSet) -> Mesh:
    """Move every mesh vertex by the affine map of its subdomain.

    Vertices on subdomain interfaces get the same image under all adjacent
    maps (continuity of the map family), so any adjacent subdomain may be
    used; the lowest id is chosen deterministically.
    """
    owner = np.full(mesh.n_vertices, np.iinfo(np.int64).max, dtype=np.int64)
    for tri, s in zip(mesh.elements, mesh.subdomains):
        np.minimum.at(owner, tri, s)
    verts = np.einsum("vij,vj->vi", maps.G[owner], mesh.vertices) + maps.c[owner]
    return Mesh(vertices=verts, elements=mesh.elements, subdomains=mesh.subdomains,
                boundary_edges=mesh.boundary_edges, boundary_tags=mesh.boundary_tags,
                boundary_sub=mesh.boundary_sub, level=mesh.level)


def mesh_quality(mesh: Mesh):
    """Per-element quality q_e = 4 sqrt(3) A / (l1^2 + l2^2 + l3^2).

    Returns a dict with per-element values, the minimum, and a histogram
    over ten equal bins of [0, 1].
    """
    p0 = mesh.vertices[mesh.elements[:, 0]]
    p1 = mesh.vertices[mesh.elements[:, 1]]
    p2 = mesh.vertices[mesh.elements[:, 2]]
    l2sum = (np.sum((p1 - p0) ** 2, axis=1) + np.sum((p2 - p1) ** 2, axis=1)
             + np.sum((p0 - p2) ** 2, axis=1))
    area = mesh.element_areas()
    with np.errstate(divide="ignore", invalid="ignore"):
        q = np.where(l2sum > 0.0, 4.0 * np.sqrt(3.0) * area / l2sum, 0.0)
    hist, _ = np.histogram(q, bins=10, range=(0.0, 1.0))
    return {"q": q, "min": float(q.min()), "histogram": hist}


def triangle_quality(p0, p1, p2):
    """Quality of a single triangle given its three vertices."""
    p0, p1, p2 = map(np.asarray, (p0, p1, p2))
    area = 0.5 * abs((p1[0] - p0[0]) * (p2[1] - p0[1])
                     - (p2[0] - p0[0]) * (p1[1] - p0[1]))
    l2sum = float(np.sum((p1 - p0) ** 2) + np.sum((p2 - p1) ** 2)
                  + np.sum((p0 - p2) ** 2))
    return 0.0 if l2sum == 0.0 else 4.0 * np.sqrt(3.0) * area / l2sum


def export_mesh(mesh: Mesh, path_prefix):
    """Write plain-text node / element / boundary-tag files.

    ``<prefix>.nodes``:   ``id r y`` per line.
    ``<prefix>.elems``:   ``id v0 v1 v2 subdomain`` per line.
    ``<prefix>.bedges``:  ``id v0 v1 tag_name`` per line.
    """
    with open(f"{path_prefix}.nodes", "w") as f:
        for i, (r, y) in enumerate(mesh.vertices):
            f.write(f"{i} {float(r)!r} {float(y)!r}\n")
    with open(f"{path_prefix}.elems", "w") as f:
        for i, (tri, s) in enumerate(zip(mesh.elements, mesh.subdomains)):
            f.write(f"{i} {tri[0]} {tri[1]} {tri[2]} {s}\n")
    with open(f"{path_prefix}.bedges", "w") as f:
        for i, (e, t) in enumerate(zip(mesh.boundary_edges, mesh.boundary_tags)):
            f.write(f"{i} {e[0]} {e[1]} {TAG_NAMES[int(t)]}\n")
