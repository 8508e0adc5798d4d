import numpy as np
import pytest

from hearthrom import fem, geometry, pod, problem, rom_galerkin as rg
from hearthrom.params import reference_tuple
from hearthrom.sampling import ParameterRanges, lhs_sample

ACTIVE = ("k", "mu", "lam", "alpha", "t0", "D2", "D4")
CFG = problem.HearthConfig()


@pytest.fixture(scope="module")
def spaces(mesh_l1):
    return {"scalar": fem.FunctionSpace(mesh_l1, 1, "scalar"),
            "vector": fem.FunctionSpace(mesh_l1, 1, "vector")}


@pytest.fixture(scope="module")
def query():
    return lhs_sample(ParameterRanges(active=ACTIVE), 3, seed=21)


def _fom_systems(tup, degree=1):
    mesh = geometry.map_mesh(
        geometry.refine(geometry.reference_decomposition(), 1),
        geometry.affine_maps(tup.geometric))
    scalar = fem.FunctionSpace(mesh, degree, "scalar")
    vector = fem.FunctionSpace(mesh, degree, "vector")
    sysT = fem.assemble_thermal(scalar, problem.thermal_data(CFG, tup))
    mdata = problem.mechanical_data(CFG, tup)
    sys1 = fem.assemble_mechanical(vector, mdata, None, include_loads=True)
    return mesh, scalar, vector, sysT, sys1, mdata


def test_geom_registry_spot_values():
    args = (2.0, 3.0, 5.0, 7.0, 0.5, 11.0)  # a, b, d, e, s, Ym
    expect = {"1": 1.0, "d": 5.0, "bd/a": 7.5, "bd": 15.0, "a2/d": 0.8,
              "ab/d": 1.2, "a": 2.0, "b": 3.0, "ad": 10.0, "a2": 4.0,
              "ab": 6.0, "a2d": 20.0, "abd": 30.0, "s*a": 1.0, "s*b": 1.5,
              "s*a*(Ym-e)": 4.0, "s*b*(Ym-e)": 6.0, "s*a*d": 5.0,
              "s*b*d": 7.5}
    assert set(expect) == set(rg.GEOM_EXPRS)
    for key, val in expect.items():
        assert rg.GEOM_EXPRS[key](*args) == pytest.approx(val)


def test_geometry_context_reference_is_identity():
    ctx = rg.geometry_context(reference_tuple().geometric)
    assert np.allclose(ctx["abde"][:, [0, 2]], 1.0, atol=1e-14)
    assert np.allclose(ctx["abde"][:, [1, 3]], 0.0, atol=1e-14)
    assert ctx["Ym"] == pytest.approx(7.265)


def test_thermal_affine_matches_fom(spaces, query):
    form = rg.affine_decompose("WT", spaces["scalar"], CFG)
    for tup in [reference_tuple(ACTIVE)] + query:
        ctx = rg.geometry_context(tup.geometric)
        phys = rg.physical_factors("WT", tup, CFG)
        A = form.assemble_matrix(ctx, phys)
        b = form.assemble_load(ctx, phys)
        _, _, _, sysT, _, _ = _fom_systems(tup)
        scale = np.abs(sysT.matrix.data).max()
        assert np.abs((A - sysT.matrix).data).max() <= 1e-12 * scale
        assert np.abs(b - sysT.rhs).max() <= 1e-12 * np.abs(sysT.rhs).max()


def test_mechanical_affine_matches_fom(spaces, query):
    form = rg.affine_decompose("WM1", spaces["vector"], CFG)
    for tup in query:
        ctx = rg.geometry_context(tup.geometric)
        phys = rg.physical_factors("WM", tup, CFG)
        A = form.assemble_matrix(ctx, phys) \
            + rg.hoop_matrix(spaces["vector"], ctx, phys["l2m"])
        b = form.assemble_load(ctx, phys)
        _, _, _, _, sys1, _ = _fom_systems(tup)
        scale = np.abs(sys1.matrix.data).max()
        assert np.abs((A - sys1.matrix).data).max() <= 1e-12 * scale
        assert np.abs(b - sys1.rhs).max() <= 1e-12 * np.abs(sys1.rhs).max()


def test_coupling_affine_matches_fom(spaces, query, rng):
    form = rg.affine_decompose("WM2", spaces["vector"], CFG,
                               scalar_space=spaces["scalar"])
    Tvals = 300.0 + 1500.0 * rng.random(spaces["scalar"].n_nodes)
    for tup in query[:2]:
        ctx = rg.geometry_context(tup.geometric)
        phys = rg.physical_factors("WM", tup, CFG)
        b = np.zeros(spaces["vector"].n_dofs)
        for term in form.coupling_terms:
            b += rg.term_theta(term, ctx, phys) \
                * (form.coupling_ops[term["key"]] @ (Tvals - CFG.T0))
        mesh, scalar, vector, _, _, mdata = _fom_systems(tup)
        T = fem.Field(scalar, Tvals)
        sys2 = fem.assemble_mechanical(vector, mdata, T, include_loads=False)
        assert np.abs(b - sys2.rhs).max() <= 1e-12 * np.abs(sys2.rhs).max()


def test_hoop_reduced_is_projection(spaces, query, rng):
    space = spaces["vector"]
    Phi = rng.standard_normal((space.n_dofs, 5))
    hoop = dict(rg.hoop_quadrature(space))
    hoop["B"] = rg.hoop_basis_values(space, Phi)
    for tup in query[:2]:
        ctx = rg.geometry_context(tup.geometric)
        H = rg.hoop_matrix(space, ctx, 3.0e9)
        expect = Phi.T @ (H @ Phi)
        got = rg.hoop_reduced_matrix(hoop, ctx, 3.0e9)
        assert np.abs(got - expect).max() <= 1e-10 * np.abs(expect).max()
        got2 = rg.hoop_reduced_matrix(hoop, ctx, 3.0e9, N=3)
        assert np.allclose(got2, expect[:3, :3], rtol=1e-10)


@pytest.fixture(scope="module")
def reduced_models(spaces):
    """Small Galerkin ROM trained on five full-order solutions."""
    scalar, vector = spaces["scalar"], spaces["vector"]
    train = lhs_sample(ParameterRanges(active=ACTIVE), 5, seed=4)
    ST, S1, S2 = [], [], []
    for tup in train:
        mesh, msc, mvec, sysT, sys1, mdata = _fom_systems(tup)
        T = sysT.solve()
        ST.append(T.values)
        S1.append(sys1.solve().values)
        sys2 = fem.assemble_mechanical(mvec, mdata, fem.Field(msc, T.values),
                                       include_loads=False)
        S2.append(sys2.solve().values)
    bT = pod.pod_basis(pod.SnapshotSet(
        space=scalar, matrix=np.array(ST).T, tuples=train, model="WT",
        inner="H1r"), truncation=4)
    b1 = pod.pod_basis(pod.SnapshotSet(
        space=vector, matrix=np.array(S1).T, tuples=train, model="WM1",
        inner="U"), truncation=4)
    b2 = pod.pod_basis(pod.SnapshotSet(
        space=vector, matrix=np.array(S2).T, tuples=train, model="WM2",
        inner="U"), truncation=4)
    fT = rg.affine_decompose("WT", scalar, CFG)
    f1 = rg.affine_decompose("WM1", vector, CFG)
    f2 = rg.affine_decompose("WM2", vector, CFG, scalar_space=scalar)
    return {"WT": rg.reduce_operators(fT, bT, cfg=CFG),
            "WM1": rg.reduce_operators(f1, b1, cfg=CFG),
            "WM2": rg.reduce_operators(f2, b2, thermal_basis=bT, cfg=CFG)}


def test_online_affine_matches_direct(reduced_models, query):
    for tup in query:
        aff = rg.galerkin_online(reduced_models, tup, mode="affine")
        ref = rg.galerkin_online(reduced_models, tup, mode="direct")
        for key in ("zeta_T", "zeta_MM", "zeta_MT"):
            scale = np.abs(ref[key]).max()
            assert np.abs(aff[key] - ref[key]).max() <= 1e-9 * scale


def test_online_truncated(reduced_models, query):
    tup = query[0]
    aff = rg.galerkin_online(reduced_models, tup, mode="affine", N=2, N_T=3)
    ref = rg.galerkin_online(reduced_models, tup, mode="direct", N=2, N_T=3)
    assert aff["zeta_T"].shape == (3,)
    assert aff["zeta_MM"].shape == (2,)
    for key in ("zeta_T", "zeta_MM", "zeta_MT"):
        assert np.allclose(aff[key], ref[key],
                           rtol=1e-8, atol=1e-9 * np.abs(ref[key]).max())


def test_online_reconstruct_close_to_fom(reduced_models, query):
    """With a basis built from nearby solutions the ROM is a close surrogate
    (reduced errors just need to be small, not zero, at unseen tuples)."""
    tup = query[1]
    rec = rg.reconstruct(reduced_models,
                         rg.galerkin_online(reduced_models, tup))
    _, msc, mvec, sysT, sys1, mdata = _fom_systems(tup)
    T = sysT.solve()
    relT = (np.abs(rec["T"].values - T.values).max()
            / np.abs(T.values).max())
    assert relT < 0.05


def test_physical_only_decomposition(spaces):
    """With geometry fixed, the collapsed expansion still matches the FOM."""
    active = ("k", "mu", "lam", "alpha")
    tup = lhs_sample(ParameterRanges(active=active), 1, seed=6)[0]
    form = rg.affine_decompose("WT", spaces["scalar"], CFG, geometric=False)
    assert len(form.matrix_terms) <= 4
    ctx = rg.geometry_context(tup.geometric)
    phys = rg.physical_factors("WT", tup, CFG)
    A = form.assemble_matrix(ctx, phys)
    sysT = fem.assemble_thermal(spaces["scalar"],
                                problem.thermal_data(CFG, tup))
    assert np.abs((A - sysT.matrix).data).max() <= \
        1e-12 * np.abs(sysT.matrix.data).max()

    vform = rg.affine_decompose("WM1", spaces["vector"], CFG,
                                geometric=False)
    assert not vform.has_hoop  # hoop block folds into the fixed operators
    physM = rg.physical_factors("WM", tup, CFG)
    AM = vform.assemble_matrix(ctx, physM)
    sys1 = fem.assemble_mechanical(spaces["vector"],
                                   problem.mechanical_data(CFG, tup), None)
    assert np.abs((AM - sys1.matrix).data).max() <= \
        1e-12 * np.abs(sys1.matrix.data).max()
    bM = vform.assemble_load(ctx, physM)
    assert np.abs(bM - sys1.rhs).max() <= 1e-12 * np.abs(sys1.rhs).max()


def test_unknown_model_rejected(spaces):
    with pytest.raises(ValueError):
        rg.affine_decompose("WX", spaces["scalar"], CFG)
    with pytest.raises(ValueError):
        rg.affine_decompose("WM2", spaces["vector"], CFG)
