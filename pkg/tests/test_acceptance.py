"""Acceptance gate: twelve end-to-end checks, one PASS/FAIL line each.

Each test prints a single summary line before asserting, so a plain
``pytest -s tests/test_acceptance.py`` shows the complete scorecard.
"""

import time

import numpy as np
import pytest

from hearthrom import (experiments as ex, fem, geometry, manufactured, pod,
                       problem, rom_ann, rom_galerkin as rg)
from hearthrom.params import GeometricParams, reference_tuple
from hearthrom.runio import RunDirectory
from hearthrom.sampling import ParameterRanges, lhs_sample, split


def _verdict(num, label, ok):
    print(f"CRITERION {num:>2} ({label}): {'PASS' if ok else 'FAIL'}")
    assert ok


# ---------------------------------------------------------------------------
# 1-4: full-order solver verification
# ---------------------------------------------------------------------------

def test_criterion_01_thermal_benchmark():
    t0 = time.perf_counter()
    rep = manufactured.run_validation("thermal", degree=3, levels=[2])
    elapsed = time.perf_counter() - t0
    err = rep.relative_errors[0]
    ok = err <= 1e-9 and elapsed <= 60.0
    _verdict(1, f"thermal benchmark: err {err:.2e}, {elapsed:.1f}s", ok)


def test_criterion_02_mechanical_benchmark():
    rep = manufactured.run_validation("mechanical", degree=3, levels=[2])
    err = rep.relative_errors[0]
    _verdict(2, f"mechanical benchmark: err {err:.2e}", err <= 1e-8)


def test_criterion_03_coupled_benchmark():
    rep = manufactured.run_validation("coupled", degree=3, levels=[2])
    err = rep.relative_errors[0]
    ratio = rep.hydrostatic_residual / rep.max_thermal_stress
    ok = err <= 1e-8 and ratio <= 1e-8
    _verdict(3, f"coupled benchmark: err {err:.2e}, hydrostatic {ratio:.2e}",
             ok)


def test_criterion_04_convergence_rates():
    rep = manufactured.run_validation("thermal", degree=1, levels=[1, 2, 3,
                                                                   4])
    ok = (all(0.8 <= s <= 1.2 for s in rep.slopes)
          and all(1.7 <= s <= 2.3 for s in rep.l2_slopes))
    _verdict(4, f"h-convergence: H1 {np.round(rep.slopes, 2).tolist()}, "
                f"L2 {np.round(rep.l2_slopes, 2).tolist()}", ok)


# ---------------------------------------------------------------------------
# 5: geometry identity and admissibility sweep
# ---------------------------------------------------------------------------

def test_criterion_05_geometry_identity():
    g = GeometricParams()
    coords_ok = (tuple(g.radii) == (0.0, 4.25, 4.6, 4.95, 5.3, 7.05)
                 and np.allclose(g.heights,
                                 (0.0, 2.365, 2.965, 3.565, 4.065, 7.265),
                                 atol=1e-15))
    macro = geometry.reference_decomposition()
    maps = geometry.affine_maps(g, macro)
    identity_ok = (np.abs(maps.G - np.eye(2)).max() <= 1e-14
                   and np.abs(maps.c).max() <= 1e-14)
    ref_mesh = geometry.refine(macro, 0)
    ref_quality = geometry.mesh_quality(ref_mesh)["min"]
    ranges = ParameterRanges(active=(
        "t0", "t1", "t2", "t3", "t4", "D0", "D1", "D2", "D3", "D4"))
    sweep_ok = True
    for tup in lhs_sample(ranges, 100, seed=2024):
        m = geometry.affine_maps(tup.geometric)
        if not np.all(m.determinants() > 0):
            sweep_ok = False
            break
        mesh = geometry.map_mesh(ref_mesh, m)
        if geometry.mesh_quality(mesh)["min"] <= 0.0:
            sweep_ok = False
            break
    ok = coords_ok and identity_ok and sweep_ok and ref_quality > 0.1
    _verdict(5, f"geometry identity + sweep (ref quality {ref_quality:.3f})",
             ok)


# ---------------------------------------------------------------------------
# 6: POD correctness
# ---------------------------------------------------------------------------

def test_criterion_06_pod_correctness():
    mesh = geometry.refine(geometry.reference_decomposition(), 1)
    space = fem.FunctionSpace(mesh, 1, "scalar")
    xy = space.node_coords
    S = np.column_stack([1.5 ** -i * (np.sin((0.6 + 0.4 * i) * xy[:, 0])
                                      + 0.2 * i * xy[:, 1])
                         for i in range(8)])
    snaps = pod.SnapshotSet(space, S, [None] * 8, "WT", "H1r")
    basis = pod.pod_basis(snaps, truncation=8)
    M = fem.inner_matrix(space, "H1r")
    G = basis.modes.T @ (M @ basis.modes)
    ortho = np.abs(G - np.eye(basis.size)).max()
    C = pod.gram_matrix(snaps)
    trace_rel = abs(np.trace(C) - basis.eigenvalues.sum()) / np.trace(C)
    ev = np.array([1.0, 1e-2, 2e-4, 1e-4, 0.999e-4, 1e-7])
    rule_ok = (pod.truncation_size(ev, {"ratio": 1e-4}) == 4
               and pod.truncation_size(ev, {"ratio": 1e-2}) == 2
               and pod.truncation_size(ev, {"ratio": 2e-4}) == 3)
    ok = ortho <= 1e-10 and trace_rel <= 1e-8 and rule_ok
    _verdict(6, f"POD: orthonormality {ortho:.1e}, trace {trace_rel:.1e}",
             ok)


# ---------------------------------------------------------------------------
# 7-8: Galerkin affine fidelity and span reproduction
# ---------------------------------------------------------------------------

def _galerkin_build(model, preset, n_s=6):
    """Galerkin-only reduced models (full-rank bases) for one preset."""
    cfg = ex.ExperimentConfig(model=model, preset=preset, n_snapshots=n_s)
    ranges = cfg.ranges()
    train = lhs_sample(ranges, n_s, seed=cfg.seed_sample)
    ref = ex.reference_mesh(cfg.level)
    scal = fem.FunctionSpace(ref, cfg.degree, "scalar")
    sols = [ex.fom_solve(cfg, t, want_mechanical=(model == "mechanical"))
            for t in train]
    geo = cfg.geometric
    hearth = cfg.hearth
    bT = pod.pod_basis(pod.SnapshotSet(
        scal, np.array([s["T"] for s in sols]).T, train, "WT", "H1r"), n_s)
    formT = rg.affine_decompose("WT", scal, hearth, geometric=geo)
    models = {"WT": rg.reduce_operators(formT, bT, cfg=hearth)}
    if model == "mechanical":
        vec = fem.FunctionSpace(ref, cfg.degree, "vector")
        b1 = pod.pod_basis(pod.SnapshotSet(
            vec, np.array([s["u1"] for s in sols]).T, train, "WM1", "U"),
            n_s)
        b2 = pod.pod_basis(pod.SnapshotSet(
            vec, np.array([s["u2"] for s in sols]).T, train, "WM2", "U"),
            n_s)
        f1 = rg.affine_decompose("WM1", vec, hearth, geometric=geo)
        f2 = rg.affine_decompose("WM2", vec, hearth, geometric=geo,
                                 scalar_space=scal)
        models["WM1"] = rg.reduce_operators(f1, b1, cfg=hearth)
        models["WM2"] = rg.reduce_operators(f2, b2, thermal_basis=bT,
                                            cfg=hearth)
    return cfg, ranges, train, sols, models


@pytest.fixture(scope="module")
def galerkin_builds():
    return {(model, preset): _galerkin_build(model, preset)
            for model in ("thermal", "mechanical")
            for preset in ("i", "ii", "iii", "iv")}


def test_criterion_07_affine_fidelity(galerkin_builds):
    worst = 0.0
    for (model, preset), (cfg, ranges, _, _, models) in \
            galerkin_builds.items():
        for tup in lhs_sample(ranges, 20, seed=909):
            aff = rg.galerkin_online(models, tup, mode="affine")
            ref = rg.galerkin_online(models, tup, mode="direct")
            for key in ref:
                d = np.linalg.norm(aff[key] - ref[key]) \
                    / max(np.linalg.norm(ref[key]), 1e-300)
                worst = max(worst, d)
    _verdict(7, f"affine vs direct, 20 tuples x 4 presets x 2 models: "
                f"max diff {worst:.1e}", worst <= 1e-10)


def test_criterion_08_span_reproduction(galerkin_builds):
    worst = 0.0
    for (model, preset) in (("thermal", "iii"), ("mechanical", "iii")):
        cfg, ranges, train, sols, models = galerkin_builds[(model, preset)]
        scal = models["WT"].basis.space
        M_T = fem.inner_matrix(scal, "H1r")
        for tup, sol in zip(train[:3], sols[:3]):
            res = rg.galerkin_online(models, tup, mode="affine")
            rec = rg.reconstruct(models, res)
            dT = rec["T"].values - sol["T"]
            relT = np.sqrt(dT @ (M_T @ dT)) \
                / np.sqrt(sol["T"] @ (M_T @ sol["T"]))
            worst = max(worst, relT)
            if model == "mechanical":
                vec = models["WM1"].basis.space
                M_U = fem.inner_matrix(vec, "U")
                du = rec["u"].values - sol["u"]
                relU = np.sqrt(du @ (M_U @ du)) \
                    / np.sqrt(sol["u"] @ (M_U @ sol["u"]))
                worst = max(worst, relU)
    _verdict(8, f"full-basis reproduction at training tuples: "
                f"max err {worst:.1e}", worst <= 1e-8)


# ---------------------------------------------------------------------------
# 9: error consistency of both reduced tracks
# ---------------------------------------------------------------------------

@pytest.fixture(scope="module")
def full_artifacts(tmp_path_factory):
    root = tmp_path_factory.mktemp("accept")
    arts = {}
    for model in ("thermal", "mechanical"):
        cfg = ex.ExperimentConfig(model=model, preset="ii", n_snapshots=10,
                                  max_epochs=500)
        run = RunDirectory(root, f"{model}-ii")
        arts[model] = ex.offline_stage(cfg, run)
    return arts


def test_criterion_09_error_consistency(full_artifacts):
    ok = True
    for model, art in full_artifacts.items():
        tuples = lhs_sample(art.cfg.ranges(), 5, seed=4242)
        rep = ex.analyze_errors(art, tuples)
        d = rep["detail"]
        for er, ep in zip(d["eps_rel"], d["eps_proj"]):
            ok &= ep <= er * (1.0 + 1e-9)
        # projection error nonincreasing in N, per method and test tuple
        series = {}
        for n, m, j, ep in zip(d["N"], d["method"], d["tuple"],
                               d["eps_proj"]):
            series.setdefault((m, j), []).append((n, ep))
        for vals in series.values():
            vals.sort()
            for (_, e1), (_, e2) in zip(vals, vals[1:]):
                ok &= e2 <= e1 * (1.0 + 1e-9)
    _verdict(9, "eps_proj <= eps_rel and nonincreasing in N", ok)


# ---------------------------------------------------------------------------
# 10: ANN training on the reference thermal experiment
# ---------------------------------------------------------------------------

def test_criterion_10_ann_training():
    grad = rom_ann.gradient_check()
    cfg = ex.ExperimentConfig(model="thermal", preset="i")
    ranges = cfg.ranges()
    # ceil(0.7 * 142) = 100 training tuples
    tuples = lhs_sample(ranges, 142, seed=cfg.seed_sample)
    ref = ex.reference_mesh(cfg.level)
    scal = fem.FunctionSpace(ref, cfg.degree, "scalar")
    S = np.array([ex.fom_solve(cfg, t)["T"] for t in tuples]).T
    basis = pod.pod_basis(pod.SnapshotSet(scal, S, tuples, "WT", "H1r"))
    M = fem.inner_matrix(scal, "H1r")
    proj = (basis.modes.T @ (M @ S)).T
    train, val = split(tuples, seed=cfg.seed_split)
    idx = {id(t): j for j, t in enumerate(tuples)}
    Y_tr = np.array([proj[idx[id(t)]] for t in train])
    Y_val = np.array([proj[idx[id(t)]] for t in val])
    net = rom_ann.fit_coefficients(
        basis, ranges, train, Y_tr, val, Y_val, width=65,
        train_cfg=rom_ann.TrainConfig(max_epochs=2000, seed=cfg.seed_train))
    n_tr_ok = len(train) == 100

    # validation MSE of the untouched initialization
    scaler = net.scaler
    X_val = scaler.encode_inputs(np.array([t.active_vector() for t in val]))
    Z_val = scaler.encode_outputs(Y_val)
    init = rom_ann.init_params(net.net_cfg, net.train_cfg.seed)
    mse0 = float(np.mean((rom_ann.forward(init, X_val) - Z_val) ** 2))
    improvement = mse0 / net.result.best_val

    best_ok = net.result.best_val == pytest.approx(
        min(net.result.history["val"]))
    ok = (grad <= 1e-5 and n_tr_ok and improvement >= 100.0 and best_ok)
    _verdict(10, f"ANN training: improvement {improvement:.0f}x, "
                 f"gradcheck {grad:.1e}", ok)


# ---------------------------------------------------------------------------
# 11: online speed ratios
# ---------------------------------------------------------------------------

def test_criterion_11_speed_ratios(tmp_path):
    cfg = ex.ExperimentConfig(model="mechanical", preset="ii", level=3,
                              n_snapshots=6, max_epochs=60)
    art = ex.offline_stage(cfg, RunDirectory(tmp_path, "speed"))
    tuples = lhs_sample(cfg.ranges(), 20, seed=777)

    fom_times = []
    for tup in tuples[:3]:
        t0 = time.perf_counter()
        ex.fom_solve(cfg, tup)
        fom_times.append(time.perf_counter() - t0)
    t_fom = float(np.median(fom_times))

    t_gal = ex.online_stage(art, tuples, "galerkin")["median_time"]
    t_ann = ex.online_stage(art, tuples, "ann")["median_time"]

    # ANN timing across the four presets (network evaluation only; its cost
    # depends on the architecture, not the mesh level)
    preset_times = {}
    for preset in ("i", "ii", "iii", "iv"):
        pcfg = ex.ExperimentConfig(model="thermal", preset=preset,
                                   n_snapshots=6, max_epochs=30)
        part = ex.offline_stage(pcfg, RunDirectory(tmp_path, f"p{preset}"))
        ptuples = lhs_sample(pcfg.ranges(), 30, seed=5)
        preset_times[preset] = ex.online_stage(part, ptuples,
                                               "ann")["median_time"]
    spread = max(preset_times.values()) / min(preset_times.values())

    ok = (t_ann <= t_fom / 50.0 and t_gal >= 5.0 * t_ann and spread < 2.0)
    _verdict(11, f"speed: FOM {t_fom:.3f}s, Galerkin {t_gal:.2e}s, "
                 f"ANN {t_ann:.2e}s, preset spread {spread:.2f}x", ok)


# ---------------------------------------------------------------------------
# 12: sampling guarantees
# ---------------------------------------------------------------------------

def test_criterion_12_lhs_guarantees():
    ranges = ParameterRanges(active=("t0", "D2", "k"))
    strat_ok = True
    for n in (4, 16, 100):
        X = np.array([t.active_vector()
                      for t in lhs_sample(ranges, n, seed=31)])
        lo, hi = ranges.as_arrays()
        u = (X - lo) / (hi - lo)
        for j in range(ranges.dim):
            strat_ok &= sorted(np.floor(u[:, j] * n).astype(int)) \
                == list(range(n))
    a = lhs_sample(ranges, 16, seed=2)
    b = lhs_sample(ranges, 16, seed=2)
    det_ok = all(np.array_equal(x.as_vector(), y.as_vector())
                 for x, y in zip(a, b))
    big = lhs_sample(ParameterRanges(active=("k",)), 4500, seed=1)
    train, val = split(big, 0.7, seed=0)
    split_ok = (len(train), len(val)) == (3150, 1350)
    ok = strat_ok and det_ok and split_ok
    _verdict(12, f"LHS strata + determinism + split "
                 f"{len(train)}/{len(val)}", ok)
