import numpy as np
import pytest

from hearthrom import experiments as ex
from hearthrom.runio import RunDirectory
from hearthrom.sampling import lhs_sample


def test_preset_active_sets():
    assert ex.preset_active("thermal", "i") == ("k",)
    # canonical order lists geometric parameters before physical ones
    assert ex.preset_active("thermal", "ii") == ("t0", "D2", "D4", "k")
    assert ex.preset_active("thermal", "iii") == (
        "t0", "t2", "t4", "D0", "D2", "D4", "k")
    assert len(ex.preset_active("thermal", "iv")) == 11
    assert ex.preset_active("mechanical", "i") == ("k", "mu", "lam", "alpha")
    assert len(ex.preset_active("mechanical", "ii")) == 7
    assert len(ex.preset_active("mechanical", "iii")) == 10
    assert len(ex.preset_active("mechanical", "iv")) == 14
    with pytest.raises(ValueError):
        ex.preset_active("thermal", "v")
    with pytest.raises(ValueError):
        ex.preset_active("acoustic", "i")


def test_config_defaults():
    cfg = ex.ExperimentConfig()
    assert cfg.n_snapshots == 16           # thermal preset 'i'
    assert cfg.width == 65
    assert not cfg.geometric
    cfg2 = ex.ExperimentConfig(model="mechanical", preset="iii")
    assert cfg2.n_snapshots == 24
    assert cfg2.width == 170
    assert cfg2.geometric
    with pytest.raises(ValueError):
        ex.ExperimentConfig(preset="bogus")


def test_fom_solve_keys():
    cfg = ex.ExperimentConfig(model="mechanical", preset="ii",
                              n_snapshots=4)
    tup = lhs_sample(cfg.ranges(), 1, seed=1)[0]
    sol = ex.fom_solve(cfg, tup)
    assert set(sol) >= {"T", "u", "u1", "u2"}
    assert np.allclose(sol["u1"] + sol["u2"], sol["u"],
                       atol=1e-10 * np.abs(sol["u"]).max())


@pytest.fixture(scope="module")
def thermal_art(tmp_path_factory):
    cfg = ex.ExperimentConfig(model="thermal", preset="ii", n_snapshots=8,
                              max_epochs=300)
    run = RunDirectory(tmp_path_factory.mktemp("runs"), "thermal-mini")
    return ex.offline_stage(cfg, run)


@pytest.fixture(scope="module")
def mech_art(tmp_path_factory):
    cfg = ex.ExperimentConfig(model="mechanical", preset="ii",
                              n_snapshots=8, max_epochs=300)
    run = RunDirectory(tmp_path_factory.mktemp("runs"), "mech-mini")
    return ex.offline_stage(cfg, run)


def test_offline_artifacts_thermal(thermal_art):
    art = thermal_art
    assert art.failures == []
    assert set(art.bases) == {"WT"}
    assert art.snapshots["T"].shape[1] == 8
    assert set(art.networks) == {"WT"}
    for key in ("t_FOM", "t_POD", "t_proj", "t_tr", "offline_total"):
        assert art.timings[key] >= 0.0


def test_offline_artifacts_mechanical(mech_art):
    art = mech_art
    assert set(art.bases) == {"WT", "WM1", "WM2", "WM"}
    assert set(art.reduced) == {"WT", "WM1", "WM2"}
    assert set(art.networks) == {"WT", "WM"}


def test_online_galerkin_matches_direct(mech_art):
    tuples = lhs_sample(mech_art.cfg.ranges(), 3, seed=77)
    aff = ex.online_stage(mech_art, tuples, "galerkin")
    ref = ex.online_stage(mech_art, tuples, "galerkin", mode="direct")
    for a, r in zip(aff["coefficients"], ref["coefficients"]):
        for key in a:
            assert np.allclose(a[key], r[key], rtol=1e-8,
                               atol=1e-10 * np.abs(r[key]).max())
    assert aff["median_time"] > 0.0


def test_online_ann_shapes(mech_art):
    tuples = lhs_sample(mech_art.cfg.ranges(), 2, seed=5)
    out = ex.online_stage(mech_art, tuples, "ann")
    res = out["coefficients"][0]
    assert res["zeta_T"].shape == (mech_art.bases["WT"].size,)
    assert res["zeta_M"].shape == (mech_art.bases["WM"].size,)
    with pytest.raises(ValueError):
        ex.online_stage(mech_art, tuples, "interpolation")


def test_analyze_errors(mech_art):
    tuples = lhs_sample(mech_art.cfg.ranges(), 3, seed=13)
    report = ex.analyze_errors(mech_art, tuples, N_values=[1, 2])
    detail = report["detail"]
    # the best-approximation error never exceeds the realized error
    for er, ep in zip(detail["eps_rel"], detail["eps_proj"]):
        assert ep <= er * (1.0 + 1e-9)
    # Galerkin projection error cannot grow with the basis size
    gal = [(n, ep) for n, m, ep in zip(detail["N"], detail["method"],
                                       detail["eps_proj"])
           if m == "galerkin"]
    by_n = {}
    for n, ep in gal:
        by_n.setdefault(n, []).append(ep)
    for e1, e2 in zip(by_n[1], by_n[2]):
        assert e2 <= e1 * (1.0 + 1e-9)
    assert (mech_art.run.path + "/reports/errors.csv")


def test_reload_gives_identical_online(mech_art):
    art2 = ex.load_artifacts(mech_art.cfg, mech_art.run)
    tuples = lhs_sample(mech_art.cfg.ranges(), 2, seed=3)
    a = ex.online_stage(mech_art, tuples, "galerkin")["coefficients"]
    b = ex.online_stage(art2, tuples, "galerkin")["coefficients"]
    for ra, rb in zip(a, b):
        for key in ra:
            assert np.array_equal(ra[key], rb[key])
    c = ex.online_stage(mech_art, tuples, "ann")["coefficients"]
    d = ex.online_stage(art2, tuples, "ann")["coefficients"]
    for rc, rd in zip(c, d):
        for key in rc:
            assert np.array_equal(rc[key], rd[key])


def test_offline_rerun_deterministic(thermal_art, tmp_path):
    run = RunDirectory(tmp_path, "again")
    art2 = ex.offline_stage(thermal_art.cfg, run)
    assert np.allclose(art2.bases["WT"].modes, thermal_art.bases["WT"].modes,
                       atol=1e-12)
    assert np.array_equal(art2.snapshots["T"], thermal_art.snapshots["T"])
