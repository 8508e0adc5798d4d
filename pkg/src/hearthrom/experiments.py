"""Experiment presets and the offline / online / analysis orchestration.

Presets select which parameters vary: preset 'i' is physical-only (k for
the thermal model; k, mu, lam, alpha for the mechanical model); presets
'ii', 'iii', 'iv' add 3, 6, and all 10 geometric parameters.  The offline
stage samples tuples, collects full-order snapshots, builds POD bases, and
prepares both reduced tracks (separable-operator Galerkin and coefficient
network); online queries and error analysis run against those artifacts.

All stages are deterministic given the config seeds; snapshot solves run
sequentially so aggregation order never depends on scheduling.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field as dc_field

import numpy as np

from . import fem, geometry, pod, problem, rom_ann, rom_galerkin as rg
from .runio import RunDirectory, write_csv, write_json
from .sampling import ParameterRanges, lhs_sample, split

_GEOMETRIC_SETS = {
    "i": (),
    "ii": ("t0", "D2", "D4"),
    "iii": ("t0", "t2", "t4", "D0", "D2", "D4"),
    "iv": ("t0", "t1", "t2", "t3", "t4", "D0", "D1", "D2", "D3", "D4"),
}

#: Hidden-layer widths used for the reference experiments.
DEFAULT_WIDTHS = {
    ("thermal", "i"): 65, ("thermal", "ii"): 70,
    ("thermal", "iii"): 80, ("thermal", "iv"): 70,
    ("mechanical", "i"): 60, ("mechanical", "ii"): 80,
    ("mechanical", "iii"): 170, ("mechanical", "iv"): 130,
}

#: Basis sizes the ratio truncation rule selects in the reference study.
REFERENCE_BASIS_SIZES = {
    ("thermal", "i"): 1, ("thermal", "ii"): 3,
    ("thermal", "iii"): 3, ("thermal", "iv"): 4,
    ("mechanical", "i"): 1, ("mechanical", "ii"): 3,
    ("mechanical", "iii"): 4, ("mechanical", "iv"): 7,
}

PRESETS = tuple(_GEOMETRIC_SETS)
MODELS = ("thermal", "mechanical")


def preset_active(model: str, preset: str):
    """Active parameter names of a preset, in canonical order."""
    if model not in MODELS:
        raise ValueError(f"unknown model {model!r}")
    if preset not in _GEOMETRIC_SETS:
        raise ValueError(f"unknown preset {preset!r}")
    names = ("k",) + _GEOMETRIC_SETS[preset]
    if model == "mechanical":
        names = names + ("mu", "lam", "alpha")
    return ParameterRanges(active=names).active


@dataclass(frozen=True)
class ExperimentConfig:
    """One reduced-order study: model, preset, discretization, sampling."""

    model: str = "thermal"
    preset: str = "i"
    level: int = 1
    degree: int = 1
    n_snapshots: int = None      # default: 16 for thermal 'i', else 24
    truncation: object = None    # int N or {'ratio': thr}; default ratio rule
    width: int = None            # network hidden width; default per preset
    max_epochs: int = 2000
    seed_sample: int = 2024
    seed_split: int = 11
    seed_train: int = 7
    hearth: problem.HearthConfig = dc_field(
        default_factory=problem.HearthConfig)

    def __post_init__(self):
        preset_active(self.model, self.preset)   # validates names
        if self.n_snapshots is None:
            n = 16 if (self.model, self.preset) == ("thermal", "i") else 24
            object.__setattr__(self, "n_snapshots", n)
        if self.width is None:
            object.__setattr__(self, "width",
                               DEFAULT_WIDTHS[(self.model, self.preset)])

    @property
    def active(self):
        return preset_active(self.model, self.preset)

    @property
    def geometric(self):
        """Whether any geometric parameter varies."""
        return bool(_GEOMETRIC_SETS[self.preset])

    def ranges(self):
        return ParameterRanges(active=self.active)

    def as_dict(self):
        d = {k: getattr(self, k) for k in
             ("model", "preset", "level", "degree", "n_snapshots", "width",
              "max_epochs", "seed_sample", "seed_split", "seed_train")}
        d["truncation"] = self.truncation
        d["hearth"] = dict(self.hearth.__dict__)
        return d


# ---------------------------------------------------------------------------
# full-order solves
# ---------------------------------------------------------------------------

def fom_solve(cfg: ExperimentConfig, tup, want_mechanical=None):
    """Full-order fields at one tuple on the mapped mesh.

    Returns coefficient vectors keyed 'T' and, for the mechanical model,
    'u1' (loads-only), 'u2' (thermal difference), 'u' (their sum).
    """
    ref = reference_mesh(cfg.level)
    mesh = geometry.map_mesh(ref, geometry.affine_maps(tup.geometric))
    scal = fem.FunctionSpace(mesh, cfg.degree, "scalar")
    T = fem.assemble_thermal(scal, problem.thermal_data(cfg.hearth,
                                                        tup)).solve()
    out = {"T": T.values}
    if cfg.model == "mechanical" if want_mechanical is None \
            else want_mechanical:
        vec = fem.FunctionSpace(mesh, cfg.degree, "vector")
        md = problem.mechanical_data(cfg.hearth, tup)
        u1 = fem.assemble_mechanical(vec, md, None,
                                     include_loads=True).solve()
        u2 = fem.assemble_mechanical(vec, md, T,
                                     include_loads=False).solve()
        out.update(u1=u1.values, u2=u2.values, u=u1.values + u2.values)
    return out


_MESH_CACHE = {}


def reference_mesh(level):
    if level not in _MESH_CACHE:
        _MESH_CACHE[level] = geometry.refine(
            geometry.reference_decomposition(), level)
    return _MESH_CACHE[level]


# ---------------------------------------------------------------------------
# offline stage
# ---------------------------------------------------------------------------

@dataclass
class RunArtifacts:
    """In-memory handles to everything the offline stage produced."""

    cfg: ExperimentConfig
    run: RunDirectory
    tuples: list
    spaces: dict                 # 'scalar' and (mechanical) 'vector'
    bases: dict                  # 'WT' and (mechanical) 'WM1', 'WM2', 'WM'
    reduced: dict                # Galerkin ReducedModels by model key
    networks: dict               # CoefficientNetworks: 'WT' or 'WM'
    snapshots: dict              # key -> (n_dofs, n_s)
    timings: dict                # t_FOM, t_POD, t_proj, t_tr, offline_total
    failures: list


def offline_stage(cfg: ExperimentConfig, run: RunDirectory) -> RunArtifacts:
    """Sample, solve, reduce, and train; persist everything into ``run``."""
    t_start = time.perf_counter()
    ranges = cfg.ranges()
    tuples = lhs_sample(ranges, cfg.n_snapshots, seed=cfg.seed_sample)

    mech = cfg.model == "mechanical"
    ref = reference_mesh(cfg.level)
    scal = fem.FunctionSpace(ref, cfg.degree, "scalar")
    spaces = {"scalar": scal}
    if mech:
        spaces["vector"] = fem.FunctionSpace(ref, cfg.degree, "vector")

    # -- snapshots ---------------------------------------------------------
    t0 = time.perf_counter()
    columns = {k: [] for k in (("T", "u1", "u2", "u") if mech else ("T",))}
    kept, failures = [], []
    for i, tup in enumerate(tuples):
        try:
            sol = fom_solve(cfg, tup)
        except Exception as exc:   # noqa: BLE001 - recorded and skipped
            failures.append({"index": i, "error": repr(exc)})
            continue
        kept.append(tup)
        for k in columns:
            columns[k].append(sol[k])
    if len(failures) > 0.1 * len(tuples):
        raise RuntimeError(
            f"{len(failures)} of {len(tuples)} snapshot solves failed")
    tuples = kept
    snaps = {k: np.array(v).T for k, v in columns.items()}
    t_FOM = time.perf_counter() - t0

    # -- POD bases ---------------------------------------------------------
    t0 = time.perf_counter()
    trunc = cfg.truncation
    bases = {"WT": pod.pod_basis(
        pod.SnapshotSet(scal, snaps["T"], tuples, "WT", "H1r"), trunc)}
    if mech:
        vec = spaces["vector"]
        for key, col in (("WM1", "u1"), ("WM2", "u2"), ("WM", "u")):
            bases[key] = pod.pod_basis(
                pod.SnapshotSet(vec, snaps[col], tuples, key, "U"), trunc)
    t_POD = time.perf_counter() - t0

    # -- Galerkin track ----------------------------------------------------
    t0 = time.perf_counter()
    geo = cfg.geometric
    hearth = cfg.hearth
    formT = rg.affine_decompose("WT", scal, hearth, geometric=geo)
    reduced = {"WT": rg.reduce_operators(formT, bases["WT"], cfg=hearth)}
    if mech:
        vec = spaces["vector"]
        form1 = rg.affine_decompose("WM1", vec, hearth, geometric=geo)
        form2 = rg.affine_decompose("WM2", vec, hearth, geometric=geo,
                                    scalar_space=scal)
        reduced["WM1"] = rg.reduce_operators(form1, bases["WM1"], cfg=hearth)
        reduced["WM2"] = rg.reduce_operators(form2, bases["WM2"],
                                             thermal_basis=bases["WT"],
                                             cfg=hearth)
    t_proj = time.perf_counter() - t0

    # -- network track -----------------------------------------------------
    t0 = time.perf_counter()
    train, val = split(tuples, seed=cfg.seed_split)
    idx = {id(t): j for j, t in enumerate(tuples)}
    networks = {}
    targets = {"WT": ("T", "H1r", scal)}
    if mech:
        targets["WM"] = ("u", "U", spaces["vector"])
    for key, (col, inner, space) in targets.items():
        basis = bases[key]
        M = fem.inner_matrix(space, inner)
        proj = (basis.modes.T @ (M @ snaps[col])).T   # (n_s, N)
        Y_tr = np.array([proj[idx[id(t)]] for t in train])
        Y_val = np.array([proj[idx[id(t)]] for t in val])
        networks[key] = rom_ann.fit_coefficients(
            basis, ranges, train, Y_tr, val, Y_val, width=cfg.width,
            train_cfg=rom_ann.TrainConfig(max_epochs=cfg.max_epochs,
                                          seed=cfg.seed_train))
    t_tr = time.perf_counter() - t0

    timings = {"t_FOM": t_FOM, "t_POD": t_POD, "t_proj": t_proj,
               "t_tr": t_tr, "offline_total": time.perf_counter() - t_start}
    art = RunArtifacts(cfg=cfg, run=run, tuples=tuples, spaces=spaces,
                       bases=bases, reduced=reduced, networks=networks,
                       snapshots=snaps, timings=timings, failures=failures)
    _persist(art)
    return art


def _persist(art: RunArtifacts):
    run, cfg = art.run, art.cfg
    write_json(run.file("config", "experiment.json"), cfg.as_dict())
    for key, mat in art.snapshots.items():
        run.save_snapshots(key, mat, {
            "model": cfg.model, "preset": cfg.preset,
            "seed_sample": cfg.seed_sample, "n": mat.shape[1],
            "active": list(cfg.active),
            "tuples": [list(t.active_vector()) for t in art.tuples]})
    for key, basis in art.bases.items():
        run.save_basis(key, basis, meta={"preset": cfg.preset,
                                         "seed_sample": cfg.seed_sample})
    for key, rm in art.reduced.items():
        run.save_reduced(key, rm, meta={"preset": cfg.preset})
    for key, net in art.networks.items():
        run.save_network(key, net, meta={"preset": cfg.preset})
    write_json(run.file("reports", "offline_timings.json"), art.timings)
    write_csv(run.file("reports", "offline_timings.csv"),
              [[art.timings[k] for k in
                ("t_FOM", "t_POD", "t_proj", "t_tr", "offline_total")]],
              header=("t_FOM", "t_POD", "t_proj", "t_tr", "offline_total"))


def load_artifacts(cfg: ExperimentConfig, run: RunDirectory) -> RunArtifacts:
    """Rehydrate a persisted run (timings are those of the original run)."""
    ref = reference_mesh(cfg.level)
    scal = fem.FunctionSpace(ref, cfg.degree, "scalar")
    spaces = {"scalar": scal}
    mech = cfg.model == "mechanical"
    if mech:
        spaces["vector"] = fem.FunctionSpace(ref, cfg.degree, "vector")
    keys = ("WT", "WM1", "WM2", "WM") if mech else ("WT",)
    bases = {k: run.load_basis(k, spaces["scalar" if k == "WT" else
                                         "vector"]) for k in keys}
    reduced = {"WT": run.load_reduced("WT", bases["WT"], cfg.hearth)}
    if mech:
        reduced["WM1"] = run.load_reduced("WM1", bases["WM1"], cfg.hearth)
        reduced["WM2"] = run.load_reduced("WM2", bases["WM2"], cfg.hearth,
                                          thermal_basis=bases["WT"])
    networks = {"WT": run.load_network("WT", bases["WT"])}
    if mech:
        networks["WM"] = run.load_network("WM", bases["WM"])
    snaps, meta = {}, None
    for k in (("T", "u1", "u2", "u") if mech else ("T",)):
        snaps[k], meta = run.load_snapshots(k)
    from .params import tuple_with
    tuples = [tuple_with(tuple(meta["active"]), row)
              for row in meta["tuples"]]
    from .runio import read_json
    timings = read_json(run.file("reports", "offline_timings.json"))
    return RunArtifacts(cfg=cfg, run=run, tuples=tuples, spaces=spaces,
                        bases=bases, reduced=reduced, networks=networks,
                        snapshots=snaps, timings=timings, failures=[])


# ---------------------------------------------------------------------------
# online stage
# ---------------------------------------------------------------------------

def online_stage(art: RunArtifacts, tuples, method: str, N=None,
                 mode: str = "affine"):
    """Reduced coefficients and per-tuple wall times (coefficients only)."""
    if method not in ("galerkin", "ann"):
        raise ValueError(f"unknown method {method!r}")
    mech = art.cfg.model == "mechanical"
    results, times = [], []
    if method == "galerkin":
        models = art.reduced
        for tup in tuples:
            t0 = time.perf_counter()
            res = rg.galerkin_online(models, tup, mode=mode, N=N, N_T=N)
            times.append(time.perf_counter() - t0)
            results.append(res)
    else:
        nets = art.networks
        for tup in tuples:
            t0 = time.perf_counter()
            res = {"zeta_T": nets["WT"].predict(tup)}
            if mech:
                res["zeta_M"] = nets["WM"].predict(tup)
            times.append(time.perf_counter() - t0)
            if N is not None:
                res = {k: v[:N] for k, v in res.items()}
            results.append(res)
    return {"coefficients": results, "times": times,
            "median_time": float(np.median(times))}


def reconstruct_solution(art: RunArtifacts, result: dict):
    """Fields on the reference mesh from one online result."""
    out = {"T": fem.Field(art.spaces["scalar"],
                          art.bases["WT"].modes[:, :len(result["zeta_T"])]
                          @ result["zeta_T"])}
    vec = art.spaces.get("vector")
    if "zeta_M" in result:
        out["u"] = fem.Field(vec,
                             art.bases["WM"].modes[:, :len(result["zeta_M"])]
                             @ result["zeta_M"])
    elif "zeta_MM" in result:
        out["u"] = fem.Field(
            vec,
            art.bases["WM1"].modes[:, :len(result["zeta_MM"])]
            @ result["zeta_MM"]
            + art.bases["WM2"].modes[:, :len(result["zeta_MT"])]
            @ result["zeta_MT"])
    return out


# ---------------------------------------------------------------------------
# error analysis
# ---------------------------------------------------------------------------

def _rel_err(M, approx, exact):
    diff = approx - exact
    num = float(np.sqrt(max(diff @ (M @ diff), 0.0)))
    den = float(np.sqrt(max(exact @ (M @ exact), 0.0)))
    return num / den if den > 0 else num


def _combined_projection(M, modes_list, exact):
    """Best-approximation error in the span of several mode blocks."""
    Phi = np.column_stack(modes_list)
    G = Phi.T @ (M @ Phi)
    rhs = Phi.T @ (M @ exact)
    c = np.linalg.lstsq(G, rhs, rcond=None)[0]
    return _rel_err(M, Phi @ c, exact)


def analyze_errors(art: RunArtifacts, test_tuples, N_values=None):
    """Per-N relative errors of both methods against fresh FOM oracles.

    Errors use the H1-type norm (thermal) and the vector energy-equivalent
    norm (mechanical); eps_proj is the best-approximation benchmark in the
    same basis (combined span of both displacement bases for Galerkin).
    Returns a dict and writes CSV plot data into the run reports.
    """
    cfg = art.cfg
    mech = cfg.model == "mechanical"
    scal = art.spaces["scalar"]
    M_T = fem.inner_matrix(scal, "H1r")
    if mech:
        M_U = fem.inner_matrix(art.spaces["vector"], "U")
    oracles = [fom_solve(cfg, tup) for tup in test_tuples]

    if N_values is None:
        nmax = (min(art.bases[k].size for k in ("WM1", "WM2", "WM"))
                if mech else art.bases["WT"].size)
        N_values = list(range(1, nmax + 1))

    rows, detail = [], {"N": [], "method": [], "tuple": [],
                        "eps_rel": [], "eps_proj": []}
    for N in N_values:
        per_method = {}
        for method in ("galerkin", "ann"):
            online = online_stage(art, test_tuples, method, N=N)
            eps_rel, eps_proj = [], []
            for res, sol in zip(online["coefficients"], oracles):
                if mech:
                    M, exact = M_U, sol["u"]
                    rec = reconstruct_solution(art, res)["u"].values
                    if method == "galerkin":
                        ep = _combined_projection(
                            M, [art.bases["WM1"].modes[:, :N],
                                art.bases["WM2"].modes[:, :N]], exact)
                    else:
                        ep = _combined_projection(
                            M, [art.bases["WM"].modes[:, :N]], exact)
                else:
                    M, exact = M_T, sol["T"]
                    rec = reconstruct_solution(art, res)["T"].values
                    ep = _combined_projection(
                        M, [art.bases["WT"].modes[:, :N]], exact)
                er = _rel_err(M, rec, exact)
                eps_rel.append(er)
                eps_proj.append(ep)
            per_method[method] = (eps_rel, eps_proj)
            for j, (er, ep) in enumerate(zip(eps_rel, eps_proj)):
                detail["N"].append(N)
                detail["method"].append(method)
                detail["tuple"].append(j)
                detail["eps_rel"].append(er)
                detail["eps_proj"].append(ep)
        for method, (eps_rel, eps_proj) in per_method.items():
            rows.append([N, method,
                         float(np.mean(eps_rel)), float(np.max(eps_rel)),
                         float(np.mean(eps_proj)), float(np.max(eps_proj))])
    header = ("N", "method", "mean_eps_rel", "max_eps_rel",
              "mean_eps_proj", "max_eps_proj")
    write_csv(art.run.file("reports", "errors.csv"), rows, header=header)
    return {"summary": rows, "header": header, "detail": detail}


__all__ = [
    "ExperimentConfig", "RunArtifacts", "PRESETS", "MODELS",
    "DEFAULT_WIDTHS", "REFERENCE_BASIS_SIZES", "preset_active",
    "fom_solve", "reference_mesh", "offline_stage", "load_artifacts",
    "online_stage", "reconstruct_solution", "analyze_errors",
]
