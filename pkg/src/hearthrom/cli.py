"""Command-line interface.

Verbs:

* ``mesh``      build and optionally export the reference mesh, print stats
* ``validate``  manufactured-solution accuracy and convergence checks
* ``sample``    Latin hypercube parameter samples to CSV
* ``offline``   snapshot collection, POD, operator reduction, net training
* ``online``    reduced queries at fresh tuples, timing report
* ``analyze``   error sweep of both reduced methods against FOM oracles
* ``bench``     compare the compiled and pure-Python assembly backends

Exit codes: 0 success, 1 user or configuration error, 2 numerical failure.
Experiment settings come from a JSON config file (``--config``) with the
fields of ExperimentConfig; ``--seed``, ``--level``, ``--degree``,
``--preset``, ``--model`` and ``--method`` flags override it.
"""

from __future__ import annotations

import argparse
import json
import sys
import time

import numpy as np


def _build_parser():
    p = argparse.ArgumentParser(
        prog="hearthrom",
        description="Axisymmetric thermo-mechanical solver with POD-based "
                    "model reduction.")
    sub = p.add_subparsers(dest="verb", required=True)

    def common(sp, run=False):
        sp.add_argument("--config", help="JSON experiment config file")
        sp.add_argument("--seed", type=int, help="override sampling seed")
        sp.add_argument("--level", type=int, help="mesh refinement level")
        sp.add_argument("--degree", type=int, help="polynomial degree")
        sp.add_argument("--preset", choices=("i", "ii", "iii", "iv"))
        sp.add_argument("--model", choices=("thermal", "mechanical"))
        if run:
            sp.add_argument("--root", default=".",
                            help="directory holding runs/<name>/")
            sp.add_argument("--run", required=True, help="run name")

    sp = sub.add_parser("mesh", help="build/export the reference mesh")
    sp.add_argument("--level", type=int, default=0)
    sp.add_argument("--out", help="export prefix (.nodes/.elems/.bedges)")

    sp = sub.add_parser("validate", help="manufactured-solution checks")
    sp.add_argument("--kind", default="all",
                    choices=("thermal", "mechanical", "coupled", "all"))
    sp.add_argument("--degree", type=int, default=3)
    sp.add_argument("--levels", type=int, nargs="+", default=[2])
    sp.add_argument("--convergence", action="store_true",
                    help="also run the degree-1 refinement sweep")

    sp = sub.add_parser("sample", help="Latin hypercube parameter samples")
    common(sp)
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--out", help="CSV output path")

    sp = sub.add_parser("offline", help="run the offline stage")
    common(sp, run=True)

    sp = sub.add_parser("online", help="reduced queries at fresh tuples")
    common(sp, run=True)
    sp.add_argument("--method", choices=("galerkin", "ann"),
                    default="galerkin")
    sp.add_argument("--n-test", type=int, default=10)
    sp.add_argument("--test-seed", type=int, default=424242)
    sp.add_argument("--trunc", type=int, help="basis truncation N")

    sp = sub.add_parser("analyze", help="error sweep vs FOM oracles")
    common(sp, run=True)
    sp.add_argument("--n-test", type=int, default=10)
    sp.add_argument("--test-seed", type=int, default=424242)

    sp = sub.add_parser("bench", help="compare assembly backends")
    sp.add_argument("--level", type=int, default=2)
    sp.add_argument("--degree", type=int, default=1)
    sp.add_argument("--repeats", type=int, default=3)
    return p


def _experiment_config(args):
    from .experiments import ExperimentConfig
    data = {}
    if getattr(args, "config", None):
        with open(args.config, encoding="utf-8") as f:
            data = json.load(f)
        data.pop("hearth", None)   # operating data: defaults only via code
    overrides = {"seed": "seed_sample", "level": "level",
                 "degree": "degree", "preset": "preset", "model": "model"}
    for flag, field in overrides.items():
        v = getattr(args, flag, None)
        if v is not None:
            data[field] = v
    return ExperimentConfig(**data)


# ---------------------------------------------------------------------------
# verbs
# ---------------------------------------------------------------------------

def _cmd_mesh(args):
    from . import geometry
    macro = geometry.reference_decomposition()
    mesh = geometry.refine(macro, args.level)
    q = geometry.mesh_quality(mesh)
    area = float(mesh.element_areas().sum())
    print(f"level {args.level}: {mesh.n_vertices} vertices, "
          f"{mesh.n_elements} elements, area {area:.5f}, "
          f"min quality {q['min']:.4f}")
    if args.out:
        geometry.export_mesh(mesh, args.out)
        print(f"exported to {args.out}.nodes/.elems/.bedges")
    return 0


_VALIDATION_LIMITS = {"thermal": 1e-9, "mechanical": 1e-8, "coupled": 1e-8}


def _cmd_validate(args):
    from .manufactured import run_validation
    kinds = (("thermal", "mechanical", "coupled") if args.kind == "all"
             else (args.kind,))
    failed = False
    for kind in kinds:
        rep = run_validation(kind, degree=args.degree, levels=args.levels)
        err = rep.relative_errors[-1]
        limit = _VALIDATION_LIMITS[kind]
        ok = err <= limit
        failed |= not ok
        line = (f"{kind:<10} p={args.degree} L={args.levels[-1]}: "
                f"rel err {err:.3e} (limit {limit:.0e}) "
                f"{'PASS' if ok else 'FAIL'}")
        if kind == "coupled":
            ratio = rep.hydrostatic_residual / rep.max_thermal_stress
            hok = ratio <= 1e-8
            failed |= not hok
            line += (f"; hydrostatic residual ratio {ratio:.3e} "
                     f"{'PASS' if hok else 'FAIL'}")
        print(line)
    if args.convergence:
        rep = run_validation("thermal", degree=1, levels=[1, 2, 3, 4])
        h1 = rep.slopes
        l2 = rep.l2_slopes
        ok = (all(0.8 <= s <= 1.2 for s in h1)
              and all(1.7 <= s <= 2.3 for s in l2))
        failed |= not ok
        print(f"convergence p=1: H1 slopes {np.round(h1, 3).tolist()}, "
              f"L2 slopes {np.round(l2, 3).tolist()} "
              f"{'PASS' if ok else 'FAIL'}")
    return 2 if failed else 0


def _cmd_sample(args):
    from .sampling import export_csv, lhs_sample
    cfg = _experiment_config(args)
    tuples = lhs_sample(cfg.ranges(), args.n, seed=cfg.seed_sample)
    if args.out:
        export_csv(tuples, args.out)
        print(f"wrote {len(tuples)} tuples to {args.out}")
    else:
        print(",".join(cfg.active))
        for t in tuples:
            print(",".join(repr(float(v)) for v in t.active_vector()))
    return 0


def _cmd_offline(args):
    from .experiments import offline_stage
    from .runio import RunDirectory
    cfg = _experiment_config(args)
    run = RunDirectory(args.root, args.run)
    art = offline_stage(cfg, run)
    t = art.timings
    sizes = {k: b.size for k, b in art.bases.items()}
    print(f"run {args.run}: {len(art.tuples)} snapshots, basis sizes "
          f"{sizes}")
    print("timings: "
          + "  ".join(f"{k}={t[k]:.3g}s" for k in
                      ("t_FOM", "t_POD", "t_proj", "t_tr",
                       "offline_total")))
    if art.failures:
        print(f"warning: {len(art.failures)} snapshot solves failed")
    return 0


def _load_run(args):
    from .experiments import ExperimentConfig, load_artifacts
    from .runio import RunDirectory, read_json
    run = RunDirectory(args.root, args.run, create=False)
    data = read_json(run.file("config", "experiment.json"))
    data.pop("hearth", None)
    cfg = ExperimentConfig(**data)
    return load_artifacts(cfg, run), run


def _cmd_online(args):
    from .experiments import online_stage
    from .runio import write_csv
    from .sampling import lhs_sample
    art, run = _load_run(args)
    tuples = lhs_sample(art.cfg.ranges(), args.n_test, seed=args.test_seed)
    out = online_stage(art, tuples, args.method, N=args.trunc)
    print(f"{args.method} online at {len(tuples)} tuples: median "
          f"{out['median_time']:.3e}s, mean "
          f"{np.mean(out['times']):.3e}s")
    write_csv(run.file("reports", f"online_{args.method}.csv"),
              [[i, t] for i, t in enumerate(out["times"])],
              header=("tuple", "seconds"))
    return 0


def _cmd_analyze(args):
    from .experiments import analyze_errors
    from .sampling import lhs_sample
    art, run = _load_run(args)
    tuples = lhs_sample(art.cfg.ranges(), args.n_test, seed=args.test_seed)
    rep = analyze_errors(art, tuples)
    print("  ".join(rep["header"]))
    for row in rep["summary"]:
        print("  ".join(f"{v:.3e}" if isinstance(v, float) else str(v)
                        for v in row))
    print(f"report written to {run.file('reports', 'errors.csv')}")
    return 0


def _cmd_bench(args):
    from . import fem, geometry, kernels
    backends = kernels.available_backends()
    mesh = geometry.refine(geometry.reference_decomposition(), args.level)
    scal = fem.FunctionSpace(mesh, args.degree, "scalar")
    vec = fem.FunctionSpace(mesh, args.degree, "vector")
    ts = scal.tables()
    tv = vec.tables()
    ne = mesh.n_elements
    kq = np.ones((ne, ts["qw"].size))
    lam = np.full(ne, 1.39e9)
    mu = np.full(ne, 2.08e9)
    print(f"level {args.level}, degree {args.degree}: {ne} elements; "
          f"backends: {', '.join(backends)}")
    for name in backends:
        mod = kernels.get_backend(name)
        for label, fn in (
                ("thermal", lambda: mod.thermal_element_matrices(
                    ts["coords"], ts["qp"], ts["qw"], ts["dN"], kq)),
                ("mechanical", lambda: mod.mechanical_element_matrices(
                    tv["coords"], tv["qp"], tv["qw"], tv["N"], tv["dN"],
                    lam, mu))):
            fn()   # warm up
            times = []
            for _ in range(args.repeats):
                t0 = time.perf_counter()
                fn()
                times.append(time.perf_counter() - t0)
            print(f"  {name:<8} {label:<11} {min(times):.4e} s")
    return 0


_COMMANDS = {"mesh": _cmd_mesh, "validate": _cmd_validate,
             "sample": _cmd_sample, "offline": _cmd_offline,
             "online": _cmd_online, "analyze": _cmd_analyze,
             "bench": _cmd_bench}


def main(argv=None):
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 1
    try:
        return _COMMANDS[args.verb](args)
    except (ValueError, FileNotFoundError, KeyError, TypeError,
            json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (RuntimeError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
