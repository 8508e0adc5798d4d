"""Run-directory persistence: binary arrays, JSON sidecars, CSV tables.

Array container format (bit-exact across platforms):

* 8-byte magic string ``HROMARR1``
* number of dimensions as a 64-bit little-endian signed integer
* each dimension extent as a 64-bit little-endian signed integer
* the data as row-major (C-order) little-endian 64-bit floats

Every artifact is accompanied by a UTF-8 JSON metadata sidecar
(``<name>.json``) recording the creation parameters and seeds.  Writes are
atomic (temp file + rename).  A run directory holds the subdirectories
``config``, ``snapshots``, ``bases``, ``reduced``, ``ann``, ``reports``.
"""

from __future__ import annotations

import csv
import json
import os
import struct
import tempfile

import numpy as np

MAGIC = b"HROMARR1"

RUN_SUBDIRS = ("config", "snapshots", "bases", "reduced", "ann", "reports")


# ---------------------------------------------------------------------------
# atomic primitives
# ---------------------------------------------------------------------------

def _atomic_write(path, data: bytes):
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp_")
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_array(path, arr):
    """Write a float array in the binary container format."""
    a = np.ascontiguousarray(arr, dtype="<f8")
    header = MAGIC + struct.pack("<q", a.ndim)
    header += struct.pack(f"<{a.ndim}q", *a.shape)
    _atomic_write(path, header + a.tobytes())


def read_array(path):
    with open(path, "rb") as f:
        if f.read(8) != MAGIC:
            raise ValueError(f"{path}: not an array container")
        (ndim,) = struct.unpack("<q", f.read(8))
        shape = struct.unpack(f"<{ndim}q", f.read(8 * ndim))
        data = np.frombuffer(f.read(), dtype="<f8")
    if data.size != int(np.prod(shape)):
        raise ValueError(f"{path}: truncated array data")
    return data.reshape(shape).astype(float)


def write_json(path, obj):
    _atomic_write(path, json.dumps(obj, indent=2, sort_keys=True,
                                   default=_jsonify).encode("utf-8"))


def _jsonify(x):
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, (np.integer, np.floating)):
        return x.item()
    raise TypeError(f"not JSON serializable: {type(x)}")


def read_json(path):
    with open(path, encoding="utf-8") as f:
        return json.load(f)


def write_csv(path, rows, header=None):
    import io
    buf = io.StringIO()
    w = csv.writer(buf)
    if header is not None:
        w.writerow(header)
    for row in rows:
        w.writerow(row)
    _atomic_write(path, buf.getvalue().encode("utf-8"))


def read_csv(path, skip_header=True):
    with open(path, newline="") as f:
        rows = list(csv.reader(f))
    if skip_header and rows:
        rows = rows[1:]
    return [[float(v) for v in row] for row in rows if row]


# ---------------------------------------------------------------------------
# run directories
# ---------------------------------------------------------------------------

class RunDirectory:
    """Artifact store of one experiment run."""

    def __init__(self, root, name=None, create=True):
        self.path = os.path.abspath(os.path.join(root, "runs", name)
                                    if name is not None else root)
        if create:
            for sub in RUN_SUBDIRS:
                os.makedirs(os.path.join(self.path, sub), exist_ok=True)

    def file(self, sub, name):
        if sub not in RUN_SUBDIRS:
            raise ValueError(f"unknown run subdirectory {sub!r}")
        return os.path.join(self.path, sub, name)

    # -- bases -------------------------------------------------------------
    def save_basis(self, key, basis, meta=None):
        from .pod import ReducedBasis  # noqa: F401  (type documented)
        write_array(self.file("bases", f"{key}.bin"), basis.modes)
        write_csv(self.file("bases", f"{key}_eigenvalues.csv"),
                  [(i + 1, ev) for i, ev in enumerate(basis.eigenvalues)],
                  header=("mode", "eigenvalue"))
        write_json(self.file("bases", f"{key}.json"),
                   {"inner": basis.inner, "size": basis.size,
                    "truncation": basis.truncation,
                    "degree": basis.space.degree,
                    "level": basis.space.mesh.level,
                    **(meta or {})})

    def load_basis(self, key, space):
        from .pod import ReducedBasis
        meta = read_json(self.file("bases", f"{key}.json"))
        if meta["degree"] != space.degree or \
           meta["level"] != space.mesh.level:
            raise ValueError("basis was built on a different discretization")
        modes = read_array(self.file("bases", f"{key}.bin"))
        ev = np.array([row[1] for row in
                       read_csv(self.file("bases",
                                          f"{key}_eigenvalues.csv"))])
        return ReducedBasis(space=space, modes=modes, eigenvalues=ev,
                            inner=meta["inner"],
                            truncation=meta["truncation"])

    # -- snapshots ---------------------------------------------------------
    def save_snapshots(self, key, matrix, meta):
        write_array(self.file("snapshots", f"{key}.bin"), matrix)
        write_json(self.file("snapshots", f"{key}.json"), meta)

    def load_snapshots(self, key):
        return (read_array(self.file("snapshots", f"{key}.bin")),
                read_json(self.file("snapshots", f"{key}.json")))

    # -- reduced models ----------------------------------------------------
    def save_reduced(self, key, rm, meta=None):
        base = self.file("reduced", key)
        write_array(base + "_matrix.bin", rm.matrix_stack)
        write_array(base + "_load.bin", rm.load_stack)
        info = {"model": rm.model, "geometric": rm.geometric,
                "matrix_terms": _strip_keys(rm.matrix_terms),
                "load_terms": _strip_keys(rm.load_terms),
                **(meta or {})}
        if rm.coupling_stack is not None:
            write_array(base + "_coupling.bin", rm.coupling_stack)
            info["coupling_terms"] = _strip_keys(rm.coupling_terms)
        if rm.hoop is not None:
            write_array(base + "_hoop_B.bin", rm.hoop["B"])
            write_array(base + "_hoop_geom.bin",
                        np.column_stack([rm.hoop["sub"], rm.hoop["rhat"],
                                         rm.hoop["wdet"]]))
        write_json(base + ".json", info)

    def load_reduced(self, key, basis, cfg, thermal_basis=None):
        from .rom_galerkin import ReducedModel
        base = self.file("reduced", key)
        info = read_json(base + ".json")
        coupling_stack = coupling_terms = None
        if "coupling_terms" in info:
            coupling_stack = read_array(base + "_coupling.bin")
            coupling_terms = info["coupling_terms"]
        hoop = None
        if os.path.exists(base + "_hoop_B.bin"):
            g = read_array(base + "_hoop_geom.bin")
            hoop = {"sub": g[:, 0].astype(int), "rhat": g[:, 1],
                    "wdet": g[:, 2], "B": read_array(base + "_hoop_B.bin")}
        return ReducedModel(
            model=info["model"], basis=basis, cfg=cfg,
            geometric=info["geometric"], matrix_terms=info["matrix_terms"],
            matrix_stack=read_array(base + "_matrix.bin"),
            load_terms=info["load_terms"],
            load_stack=read_array(base + "_load.bin"),
            coupling_terms=coupling_terms, coupling_stack=coupling_stack,
            thermal_basis=thermal_basis, hoop=hoop)

    # -- networks ----------------------------------------------------------
    def save_network(self, key, net, meta=None):
        base = self.file("ann", key)
        params = net.result.params
        for i, (W, b) in enumerate(params):
            write_array(base + f"_W{i}.bin", W)
            write_array(base + f"_b{i}.bin", b)
        write_csv(base + "_history.csv",
                  [(i, tr, va) for i, (tr, va) in
                   enumerate(zip(net.result.history["train"],
                                 net.result.history["val"]))],
                  header=("epoch", "train_mse", "val_mse"))
        write_json(base + ".json", {
            "layer_sizes": list(net.net_cfg.layer_sizes),
            "width": net.net_cfg.width,
            "active": list(net.ranges.active),
            "bounds": {k: list(v) for k, v in net.ranges.bounds.items()},
            "in_lo": net.scaler.in_lo, "in_hi": net.scaler.in_hi,
            "out_mean": net.scaler.out_mean, "out_std": net.scaler.out_std,
            "best_epoch": net.result.best_epoch,
            "best_val": net.result.best_val,
            "stopped_epoch": net.result.stopped_epoch,
            "train": {"learning_rate": net.train_cfg.learning_rate,
                      "max_epochs": net.train_cfg.max_epochs,
                      "patience": net.train_cfg.patience,
                      "seed": net.train_cfg.seed},
            **(meta or {})})

    def load_network(self, key, basis):
        from .rom_ann import (CoefficientNetwork, NetworkConfig, Scaler,
                              TrainConfig, TrainResult)
        from .sampling import ParameterRanges
        base = self.file("ann", key)
        info = read_json(base + ".json")
        sizes = info["layer_sizes"]
        params = [(read_array(base + f"_W{i}.bin"),
                   read_array(base + f"_b{i}.bin"))
                  for i in range(len(sizes) - 1)]
        hist = read_csv(base + "_history.csv")
        result = TrainResult(
            params=params,
            history={"train": [r[1] for r in hist],
                     "val": [r[2] for r in hist]},
            best_epoch=info["best_epoch"], best_val=info["best_val"],
            stopped_epoch=info["stopped_epoch"])
        ranges = ParameterRanges(
            bounds={k: tuple(v) for k, v in info["bounds"].items()},
            active=info["active"])
        scaler = Scaler(in_lo=np.array(info["in_lo"]),
                        in_hi=np.array(info["in_hi"]),
                        out_mean=np.array(info["out_mean"]),
                        out_std=np.array(info["out_std"]))
        t = info["train"]
        return CoefficientNetwork(
            basis=basis, ranges=ranges, scaler=scaler, result=result,
            net_cfg=NetworkConfig(n_in=sizes[0], n_out=sizes[-1],
                                  width=info["width"],
                                  n_hidden=len(sizes) - 2),
            train_cfg=TrainConfig(learning_rate=t["learning_rate"],
                                  max_epochs=t["max_epochs"],
                                  patience=t["patience"], seed=t["seed"]))


def _strip_keys(terms):
    return [dict(t) for t in terms] if terms else []


def export_field(path, field):
    """Plain-text field dump: node id, coordinates, value(s) per line."""
    space = field.space
    rows = []
    for i, (r, y) in enumerate(space.node_coords):
        r, y = float(r), float(y)
        if space.rank == "scalar":
            rows.append(f"{i} {r!r} {y!r} {float(field.values[i])!r}")
        else:
            rows.append(f"{i} {r!r} {y!r} {float(field.values[2 * i])!r} "
                        f"{float(field.values[2 * i + 1])!r}")
    _atomic_write(path, ("\n".join(rows) + "\n").encode("utf-8"))
