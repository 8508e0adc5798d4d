"""Latin hypercube sampling of parameter tuples and train/validation splits."""

from __future__ import annotations

import csv
import math

import numpy as np

from .params import (PARAM_NAMES, PARAMETER_BOUNDS, ParameterTuple,
                     reference_tuple)


class ParameterRanges:
    """Sampling box: per active parameter a (min, max) interval."""

    def __init__(self, bounds=None, active=None):
        bounds = dict(PARAMETER_BOUNDS if bounds is None else bounds)
        if active is not None:
            bounds = {name: bounds[name] for name in active}
        for name, (lo, hi) in bounds.items():
            if name not in PARAM_NAMES:
                raise ValueError(f"unknown parameter {name!r}")
            if not lo < hi:
                raise ValueError(f"empty range for {name!r}")
        # keep canonical ordering
        self.bounds = {n: bounds[n] for n in PARAM_NAMES if n in bounds}

    @property
    def active(self):
        return tuple(self.bounds)

    @property
    def dim(self):
        return len(self.bounds)

    def as_arrays(self):
        lo = np.array([v[0] for v in self.bounds.values()])
        hi = np.array([v[1] for v in self.bounds.values()])
        return lo, hi


def lhs_sample(ranges: ParameterRanges, n: int, seed: int):
    """Latin hypercube sample of n tuples.

    Each active dimension is divided into n equal strata holding exactly one
    sample (uniform within its stratum); strata are paired across dimensions
    by independent random permutations.  Inactive parameters stay at their
    reference values.  Deterministic for a fixed seed.
    """
    if n < 1:
        raise ValueError("need at least one sample")
    if ranges.dim == 0:
        raise ValueError("no active parameters to sample")
    rng = np.random.default_rng(seed)
    lo, hi = ranges.as_arrays()
    d = ranges.dim
    u = (rng.permuted(np.tile(np.arange(n), (d, 1)), axis=1).T
         + rng.random((n, d))) / n
    values = lo + u * (hi - lo)

    base = reference_tuple().as_vector()
    idx = [PARAM_NAMES.index(name) for name in ranges.active]
    out = []
    for row in values:
        vec = base.copy()
        vec[idx] = row
        out.append(ParameterTuple.from_vector(vec, active=ranges.active))
    return out


def split(tuples, fraction: float = 0.7, seed: int = 0):
    """Deterministic shuffled split into (training, validation) sets.

    Training size is ceil(fraction * n).
    """
    if not 0.0 < fraction < 1.0:
        raise ValueError("fraction must lie in (0, 1)")
    n = len(tuples)
    if n < 2:
        raise ValueError("need at least two tuples to split")
    rng = np.random.default_rng(seed)
    order = rng.permutation(n)
    n_train = math.ceil(fraction * n)
    train = [tuples[i] for i in sorted(order[:n_train])]
    val = [tuples[i] for i in sorted(order[n_train:])]
    return train, val


def export_csv(tuples, path):
    """Write sampled tuples as CSV (active parameters in the header)."""
    active = tuples[0].active if tuples else ()
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(list(active))
        for tup in tuples:
            writer.writerow([repr(float(v)) for v in tup.active_vector()])


def import_csv(path):
    """Read tuples written by :func:`export_csv`."""
    with open(path, newline="") as f:
        reader = csv.reader(f)
        active = tuple(next(reader))
        rows = [[float(v) for v in row] for row in reader if row]
    from .params import tuple_with
    return [tuple_with(active, row) for row in rows]
