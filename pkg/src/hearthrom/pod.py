"""Proper orthogonal decomposition via the snapshot Gram matrix."""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np

from .fem import Field, FunctionSpace, inner_matrix

#: Default eigenvalue-ratio admissibility threshold.
RATIO_THRESHOLD = 1e-4
#: Eigenvalues below this relative size are treated as rank deficiency.
RANK_EPS = 1e-13


@dataclass
class SnapshotSet:
    """Reference-mesh coefficient snapshots of one model."""

    space: FunctionSpace
    matrix: np.ndarray          # (n_dofs, n_s)
    tuples: list                # generating parameter tuples
    model: str                  # 'WT' | 'WM' | 'WM1' | 'WM2'
    inner: str                  # 'H1r' | 'U' | 'L2r'

    def __post_init__(self):
        self.matrix = np.asarray(self.matrix, dtype=float)
        if self.matrix.ndim != 2 or self.matrix.shape[0] != self.space.n_dofs:
            raise ValueError("snapshot matrix does not match the space")
        if self.matrix.shape[1] < 1:
            raise ValueError("need at least one snapshot")

    @property
    def n_snapshots(self):
        return self.matrix.shape[1]


@dataclass
class ReducedBasis:
    """Orthonormal modes with their eigenvalue spectrum."""

    space: FunctionSpace
    modes: np.ndarray           # (n_dofs, N)
    eigenvalues: np.ndarray     # all retained-rank eigenvalues, descending
    inner: str
    truncation: dict = dc_field(default_factory=dict)

    @property
    def size(self):
        return self.modes.shape[1]

    def truncated(self, N: int):
        """Leading-N sub-basis (bases are nested by construction)."""
        if not 1 <= N <= self.size:
            raise ValueError("invalid truncation size")
        return ReducedBasis(space=self.space, modes=self.modes[:, :N],
                            eigenvalues=self.eigenvalues, inner=self.inner,
                            truncation={**self.truncation, "N": N})


@dataclass
class Coefficients:
    basis: ReducedBasis
    zeta: np.ndarray

    def __post_init__(self):
        self.zeta = np.asarray(self.zeta, dtype=float)
        if self.zeta.shape != (self.basis.size,):
            raise ValueError("coefficient length does not match the basis")

    def reconstruct(self) -> Field:
        return Field(self.basis.space, self.basis.modes @ self.zeta)


def gram_matrix(s: SnapshotSet) -> np.ndarray:
    """C_kl = <snapshot_k, snapshot_l> in the declared inner product."""
    M = inner_matrix(s.space, s.inner)
    C = s.matrix.T @ (M @ s.matrix)
    return 0.5 * (C + C.T)


def truncation_size(eigenvalues, truncation) -> int:
    """Number of retained modes for a fixed-N or ratio truncation rule.

    ``truncation`` is either an integer N or {'ratio': threshold}.  The
    ratio rule keeps every mode with eigenvalue >= threshold * largest.
    """
    ev = np.asarray(eigenvalues, dtype=float)
    rank = ev.size
    if isinstance(truncation, dict):
        thr = truncation.get("ratio", RATIO_THRESHOLD)
        return max(1, int(np.sum(ev >= thr * ev[0])))
    N = int(truncation)
    return min(N, rank)


def pod_basis(s: SnapshotSet, truncation=None) -> ReducedBasis:
    """Orthonormal basis from the Gram-matrix eigendecomposition.

    Modes are normalized snapshot combinations; ``truncation`` is a fixed N
    or {'ratio': threshold} (default: ratio rule at 1e-4).  Requesting more
    modes than the snapshot rank returns the rank with a warning record.
    """
    C = gram_matrix(s)
    theta, V = np.linalg.eigh(C)
    order = np.argsort(theta)[::-1]
    theta, V = theta[order], V[:, order]
    rank = int(np.sum(theta > RANK_EPS * max(theta[0], 0.0)))
    rank = max(rank, 1)
    theta, V = theta[:rank], V[:, :rank]

    if truncation is None:
        truncation = {"ratio": RATIO_THRESHOLD}
    N = truncation_size(theta, truncation)
    record = {"requested": truncation, "rank": rank, "N": N}
    if not isinstance(truncation, dict) and int(truncation) > rank:
        record["warning"] = "requested size exceeds snapshot rank"

    modes = s.matrix @ (V[:, :N] / np.sqrt(theta[:N]))
    return ReducedBasis(space=s.space, modes=modes, eigenvalues=theta,
                        inner=s.inner, truncation=record)


def project(b: ReducedBasis, f: Field) -> Coefficients:
    """Orthogonal projection coefficients <f, mode_i> in the basis norm."""
    if f.space is not b.space:
        raise ValueError("field and basis live on different spaces")
    M = inner_matrix(b.space, b.inner)
    return Coefficients(basis=b, zeta=b.modes.T @ (M @ f.values))


def projection_error(b: ReducedBasis, f: Field):
    """(absolute, relative) best-approximation error of f in the basis."""
    M = inner_matrix(b.space, b.inner)
    zeta = b.modes.T @ (M @ f.values)
    diff = f.values - b.modes @ zeta
    err = float(np.sqrt(max(diff @ (M @ diff), 0.0)))
    ref = float(np.sqrt(max(f.values @ (M @ f.values), 0.0)))
    return err, err / ref if ref > 0.0 else err
