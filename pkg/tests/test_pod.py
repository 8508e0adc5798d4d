import numpy as np
import pytest

from hearthrom import fem, pod
from hearthrom.pod import SnapshotSet, pod_basis, truncation_size


@pytest.fixture(scope="module")
def snapshots(scalar_l1, rng):
    """Smooth synthetic snapshot family with rapidly decaying spectrum."""
    xy = scalar_l1.node_coords
    n_s = 12
    cols = []
    for i in range(n_s):
        f = np.sin((0.6 + 0.4 * i) * xy[:, 0] + 0.3 * i) \
            * np.cos(0.5 * i * xy[:, 1]) + 0.2 * xy[:, 1]
        cols.append(1.5 ** -i * f)
    S = np.array(cols).T
    return SnapshotSet(space=scalar_l1, matrix=S, tuples=[None] * n_s,
                       model="WT", inner="H1r")


def test_orthonormality(snapshots):
    basis = pod_basis(snapshots, truncation=6)
    M = fem.inner_matrix(snapshots.space, "H1r")
    G = basis.modes.T @ (M @ basis.modes)
    assert np.abs(G - np.eye(basis.size)).max() <= 1e-10


def test_eigenvalues_descending_positive(snapshots):
    basis = pod_basis(snapshots)
    ev = basis.eigenvalues
    assert np.all(ev > 0)
    assert np.all(np.diff(ev) <= 0)


def test_full_rank_basis_reproduces_snapshots(snapshots):
    """Keeping every rank-supported mode recovers each snapshot exactly."""
    basis = pod_basis(snapshots, truncation=snapshots.n_snapshots)
    M = fem.inner_matrix(snapshots.space, "H1r")
    for j in range(snapshots.n_snapshots):
        f = fem.Field(snapshots.space, snapshots.matrix[:, j])
        err, rel = pod.projection_error(basis, f)
        assert rel <= 1e-8


def test_projection_optimality(snapshots, rng):
    """The projection coefficients beat any random perturbation of them."""
    basis = pod_basis(snapshots, truncation=4)
    M = fem.inner_matrix(snapshots.space, "H1r")
    f = fem.Field(snapshots.space, snapshots.matrix @ rng.random(12))
    zeta = pod.project(basis, f).zeta
    best = f.values - basis.modes @ zeta

    def norm2(v):
        return v @ (M @ v)

    for _ in range(5):
        other = f.values - basis.modes @ (zeta + 0.1 * rng.standard_normal(4))
        assert norm2(best) < norm2(other)


def test_nesting(snapshots):
    big = pod_basis(snapshots, truncation=6)
    small = pod_basis(snapshots, truncation=3)
    assert np.allclose(big.modes[:, :3], small.modes, atol=1e-12)
    trunc = big.truncated(3)
    assert np.array_equal(trunc.modes, big.modes[:, :3])
    with pytest.raises(ValueError):
        big.truncated(0)
    with pytest.raises(ValueError):
        big.truncated(7)


def test_ratio_rule_on_synthetic_spectra():
    # strictly above / exactly at / below the threshold boundary
    ev = np.array([1.0, 1e-2, 1e-4, 0.99e-4, 1e-6])
    assert truncation_size(ev, {"ratio": 1e-4}) == 3
    assert truncation_size(ev, {"ratio": 1e-2}) == 2
    assert truncation_size(ev, {"ratio": 0.5}) == 1
    # default threshold comes from the module constant
    assert truncation_size(ev, {}) == truncation_size(
        ev, {"ratio": pod.RATIO_THRESHOLD})
    # fixed-N rule clips at the available rank
    assert truncation_size(ev, 3) == 3
    assert truncation_size(ev, 50) == 5


def test_rank_warning_record(scalar_l1):
    """Requesting more modes than the snapshot rank yields a warning note."""
    xy = scalar_l1.node_coords
    S = np.column_stack([xy[:, 0], 2.0 * xy[:, 0], xy[:, 1]])  # rank 2
    s = SnapshotSet(space=scalar_l1, matrix=S, tuples=[None] * 3,
                    model="WT", inner="L2r")
    basis = pod_basis(s, truncation=3)
    assert basis.truncation["rank"] == 2
    assert basis.size == 2
    assert "warning" in basis.truncation


def test_snapshot_validation(scalar_l1):
    with pytest.raises(ValueError):
        SnapshotSet(space=scalar_l1, matrix=np.zeros((3, 2)),
                    tuples=[None, None], model="WT", inner="H1r")
