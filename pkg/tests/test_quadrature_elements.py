import math

import numpy as np
import pytest

from hearthrom import elements, quadrature


def monomial_integral(a, b):
    """Exact value of x^a y^b over the unit triangle: a! b! / (a+b+2)!."""
    return (math.factorial(a) * math.factorial(b)
            / math.factorial(a + b + 2))


@pytest.mark.parametrize("n", [1, 2, 3, 4, 5, 6])
def test_triangle_rule_exactness(n):
    pts, w = quadrature.triangle_rule(n)
    assert w.sum() == pytest.approx(0.5, abs=1e-14)
    assert np.all(w > 0)
    # strictly interior points (needed for the 1/r hoop integrand)
    assert np.all(pts > 0)
    assert np.all(pts.sum(axis=1) < 1)
    # exact for total degree 2n - 1
    for a in range(2 * n):
        for b in range(2 * n - a):
            got = np.sum(w * pts[:, 0] ** a * pts[:, 1] ** b)
            assert got == pytest.approx(monomial_integral(a, b), rel=1e-13)


@pytest.mark.parametrize("n", [1, 2, 3, 5])
def test_interval_rule_exactness(n):
    t, w = quadrature.interval_rule(n)
    assert w.sum() == pytest.approx(1.0, abs=1e-14)
    assert np.all((t > 0) & (t < 1))
    for a in range(2 * n):
        assert np.sum(w * t ** a) == pytest.approx(1.0 / (a + 1), rel=1e-13)


def test_rule_for_degree_margin():
    """The default rules integrate degree 2p + 2 exactly (stiffness with
    the extra radial weight plus the geometric factor)."""
    for p in (1, 2, 3):
        pts, w = quadrature.volume_rule_for_degree(p)
        deg = 2 * (p + 3) - 1
        assert deg >= 2 * p + 2
        a, b = deg - 1, 1
        got = np.sum(w * pts[:, 0] ** a * pts[:, 1] ** b)
        assert got == pytest.approx(monomial_integral(a, b), rel=1e-12)


@pytest.mark.parametrize("p", [1, 2, 3])
def test_basis_kronecker(p):
    nodes = elements.triangle_nodes(p)
    assert len(nodes) == (p + 1) * (p + 2) // 2
    vals = elements.eval_basis(p, nodes)
    assert np.allclose(vals, np.eye(len(nodes)), atol=1e-12)


@pytest.mark.parametrize("p", [1, 2, 3])
def test_partition_of_unity(p, rng):
    pts = rng.random((30, 2)) * 0.5
    vals = elements.eval_basis(p, pts)
    assert np.allclose(vals.sum(axis=1), 1.0, atol=1e-12)
    grads = elements.eval_grad(p, pts)
    assert np.allclose(grads.sum(axis=1), 0.0, atol=1e-11)


@pytest.mark.parametrize("p", [1, 2, 3])
def test_polynomial_reproduction(p, rng):
    """Nodal interpolation reproduces any degree-p polynomial exactly."""
    nodes = elements.triangle_nodes(p)
    coef = rng.standard_normal((p + 1, p + 1))

    def poly(x, y):
        return sum(coef[a, b] * x ** a * y ** b
                   for a in range(p + 1) for b in range(p + 1 - a))

    nodal = poly(nodes[:, 0], nodes[:, 1])
    pts = rng.random((20, 2)) * 0.5
    got = elements.eval_basis(p, pts) @ nodal
    assert np.allclose(got, poly(pts[:, 0], pts[:, 1]), atol=1e-11)


@pytest.mark.parametrize("p", [1, 2, 3])
def test_edge_basis(p):
    t = np.asarray(elements.edge_nodes(p))
    vals = elements.eval_edge_basis(p, t)
    assert vals.shape == (p + 1, p + 1)
    assert np.allclose(vals, np.eye(p + 1), atol=1e-12)
    mid = elements.eval_edge_basis(p, np.array([0.3, 0.7]))
    assert np.allclose(mid.sum(axis=1), 1.0, atol=1e-13)
