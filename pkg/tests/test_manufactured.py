import numpy as np
import pytest

from hearthrom import manufactured


def test_case_kinds():
    with pytest.raises(ValueError):
        manufactured.manufactured_case("bogus")
    for kind in ("thermal", "mechanical", "coupled"):
        case = manufactured.manufactured_case(kind)
        assert case.kind == kind


def test_fields_consistent_with_gradients(rng):
    """Analytic gradients match central differences of the analytic values."""
    case = manufactured.manufactured_case("coupled")
    r = 1.0 + 4.0 * rng.random(20)
    y = 0.5 + 5.0 * rng.random(20)
    h = 1e-6
    dTdr = (case.temperature(r + h, y) - case.temperature(r - h, y)) / (2 * h)
    dTdy = (case.temperature(r, y + h) - case.temperature(r, y - h)) / (2 * h)
    g = case.temperature_grad(r, y)
    assert np.allclose(g[..., 0], dTdr, rtol=1e-6, atol=1e-4)
    assert np.allclose(g[..., 1], dTdy, rtol=1e-6, atol=1e-4)
    du_dr = (case.displacement(r + h, y)
             - case.displacement(r - h, y)) / (2 * h)
    du_dy = (case.displacement(r, y + h)
             - case.displacement(r, y - h)) / (2 * h)
    gu = case.displacement_grad(r, y)
    assert np.allclose(gu[..., 0], du_dr, rtol=1e-5, atol=1e-8)
    assert np.allclose(gu[..., 1], du_dy, rtol=1e-5, atol=1e-8)


def test_cubic_elements_reproduce_thermal_solution():
    rep = manufactured.run_validation("thermal", 3, [1])
    assert rep.relative_errors[0] <= 1e-9
    assert rep.l2_errors[0] <= 1e-9


def test_cubic_elements_reproduce_mechanical_solution():
    rep = manufactured.run_validation("mechanical", 3, [1])
    assert rep.relative_errors[0] <= 1e-8
    assert rep.l2_errors[0] <= 1e-8


def test_cubic_elements_reproduce_coupled_solution():
    rep = manufactured.run_validation("coupled", 3, [1])
    assert rep.relative_errors[0] <= 1e-8
    assert rep.hydrostatic_residual <= 1e-8 * rep.max_thermal_stress
    assert rep.max_thermal_stress > 0.0


def test_linear_elements_convergence_rates():
    rep = manufactured.run_validation("thermal", 1, [1, 2, 3])
    for s in rep.slopes:
        assert 0.8 <= s <= 1.2
    for s in rep.l2_slopes:
        assert 1.7 <= s <= 2.3


def test_report_rows():
    rep = manufactured.run_validation("thermal", 3, [1])
    rows = rep.rows()
    assert len(rows) == 1
