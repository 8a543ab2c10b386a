import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from magheat.fields import FieldSpec, make_field
from magheat.oscillator import (
    curve_to_csv,
    eigenfunction_radial,
    lambda_B_of_s,
    lambda_curve,
    laguerre_eval,
    mode_eigenvalue,
    resolvent_convergence,
    sigma_L_exact,
    sigma_L_infinity_exact,
    sigma_L_numeric,
)
from magheat.radial import ModeAssembler, RadialGrid, graded_grid, hardy_constant, mode_operator


def laguerre_series(n, alpha, x):
    """sum_k (-1)^k binom(n+alpha, n-k) x^k / k! with gamma-function binomials."""
    total = 0.0
    for k in range(n + 1):
        binom = math.gamma(n + alpha + 1) / (math.gamma(n - k + 1) * math.gamma(alpha + k + 1))
        total += (-1) ** k * binom * x**k / math.factorial(k)
    return total


@settings(max_examples=50, deadline=None)
@given(n=st.integers(0, 8), alpha=st.floats(0.0, 3.0), x=st.floats(0.0, 10.0))
def test_laguerre_recurrence_matches_series(n, alpha, x):
    ref = laguerre_series(n, alpha, x)
    assert math.isclose(laguerre_eval(n, alpha, x), ref, rel_tol=1e-9, abs_tol=1e-9 * max(1.0, x) ** n)


def test_sigma_exact_enumeration():
    res = sigma_L_exact(2, 1, 1)
    np.testing.assert_allclose(res.eigenvalues, [0.5, 1.0, 1.5, 2.0])
    assert res.mode_labels == [(0, 0), (0, 1), (1, 0), (1, 1)]
    assert res.to_csv().splitlines()[0] == "n,l,lambda"
    inf = sigma_L_infinity_exact([0.25], 1)
    np.testing.assert_allclose(inf.eigenvalues, [0.75, 1.75])
    with pytest.raises(ValueError):
        sigma_L_exact(2, -1, 0)
    with pytest.raises(ValueError):
        sigma_L_infinity_exact([-1.0], 0)


def test_hardy_constants():
    assert hardy_constant(2) == 0.0
    assert hardy_constant(3) == 0.25


@pytest.mark.parametrize("d,nu", [(2, 0.25), (2, 1.0), (3, 2.0)])
def test_eigenfunction_rayleigh_quotient(d, nu):
    op = mode_operator(nu, d, RadialGrid(dimension=d))
    rho = op.grid[:-1]
    q = op.rayleigh_quotient(eigenfunction_radial(0, nu, d, rho))
    assert abs(q - 0.5 * (1.0 + math.sqrt(nu))) < 1e-3
    # the second eigenfunction is orthogonal and sits one unit higher
    assert abs(mode_eigenvalue(op, 2) - 1.5 - 0.5 * math.sqrt(nu)) < 1e-3


def test_numeric_spectrum_small_grid():
    grid = RadialGrid(n=1500)
    num = sigma_L_numeric(2, 1, 1, grid)
    np.testing.assert_allclose(num.eigenvalues, sigma_L_exact(2, 1, 1).eigenvalues, atol=5e-3)


def test_mode_operator_errors():
    with pytest.raises(ValueError):
        mode_operator(-1.0, 2)
    with pytest.raises(ValueError):
        mode_operator(1.0, 4)
    with pytest.raises(ValueError):
        RadialGrid(rho_min=2.0, rho_max=1.0)
    with pytest.raises(ValueError):
        ModeAssembler(np.array([1.0, 0.5, 2.0]))
    with pytest.raises(ValueError):
        mode_eigenvalue(mode_operator(1.0, 2, RadialGrid(n=100)), 0)


def test_lambda_zero_field(zero_field):
    assert abs(lambda_B_of_s(zero_field, 4.0) - 0.5) < 1e-3


def test_lambda_limit_mode(radial_half):
    res = lambda_B_of_s(radial_half, math.inf, detail=True)
    assert abs(res.value - 0.75) < 1e-3
    assert res.argmin_mode in (0, 1)


def test_lambda_strictly_above_free_value(radial_half):
    vals = lambda_curve(radial_half, [0.0, 4.0, 8.0])
    assert np.all(vals > 0.5 + 1e-4)
    assert vals[0] < vals[1] < vals[2]
    assert curve_to_csv([0.0], [0.6]).startswith("s,lambda_B\n")


def test_lambda_integer_flux_resolved_grid():
    # with a grid resolving the core the curve decreases slowly towards 1/2
    fld = make_field(2, FieldSpec("radial-bump", flux=1.0))
    nodes = graded_grid(math.exp(-4.0))
    lam8 = lambda_B_of_s(fld, 8.0, grid=nodes)
    lam12 = lambda_B_of_s(fld, 12.0, grid=nodes)
    assert 0.5 < lam12 < lam8 < 0.75


def test_lambda_rejects_small_mode_range(radial_half):
    with pytest.raises(ValueError):
        lambda_B_of_s(radial_half, 1.0, m_range=1)
    with pytest.raises(ValueError):
        lambda_B_of_s(make_field(2, FieldSpec("two-bump", flux=0.5)), 1.0)


def test_resolvent_gap_decreases(radial_half):
    gaps = resolvent_convergence(radial_half, [4.0, 8.0])
    assert gaps[1] < gaps[0] < 0.2
