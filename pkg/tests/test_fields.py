import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad
from scipy.special import expn

from magheat.fields import (
    BUMP_MASS,
    FieldError,
    FieldSpec,
    bump_profile,
    closedness_residual,
    curl_residual,
    fibonacci_sphere,
    flux_through_disc,
    gauge_decay_violation,
    make_field,
    poincare_gauge,
    radial_projection_check,
    sample_field_csv,
    spherical_pullback,
    superpose,
    total_flux,
)

from .conftest import ball_points


def quad_flux(flux: float, R: float, r: float) -> float:
    """(1/2pi) int_{D_r} *B for the radial bump, by adaptive quadrature."""
    amp = 2.0 * flux / (R**2 * BUMP_MASS)
    upper = min(r, R)
    val, _ = quad(lambda q: amp * float(bump_profile(q * q / R**2)) * q, 0.0, upper, epsabs=1e-14, limit=200)
    return val


def test_bump_mass_closed_form():
    # int_0^1 exp(-1/(1-t)) dt = E_2(1)
    assert abs(BUMP_MASS - expn(2, 1.0)) < 1e-14


@pytest.mark.parametrize("flux,R", [(0.5, 1.0), (1.3, 2.0), (-0.7, 0.5)])
def test_flux_against_quadrature(flux, R):
    radii = np.array([0.1, 0.5, 0.9, 1.0, 3.0]) * R
    got = flux_through_disc(make_field(2, FieldSpec("radial-bump", flux=flux, radius=R)), radii)
    expect = [quad_flux(flux, R, r) for r in radii]
    np.testing.assert_allclose(got, expect, atol=1e-10)
    assert abs(got[-1] - flux) < 1e-10


def test_two_bump_flux_and_profile(two_bump):
    prof = total_flux(two_bump)
    assert abs(prof.total_flux - 0.7) < 1e-8
    assert abs(prof.beta - 0.3) < 1e-8
    assert abs(float(prof(5.0)) - prof.total_flux) == 0.0


def test_radial_gauge_matches_flux_formula(radial_half, rng):
    # for a radial field A = Phi(r) (-y, x) / r^2
    x = ball_points(rng, 40, 2, 2.0)
    r = np.linalg.norm(x, axis=1)
    phi = np.array([quad_flux(0.5, 1.0, ri) for ri in r])
    expect = phi[:, None] * np.stack([-x[:, 1], x[:, 0]], axis=1) / r[:, None] ** 2
    np.testing.assert_allclose(poincare_gauge(radial_half)(x), expect, atol=1e-10)


@pytest.mark.parametrize("name", ["radial_half", "two_bump", "curl_bump"])
def test_gauge_properties(name, request, rng):
    fld = request.getfixturevalue(name)
    d, R = fld.dimension, fld.support_radius
    A = poincare_gauge(fld)
    x = ball_points(rng, 1000, d, 3.0 * R)
    assert np.max(np.abs(np.sum(A(x) * x, axis=1))) < 1e-10
    assert curl_residual(fld, A, x[:200], h=1e-4, order=8) < 1e-6
    assert gauge_decay_violation(fld, A, x) <= 0.0


def test_closedness_orders(curl_bump, rng):
    x = ball_points(rng, 100, 3, 1.0)
    assert closedness_residual(curl_bump, x, h=1e-3, order=8) < 1e-8
    # second-order stencil: the residual scales like h^2
    r1 = closedness_residual(curl_bump, x, h=1e-2, order=2)
    r2 = closedness_residual(curl_bump, x, h=5e-3, order=2)
    assert 3.0 < r1 / r2 < 5.0


def test_planar_closedness_trivial(two_bump, rng):
    assert closedness_residual(two_bump, ball_points(rng, 50, 2, 1.0)) < 1e-12


def test_curl_bump_radial_component_vanishes_outside(curl_bump):
    # *B . x integrates to zero on spheres; outside the support it is pointwise zero
    assert radial_projection_check(curl_bump, 2.0) == 0.0


def test_pullback_matches_cartesian_gauge(curl_bump):
    pot = spherical_pullback(poincare_gauge(curl_bump))
    ang = np.array([[0.7, 0.3], [1.9, 4.0], [2.5, 1.1]])
    r = 0.8
    from magheat.fields import sphere_point, sphere_tangents

    A = poincare_gauge(curl_bump)(r * sphere_point(ang))
    expect = np.einsum("pk,pmk->pm", A, sphere_tangents(ang)) * r
    np.testing.assert_allclose(pot(ang, r), expect, atol=1e-12)


def test_superpose_adds_flux():
    a = make_field(2, FieldSpec("radial-bump", flux=0.2))
    b = make_field(2, FieldSpec("radial-bump", flux=0.3, radius=0.5))
    assert abs(total_flux(superpose(a, b)).total_flux - 0.5) < 1e-10


@settings(max_examples=15, deadline=None)
@given(flux=st.floats(-3.0, 3.0), R=st.floats(0.2, 4.0))
def test_flux_preset_reproduces_request(flux, R):
    fld = make_field(2, FieldSpec("radial-bump", flux=flux, radius=R))
    assert math.isclose(float(flux_through_disc(fld, [2.0 * R])[0]), flux, abs_tol=1e-10)


def test_field_errors():
    with pytest.raises(FieldError):
        make_field(4, FieldSpec("radial-bump"))
    with pytest.raises(FieldError):
        make_field(3, FieldSpec("radial-bump"))
    with pytest.raises(FieldError):
        make_field(2, FieldSpec("radial-bump", radius=-1.0))
    with pytest.raises(FieldError):
        make_field(2, FieldSpec("two-bump", flux=1.0, centers=((2.0, 0.0), (0.0, 0.0))))
    with pytest.raises(FieldError):
        total_flux(make_field(3, FieldSpec("curl-bump")))
    with pytest.raises(FieldError):
        closedness_residual(make_field(3, FieldSpec("curl-bump")), np.zeros((0, 3)))
    with pytest.raises(FieldError):
        poincare_gauge(make_field(3, FieldSpec("curl-bump")), n_quad=2)


def test_sample_csv_header(curl_bump):
    text = sample_field_csv(curl_bump, poincare_gauge(curl_bump), fibonacci_sphere(4, 0.5))
    lines = text.splitlines()
    assert lines[0] == "x1,x2,x3,B12,B13,B23,A1,A2,A3"
    assert len(lines) == 5
