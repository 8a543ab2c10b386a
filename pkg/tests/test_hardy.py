import numpy as np
import pytest
from scipy.integrate import quad
from scipy.special import j0, j1

from magheat.fields import FieldSpec, make_field, poincare_gauge
from magheat.hardy import (
    R_OUT_FACTOR,
    HardyMesh,
    HypothesisError,
    a_R,
    aux1_ratio,
    aux2_ratio_log,
    aux_inequality_check,
    bessel_j0_first_zero,
    constants_to_csv,
    diamagnetic_check,
    diamagnetic_sides,
    free_hardy_minimizing_sequence,
    free_hardy_quotient_3d,
    hardy_constant,
    lw_trial_quotient,
    mu_B,
    mu_B_curve,
    mu_curve_to_csv,
    random_free_hardy_quotients,
)


def planar(flux, preset="radial-bump"):
    return make_field(2, FieldSpec(preset, flux=flux))


@pytest.mark.parametrize("R", [1.0, 2.0, 4.0])
def test_mu_zero_field(zero_field, R):
    assert abs(mu_B(zero_field, R).constant) <= 1e-8


def test_mu_zero_field_fv_and_3d(curl_bump):
    assert abs(mu_B(None, 2.0, potential=lambda x: np.zeros_like(x), dimension=3).constant) <= 1e-8
    assert abs(mu_B(planar(0.0), 2.0, method="fv").constant) <= 1e-8


def test_mu_positive_for_half_flux(radial_half):
    assert mu_B(radial_half, 2.0).constant > 1e-3


def test_mu_curl_bump_positive(curl_bump):
    assert mu_B(curl_bump, 2.0).constant > 1e-4


def test_mu_scales_like_flux_squared():
    # small fields: mu_B(eps B) ~ eps^2 mu_B(B)
    vals = np.array([mu_B(planar(f), 2.0).constant for f in (0.5, 0.25, 0.125)])
    ratios = vals[:-1] / vals[1:]
    assert np.all((ratios > 3.6) & (ratios < 4.4))


def test_galerkin_monotone_under_refinement(radial_half):
    vals = [mu_B(radial_half, 2.0, HardyMesh(n, 2 * n)).constant for n in (16, 32, 64)]
    assert vals[0] >= vals[1] >= vals[2]
    assert vals[0] - vals[2] < 1e-3


def test_fv_and_galerkin_agree(two_bump):
    g = mu_B(two_bump, 2.0, HardyMesh(64, 128), method="galerkin").constant
    f = mu_B(two_bump, 2.0, HardyMesh(64, 128), method="fv").constant
    assert abs(g - f) < 1e-3 * g


def test_mu_gauge_invariance(radial_half):
    A = poincare_gauge(radial_half)

    def shifted(x):
        x = np.asarray(x, dtype=float)
        grad = np.stack([np.cos(x[..., 0]) * np.cos(2.0 * x[..., 1]),
                         -2.0 * np.sin(x[..., 0]) * np.sin(2.0 * x[..., 1])], axis=-1)
        return A(x) + grad

    mesh = HardyMesh(32, 64)
    base = mu_B(radial_half, 2.0, mesh, potential=A, method="fv").constant
    moved = mu_B(radial_half, 2.0, mesh, potential=shifted, method="fv").constant
    assert abs(base - moved) < 1e-4


def test_log_constant_stable_at_default_truncation(radial_half):
    est = hardy_constant(radial_half, "log")
    assert est.truncation == R_OUT_FACTOR
    assert est.constant > 0.0
    assert est.sensitivity < 0.1 * est.constant


def test_log_constant_without_field_decays_with_truncation(zero_field):
    # no Hardy inequality for B = 0: the truncated estimate drifts to zero like 1/log r_out
    vals = [hardy_constant(zero_field, "log", r_out=r).constant for r in (10.0, 40.0)]
    assert vals[1] < 0.75 * vals[0]


def test_lw_constant(radial_half):
    est = hardy_constant(radial_half, "lw")
    assert est.constant >= est.mean_bound
    assert est.constant >= est.lower_bound > 0.0
    # the truncated value overestimates the constant, which never exceeds nu_B(inf) = 1/4
    assert est.constant > lw_trial_quotient(0.5, 12.0, 120.0, n=600)


def test_lw_trial_quotient_tends_to_nu():
    vals = [lw_trial_quotient(0.5, s, 10.0 * s, n=600) for s in (2.0, 6.0, 20.0)]
    assert vals[0] > vals[1] > vals[2] > 0.25
    assert vals[2] - 0.25 < 1e-3


def test_lw_requires_non_integer_flux(curl_bump):
    with pytest.raises(HypothesisError):
        hardy_constant(planar(1.0), "lw")
    with pytest.raises(HypothesisError):
        hardy_constant(curl_bump, "lw")
    with pytest.raises(ValueError):
        hardy_constant(planar(0.5), "log", r_out=5.0)
    with pytest.raises(ValueError):
        hardy_constant(planar(0.5), "other")


def test_a_R_against_grid():
    rs = np.linspace(1e-4, 1.0, 200001)[:-1]
    brute = np.min((1.0 + rs**2) / (1.0 + rs**2 * np.log(rs) ** 2))
    assert abs(a_R(1.0) - brute) < 1e-8


def test_j0_zero_and_equality_case():
    z = bessel_j0_first_zero()
    assert abs(j0(z)) < 1e-15
    r0 = 1.5

    def f(r):
        return j0(z * r / r0)

    def df(r):
        return -z / r0 * j1(z * r / r0)

    assert abs(aux1_ratio(f, df, r0, n=64) - (z / r0) ** 2) < 1e-10


def test_aux2_polynomial_quotient():
    # g = s (L - s): int g'^2 ds = int g^2/s^2 ds = L^3/3
    L = 3.0

    def g(s):
        return s * (L - s)

    def dg(s):
        return L - 2.0 * s

    assert abs(aux2_ratio_log(g, dg, L, n=64) - 1.0) < 1e-12


def test_aux_inequalities_over_random_trials():
    res = aux_inequality_check(1.0, trial_count=1000, seed=0)
    assert res.passed
    assert res.worst_aux1 >= res.gamma_aux1
    assert res.worst_aux2 >= 0.25
    with pytest.raises(ValueError):
        aux_inequality_check(-1.0)


def test_diamagnetic_gaussian_oracle(radial_half, rng):
    # psi = exp(-|x|^2) is real: |grad|psi|| = 2|x| psi and |(grad - iA) psi| = sqrt(4|x|^2 + |A|^2) psi
    A = poincare_gauge(radial_half)
    x = rng.uniform(-2.0, 2.0, (50, 2))

    def psi(p):
        return np.exp(-np.sum(p * p, axis=-1)).astype(complex)

    lhs, rhs = diamagnetic_sides(A, psi, x)
    g = np.exp(-np.sum(x * x, axis=1))
    r = np.linalg.norm(x, axis=1)
    a2 = np.sum(A(x) ** 2, axis=1)
    np.testing.assert_allclose(rhs, 2.0 * r * g, atol=1e-9)
    np.testing.assert_allclose(lhs, np.sqrt(4.0 * r * r + a2) * g, atol=1e-9)


@pytest.mark.parametrize("name", ["radial_half", "two_bump", "curl_bump"])
def test_diamagnetic_random(name, request):
    fld = request.getfixturevalue(name)
    assert diamagnetic_check(poincare_gauge(fld), trial_count=1000, seed=1) <= 1e-6


def test_free_hardy_3d():
    seq = free_hardy_minimizing_sequence()
    assert np.all(np.diff(seq) < 0.0)
    assert abs(seq[-1] - 0.25) < 0.05 * 0.25
    assert np.min(random_free_hardy_quotients(100, seed=0)) >= 0.25 * 0.95

    # quotient of a smooth radial profile against adaptive quadrature
    def psi(r):
        return np.exp(-r) / (1.0 + r)

    def dpsi(r):
        return -np.exp(-r) / (1.0 + r) - np.exp(-r) / (1.0 + r) ** 2

    num = quad(lambda r: dpsi(r) ** 2 * r * r, 1e-6, 60.0, epsabs=1e-14)[0]
    den = quad(lambda r: psi(r) ** 2, 1e-6, 60.0, epsabs=1e-14)[0]
    assert abs(free_hardy_quotient_3d(psi, dpsi, 1e-6, 60.0) - num / den) < 1e-9


def test_csv_outputs(radial_half):
    radii = [0.5, 1.0]
    vals = mu_B_curve(radial_half, radii, HardyMesh(8, 16))
    assert mu_curve_to_csv(radii, vals).splitlines()[0] == "R,mu_B"
    text = constants_to_csv([mu_B(radial_half, 1.0, HardyMesh(8, 16))])
    assert text.splitlines()[0] == "weight_kind,constant,truncation,sensitivity"
