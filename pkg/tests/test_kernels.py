import os
import subprocess
import sys

import numpy as np
import pytest
import scipy.linalg as sla
from hypothesis import given, settings
from hypothesis import strategies as st

from magheat import _kernels_py, kernels

try:
    from magheat import _kernels as _kernels_cy
except ImportError:  # extension not built
    _kernels_cy = None

IMPLS = [pytest.param(_kernels_py, id="python")]
if _kernels_cy is not None:
    IMPLS.append(pytest.param(_kernels_cy, id="cython"))


def random_pencil(rng, n):
    """SPD tridiagonal stiffness and mass with diagonally dominant rows."""
    ko = rng.uniform(-1.0, 1.0, n - 1)
    kd = np.abs(np.r_[ko, 0.0]) + np.abs(np.r_[0.0, ko]) + rng.uniform(0.1, 2.0, n)
    mo = rng.uniform(0.0, 0.2, n - 1)
    md = 1.0 + rng.uniform(0.0, 0.5, n)
    return kd, ko, md, mo


def dense(d, o):
    return np.diag(d) + np.diag(o, 1) + np.diag(o, -1)


@pytest.mark.parametrize("impl", IMPLS)
@settings(max_examples=30, deadline=None)
@given(n=st.integers(3, 40), seed=st.integers(0, 2**31))
def test_sturm_counts_match_dense_spectrum(impl, n, seed):
    rng = np.random.default_rng(seed)
    kd, ko, md, mo = random_pencil(rng, n)
    w = sla.eigh(dense(kd, ko), dense(md, mo), eigvals_only=True)
    # shifts halfway between eigenvalues avoid ties
    mids = 0.5 * (w[1:] + w[:-1])
    shifts = np.ascontiguousarray(np.r_[w[0] - 1.0, mids, w[-1] + 1.0])
    counts = impl.sturm_counts(kd, ko, md, mo, shifts)
    np.testing.assert_array_equal(counts, np.arange(n + 1))


@pytest.mark.parametrize("impl", IMPLS)
def test_tridiag_solve(impl, rng):
    n = 200
    kd, ko, _, _ = random_pencil(rng, n)
    lo = ko + rng.uniform(-0.1, 0.1, n - 1)
    rhs = rng.normal(size=n)
    x = impl.tridiag_solve(np.ascontiguousarray(lo), kd, np.ascontiguousarray(ko), rhs)
    A = np.diag(kd) + np.diag(ko, 1) + np.diag(lo, -1)
    np.testing.assert_allclose(A @ x, rhs, atol=1e-12)


@pytest.mark.parametrize("impl", IMPLS)
def test_cn_step_matches_dense_formula(impl, rng):
    n, ds = 60, 0.05
    kd, ko, md, mo = random_pencil(rng, n)
    v = np.ascontiguousarray(rng.normal(size=(n, 3)))
    K, M = dense(kd, ko), dense(md, mo)
    expect = np.linalg.solve(M + 0.5 * ds * K, (M - 0.5 * ds * K) @ v)
    impl.cn_step(kd, ko, md, mo, ds, v)
    np.testing.assert_allclose(v, expect, rtol=1e-12, atol=1e-13)


@pytest.mark.skipif(_kernels_cy is None, reason="compiled extension not built")
@settings(max_examples=20, deadline=None)
@given(n=st.integers(3, 300), seed=st.integers(0, 2**31))
def test_backends_agree(n, seed):
    rng = np.random.default_rng(seed)
    kd, ko, md, mo = random_pencil(rng, n)
    shifts = np.ascontiguousarray(rng.uniform(-1.0, 10.0, 17))
    np.testing.assert_array_equal(_kernels_cy.sturm_counts(kd, ko, md, mo, shifts),
                                  _kernels_py.sturm_counts(kd, ko, md, mo, shifts))
    v1 = np.ascontiguousarray(rng.normal(size=(n, 2)))
    v2 = v1.copy()
    _kernels_cy.cn_step(kd, ko, md, mo, 1e-3, v1)
    _kernels_py.cn_step(kd, ko, md, mo, 1e-3, v2)
    np.testing.assert_allclose(v1, v2, rtol=1e-12, atol=1e-14)


def test_backend_selection():
    assert kernels.BACKEND in ("cython", "python")
    if _kernels_cy is not None:
        assert kernels.BACKEND == "cython"
    env = dict(os.environ, MAGHEAT_PURE="1")
    out = subprocess.run([sys.executable, "-c", "import magheat; print(magheat.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"
