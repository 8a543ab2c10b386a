"""Lowest eigenpairs of Hermitian pencils ``K x = lam M x``.

Sparse problems use shifted inverse (subspace) iteration on a sparse LU
factorisation; small problems go to LAPACK.  Symmetric tridiagonal pencils
have their own bisection routine driven by Sturm counts.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import kernels

DEFAULT_SHIFT = -0.1
DEFAULT_TOL = 1e-10
DEFAULT_MAXITER = 10_000
DENSE_MAX = 512


class EigenError(RuntimeError):
    """Raised when an iterative eigensolver does not converge."""


@dataclass(frozen=True)
class EigenResult:
    values: np.ndarray
    vectors: np.ndarray
    iterations: int
    residual: float
    method: str


def _as_mass(M, n):
    if M is None:
        return sp.identity(n, format="csr")
    if sp.issparse(M):
        return M.tocsr()
    M = np.asarray(M)
    if M.ndim == 1:
        return sp.diags(M, format="csr")
    return sp.csr_matrix(M)


def _backward_error(K, M, X, lam):
    R = K @ X - (M @ X) * lam
    knorm = spla.norm(K, 1) if sp.issparse(K) else np.linalg.norm(K, 1)
    mnorm = spla.norm(M, 1) if sp.issparse(M) else np.linalg.norm(M, 1)
    den = (knorm + np.abs(lam) * mnorm) * np.linalg.norm(X, axis=0)
    return float(np.max(np.linalg.norm(R, axis=0) / den))


def lowest_eigenpairs(K, M=None, k: int = 1, shift: float = DEFAULT_SHIFT, tol: float = DEFAULT_TOL,
                      maxiter: int = DEFAULT_MAXITER, dense_max: int = DENSE_MAX, seed: int = 0) -> EigenResult:
    """The ``k`` smallest eigenpairs of the Hermitian pencil (K, M).

    Parameters
    ----------
    K, M : sparse or dense Hermitian matrices; ``M`` positive definite,
        a 1-D array is read as a diagonal mass.  ``None`` means identity.
    k : number of eigenpairs.
    shift : shift of the inverse iteration; must lie below the spectrum.
    tol : bound on the normwise backward error of every returned pair.

    Returns
    -------
    EigenResult with ascending ``values`` and M-orthonormal ``vectors``.
    """
    K = sp.csr_matrix(K) if not sp.issparse(K) else K.tocsr()
    n = K.shape[0]
    M = _as_mass(M, n)
    if k < 1 or k > n:
        raise ValueError(f"k must be in [1, {n}]")
    if n <= dense_max:
        Kd, Md = K.toarray(), M.toarray()
        w, V = sla.eigh(Kd, Md, subset_by_index=[0, k - 1])
        return EigenResult(w, V, 0, _backward_error(Kd, Md, V, w), "dense")

    dtype = np.result_type(K.dtype, M.dtype, np.float64)
    lu = spla.splu((K - shift * M).tocsc().astype(dtype))
    p = min(n, k + 2)  # a couple of guard vectors speed up convergence
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, p)).astype(dtype)
    if np.iscomplexobj(X):
        X = X + 1j * rng.standard_normal((n, p))
    res = np.inf
    for it in range(1, maxiter + 1):
        Y = lu.solve(np.asarray(M @ X))
        # Rayleigh-Ritz in the M inner product
        Kp = Y.conj().T @ (K @ Y)
        Mp = Y.conj().T @ (M @ Y)
        Kp, Mp = 0.5 * (Kp + Kp.conj().T), 0.5 * (Mp + Mp.conj().T)
        w, C = sla.eigh(Kp, Mp)
        X = Y @ C
        res = _backward_error(K, M, X[:, :k], w[:k])
        if res < tol:
            return EigenResult(w[:k].real, X[:, :k], it, res, "inverse-iteration")
    raise EigenError(f"inverse iteration did not converge in {maxiter} iterations (backward error {res:.2e})")


def lowest_eigenvalue(K, M=None, **kw) -> float:
    return float(lowest_eigenpairs(K, M, k=1, **kw).values[0])


# ---------------------------------------------------------------------------
# symmetric tridiagonal pencils


@dataclass(frozen=True)
class TridiagonalPencil:
    """Real symmetric tridiagonal stiffness ``kd, ko`` and mass ``md, mo``."""

    kd: np.ndarray
    ko: np.ndarray
    md: np.ndarray
    mo: np.ndarray

    @property
    def size(self) -> int:
        return len(self.kd)

    def stiffness(self):
        return sp.diags([self.ko, self.kd, self.ko], [-1, 0, 1], format="csr")

    def mass(self):
        return sp.diags([self.mo, self.md, self.mo], [-1, 0, 1], format="csr")

    def count_below(self, shifts) -> np.ndarray:
        """Number of eigenvalues strictly below each shift."""
        shifts = np.ascontiguousarray(np.atleast_1d(shifts), dtype=float)
        return kernels.sturm_counts(self.kd, self.ko, self.md, self.mo, shifts)


def tridiagonal_eigenvalues(pencil: TridiagonalPencil, k: int, lower: float | None = None,
                            tol: float = 1e-13) -> np.ndarray:
    """The ``k`` smallest eigenvalues of a tridiagonal pencil by Sturm bisection.

    All ``k`` brackets are bisected together so each step is a single
    vectorised Sturm-count call.
    """
    if k < 1 or k > pencil.size:
        raise ValueError("k out of range")
    lo = -1.0 if lower is None else lower
    while pencil.count_below(np.array([lo]))[0] > 0:
        lo = 2.0 * lo - 1.0
    hi = 1.0
    while pencil.count_below(np.array([hi]))[0] < k:
        hi *= 2.0
        if hi > 1e300:
            raise EigenError("could not bracket the requested eigenvalues")
    a = np.full(k, lo)
    b = np.full(k, hi)
    idx = np.arange(k)
    for _ in range(200):
        mid = 0.5 * (a + b)
        c = pencil.count_below(mid)
        # eigenvalue idx lies below mid iff more than idx eigenvalues are below mid
        below = c > idx
        b = np.where(below, mid, b)
        a = np.where(below, a, mid)
        if np.all(b - a <= tol * np.maximum(1.0, np.abs(b))):
            break
    return 0.5 * (a + b)


def tridiagonal_eigenvector(pencil: TridiagonalPencil, value: float, iterations: int = 3) -> np.ndarray:
    """Eigenvector for a (bisected) eigenvalue by inverse iteration, M-normalised."""
    n = pencil.size
    eps = 1e-10 * max(1.0, abs(value))
    sigma = value - eps
    lo = pencil.ko - sigma * pencil.mo
    di = pencil.kd - sigma * pencil.md
    x = np.ones(n)
    M = pencil.mass()
    for _ in range(iterations):
        y = kernels.tridiag_solve(lo, di, lo, M @ x)
        x = y / np.sqrt(y @ (M @ y))
    return x if x[np.argmax(np.abs(x))] > 0 else -x
