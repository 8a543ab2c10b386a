# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels for symmetric tridiagonal pencils.

A pencil is stored as four arrays: ``kd``/``ko`` (diagonal and first
off-diagonal of the stiffness matrix) and ``md``/``mo`` (same for the mass
matrix).  Both matrices are real symmetric; the mass matrix is positive
definite.
"""
import numpy as np
cimport numpy as cnp

cnp.import_array()

ctypedef cnp.float64_t f64


def sturm_counts(const f64[::1] kd, const f64[::1] ko,
                 const f64[::1] md, const f64[::1] mo,
                 const f64[::1] shifts):
    """Number of generalized eigenvalues below each shift."""
    cdef Py_ssize_t n = kd.shape[0]
    cdef Py_ssize_t ns = shifts.shape[0]
    cdef Py_ssize_t i, j
    cdef f64 sigma, piv, b, tiny = 1e-300
    cdef long count
    out = np.zeros(ns, dtype=np.int64)
    cdef cnp.int64_t[::1] res = out
    for j in range(ns):
        sigma = shifts[j]
        count = 0
        piv = kd[0] - sigma * md[0]
        if piv < 0.0:
            count += 1
        for i in range(1, n):
            if piv == 0.0:
                piv = tiny
            b = ko[i - 1] - sigma * mo[i - 1]
            piv = kd[i] - sigma * md[i] - b * b / piv
            if piv < 0.0:
                count += 1
        res[j] = count
    return out


cdef void _thomas(f64[::1] lo, f64[::1] di, f64[::1] up, f64[:, ::1] rhs,
                  f64[::1] work) noexcept nogil:
    # in-place: rhs (n, k) is overwritten by the solution; lo/up have length n-1
    cdef Py_ssize_t n = di.shape[0]
    cdef Py_ssize_t k = rhs.shape[1]
    cdef Py_ssize_t i, c
    cdef f64 w, denom
    denom = di[0]
    work[0] = up[0] / denom if n > 1 else 0.0
    for c in range(k):
        rhs[0, c] = rhs[0, c] / denom
    for i in range(1, n):
        denom = di[i] - lo[i - 1] * work[i - 1]
        if i < n - 1:
            work[i] = up[i] / denom
        for c in range(k):
            rhs[i, c] = (rhs[i, c] - lo[i - 1] * rhs[i - 1, c]) / denom
    for i in range(n - 2, -1, -1):
        w = work[i]
        for c in range(k):
            rhs[i, c] = rhs[i, c] - w * rhs[i + 1, c]


def tridiag_solve(const f64[::1] lo, const f64[::1] di, const f64[::1] up,
                  rhs):
    """Solve a tridiagonal system for one or several right-hand sides."""
    b = np.array(rhs, dtype=np.float64, order="C", copy=True)
    squeeze = b.ndim == 1
    if squeeze:
        b = b[:, None]
    cdef f64[:, ::1] bv = b
    cdef f64[::1] work = np.empty(di.shape[0], dtype=np.float64)
    _thomas(np.asarray(lo).copy(), np.asarray(di).copy(),
            np.asarray(up).copy(), bv, work)
    return b[:, 0] if squeeze else b


def cn_step(const f64[::1] kd, const f64[::1] ko,
            const f64[::1] md, const f64[::1] mo,
            f64 ds, f64[:, ::1] v):
    """One Crank-Nicolson step of ``M v' = -K v`` applied in place to ``v``.

    ``v`` has shape (n, k); every column is advanced with the same pencil.
    """
    cdef Py_ssize_t n = kd.shape[0]
    cdef Py_ssize_t k = v.shape[1]
    cdef Py_ssize_t i, c
    cdef f64 h = 0.5 * ds
    lo_a = np.empty(max(n - 1, 1), dtype=np.float64)
    di_a = np.empty(n, dtype=np.float64)
    work_a = np.empty(n, dtype=np.float64)
    rhs_a = np.empty((n, k), dtype=np.float64)
    cdef f64[::1] lo = lo_a
    cdef f64[::1] di = di_a
    cdef f64[::1] work = work_a
    cdef f64[:, ::1] rhs = rhs_a
    with nogil:
        for i in range(n):
            di[i] = md[i] + h * kd[i]
            for c in range(k):
                rhs[i, c] = (md[i] - h * kd[i]) * v[i, c]
        for i in range(n - 1):
            lo[i] = mo[i] + h * ko[i]
            for c in range(k):
                rhs[i, c] += (mo[i] - h * ko[i]) * v[i + 1, c]
                rhs[i + 1, c] += (mo[i] - h * ko[i]) * v[i, c]
        _thomas(lo, di, lo, rhs, work)
        for i in range(n):
            for c in range(k):
                v[i, c] = rhs[i, c]
