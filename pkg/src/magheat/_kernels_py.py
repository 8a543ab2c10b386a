"""Pure-Python/numpy versions of the compiled kernels in ``_kernels.pyx``."""

import numpy as np
from scipy.linalg import solve_banded


def sturm_counts(kd, ko, md, mo, shifts):
    """Number of generalized eigenvalues below each shift.

    The LDL^T recurrence is sequential in the matrix index, so the loop runs
    over rows and is vectorized across shifts instead.
    """
    shifts = np.asarray(shifts, dtype=float)
    piv = kd[0] - shifts * md[0]
    count = (piv < 0).astype(np.int64)
    for i in range(1, len(kd)):
        piv = np.where(piv == 0.0, 1e-300, piv)
        b = ko[i - 1] - shifts * mo[i - 1]
        piv = kd[i] - shifts * md[i] - b * b / piv
        count += piv < 0
    return count


def tridiag_solve(lo, di, up, rhs):
    n = len(di)
    ab = np.zeros((3, n))
    ab[0, 1:] = up
    ab[1] = di
    ab[2, :-1] = lo
    return solve_banded((1, 1), ab, np.asarray(rhs, dtype=float))


def cn_step(kd, ko, md, mo, ds, v):
    h = 0.5 * ds
    rd, ro = md - h * kd, mo - h * ko
    rhs = rd[:, None] * v
    rhs[:-1] += ro[:, None] * v[1:]
    rhs[1:] += ro[:, None] * v[:-1]
    off = mo + h * ko
    v[...] = tridiag_solve(off, md + h * kd, off, rhs)
