"""Spectra of the harmonic-oscillator-type operators L, L_s and L_infinity.

For a radial planar field the angular modes ``e^{i m theta}`` decouple and the
mode ``m`` sees ``nu_eff(rho, s) = (m - Phi_B(e^{s/2} rho))^2``.  The lowest
eigenvalue over all modes is ``lambda_B(s)``; its limit is governed by
``nu_eff = dist(Phi_B, Z)^2`` near the origin.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.linalg as sla
import scipy.sparse.linalg as spla

from . import kernels
from .fields import FluxProfile, MagneticField, total_flux
from .radial import ModeAssembler, RadialGrid, mode_operator


@dataclass(frozen=True)
class SpectrumResult:
    eigenvalues: np.ndarray
    mode_labels: list
    method: str

    def to_csv(self) -> str:
        rows = ["n,l,lambda"] + [f"{n},{l},{lam!r}" for (n, l), lam in zip(self.mode_labels, self.eigenvalues.tolist())]
        return "\n".join(rows) + "\n"


def _sorted(values, labels, method) -> SpectrumResult:
    order = np.argsort(values, kind="stable")
    return SpectrumResult(np.asarray(values, dtype=float)[order], [labels[i] for i in order], method)


def angular_eigenvalue(d: int, ell: int) -> float:
    """l (l + d - 2), the l-th eigenvalue of the Laplacian on S^{d-1}."""
    return float(ell * (ell + d - 2))


def sigma_L_exact(d: int, n_max: int, l_max: int) -> SpectrumResult:
    """n + (1 + sqrt(l (l + d - 2)))/2 for 0 <= n <= n_max, 0 <= l <= l_max."""
    if n_max < 0 or l_max < 0:
        raise ValueError("n_max and l_max must be nonnegative")
    vals, labels = [], []
    for ell in range(l_max + 1):
        root = math.sqrt(angular_eigenvalue(d, ell))
        for n in range(n_max + 1):
            vals.append(n + 0.5 * (1.0 + root))
            labels.append((n, ell))
    return _sorted(vals, labels, "exact")


def sigma_L_infinity_exact(nu_list: Sequence[float], n_max: int) -> SpectrumResult:
    """n + (1 + sqrt(nu_l))/2 for the given limiting angular eigenvalues."""
    nu = np.asarray(nu_list, dtype=float)
    if np.any(nu < 0.0):
        raise ValueError("angular eigenvalues must be nonnegative")
    vals, labels = [], []
    for ell, v in enumerate(nu):
        for n in range(n_max + 1):
            vals.append(n + 0.5 * (1.0 + math.sqrt(v)))
            labels.append((n, ell))
    return _sorted(vals, labels, "exact")


def sigma_L_numeric(d: int, n_max: int, l_max: int, grid: RadialGrid | None = None) -> SpectrumResult:
    """Same enumeration as :func:`sigma_L_exact` from the radial mode solver."""
    grid = grid or RadialGrid(dimension=d)
    assembler = ModeAssembler(grid.nodes)
    vals, labels = [], []
    for ell in range(l_max + 1):
        op = mode_operator(angular_eigenvalue(d, ell), d, assembler=assembler)
        for n, lam in enumerate(op.eigenvalues(n_max + 1)):
            vals.append(lam)
            labels.append((n, ell))
    return _sorted(vals, labels, "numeric")


def laguerre_eval(n: int, alpha: float, x):
    """Generalised Laguerre polynomial L_n^alpha(x) by the three-term recurrence."""
    if n < 0:
        raise ValueError("degree must be nonnegative")
    x = np.asarray(x, dtype=float)
    prev = np.ones_like(x)
    if n == 0:
        return prev if prev.ndim else float(prev)
    cur = 1.0 + alpha - x
    for k in range(1, n):
        prev, cur = cur, ((2 * k + 1 + alpha - x) * cur - (k + alpha) * prev) / (k + 1)
    return cur if cur.ndim else float(cur)


def eigenfunction_radial(n: int, nu: float, d: int, rho):
    """rho^{-(d-2)/2} rho^{sqrt(nu)} exp(-rho^2/8) L_n^{sqrt(nu)}(rho^2/4).

    Eigenfunction of the mode operator with eigenvalue n + (1 + sqrt(nu))/2.
    """
    if nu < 0.0:
        raise ValueError("nu must be nonnegative")
    rho = np.asarray(rho, dtype=float)
    a = math.sqrt(nu)
    return rho ** (a - (d - 2) / 2.0) * np.exp(-rho * rho / 8.0) * laguerre_eval(n, a, rho * rho / 4.0)


def mode_eigenvalue(op, k: int) -> float:
    """k-th smallest eigenvalue (k >= 1) of a mode operator."""
    if k < 1:
        raise ValueError("k must be >= 1")
    return float(op.eigenvalues(k)[-1])


# ---------------------------------------------------------------------------
# lambda_B(s) for radial planar fields


def default_m_range(flux: float) -> int:
    return int(math.ceil(abs(flux))) + 3


def scaled_nu(flux: FluxProfile, m: int, s: float):
    """rho -> (m - Phi_B(e^{s/2} rho))^2."""
    scale = math.exp(0.5 * s)

    def nu(rho):
        return (m - flux(scale * np.asarray(rho, dtype=float))) ** 2

    return nu


def limit_nu(flux: FluxProfile, m: int):
    value = (m - flux.total_flux) ** 2
    return lambda rho: np.full(np.shape(rho), value)


def _require_radial(field: MagneticField):
    if field.dimension != 2 or not field.radial_flag:
        raise ValueError("needs a radial planar field")


@dataclass(frozen=True)
class LambdaResult:
    s: float
    value: float
    argmin_mode: int
    per_mode: dict


def lambda_B_of_s(field: MagneticField, s: float, m_range: int | None = None,
                  grid: RadialGrid | np.ndarray | None = None, flux: FluxProfile | None = None,
                  assembler: ModeAssembler | None = None, detail: bool = False):
    """min over |m| <= m_range of the lowest eigenvalue of mode m of L_s.

    Raises if the minimising mode sits at the edge of the range.
    """
    _require_radial(field)
    flux = flux or total_flux(field)
    needed = int(math.ceil(abs(flux.total_flux))) + 2
    if m_range is None:
        m_range = default_m_range(flux.total_flux)
    if m_range < needed:
        raise ValueError(f"m_range must be at least {needed}")
    if assembler is None:
        nodes = (grid or RadialGrid()).nodes if not isinstance(grid, np.ndarray) else grid
        assembler = ModeAssembler(nodes)
    per_mode = {}
    for m in range(-m_range, m_range + 1):
        nu = scaled_nu(flux, m, s) if np.isfinite(s) else limit_nu(flux, m)
        per_mode[m] = mode_eigenvalue(mode_operator(nu, 2, assembler=assembler), 1)
    m_best = min(per_mode, key=per_mode.get)
    if abs(m_best) == m_range:
        raise ValueError(f"minimising mode {m_best} lies on the edge of the mode range")
    res = LambdaResult(s, per_mode[m_best], m_best, per_mode)
    return res if detail else res.value


def lambda_curve(field: MagneticField, s_values: Sequence[float], m_range: int | None = None,
                 grid: RadialGrid | np.ndarray | None = None) -> np.ndarray:
    flux = total_flux(field)
    nodes = grid.nodes if isinstance(grid, RadialGrid) else (RadialGrid().nodes if grid is None else grid)
    asm = ModeAssembler(nodes)
    return np.array([lambda_B_of_s(field, s, m_range, flux=flux, assembler=asm) for s in s_values])


def curve_to_csv(s_values, lam_values) -> str:
    rows = ["s,lambda_B"] + [f"{s!r},{v!r}" for s, v in zip(np.asarray(s_values).tolist(), np.asarray(lam_values).tolist())]
    return "\n".join(rows) + "\n"


# ---------------------------------------------------------------------------
# resolvent diagnostic


def resolvent_grid() -> np.ndarray:
    """Geometric nodes on [1e-6, 20]; resolves cores down to e^{-s/2} at s = 16."""
    return RadialGrid(1e-6, 20.0, 1200, "geometric").nodes


class _MassFactor:
    """M = C C^T for the tridiagonal P1 mass, C lower bidiagonal."""

    def __init__(self, md, mo):
        ab = np.zeros((2, len(md)))
        ab[0] = md
        ab[1, :-1] = mo
        c = sla.cholesky_banded(ab, lower=True)
        self.diag, self.sub = c[0], c[1, :-1]

    def apply(self, x):  # C x
        y = self.diag * x
        y[1:] += self.sub * x[:-1]
        return y

    def apply_t(self, x):  # C^T x
        y = self.diag * x
        y[:-1] += self.sub * x[1:]
        return y


def inverse_difference_norm(assembler: ModeAssembler, nu_a, nu_b, tol: float = 1e-10) -> float:
    """||K_a^{-1} M - K_b^{-1} M|| in the L^2(rho drho) norm.

    The operator is self-adjoint in the M inner product, so its norm is the
    largest |eigenvalue| of C^T (K_a^{-1} - K_b^{-1}) C with M = C C^T,
    found by Lanczos.
    """
    ka, kao = assembler.stiffness(nu_a)
    kb, kbo = assembler.stiffness(nu_b)
    mf = _MassFactor(assembler.md, assembler.mo)
    n = len(ka)

    def matvec(x):
        x = np.ravel(x)
        cx = mf.apply(x)
        diff = kernels.tridiag_solve(kao, ka, kao, cx) - kernels.tridiag_solve(kbo, kb, kbo, cx)
        return mf.apply_t(diff)

    if np.array_equal(ka, kb) and np.array_equal(kao, kbo):
        return 0.0
    op = spla.LinearOperator((n, n), matvec=matvec, dtype=float)
    w = spla.eigsh(op, k=1, which="LM", tol=tol, return_eigenvectors=False, v0=np.ones(n))
    return float(abs(w[0]))


def resolvent_convergence(field: MagneticField, s_list: Sequence[float], grid: np.ndarray | RadialGrid | None = None,
                          m_range: int | None = None) -> np.ndarray:
    """max over modes of ||L_s^{-1} - L_inf^{-1}|| for each s."""
    _require_radial(field)
    flux = total_flux(field)
    if m_range is None:
        m_range = default_m_range(flux.total_flux)
    if grid is None:
        nodes = resolvent_grid()
    else:
        nodes = grid.nodes if isinstance(grid, RadialGrid) else np.asarray(grid, dtype=float)
    asm = ModeAssembler(nodes)
    mid = asm.midpoints
    out = []
    for s in s_list:
        gaps = []
        for m in range(-m_range, m_range + 1):
            gaps.append(inverse_difference_norm(asm, scaled_nu(flux, m, s)(mid), limit_nu(flux, m)(mid)))
        out.append(max(gaps))
    return np.array(out)


def resolvent_to_csv(s_list, gaps) -> str:
    rows = ["s,resolvent_gap"] + [f"{s!r},{g!r}" for s, g in zip(np.asarray(s_list).tolist(), np.asarray(gaps).tolist())]
    return "\n".join(rows) + "\n"
