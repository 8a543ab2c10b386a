"""Radial grids and the one-mode operators of the self-similar problem.

Every dimension is handled in the reduced variable ``g = rho^{(d-2)/2} phi``,
in which the mode operator
``-rho^{1-d} (rho^{d-1} phi')' + (nu - c_d)/rho^2 phi + rho^2/16 phi``
becomes the planar form

    q[g] = int (|g'|^2 + nu/rho^2 |g|^2 + rho^2/16 |g|^2) rho drho

with mass ``int |g|^2 rho drho``.  The form is discretised by continuous
piecewise-linear elements: natural boundary condition at ``rho_min`` and a
Dirichlet cut at ``rho_max``.  ``nu`` is constant on each element.
Being a Galerkin scheme, every discrete eigenvalue is an upper bound for
the corresponding eigenvalue of the form on the truncated interval.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .eigen import TridiagonalPencil, tridiagonal_eigenvalues, tridiagonal_eigenvector

DEFAULT_RHO_MIN = 1e-4
DEFAULT_RHO_MAX = 20.0
DEFAULT_NODES = 4000

_GL_T, _GL_W = np.polynomial.legendre.leggauss(6)
_GL_T, _GL_W = 0.5 * (_GL_T + 1.0), 0.5 * _GL_W


def hardy_constant(d: int) -> float:
    """c_d = ((d - 2)/2)^2."""
    return ((d - 2) / 2.0) ** 2


@dataclass(frozen=True)
class RadialGrid:
    """Nodes on [rho_min, rho_max], uniform or geometric."""

    rho_min: float = DEFAULT_RHO_MIN
    rho_max: float = DEFAULT_RHO_MAX
    n: int = DEFAULT_NODES
    spacing: str = "uniform"
    dimension: int = 2
    nodes: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if not 0.0 < self.rho_min < self.rho_max:
            raise ValueError("need 0 < rho_min < rho_max")
        if self.n < 3:
            raise ValueError("need at least 3 nodes")
        if self.spacing == "uniform":
            nodes = np.linspace(self.rho_min, self.rho_max, self.n)
        elif self.spacing == "geometric":
            nodes = np.geomspace(self.rho_min, self.rho_max, self.n)
        else:
            raise ValueError(f"unknown spacing {self.spacing!r}")
        object.__setattr__(self, "nodes", nodes)

    @property
    def weight(self) -> np.ndarray:
        return self.nodes ** (self.dimension - 1)

    @property
    def midpoints(self) -> np.ndarray:
        return 0.5 * (self.nodes[1:] + self.nodes[:-1])

    @property
    def free_nodes(self) -> np.ndarray:
        """Nodes carrying unknowns (all but the Dirichlet node at rho_max)."""
        return self.nodes[:-1]


def graded_grid(core: float, rho_min: float = 1e-8, rho_max: float = DEFAULT_RHO_MAX,
                n_geometric: int = 1200, n_uniform: int = 2000) -> np.ndarray:
    """Node array geometric on [rho_min, 1] and uniform on [1, rho_max].

    Used for reference computations that must resolve a shrinking core of
    radius ``core``; ``rho_min`` should sit well below it.
    """
    if not rho_min < core:
        raise ValueError("rho_min must be below the core radius")
    left = np.geomspace(rho_min, 1.0, n_geometric)
    right = np.linspace(1.0, rho_max, n_uniform)[1:]
    return np.concatenate([left, right])


@dataclass(frozen=True)
class _ElementIntegrals:
    """Per-element local matrices, split by coefficient."""

    stiff: np.ndarray  # int rho drho / h^2, multiplies [[1,-1],[-1,1]]
    inv: np.ndarray  # (3,) x nel: int N_a N_b / rho for (aa, ab, bb)
    quart: np.ndarray  # (3,) x nel: int N_a N_b rho^3 / 16
    mass: np.ndarray  # (3,) x nel: int N_a N_b rho


def _element_integrals(x: np.ndarray) -> _ElementIntegrals:
    a, b = x[:-1], x[1:]
    h = b - a
    stiff = 0.5 * (a + b) / h

    # int N_a N_b / rho: closed form with logs near the origin, Gauss elsewhere
    inv = np.empty((3, len(h)))
    near = a < 10.0 * h
    if np.any(near):
        an, bn, hn = a[near], b[near], h[near]
        L = np.log(bn / an)
        q = 0.5 * (bn * bn - an * an)
        inv[0, near] = (bn * bn * L - 2.0 * bn * hn + q) / hn**2
        inv[1, near] = (-q + (an + bn) * hn - an * bn * L) / hn**2
        inv[2, near] = (q - 2.0 * an * hn + an * an * L) / hn**2
    far = ~near
    rho = a[far, None] + h[far, None] * _GL_T
    Na, Nb = 1.0 - _GL_T, _GL_T
    wh = h[far, None] * _GL_W
    inv[0, far] = np.sum(wh * Na * Na / rho, axis=1)
    inv[1, far] = np.sum(wh * Na * Nb / rho, axis=1)
    inv[2, far] = np.sum(wh * Nb * Nb / rho, axis=1)

    rho = a[:, None] + h[:, None] * _GL_T
    wq = h[:, None] * _GL_W * rho**3 / 16.0
    Na, Nb = 1.0 - _GL_T, _GL_T
    quart = np.stack([np.sum(wq * Na * Na, 1), np.sum(wq * Na * Nb, 1), np.sum(wq * Nb * Nb, 1)])
    mass = np.stack([h * (3 * a + b) / 12.0, h * (a + b) / 12.0, h * (a + 3 * b) / 12.0])
    return _ElementIntegrals(stiff, inv, quart, mass)


def _scatter(loc: np.ndarray):
    """Global (diag, offdiag) of a P1 assembly from local (aa, ab, bb)."""
    nel = loc.shape[1]
    diag = np.zeros(nel + 1)
    diag[:-1] += loc[0]
    diag[1:] += loc[2]
    return diag, loc[1].copy()


class ModeAssembler:
    """Fast assembly of the pencil for many element-wise ``nu`` profiles on one grid.

    The stiffness is affine in ``nu``: ``K(nu) = K0 + sum_e nu_e K_e``, so only
    the ``nu`` part is rebuilt per call.  The Dirichlet node is dropped.
    """

    def __init__(self, nodes: np.ndarray):
        x = np.asarray(nodes, dtype=float)
        if np.any(np.diff(x) <= 0.0) or x[0] <= 0.0:
            raise ValueError("nodes must be positive and strictly increasing")
        self.nodes = x
        ei = _element_integrals(x)
        self._inv = ei.inv
        sd, so = _scatter(np.stack([ei.stiff, -ei.stiff, ei.stiff]))
        qd, qo = _scatter(ei.quart)
        md, mo = _scatter(ei.mass)
        self.k0d, self.k0o = (sd + qd)[:-1], (so + qo)[:-1]
        self.md, self.mo = md[:-1], mo[:-1]

    @property
    def n_elements(self) -> int:
        return len(self.nodes) - 1

    @property
    def midpoints(self) -> np.ndarray:
        return 0.5 * (self.nodes[1:] + self.nodes[:-1])

    def nu_part(self, nu_e) -> tuple[np.ndarray, np.ndarray]:
        nu_e = np.broadcast_to(np.asarray(nu_e, dtype=float), (self.n_elements,))
        d, o = _scatter(self._inv * nu_e)
        return d[:-1], o[:-1]

    def stiffness(self, nu_e) -> tuple[np.ndarray, np.ndarray]:
        d, o = self.nu_part(nu_e)
        return self.k0d + d, self.k0o + o

    def pencil(self, nu_e) -> TridiagonalPencil:
        kd, ko = self.stiffness(nu_e)
        return TridiagonalPencil(kd, ko, self.md, self.mo)


@dataclass(frozen=True)
class ModeOperator:
    """One angular mode of the (scaled) self-similar operator.

    ``nu_profile(rho)`` is the effective angular eigenvalue, e.g.
    ``(m - Phi_B(e^{s/2} rho))^2`` for a planar radial field, or a constant
    for model problems.  It is sampled at element midpoints.
    """

    dimension: int
    grid: np.ndarray = field(repr=False)
    nu_profile: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    pencil: TridiagonalPencil = field(repr=False)
    label: tuple = ()

    def mode_potential(self, rho) -> np.ndarray:
        """V(rho) = (nu - c_d)/rho^2 + rho^2/16 in the original radial variable."""
        rho = np.asarray(rho, dtype=float)
        return (self.nu_profile(rho) - hardy_constant(self.dimension)) / rho**2 + rho**2 / 16.0

    def eigenvalues(self, k: int) -> np.ndarray:
        return tridiagonal_eigenvalues(self.pencil, k)

    def eigenvector(self, k: int = 1) -> np.ndarray:
        """k-th eigenfunction in the original variable phi at the free nodes."""
        lam = self.eigenvalues(k)[-1]
        g = tridiagonal_eigenvector(self.pencil, lam)
        return g * self.grid[:-1] ** (-(self.dimension - 2) / 2.0)

    def rayleigh_quotient(self, phi_values) -> float:
        """q[phi]/||phi||^2 for nodal values of phi at the free nodes."""
        g = np.asarray(phi_values, dtype=float) * self.grid[:-1] ** ((self.dimension - 2) / 2.0)
        K, M = self.pencil.stiffness(), self.pencil.mass()
        return float(g @ (K @ g)) / float(g @ (M @ g))


def _nu_callable(nu) -> Callable[[np.ndarray], np.ndarray]:
    if callable(nu):
        return nu
    value = float(nu)
    if value < 0.0:
        raise ValueError("nu must be nonnegative")
    return lambda rho: np.full(np.shape(rho), value)


def mode_operator(nu, dimension: int = 2, grid: RadialGrid | np.ndarray | None = None,
                  assembler: ModeAssembler | None = None, label: tuple = ()) -> ModeOperator:
    """Assemble the mode operator for a constant or rho-dependent ``nu``."""
    if dimension not in (2, 3):
        raise ValueError("dimension must be 2 or 3")
    if assembler is None:
        if grid is None:
            grid = RadialGrid(dimension=dimension)
        nodes = grid.nodes if isinstance(grid, RadialGrid) else np.asarray(grid, dtype=float)
        assembler = ModeAssembler(nodes)
    f = _nu_callable(nu)
    nu_e = f(assembler.midpoints)
    if np.any(nu_e < 0.0):
        raise ValueError("nu must be nonnegative")
    return ModeOperator(dimension, assembler.nodes, f, assembler.pencil(nu_e), label)
