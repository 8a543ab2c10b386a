"""Lowest eigenvalue nu_B(r) of the magnetic Laplace-Beltrami operator on
S^1 and S^2.

Both discretisations are link (Peierls) schemes: the covariant difference
along a mesh edge from node ``a`` to node ``b`` is ``exp(-i alpha) g_b - g_a``
with ``alpha`` the line integral of the pulled-back potential along the edge.
The quadratic form is a weighted sum of squared covariant differences, so the
matrix is Hermitian and nonnegative by construction, a gauge change
``A -> A + df`` acts on it by a diagonal unitary, and an exact potential is
exactly gauged away up to the line-integral quadrature.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.sparse as sp

from .eigen import lowest_eigenpairs
from .fields import (
    MagneticField,
    SphericalPotential,
    dist_to_integers,
    flux_through_disc,
    poincare_gauge,
    spherical_pullback,
)

LINK_GAUSS = 4


def nu_circle_exact(flux_at_r) -> float | np.ndarray:
    """``dist(flux, Z)^2``, the lowest eigenvalue of (-i d/dtheta - flux)^2."""
    out = dist_to_integers(flux_at_r) ** 2
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class AngularMesh:
    """Cells and links of a mesh of S^1 or S^2 in angle coordinates.

    ``link_start``/``link_step`` describe each link as a straight segment in
    coordinates; ``link_weight`` multiplies the squared covariant difference
    and ``mass`` is the cell measure.
    """

    coords: np.ndarray = field(repr=False)
    link_a: np.ndarray = field(repr=False)
    link_b: np.ndarray = field(repr=False)
    link_weight: np.ndarray = field(repr=False)
    link_start: np.ndarray = field(repr=False)
    link_step: np.ndarray = field(repr=False)
    mass: np.ndarray = field(repr=False)
    shape: tuple = ()

    @property
    def size(self) -> int:
        return len(self.mass)


def circle_mesh(n_theta: int) -> AngularMesh:
    if n_theta < 8:
        raise ValueError(f"degenerate circle mesh {n_theta}")
    h = 2.0 * np.pi / n_theta
    nodes = h * np.arange(n_theta)
    idx = np.arange(n_theta)
    return AngularMesh(nodes[:, None], idx, (idx + 1) % n_theta, np.full(n_theta, 1.0 / h),
                       nodes[:, None], np.full((n_theta, 1), h), np.full(n_theta, h), (n_theta,))


def sphere_mesh(grid: tuple[int, int]) -> AngularMesh:
    """Latitude-longitude finite-volume mesh.

    Cells are centred at colatitudes ``(i + 1/2) pi / n_phi``; no unknown sits
    on a pole and the polar faces have zero length, so the first and last
    rings close the mesh without any special pole row.
    """
    n_phi, n_theta = grid
    if n_phi < 4 or n_theta < 8:
        raise ValueError(f"degenerate grid {grid}")
    dphi, dth = np.pi / n_phi, 2.0 * np.pi / n_theta
    phi = (np.arange(n_phi) + 0.5) * dphi
    th = np.arange(n_theta) * dth
    P, T = np.meshgrid(phi, th, indexing="ij")
    index = np.arange(n_phi * n_theta).reshape(n_phi, n_theta)
    coords = np.stack([P.ravel(), T.ravel()], axis=-1)
    # meridian links between rings i and i+1, then periodic parallel links
    a = np.concatenate([index[:-1].ravel(), index.ravel()])
    b = np.concatenate([index[1:].ravel(), np.roll(index, -1, axis=1).ravel()])
    w = np.concatenate([(np.sin(P[:-1] + 0.5 * dphi) * dth / dphi).ravel(), (dphi / (np.sin(P) * dth)).ravel()])
    start = np.concatenate([coords[: (n_phi - 1) * n_theta], coords])
    step = np.concatenate([np.tile([dphi, 0.0], ((n_phi - 1) * n_theta, 1)), np.tile([0.0, dth], (n_phi * n_theta, 1))])
    mass = ((np.cos(P - 0.5 * dphi) - np.cos(P + 0.5 * dphi)) * dth).ravel()
    return AngularMesh(coords, a, b, w, start, step, mass, (n_phi, n_theta))


def link_phases(mesh: AngularMesh, covariant, n_gauss: int = LINK_GAUSS) -> np.ndarray:
    """Line integrals of the covariant 1-form ``covariant(coords) -> (..., dim)`` along the links."""
    t, w = np.polynomial.legendre.leggauss(n_gauss)
    t, w = 0.5 * (t + 1.0), 0.5 * w
    pts = mesh.link_start[:, None, :] + t[None, :, None] * mesh.link_step[:, None, :]
    vals = covariant(pts)
    return np.einsum("lgm,g,lm->l", vals, w, mesh.link_step)


def assemble_links(n: int, a: np.ndarray, b: np.ndarray, weight: np.ndarray, phase: np.ndarray):
    """Sum over links of ``weight * |exp(-i phase) g_b - g_a|^2`` as a matrix."""
    u = np.exp(-1j * phase)
    rows = np.concatenate([a, b, a, b])
    cols = np.concatenate([a, b, b, a])
    vals = np.concatenate([weight, weight, -weight * u, -weight * np.conj(u)])
    return sp.csr_matrix((vals.astype(complex), (rows, cols)), shape=(n, n))


def angular_form(mesh: AngularMesh, covariant) -> sp.csr_matrix:
    return assemble_links(mesh.size, mesh.link_a, mesh.link_b, mesh.link_weight, link_phases(mesh, covariant))


@dataclass(frozen=True)
class CircleOperator:
    """(-i d/dtheta - A_theta)^2 on a uniform periodic grid."""

    n_theta: int
    potential_component: np.ndarray = field(repr=False)
    link_phases: np.ndarray = field(repr=False)
    matrix: sp.csr_matrix = field(repr=False)

    @property
    def spacing(self) -> float:
        return 2.0 * np.pi / self.n_theta

    def quadratic_form(self, g) -> float:
        g = np.asarray(g)
        return float(np.real(np.vdot(g, self.matrix @ g)))

    def lowest(self, k: int = 1) -> np.ndarray:
        return lowest_eigenpairs(self.matrix, None, k=k).values


def circle_operator(potential: SphericalPotential, r: float, n_theta: int) -> CircleOperator:
    """Matrix of the form sum_j |exp(-i alpha_j) g_{j+1} - g_j|^2 / h^2.

    ``alpha_j`` is the integral of A_theta over [theta_j, theta_{j+1}]; the
    eigenvalues are those of the operator (the mass is h times identity).
    """
    if potential.dimension != 2:
        raise ValueError("circle operator needs a potential on S^1")
    if n_theta < 32:
        raise ValueError("n_theta must be at least 32")
    mesh = circle_mesh(n_theta)
    h = mesh.mass[0]
    phases = link_phases(mesh, lambda x: potential(x, r))
    K = assemble_links(n_theta, mesh.link_a, mesh.link_b, mesh.link_weight / h, phases)
    return CircleOperator(n_theta, potential(mesh.coords, r)[:, 0], phases, K)


def nu_circle_numeric(potential: SphericalPotential, r: float, n_theta: int = 512) -> float:
    """Smallest eigenvalue of the discretised circle operator.

    The error against ``nu_circle_exact`` is O(n_theta^-2).
    """
    return float(circle_operator(potential, r, n_theta).lowest()[0])


@dataclass(frozen=True)
class SphereOperator:
    """Finite-volume magnetic Laplace-Beltrami form on a latitude-longitude mesh."""

    n_phi: int
    n_theta: int
    metric_weights: np.ndarray = field(repr=False)
    matrix: sp.csr_matrix = field(repr=False)

    @property
    def grid(self) -> tuple[int, int]:
        return self.n_phi, self.n_theta

    def mass(self):
        return sp.diags(self.metric_weights, format="csr")

    def quadratic_form(self, g) -> float:
        g = np.asarray(g)
        return float(np.real(np.vdot(g, self.matrix @ g)))

    def rayleigh_quotient(self, g) -> float:
        g = np.asarray(g)
        return self.quadratic_form(g) / float(np.real(np.vdot(g, self.metric_weights * g)))

    def lowest(self, k: int = 1) -> np.ndarray:
        return lowest_eigenpairs(self.matrix, self.metric_weights, k=k).values


def sphere_operator(potential: SphericalPotential, r: float, grid: tuple[int, int] = (24, 48)) -> SphereOperator:
    if potential.dimension != 3:
        raise ValueError("sphere operator needs a potential on S^2")
    mesh = sphere_mesh(grid)
    K = angular_form(mesh, lambda x: potential(x, r))
    return SphereOperator(grid[0], grid[1], mesh.mass, K)


def nu_sphere_numeric(potential: SphericalPotential, r: float, grid: tuple[int, int] = (24, 48)) -> float:
    if not r > 0.0:
        raise ValueError("radius must be positive")
    return float(sphere_operator(potential, r, grid).lowest()[0])


def exactness_check(potential: SphericalPotential, r: float, h: float = 1e-4,
                    grid: tuple[int, int] = (24, 48)) -> float:
    """max |d_phi A_theta - d_theta A_phi| by central differences on a grid.

    On S^1 there are no 2-forms and the residual is identically 0, even
    though a non-integer constant potential has nu > 0.
    """
    if potential.dimension == 2:
        return 0.0
    n_phi, n_theta = grid
    phi = (np.arange(n_phi) + 0.5) * np.pi / n_phi
    th = np.arange(n_theta) * 2.0 * np.pi / n_theta
    P, T = np.meshgrid(phi, th, indexing="ij")
    x = np.stack([P.ravel(), T.ravel()], axis=-1)
    ep, et = np.array([h, 0.0]), np.array([0.0, h])
    d_phi_At = (potential(x + ep, r)[:, 1] - potential(x - ep, r)[:, 1]) / (2.0 * h)
    d_th_Ap = (potential(x + et, r)[:, 0] - potential(x - et, r)[:, 0]) / (2.0 * h)
    return float(np.max(np.abs(d_phi_At - d_th_Ap)))


@dataclass(frozen=True)
class NuProfile:
    radii: np.ndarray
    values: np.ndarray
    nu_infinity: float
    method: str

    def to_csv(self) -> str:
        rows = ["r,nu"] + [f"{r!r},{v!r}" for r, v in zip(self.radii.tolist(), self.values.tolist())]
        return "\n".join(rows) + "\n"


def nu_profile(fld: MagneticField, radii: Sequence[float], resolution=None, method: str = "auto") -> NuProfile:
    """nu_B(r) over ``radii`` and the limit nu_B(inf).

    In the plane the exact formula is applied to the flux through D_r (this
    holds for non-radial fields too, the circle holonomy being the flux);
    ``method="numeric"`` uses the circle operator instead, with
    ``resolution`` = n_theta.  In space ``resolution`` is the (n_phi, n_theta)
    grid.  ``nu_infinity`` is read at the largest radius >= R, or at 2R when
    no such radius was requested.
    """
    radii = np.asarray(radii, dtype=float)
    if radii.ndim != 1 or np.any(radii <= 0.0) or np.any(np.diff(radii) < 0.0):
        raise ValueError("radii must be positive and sorted")
    R = fld.support_radius
    far = 2.0 * R if not np.any(radii >= R) else float(radii[radii >= R][-1])
    if fld.dimension == 2 and method in ("auto", "exact"):
        vals = nu_circle_exact(flux_through_disc(fld, np.append(radii, far)))
        used = "exact"
    else:
        pot = spherical_pullback(poincare_gauge(fld))
        if fld.dimension == 2:
            n = 512 if resolution is None else int(resolution)
            vals = np.array([nu_circle_numeric(pot, r, n) for r in np.append(radii, far)])
        else:
            grid = (24, 48) if resolution is None else tuple(resolution)
            vals = np.array([nu_sphere_numeric(pot, r, grid) for r in np.append(radii, far)])
        used = "numeric"
    vals = np.asarray(vals, dtype=float)
    return NuProfile(radii, vals[:-1], float(vals[-1]), used)
