"""Numerical Hardy constants for magnetic Dirichlet forms.

All forms are handled in Weidl variables ``g = |x|^{(d-2)/2} psi`` in polar or
spherical coordinates, where the measure ``|x|^{-(d-2)} dx = r dr dsigma``
turns every dimension into a planar-looking problem:

    int |(grad - iA) psi|^2 - c_d int |psi|^2/|x|^2
        = int (|g_r|^2 + r^-2 |(d' - i A_sigma) g|^2) r dr dsigma.

The mesh is a tensor product of radial finite-volume cells with an angular
link mesh; magnetic phases are line integrals of the Cartesian potential
along every link, so any gauge can be used.  Global constants are computed
in ``t = log r`` where the form reads ``int |g_t|^2 + |(d' - iA) g|^2 dt``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.sparse as sp
from scipy.interpolate import BSpline
from scipy.optimize import brentq, minimize_scalar
from scipy.special import j0

from .eigen import lowest_eigenpairs
from .fields import MagneticField, sphere_point, sphere_tangents, total_flux
from .sphere import LINK_GAUSS, AngularMesh, assemble_links, circle_mesh, nu_circle_exact, sphere_mesh

WEIGHT_KINDS = ("none", "log", "lw")
R_MIN_GLOBAL = 1e-3
R_OUT_FACTOR = 40.0


class HypothesisError(ValueError):
    """The field does not meet the hypotheses under which the requested constant exists."""


@dataclass(frozen=True)
class HardyMesh:
    """Radial cells and angular resolution.

    ``n_radial`` is the number of cells on [0, R] for the local constant and
    the number of cells per unit of ``log r`` for the global ones.
    ``n_angular`` is ``n_theta`` in the plane and ``(n_phi, n_theta)`` in space.
    """

    n_radial: int = 64
    n_angular: int | tuple[int, int] = 64

    def angular_mesh(self, d: int) -> AngularMesh:
        if d == 2:
            n = self.n_angular if isinstance(self.n_angular, int) else self.n_angular[-1]
            return circle_mesh(int(n))
        grid = self.n_angular if isinstance(self.n_angular, tuple) else (self.n_angular // 2, self.n_angular)
        return sphere_mesh(tuple(int(v) for v in grid))


@dataclass(frozen=True)
class FormAssembly:
    form_matrix: sp.csr_matrix
    weight_matrix: np.ndarray | sp.csr_matrix  # Gram matrix, a 1-D array when diagonal
    radii: np.ndarray  # radial cell centres
    angular: AngularMesh
    domain: tuple[float, float]
    measure: str


@dataclass(frozen=True)
class HardyEstimate:
    constant: float
    weight_kind: str
    mesh_params: HardyMesh
    truncation: float | None = None
    sensitivity: float | None = None
    lower_bound: float | None = None
    mean_bound: float | None = None

    def to_csv_row(self) -> str:
        return f"{self.weight_kind},{self.constant!r},{self.truncation!r},{self.sensitivity!r}"


# ---------------------------------------------------------------------------
# assembly


def _link_points(angular: AngularMesh, n_gauss: int = LINK_GAUSS):
    """Gauss points (links, g, dim) and weights on every angular link."""
    t, w = np.polynomial.legendre.leggauss(n_gauss)
    t, w = 0.5 * (t + 1.0), 0.5 * w
    pts = angular.link_start[:, None, :] + t[None, :, None] * angular.link_step[:, None, :]
    return pts, w


def transversal_covariant(fld: MagneticField, angles: np.ndarray, radii: np.ndarray,
                          vectors: np.ndarray | None = None, n_gauss: int = 6) -> np.ndarray:
    """Covariant angular component of the Poincare gauge, shape (radii, points).

    In the transversal gauge
    ``r A(r sigma) . v = int_0^r rho B(rho sigma)(sigma, v) drho`` for a
    tangent vector ``v`` at ``sigma`` (default ``d sigma/d theta``), so the
    potential is a cumulative radial integral of B itself.
    """
    radii = np.asarray(radii, dtype=float)
    if np.any(np.diff(radii) <= 0.0) or radii[0] < 0.0:
        raise ValueError("radii must be nonnegative and increasing")
    sig = sphere_point(angles)
    if vectors is None:
        vectors = sphere_tangents(angles)[..., -1, :]
    t, w = np.polynomial.legendre.leggauss(n_gauss)
    t, w = 0.5 * (t + 1.0), 0.5 * w
    R = fld.support_radius
    out = np.zeros((len(radii),) + sig.shape[:-1])
    acc = np.zeros(sig.shape[:-1])
    lo = 0.0
    for i, r in enumerate(radii):
        hi = min(r, R)
        if hi > lo:
            for q, wq in zip(t, w):
                rho = lo + q * (hi - lo)
                B = fld.components(rho * sig)
                acc = acc + wq * (hi - lo) * rho * np.einsum("...j,...jk,...k->...", sig, B, vectors)
            lo = hi
        out[i] = acc
    return out


def transversal_phases(fld: MagneticField, angular: AngularMesh, radii: np.ndarray) -> np.ndarray:
    """Angular link phases of the Poincare gauge at each radius, shape (radii, links).

    Radial links carry no phase in this gauge.
    """
    pts, wl = _link_points(angular)
    step = np.einsum("lgmj,lm->lgj", sphere_tangents(pts), angular.link_step)
    cov = transversal_covariant(fld, pts, radii, step)
    return cov @ wl


def cartesian_phases(potential: Callable, d: int, angular: AngularMesh, radii: np.ndarray, n_gauss: int = 4):
    """Angular and radial link phases for an arbitrary Cartesian potential.

    Returns ``(angular (radii, links), radial (radii - 1, cells))``.  Radial
    phases are ``int A(r sigma) . sigma dr`` between consecutive radii.
    """
    radii = np.asarray(radii, dtype=float)
    pts, wl = _link_points(angular)
    sig = sphere_point(pts)
    tang = np.einsum("lgmj,lm->lgj", sphere_tangents(pts), angular.link_step)
    ang = np.empty((len(radii), len(angular.link_a)))
    for i, r in enumerate(radii):
        A = potential(r * sig)
        ang[i] = r * np.einsum("lgj,lgj->lg", A, tang) @ wl
    t, w = np.polynomial.legendre.leggauss(n_gauss)
    t, w = 0.5 * (t + 1.0), 0.5 * w
    cs = sphere_point(angular.coords)
    rad = np.zeros((max(len(radii) - 1, 0), angular.size))
    for q, wq in zip(t, w):
        r = radii[:-1] + q * np.diff(radii)
        A = potential(r[:, None, None] * cs[None])
        rad += wq * np.diff(radii)[:, None] * np.sum(A * cs[None], axis=-1)
    return ang, rad


def assemble_polar_form(edges: np.ndarray, angular: AngularMesh, angular_phases=None, radial_phases=None,
                        variable: str = "r", outer: str = "natural",
                        weight: Callable[[np.ndarray], np.ndarray] | None = None) -> FormAssembly:
    """Tensor-product finite-volume form on radial cells with given ``edges``.

    ``variable="r"``: ``int |g_r|^2 r dr + int |d'g - i A g|^2 dr / r`` with
    mass ``int |g|^2 r dr``.  ``variable="t"``: ``edges`` are values of
    ``t = log r`` and the form is ``int |g_t|^2 + |d'g - iAg|^2 dt``; the Gram
    matrix then carries ``weight(r) r^2 dt``.  Phases are evaluated at the
    cell centres (in ``r``); ``None`` means no magnetic field.  ``outer`` is
    ``"natural"`` or ``"dirichlet"``; the inner end is always natural.
    """
    edges = np.asarray(edges, dtype=float)
    centres = 0.5 * (edges[:-1] + edges[1:])
    width = np.diff(edges)
    nr, na, nl = len(centres), angular.size, len(angular.link_a)
    radius = centres if variable == "r" else np.exp(centres)
    if angular_phases is None:
        angular_phases = np.zeros((nr, nl))
    if radial_phases is None:
        radial_phases = np.zeros((max(nr - 1, 0), na))

    coef = width / centres if variable == "r" else width
    cell = np.arange(nr)[:, None] * na
    a = [(cell + angular.link_a[None, :]).ravel()]
    b = [(cell + angular.link_b[None, :]).ravel()]
    w = [(coef[:, None] * angular.link_weight[None, :]).ravel()]
    ph = [np.asarray(angular_phases).ravel()]
    if nr > 1:
        face = edges[1:-1]
        rad_coef = (face if variable == "r" else np.ones_like(face)) / np.diff(centres)
        ra = (np.arange(nr - 1)[:, None] * na + np.arange(na)[None, :]).ravel()
        a.append(ra)
        b.append(ra + na)
        w.append((rad_coef[:, None] * angular.mass[None, :]).ravel())
        ph.append(np.asarray(radial_phases).ravel())
    n = nr * na
    K = assemble_links(n, np.concatenate(a), np.concatenate(b), np.concatenate(w), np.concatenate(ph))
    if outer == "dirichlet":
        diag = np.zeros(n)
        diag[(nr - 1) * na:] = (edges[-1] if variable == "r" else 1.0) / (edges[-1] - centres[-1]) * angular.mass
        K = K + sp.diags(diag)
    elif outer != "natural":
        raise ValueError(f"unknown boundary condition {outer!r}")

    if variable == "r":
        gram = (centres * width)[:, None] * angular.mass[None, :]
        measure = "r dr dsigma"
    else:
        wfun = weight if weight is not None else (lambda r: np.ones_like(r))
        gram = (width * wfun(radius) * radius**2)[:, None] * angular.mass[None, :]
        measure = "W(r) r^2 dt dsigma"
    return FormAssembly(K.tocsr(), gram.ravel(), radius, angular, (float(edges[0]), float(edges[-1])), measure)


def galerkin_planar_form(fld: MagneticField | None, edges: np.ndarray, n_modes: int, variable: str = "r",
                         outer: str = "natural", weight: Callable[[np.ndarray], np.ndarray] | None = None,
                         n_gauss: int = 8) -> FormAssembly:
    """Conforming Galerkin form in the plane: P1 in the radial variable times
    ``e^{i m theta}`` for ``|m| <= n_modes``.

    In the transversal gauge the form is
    ``int |u_r|^2 r + |u_theta - i a u|^2 / r dr dtheta`` with
    ``a(r, theta) = r A . e_theta``; ``a`` enters through its Fourier
    coefficients, computed by FFT at the radial Gauss points.  Being a
    restriction of the exact form to a subspace, eigenvalues decrease under
    nested refinement (radial bisection, more modes).  With ``variable="t"``
    the edges are values of ``log r``, as in :func:`assemble_polar_form`.
    """
    edges = np.asarray(edges, dtype=float)
    nel, M = len(edges) - 1, int(n_modes)
    if M < 1:
        raise ValueError("need at least one angular mode")
    nm = 2 * M + 1
    gt, gw = np.polynomial.legendre.leggauss(n_gauss)
    gt, gw = 0.5 * (gt + 1.0), 0.5 * gw
    h = np.diff(edges)
    xq = edges[:-1, None] + h[:, None] * gt  # (nel, g) in the discretisation variable
    wq = h[:, None] * gw
    rq = xq if variable == "r" else np.exp(xq)
    if variable == "r":
        p_w, q_w, m_w = rq, 1.0 / rq, rq
    else:
        wfun = weight if weight is not None else (lambda r: np.ones_like(r))
        p_w, q_w, m_w = np.ones_like(rq), np.ones_like(rq), wfun(rq) * rq**2

    # Fourier coefficients of a and a^2 at every quadrature radius
    n_fft = max(256, 8 * M)
    theta = 2.0 * np.pi * np.arange(n_fft) / n_fft
    if fld is None or fld.is_zero:
        a1 = np.zeros((nel, n_gauss, nm + nm - 1), dtype=complex)
        a2 = np.zeros_like(a1)
    else:
        order = np.argsort(rq.ravel())
        a = np.empty((rq.size, n_fft))
        a[order] = transversal_covariant(fld, theta[:, None], rq.ravel()[order])
        k = np.arange(-2 * M, 2 * M + 1)
        a1 = (np.fft.fft(a, axis=-1) / n_fft)[:, k % n_fft].reshape(nel, n_gauss, -1)
        a2 = (np.fft.fft(a * a, axis=-1) / n_fft)[:, k % n_fft].reshape(nel, n_gauss, -1)

    N = (1.0 - gt, gt)
    dN = (-1.0 / h, 1.0 / h)
    m = np.arange(-M, M + 1)
    D = m[None, :] - m[:, None] + 2 * M  # index of m' - m, rows m', columns m
    msum = m[None, :] + m[:, None]
    two_pi = 2.0 * np.pi
    rows, cols, kv, mv = [], [], [], []
    for la in (0, 1):
        for lb in (0, 1):
            coef = wq * N[la] * N[lb] * q_w  # (nel, g)
            s0 = coef.sum(1)
            s1 = np.einsum("eg,egk->ek", coef, a1)
            s2 = np.einsum("eg,egk->ek", coef, a2)
            ang = (s0[:, None, None] * (m[:, None] * m[None, :] * np.eye(nm))[None]
                   - msum[None] * s1[:, D] + s2[:, D])
            stiff = (wq * p_w).sum(1) * dN[la] * dN[lb]
            block = two_pi * (ang + stiff[:, None, None] * np.eye(nm)[None])
            mass = two_pi * (wq * N[la] * N[lb] * m_w).sum(1)[:, None, None] * np.eye(nm)[None]
            e = np.arange(nel)
            ri = ((e + la)[:, None, None] * nm + np.arange(nm)[None, :, None]) + 0 * D[None]
            ci = ((e + lb)[:, None, None] * nm + np.arange(nm)[None, None, :]) + 0 * D[None]
            rows.append(ri.ravel())
            cols.append(ci.ravel())
            kv.append(block.ravel())
            mv.append(mass.ravel())
    n = (nel + 1) * nm
    rows, cols = np.concatenate(rows), np.concatenate(cols)
    K = sp.csr_matrix((np.concatenate(kv), (rows, cols)), shape=(n, n))
    Mm = sp.csr_matrix((np.concatenate(mv).astype(complex), (rows, cols)), shape=(n, n))

    keep = np.ones(n, dtype=bool)
    if variable == "r" and edges[0] == 0.0:
        keep[:nm] = m == 0  # only the constant mode survives at the origin
    if outer == "dirichlet":
        keep[-nm:] = False
    elif outer != "natural":
        raise ValueError(f"unknown boundary condition {outer!r}")
    K, Mm = K[keep][:, keep], Mm[keep][:, keep]
    radius = edges if variable == "r" else np.exp(edges)
    measure = "r dr dtheta" if variable == "r" else "W(r) r^2 dt dtheta"
    return FormAssembly(K.tocsr(), Mm.tocsr(), radius, circle_mesh(max(8, nm)), (float(edges[0]), float(edges[-1])),
                        measure)


def _phases(fld, potential, d, angular, radii):
    if potential is not None:
        return cartesian_phases(potential, d, angular, radii)
    if fld is None or fld.is_zero:
        return None, None
    return transversal_phases(fld, angular, radii), None


def _lowest(assembly: FormAssembly) -> float:
    return float(lowest_eigenpairs(assembly.form_matrix, assembly.weight_matrix, k=1, dense_max=0).values[0])


# ---------------------------------------------------------------------------
# constants


def _method(method: str, d: int, potential) -> str:
    if method == "auto":
        return "galerkin" if d == 2 and potential is None else "fv"
    if method not in ("galerkin", "fv"):
        raise ValueError(f"unknown method {method!r}")
    if method == "galerkin" and (d != 2 or potential is not None):
        raise ValueError("the Galerkin scheme is planar and uses the transversal gauge")
    return method


def _assemble(fld, potential, d, edges, mesh, variable, outer, weight, method):
    if _method(method, d, potential) == "galerkin":
        n_modes = mesh.n_angular if isinstance(mesh.n_angular, int) else mesh.n_angular[-1]
        return galerkin_planar_form(fld, edges, max(1, n_modes // 2), variable, outer, weight)
    angular = mesh.angular_mesh(d)
    centres = 0.5 * (edges[1:] + edges[:-1])
    ang, rad = _phases(fld, potential, d, angular, centres if variable == "r" else np.exp(centres))
    return assemble_polar_form(edges, angular, ang, rad, variable, outer, weight)


def mu_B(fld: MagneticField | None, R: float, mesh: HardyMesh | None = None, potential: Callable | None = None,
         dimension: int | None = None, method: str = "auto") -> HardyEstimate:
    """Lowest eigenvalue of the magnetic form on D_R with measure |x|^{-(d-2)} dx.

    No boundary condition (natural) at |x| = R.  The Poincare gauge of
    ``fld`` is used unless a Cartesian ``potential`` is given, e.g. to test
    gauge invariance.  ``method="auto"`` picks the planar Galerkin scheme
    (``n_angular // 2`` Fourier modes each side) when it applies and the
    finite-volume scheme otherwise.
    """
    if not R > 0.0:
        raise ValueError("R must be positive")
    d = dimension or (fld.dimension if fld is not None else getattr(potential, "dimension", 2))
    mesh = mesh or (HardyMesh() if d == 2 else HardyMesh(32, (16, 32)))
    edges = np.linspace(0.0, R, mesh.n_radial + 1)
    asm = _assemble(fld, potential, d, edges, mesh, "r", "natural", None, method)
    return HardyEstimate(_lowest(asm), "none", mesh, R)


def hardy_weight(kind: str) -> Callable[[np.ndarray], np.ndarray]:
    if kind == "log":
        return lambda r: 1.0 / (1.0 + r * r * np.log(r) ** 2)
    if kind == "lw":
        return lambda r: 1.0 / (1.0 + r * r)
    raise ValueError(f"unknown weight kind {kind!r}; choose from {WEIGHT_KINDS}")


def _global_estimate(fld, potential, d, kind, r_out, mesh, r_min, method):
    t0, t1 = math.log(r_min), math.log(r_out)
    cells = max(8, int(math.ceil((t1 - t0) * mesh.n_radial)))
    edges = np.linspace(t0, t1, cells + 1)
    return _lowest(_assemble(fld, potential, d, edges, mesh, "t", "dirichlet", hardy_weight(kind), method))


def a_R(R: float) -> float:
    """inf over r in (0, R) of (1 + r^2)/(1 + r^2 log^2 r)."""
    def f(r):
        return (1.0 + r * r) / (1.0 + r * r * math.log(r) ** 2)

    rs = np.geomspace(1e-8, R, 4001)[:-1]
    vals = np.array([f(r) for r in rs])
    i = int(np.argmin(vals))
    lo, hi = rs[max(i - 1, 0)], rs[min(i + 1, len(rs) - 1)]
    best = min(float(vals[i]), f(R * (1.0 - 1e-12)))
    if hi > lo:
        res = minimize_scalar(f, bounds=(lo, hi), method="bounded", options={"xatol": 1e-12})
        best = min(best, float(res.fun))
    return best


def hardy_constant(fld: MagneticField, weight_kind: str = "log", r_out: float | None = None,
                   mesh: HardyMesh | None = None, r_min: float = R_MIN_GLOBAL,
                   potential: Callable | None = None, method: str = "auto") -> HardyEstimate:
    """Estimate of the best constant in the global Hardy inequality.

    ``weight_kind="log"`` uses ``1/(1 + |x|^2 log^2 |x|)``, ``"lw"`` uses
    ``1/(1 + |x|^2)`` (planar fields with non-integer flux only), ``"none"``
    returns :func:`mu_B` on the support ball.  The domain is
    ``r_min < |x| < r_out`` (default ``40 R``) with a Dirichlet cut at
    ``r_out``; the estimate is repeated at ``2 r_out`` and the change is
    reported as sensitivity.  A Dirichlet cut shrinks the trial space, so the
    truncated value overestimates the constant.

    For ``"lw"`` two reference numbers built from the log-weight estimate
    ``c`` on the same mesh are attached: ``lower_bound = min(c a_R, nu)/2``,
    which follows from splitting the weight at ``|x| = R``, and
    ``mean_bound = (c a_R + nu)/2`` with ``nu = nu_B(inf)``.  The latter is
    not a valid bound in general: the constant never exceeds ``nu`` (see
    :func:`lw_trial_quotient`) while ``c a_R`` may.
    """
    mesh = mesh or (HardyMesh(16, 32) if fld.dimension == 2 else HardyMesh(4, (8, 16)))
    d, R = fld.dimension, fld.support_radius
    if weight_kind == "none":
        return mu_B(fld, R, mesh, potential, method=method)
    if r_out is None:
        r_out = R_OUT_FACTOR * R
    if r_out < 10.0 * R * (1.0 - 1e-12):
        raise ValueError("truncation radius must be at least 10 R")
    lower = mean = None
    if weight_kind == "lw":
        if d != 2:
            raise HypothesisError("the weight 1/(1+|x|^2) is implemented for planar fields with nu_B(inf) != 0")
        nu_inf = nu_circle_exact(total_flux(fld).total_flux)
        if nu_inf <= 1e-12:
            raise HypothesisError("integer total flux: nu_B(inf) = 0, no Hardy inequality with weight 1/(1+|x|^2)")
        c_log = _global_estimate(fld, potential, d, "log", r_out, mesh, r_min, method)
        aR = a_R(R)
        lower = 0.5 * min(c_log * aR, nu_inf)
        mean = 0.5 * (c_log * aR + nu_inf)
    elif weight_kind != "log":
        raise ValueError(f"unknown weight kind {weight_kind!r}")
    c1 = _global_estimate(fld, potential, d, weight_kind, r_out, mesh, r_min, method)
    c2 = _global_estimate(fld, potential, d, weight_kind, 2.0 * r_out, mesh, r_min, method)
    return HardyEstimate(c1, weight_kind, mesh, r_out, abs(c2 - c1), lower, mean)


def lw_trial_quotient(flux: float, start: float, length: float, n: int = 4000) -> float:
    """Rayleigh quotient of a far-away trial function for the weight 1/(1+|x|^2).

    ``psi = e^{i m theta} sin(pi (log r - start)/length)`` on
    ``start < log r < start + length`` outside the support, with ``m`` the
    integer nearest the total flux.  In Weidl variables the quotient is
    ``(int g_t^2 + nu g^2 dt)/(int g^2 r^2/(1+r^2) dt)`` with
    ``nu = dist(flux, Z)^2``; it tends to ``nu`` as ``start, length -> inf``,
    so no constant above ``nu_B(inf)`` is possible.
    """
    nu = float(nu_circle_exact(flux))
    t, w = np.polynomial.legendre.leggauss(n)
    u = 0.5 * (t + 1.0)
    w = 0.5 * w * length
    tt = start + length * u
    g = np.sin(np.pi * u)
    gp = np.pi / length * np.cos(np.pi * u)
    r2 = np.exp(2.0 * tt)
    return float(np.sum(w * (gp**2 + nu * g**2)) / np.sum(w * g**2 * r2 / (1.0 + r2)))


# ---------------------------------------------------------------------------
# one-dimensional inequalities and the diamagnetic inequality


def bessel_j0_first_zero() -> float:
    return float(brentq(j0, 2.0, 3.0, xtol=1e-15))


def _random_spline(rng, lo, hi, n_coef=8, k=3, clamp_left=False):
    inner = np.sort(rng.uniform(lo, hi, n_coef - k - 1))
    knots = np.concatenate([[lo] * (k + 1), inner, [hi] * (k + 1)])
    c = rng.standard_normal(n_coef)
    c[-1] = 0.0
    if clamp_left:
        c[0] = 0.0
    return BSpline(knots, c, k)


def _gauss_on(knots_lo, knots_hi, breaks, n=16):
    t, w = np.polynomial.legendre.leggauss(n)
    edges = np.unique(np.concatenate([[knots_lo, knots_hi], breaks]))
    xs, ws = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        xs.append(0.5 * (b - a) * t + 0.5 * (a + b))
        ws.append(0.5 * (b - a) * w)
    return np.concatenate(xs), np.concatenate(ws)


def aux1_ratio(f, df, r0: float, breaks=(), n: int = 16) -> float:
    """int_0^r0 |f'|^2 r dr / int_0^r0 |f|^2 r dr."""
    r, w = _gauss_on(0.0, r0, np.asarray(breaks, dtype=float), n)
    den = np.sum(w * f(r) ** 2 * r)
    if not den > 0.0:
        raise ValueError("trial function vanishes identically")
    return float(np.sum(w * df(r) ** 2 * r) / den)


def aux2_ratio_log(g, dg, span: float, breaks=(), n: int = 16) -> float:
    """The second ratio for ``f(r) = g(log(r/r0))`` with ``g(0) = 0``.

    With ``s = log(r/r0)`` and ``r dr = r^2 ds`` the ratio
    ``int |f'|^2 r dr / int |f|^2/(r^2 log^2(r/r0)) r dr`` becomes
    ``int g'^2 ds / int g^2/s^2 ds``, independent of ``r0``.
    """
    s, w = _gauss_on(0.0, span, np.asarray(breaks, dtype=float), n)
    den = np.sum(w * g(s) ** 2 / s**2)
    if not den > 0.0:
        raise ValueError("trial function vanishes identically")
    return float(np.sum(w * dg(s) ** 2) / den)


@dataclass(frozen=True)
class AuxResult:
    worst_aux1: float
    worst_aux2: float
    gamma_aux1: float
    gamma_aux2: float

    @property
    def gamma(self) -> float:
        return min(self.gamma_aux1, self.gamma_aux2)

    @property
    def passed(self) -> bool:
        return self.worst_aux1 >= self.gamma_aux1 and self.worst_aux2 >= self.gamma_aux2


def aux_inequality_check(r0: float, trial_count: int = 1000, seed: int = 0, span: float = 6.0) -> AuxResult:
    """Worst Rayleigh ratios of the two one-dimensional inequalities.

    Trials are random cubic splines vanishing at ``r0``: on (0, r0) free at
    the origin, on (r0, r0 e^span) vanishing at both ends and built in the
    variable log(r/r0).  Integrals use Gauss rules on every knot interval.
    """
    if not r0 > 0.0:
        raise ValueError("r0 must be positive")
    if trial_count < 1:
        raise ValueError("need at least one trial")
    rng = np.random.default_rng(seed)
    worst1 = worst2 = np.inf
    for _ in range(trial_count):
        f = _random_spline(rng, 0.0, r0)
        if np.any(f.c[:-1] != 0.0):
            worst1 = min(worst1, aux1_ratio(f, f.derivative(), r0, f.t))
        g = _random_spline(rng, 0.0, span, clamp_left=True)
        if np.any(g.c != 0.0):
            worst2 = min(worst2, aux2_ratio_log(g, g.derivative(), span, g.t))
    return AuxResult(float(worst1), float(worst2), (bessel_j0_first_zero() / r0) ** 2, 0.25)


def random_trial_function(rng, d: int, scale: float = 1.0):
    """psi = exp(-a|x-c|^2) exp(i (k.x + b sin(q.x))): smooth and zero-free."""
    a = rng.uniform(0.3, 1.5) / scale**2
    c = rng.uniform(-0.5, 0.5, d) * scale
    k = rng.normal(0.0, 2.0, d) / scale
    b = rng.uniform(-1.0, 1.0)
    q = rng.normal(0.0, 2.0, d) / scale

    def psi(x):
        x = np.asarray(x, dtype=float)
        return np.exp(-a * np.sum((x - c) ** 2, axis=-1)) * np.exp(1j * (x @ k + b * np.sin(x @ q)))

    return psi


def diamagnetic_sides(gauge: Callable, psi: Callable, x: np.ndarray, h: float = 1e-5):
    """(|(grad - iA) psi|, |grad |psi||) at points ``x`` by central differences."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    d = x.shape[-1]
    A = gauge(x)
    p0 = psi(x)
    cov = np.empty(x.shape, dtype=complex)
    grad_abs = np.empty(x.shape)
    for j in range(d):
        e = np.zeros(d)
        e[j] = h
        pp, pm = psi(x + e), psi(x - e)
        cov[:, j] = (pp - pm) / (2.0 * h) - 1j * A[:, j] * p0
        grad_abs[:, j] = (np.abs(pp) - np.abs(pm)) / (2.0 * h)
    return np.linalg.norm(cov, axis=-1), np.linalg.norm(grad_abs, axis=-1)


def diamagnetic_check(gauge: Callable, trial_count: int = 1000, sample_points=None, h: float = 1e-5,
                      seed: int = 0, dimension: int | None = None, trials=None) -> float:
    """max over trials and samples of |grad |psi|| - |(grad - iA) psi|.

    Without ``sample_points`` every trial is sampled at one fresh uniform
    point of [-2, 2]^d, so ``trial_count`` trials give as many samples.
    """
    rng = np.random.default_rng(seed)
    d = dimension or getattr(gauge, "dimension", 2)
    if trials is None:
        trials = [random_trial_function(rng, d) for _ in range(trial_count)]
    worst = -np.inf
    for psi in trials:
        x = rng.uniform(-2.0, 2.0, (1, d)) if sample_points is None else sample_points
        lhs, rhs = diamagnetic_sides(gauge, psi, x, h)
        worst = max(worst, float(np.max(rhs - lhs)))
    return worst


# ---------------------------------------------------------------------------
# free Hardy quotient in three dimensions


def free_hardy_quotient_3d(profile, dprofile, r_lo: float, r_hi: float, n: int = 64, pieces: int = 64) -> float:
    """int |grad psi|^2 dx / int |psi|^2/|x|^2 dx for radial psi in R^3.

    Integrals in the radial variable with Gauss rules on log-spaced pieces.
    """
    edges = np.geomspace(r_lo, r_hi, pieces + 1)
    t, w = np.polynomial.legendre.leggauss(n)
    num = den = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        r = 0.5 * (b - a) * t + 0.5 * (a + b)
        ww = 0.5 * (b - a) * w
        num += np.sum(ww * dprofile(r) ** 2 * r * r)
        den += np.sum(ww * profile(r) ** 2)
    return float(num / den)


def log_sine_trial(L: float):
    """psi(r) = r^{-1/2} sin(pi log(r)/L) on 1 < r < e^L; quotient 1/4 + (pi/L)^2."""
    k = math.pi / L

    def psi(r):
        return np.sin(k * np.log(r)) / np.sqrt(r)

    def dpsi(r):
        return (k * np.cos(k * np.log(r)) - 0.5 * np.sin(k * np.log(r))) / r**1.5

    return psi, dpsi, 1.0, math.exp(L)


def free_hardy_minimizing_sequence(lengths=(4.0, 8.0, 16.0, 32.0, 64.0)) -> np.ndarray:
    out = []
    for L in lengths:
        psi, dpsi, lo, hi = log_sine_trial(L)
        out.append(free_hardy_quotient_3d(psi, dpsi, lo, hi, pieces=max(64, int(8 * L))))
    return np.array(out)


def random_free_hardy_quotients(trial_count: int = 100, seed: int = 0) -> np.ndarray:
    """Quotients for random radial splines psi(r) supported in (r_lo, r_hi)."""
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(trial_count):
        lo = 10.0 ** rng.uniform(-2, 0)
        hi = lo * 10.0 ** rng.uniform(0.5, 3)
        g = _random_spline(rng, math.log(lo), math.log(hi), clamp_left=True)
        der = g.derivative()

        def psi(r, g=g):
            return g(np.log(r))

        def dpsi(r, der=der):
            return der(np.log(r)) / r

        out.append(free_hardy_quotient_3d(psi, dpsi, lo, hi))
    return np.array(out)


def mu_B_curve(field, radii, mesh: HardyMesh | None = None) -> np.ndarray:
    return np.array([mu_B(field, R, mesh).constant for R in radii])


def mu_curve_to_csv(radii, values) -> str:
    rows = ["R,mu_B"] + [f"{R!r},{v!r}" for R, v in zip(np.asarray(radii).tolist(), np.asarray(values).tolist())]
    return "\n".join(rows) + "\n"


def constants_to_csv(estimates) -> str:
    rows = ["weight_kind,constant,truncation,sensitivity"] + [e.to_csv_row() for e in estimates]
    return "\n".join(rows) + "\n"
