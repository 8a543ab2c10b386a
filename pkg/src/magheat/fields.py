"""Magnetic 2-forms in the plane and in space, their Poincare-gauge potentials,
Hodge duals, fluxes and pull-backs to spheres.

Fields are built from C-infinity bumps ``exp(-1/(1-q))`` with
``q = |x - c|^2 / rho^2`` supported in explicit balls.  The balls are kept on
the field so that every radial quadrature can be split where a ray enters or
leaves a support; the bumps are flat but not analytic at their boundary and
Gauss-Legendre converges slowly across it otherwise.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.optimize import minimize_scalar

DIMENSIONS = (2, 3)
PRESETS = {2: ("radial-bump", "two-bump"), 3: ("curl-bump",)}
DEFAULT_NQUAD = 64

# Levi-Civita tables
EPS2 = np.array([[0.0, 1.0], [-1.0, 0.0]])
EPS3 = np.zeros((3, 3, 3))
for _i, _j, _k in ((0, 1, 2), (1, 2, 0), (2, 0, 1)):
    EPS3[_i, _j, _k] = 1.0
    EPS3[_i, _k, _j] = -1.0


class FieldError(ValueError):
    """Invalid field specification or unsupported operation for a field."""


def _gauss(n: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (x + 1.0), 0.5 * w


def bump_profile(q):
    """exp(-1/(1-q)) for q < 1, zero otherwise."""
    q = np.asarray(q, dtype=float)
    inside = q < 1.0
    out = np.zeros_like(q)
    out[inside] = np.exp(-1.0 / (1.0 - q[inside]))
    return out


def bump_profile_derivative(q):
    """d/dq of :func:`bump_profile`."""
    q = np.asarray(q, dtype=float)
    inside = q < 1.0
    out = np.zeros_like(q)
    e = 1.0 - q[inside]
    out[inside] = -np.exp(-1.0 / e) / e**2
    return out


def _bump_mass() -> float:
    # int_0^1 exp(-1/(1-t)) dt; the flux of a planar bump is c * rho^2 * mass / 2
    t, w = _gauss(128)
    return float(np.sum(w * bump_profile(t)))


BUMP_MASS = _bump_mass()


@dataclass(frozen=True)
class FieldSpec:
    """Parameters of a field preset, as read from a configuration file."""

    preset: str
    flux: float | None = None
    radius: float = 1.0
    amplitude: float | None = None
    centers: tuple[tuple[float, ...], ...] | None = None


@dataclass(frozen=True)
class MagneticField:
    """A closed, compactly supported 2-form on R^d given by its components.

    ``evaluate(x)`` returns the skew matrix ``B_jk`` at points ``x`` of shape
    ``(..., d)`` as an array of shape ``(..., d, d)``.
    """

    dimension: int
    evaluate: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    support_radius: float
    sup_norm: float
    radial_flag: bool
    balls: tuple[tuple[np.ndarray, float], ...] = field(repr=False)
    preset: str = ""
    radial_profile: Callable[[np.ndarray], np.ndarray] | None = field(default=None, repr=False)

    def components(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.dimension:
            raise FieldError(f"points must have last axis {self.dimension}")
        return self.evaluate(x)

    def hodge(self, x) -> np.ndarray:
        return hodge_dual(self, x)

    @property
    def is_zero(self) -> bool:
        return self.sup_norm == 0.0


# ---------------------------------------------------------------------------
# presets


def _planar_bumps(centers, radii, amplitudes):
    centers = [np.asarray(c, dtype=float) for c in centers]

    def evaluate(x):
        star = np.zeros(x.shape[:-1])
        for c, rho, amp in zip(centers, radii, amplitudes):
            if amp == 0.0:
                continue
            q = np.sum((x - c) ** 2, axis=-1) / rho**2
            star = star + amp * bump_profile(q)
        out = np.zeros(x.shape + (2,))
        out[..., 0, 1] = star
        out[..., 1, 0] = -star
        return out

    return evaluate


def _radial_bump(spec: FieldSpec) -> MagneticField:
    R = spec.radius
    if spec.flux is not None:
        amp = 2.0 * spec.flux / (R**2 * BUMP_MASS)
    else:
        amp = float(spec.amplitude or 0.0)

    def profile(r):
        return amp * bump_profile(np.asarray(r, dtype=float) ** 2 / R**2)

    return MagneticField(
        dimension=2,
        evaluate=_planar_bumps([np.zeros(2)], [R], [amp]),
        support_radius=R,
        sup_norm=abs(amp) * np.exp(-1.0),
        radial_flag=True,
        balls=((np.zeros(2), R),),
        preset="radial-bump",
        radial_profile=profile,
    )


def _two_bump(spec: FieldSpec) -> MagneticField:
    R = spec.radius
    centers = spec.centers or ((-0.4 * R, 0.0), (0.4 * R, 0.0))
    if len(centers) != 2:
        raise FieldError("two-bump needs exactly two centers")
    centers = [np.asarray(c, dtype=float) for c in centers]
    rho = R - max(float(np.linalg.norm(c)) for c in centers)
    if rho <= 0.0:
        raise FieldError("two-bump centers must lie inside the support radius")
    if spec.flux is not None:
        amp = spec.flux / (rho**2 * BUMP_MASS)  # each bump carries half
    else:
        amp = float(spec.amplitude or 0.0)
    return MagneticField(
        dimension=2,
        evaluate=_planar_bumps(centers, [rho, rho], [amp, amp]),
        support_radius=R,
        sup_norm=2.0 * abs(amp) * np.exp(-1.0),
        radial_flag=False,
        balls=tuple((c, rho) for c in centers),
        preset="two-bump",
    )


def _max_bump_gradient(rho: float) -> float:
    # max over q of |d/dx exp(-1/(1-q))| with q = |x|^2/rho^2
    def neg(q):
        return -2.0 * np.sqrt(q) * abs(float(bump_profile_derivative(q))) / rho

    qs = np.linspace(0.0, 0.999, 2001)
    q0 = qs[np.argmin([neg(q) for q in qs])]
    res = minimize_scalar(neg, bounds=(max(q0 - 1e-3, 0.0), min(q0 + 1e-3, 0.9999)), method="bounded",
                          options={"xatol": 1e-12})
    return -float(res.fun)


def _curl_bump(spec: FieldSpec) -> MagneticField:
    """B = da with a = amplitude * bump(|x - c|^2/rho^2) * e_3."""
    R = spec.radius
    amp = 1.0 if spec.amplitude is None else float(spec.amplitude)
    c = np.asarray(spec.centers[0] if spec.centers else (0.25 * R, 0.0, 0.0), dtype=float)
    if c.shape != (3,):
        raise FieldError("curl-bump center must have three coordinates")
    rho = R - float(np.linalg.norm(c))
    if rho <= 0.0:
        raise FieldError("curl-bump center must lie inside the support radius")
    w = np.array([0.0, 0.0, 1.0])

    def one_form(x):
        q = np.sum((x - c) ** 2, axis=-1) / rho**2
        return amp * bump_profile(q)[..., None] * w

    def evaluate(x):
        q = np.sum((x - c) ** 2, axis=-1) / rho**2
        grad = (amp * bump_profile_derivative(q) * 2.0 / rho**2)[..., None] * (x - c)
        # B_jk = d_j a_k - d_k a_j
        return grad[..., :, None] * w[None, :] - w[:, None] * grad[..., None, :]

    out = MagneticField(
        dimension=3,
        evaluate=evaluate,
        support_radius=R,
        sup_norm=abs(amp) * _max_bump_gradient(rho),
        radial_flag=False,
        balls=((c, rho),),
        preset="curl-bump",
    )
    object.__setattr__(out, "one_form", one_form)
    return out


def make_field(dimension: int, spec: FieldSpec | dict) -> MagneticField:
    """Build one of the analytic presets.

    ``radial-bump`` (d=2): ``*B = c exp(-1/(1-|x|^2/R^2))`` with ``c`` chosen
    so that the total flux is ``flux``.  ``two-bump`` (d=2): two translated
    bumps of radius ``R - max|center|`` carrying half the flux each.
    ``curl-bump`` (d=3): ``B = da`` for a bump 1-form centred off the origin.
    """
    if isinstance(spec, dict):
        spec = FieldSpec(**spec)
    if dimension not in DIMENSIONS:
        raise FieldError(f"dimension must be 2 or 3, got {dimension}")
    if spec.preset not in PRESETS[dimension]:
        raise FieldError(f"unknown preset {spec.preset!r} for d={dimension}; choose from {PRESETS[dimension]}")
    if not spec.radius > 0.0:
        raise FieldError(f"radius must be positive, got {spec.radius}")
    if spec.flux is not None and not np.isfinite(spec.flux):
        raise FieldError("flux must be finite")
    builder = {"radial-bump": _radial_bump, "two-bump": _two_bump, "curl-bump": _curl_bump}[spec.preset]
    return builder(spec)


def superpose(*fields: MagneticField) -> MagneticField:
    """Sum of fields of equal dimension."""
    d = fields[0].dimension
    if any(f.dimension != d for f in fields):
        raise FieldError("cannot superpose fields of different dimension")

    def evaluate(x):
        return sum(f.evaluate(x) for f in fields)

    radial = all(f.radial_flag for f in fields)
    profile = None
    if radial:
        def profile(r):
            return sum(f.radial_profile(r) for f in fields)
    return MagneticField(
        dimension=d,
        evaluate=evaluate,
        support_radius=max(f.support_radius for f in fields),
        sup_norm=sum(f.sup_norm for f in fields),
        radial_flag=radial,
        balls=tuple(b for f in fields for b in f.balls),
        preset="+".join(f.preset for f in fields),
        radial_profile=profile,
    )


# ---------------------------------------------------------------------------
# pointwise operations


def hodge_dual(field: MagneticField, x) -> np.ndarray:
    """Scalar ``B_12`` in the plane, the vector ``(1/2) eps^{ljk} B_jk`` in space."""
    B = field.components(x)
    if field.dimension == 2:
        return 0.5 * np.einsum("jk,...jk->...", EPS2, B)
    return 0.5 * np.einsum("ljk,...jk->...l", EPS3, B)


# one-sided weights c_m of the antisymmetric central stencil sum_m c_m (f(x+mh) - f(x-mh)) / h
CENTRAL_WEIGHTS = {
    2: (0.5,),
    4: (2.0 / 3.0, -1.0 / 12.0),
    6: (0.75, -3.0 / 20.0, 1.0 / 60.0),
    8: (0.8, -0.2, 4.0 / 105.0, -1.0 / 280.0),
}


def central_difference(func, x, axis: int, h: float, order: int = 2):
    """Central-difference derivative of ``func`` along coordinate ``axis``."""
    if order not in CENTRAL_WEIGHTS:
        raise FieldError(f"order must be one of {sorted(CENTRAL_WEIGHTS)}")
    x = np.asarray(x, dtype=float)
    e = np.zeros(x.shape[-1])
    e[axis] = 1.0
    out = 0.0
    for m, c in enumerate(CENTRAL_WEIGHTS[order], start=1):
        out = out + c * (func(x + m * h * e) - func(x - m * h * e))
    return out / h


def closedness_residual(field: MagneticField, sample_points, h: float = 1e-4, order: int = 2) -> float:
    """Max over points and index triples of the central-difference C_jkl.

    With ``order=2`` the residual of a closed smooth form is O(h^2) times
    fifth derivatives of the potential, which for steep bumps is far from
    round-off; ``order`` 4, 6 or 8 uses the wider central stencils.
    """
    pts = np.atleast_2d(np.asarray(sample_points, dtype=float))
    if pts.size == 0:
        raise FieldError("closedness_residual needs at least one sample point")
    if not h > 0.0:
        raise FieldError("step must be positive")
    d = field.dimension
    # grads[j][..., k, l] = B_kl,j
    grads = [central_difference(field.components, pts, j, h, order) for j in range(d)]
    worst = 0.0
    for j in range(d):
        for k in range(d):
            for l in range(d):
                C = grads[j][:, k, l] + grads[k][:, l, j] + grads[l][:, j, k]
                worst = max(worst, float(np.max(np.abs(C))))
    return worst


def curl_residual(field: MagneticField, gauge: "GaugePotential", points, h: float = 1e-4, order: int = 2) -> float:
    """max |A_k,j - A_j,k - B_jk| with central differences of the potential."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    d = field.dimension
    dA = [central_difference(gauge, pts, j, h, order) for j in range(d)]
    B = field.components(pts)
    worst = 0.0
    for j in range(d):
        for k in range(j + 1, d):
            worst = max(worst, float(np.max(np.abs(dA[j][:, k] - dA[k][:, j] - B[:, j, k]))))
    return worst


def gauge_decay_violation(field: MagneticField, gauge: "GaugePotential", points) -> float:
    """max over |x| > R of |A(x)| - R^2 ||B||_inf / |x| (non-positive when the bound holds)."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    r = np.linalg.norm(pts, axis=-1)
    outside = r > field.support_radius
    if not np.any(outside):
        return -np.inf
    A = np.linalg.norm(gauge(pts[outside]), axis=-1)
    bound = field.support_radius**2 * field.sup_norm / r[outside]
    return float(np.max(A - bound))


def _ray_breakpoints(field: MagneticField, x: np.ndarray) -> np.ndarray:
    """Parameters u in [0, 1] where the segment {u x} crosses a support sphere.

    Returns an array (npts, nb) sorted along the last axis, padded with 1.
    """
    cols = [np.zeros(len(x)), np.ones(len(x))]
    xx = np.sum(x * x, axis=-1)
    safe = np.where(xx > 0.0, xx, 1.0)
    for c, rho in field.balls:
        # |u x - c|^2 = rho^2  ->  xx u^2 - 2 (x.c) u + |c|^2 - rho^2 = 0
        b = np.sum(x * c, axis=-1)
        disc = b * b - xx * (np.dot(c, c) - rho**2)
        root = np.sqrt(np.maximum(disc, 0.0))
        for sgn in (-1.0, 1.0):
            u = (b + sgn * root) / safe
            ok = (disc > 0.0) & (xx > 0.0) & (u > 0.0) & (u < 1.0)
            cols.append(np.where(ok, u, 1.0))
    return np.sort(np.stack(cols, axis=-1), axis=-1)


def _segment_rule(field: MagneticField, x: np.ndarray, n_quad: int):
    """Composite Gauss-Legendre nodes/weights on [0, 1] split at the breakpoints.

    Only segments whose midpoint lies in some support ball are kept; at most
    ``2 * nballs - 1`` of them can be, the rest get zero weight.
    """
    brk = _ray_breakpoints(field, x)
    a, b = brk[:, :-1], brk[:, 1:]
    mid = 0.5 * (a + b)
    active = np.zeros(mid.shape, dtype=bool)
    for c, rho in field.balls:
        dist2 = np.sum((mid[..., None] * x[:, None, :] - c) ** 2, axis=-1)
        active |= dist2 < rho * rho
    active &= b > a
    keep = 2 * len(field.balls) - 1
    order = np.argsort(~active, axis=1, kind="stable")[:, :keep]
    a = np.take_along_axis(a, order, axis=1)
    b = np.take_along_axis(b, order, axis=1)
    b = np.where(np.take_along_axis(active, order, axis=1), b, a)
    t, w = _gauss(n_quad)
    u = a[..., None] + (b - a)[..., None] * t
    wu = (b - a)[..., None] * w
    return u.reshape(len(x), -1), wu.reshape(len(x), -1)


@dataclass(frozen=True)
class GaugePotential:
    """Poincare-gauge potential ``A_j(x) = int_0^1 x^l B_lj(x u) u du``."""

    dimension: int
    source: MagneticField = field(repr=False)
    quadrature_nodes: int = DEFAULT_NQUAD

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        shape = x.shape
        pts = x.reshape(-1, self.dimension)
        out = np.empty_like(pts)
        chunk = max(1, 100_000 // (self.quadrature_nodes * (2 * len(self.source.balls) - 1)))
        for s in range(0, len(pts), chunk):
            p = pts[s:s + chunk]
            u, wu = _segment_rule(self.source, p, self.quadrature_nodes)
            B = self.source.components(u[..., None] * p[:, None, :])
            integrand = np.einsum("pl,pqlj->pqj", p, B)
            out[s:s + chunk] = np.einsum("pq,pqj->pj", wu * u, integrand)
        return out.reshape(shape)


def poincare_gauge(field: MagneticField, n_quad: int = DEFAULT_NQUAD) -> GaugePotential:
    if n_quad < 8:
        raise FieldError("n_quad must be at least 8")
    return GaugePotential(field.dimension, field, n_quad)


# ---------------------------------------------------------------------------
# spherical coordinates


def sphere_point(angles) -> np.ndarray:
    """Unit vector for angles (theta,) in d=2 or (phi, theta) in d=3."""
    a = np.asarray(angles, dtype=float)
    if a.shape[-1] == 1:
        th = a[..., 0]
        return np.stack([np.cos(th), np.sin(th)], axis=-1)
    ph, th = a[..., 0], a[..., 1]
    return np.stack([np.sin(ph) * np.cos(th), np.sin(ph) * np.sin(th), np.cos(ph)], axis=-1)


def sphere_tangents(angles) -> np.ndarray:
    """Coordinate tangent vectors d sigma / d angle_mu, shape (..., d-1, d)."""
    a = np.asarray(angles, dtype=float)
    if a.shape[-1] == 1:
        th = a[..., 0]
        return np.stack([-np.sin(th), np.cos(th)], axis=-1)[..., None, :]
    ph, th = a[..., 0], a[..., 1]
    dphi = np.stack([np.cos(ph) * np.cos(th), np.cos(ph) * np.sin(th), -np.sin(ph)], axis=-1)
    dth = np.stack([-np.sin(ph) * np.sin(th), np.sin(ph) * np.cos(th), np.zeros_like(ph)], axis=-1)
    return np.stack([dphi, dth], axis=-2)


@dataclass(frozen=True)
class SphericalPotential:
    """Covariant potential on S^{d-1} as a function of the radius.

    ``covariant_components(angles, r)`` returns an array (..., d-1).  The
    radial component vanishes identically in the Poincare gauge.
    """

    dimension: int
    covariant_components: Callable[[np.ndarray, float], np.ndarray] = field(repr=False)
    saturation_radius: float = np.inf

    def limit_components(self, angles) -> np.ndarray:
        if not np.isfinite(self.saturation_radius):
            raise FieldError("potential has no saturation radius")
        return self.covariant_components(angles, self.saturation_radius)

    def __call__(self, angles, r):
        return self.covariant_components(angles, r)

    @classmethod
    def from_function(cls, dimension: int, func, saturation_radius: float = np.inf):
        """Wrap ``func(angles, r)``; used for model potentials such as constants."""
        return cls(dimension, func, saturation_radius)

    @classmethod
    def constant_circle(cls, value: float) -> "SphericalPotential":
        def comp(angles, r):
            a = np.asarray(angles, dtype=float)
            return np.full(a.shape[:-1] + (1,), float(value))

        return cls(2, comp, 0.0)

    @classmethod
    def zero(cls, dimension: int) -> "SphericalPotential":
        def comp(angles, r):
            a = np.asarray(angles, dtype=float)
            return np.zeros(a.shape[:-1] + (dimension - 1,))

        return cls(dimension, comp, 0.0)


def spherical_pullback(gauge: GaugePotential) -> SphericalPotential:
    """``A_mu(sigma, r) = int_0^r [sigma . B(sigma v) . d_mu sigma] v dv``."""
    fld = gauge.source
    n_quad = gauge.quadrature_nodes

    def comp(angles, r):
        a = np.asarray(angles, dtype=float)
        shape = a.shape[:-1]
        a2 = a.reshape(-1, a.shape[-1])
        sig = sphere_point(a2)
        tang = sphere_tangents(a2)
        x = r * sig
        u, wu = _segment_rule(fld, x, n_quad)
        B = fld.components(u[..., None] * x[:, None, :])
        val = np.einsum("pj,pqjk,pmk->pqm", sig, B, tang)
        # v = r u, dv = r du
        res = np.einsum("pq,pqm->pm", wu * u * r * r, val)
        return res.reshape(shape + (fld.dimension - 1,))

    return SphericalPotential(fld.dimension, comp, fld.support_radius)


# ---------------------------------------------------------------------------
# flux


@dataclass(frozen=True)
class FluxProfile:
    """Flux ``Phi_B(r) = (1/2pi) int_{D_r} *B`` through discs centred at 0."""

    flux_function: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    total_flux: float
    beta: float
    support_radius: float

    def __call__(self, r):
        return self.flux_function(r)


def dist_to_integers(x):
    x = np.asarray(x, dtype=float)
    return np.abs(x - np.round(x))


def flux_through_disc(field: MagneticField, r, n_quad: int = DEFAULT_NQUAD, n_theta: int = 256):
    """Polar product quadrature: Gauss-Legendre in radius (split at the
    support spheres), trapezoid in angle.  Radial fields use one ray."""
    r = np.atleast_1d(np.asarray(r, dtype=float))
    if field.radial_flag:
        thetas = np.zeros(1)
    else:
        thetas = 2.0 * np.pi * np.arange(n_theta) / n_theta
    sig = sphere_point(thetas[:, None])
    x = (r[:, None, None] * sig[None, :, :]).reshape(-1, 2)
    out = np.empty(len(x))
    for s in range(0, len(x), 4096):
        xs = x[s:s + 4096]
        u, wu = _segment_rule(field, xs, n_quad)
        star = hodge_dual(field, u[..., None] * xs[:, None, :])
        out[s:s + 4096] = np.sum(wu * u * star, axis=-1)
    return out.reshape(len(r), len(thetas)).mean(axis=1) * r * r


def total_flux(field: MagneticField, n_quad: int = DEFAULT_NQUAD, n_table: int = 2049) -> FluxProfile:
    """Flux profile tabulated on [0, R] and interpolated by a cubic spline."""
    if field.dimension != 2:
        raise FieldError("flux profiles are defined for planar fields only")
    R = field.support_radius
    if field.is_zero:
        return FluxProfile(lambda r: np.zeros_like(np.asarray(r, dtype=float)), 0.0, 0.0, R)
    radii = np.linspace(0.0, R, n_table)
    table = flux_through_disc(field, radii, n_quad)
    spline = CubicSpline(radii, table)
    phi_total = float(table[-1])

    def flux_function(r):
        r = np.asarray(r, dtype=float)
        out = np.full(r.shape, phi_total)
        inside = r < R
        if np.any(inside):
            out[inside] = spline(r[inside])
        return out

    return FluxProfile(flux_function, phi_total, float(dist_to_integers(phi_total)), R)


def fibonacci_sphere(n: int, radius: float = 1.0) -> np.ndarray:
    """Quasi-uniform points on the sphere of given radius in R^3."""
    k = np.arange(n) + 0.5
    z = 1.0 - 2.0 * k / n
    th = np.pi * (1.0 + 5.0**0.5) * k
    s = np.sqrt(1.0 - z * z)
    return radius * np.stack([s * np.cos(th), s * np.sin(th), z], axis=-1)


def radial_projection_check(field: MagneticField, r: float, n_samples: int = 2000) -> float:
    """max |(*B)(x) . x| over quasi-uniform points with |x| = r (d = 3)."""
    if field.dimension != 3:
        raise FieldError("radial projection check needs d = 3")
    if not r > 0.0:
        raise FieldError("radius must be positive")
    x = fibonacci_sphere(n_samples, r)
    return float(np.max(np.abs(np.sum(hodge_dual(field, x) * x, axis=-1))))


def sample_field_csv(field: MagneticField, gauge: GaugePotential, points: Sequence) -> str:
    """CSV text with header ``x1,...,xd,B12[,B13,B23],A1,...,Ad``."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    d = field.dimension
    B = field.components(pts)
    A = gauge(pts)
    pairs = [(0, 1)] if d == 2 else [(0, 1), (0, 2), (1, 2)]
    header = [f"x{i + 1}" for i in range(d)] + [f"B{j + 1}{k + 1}" for j, k in pairs] + [f"A{i + 1}" for i in range(d)]
    rows = [",".join(header)]
    for p, b, a in zip(pts, B, A):
        vals = list(p) + [b[j, k] for j, k in pairs] + list(a)
        rows.append(",".join(repr(float(v)) for v in vals))
    return "\n".join(rows) + "\n"
