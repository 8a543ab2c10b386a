"""Large-time behaviour of the magnetic heat flow for radial planar fields.

The solution is followed in self-similar variables ``y = x / sqrt(1+t)``,
``s = log(1+t)``, in the weighted form ``v = e^{|y|^2/8} u~`` whose generator
is the Hermitian operator ``L_s``.  Angular modes ``e^{i m theta}`` decouple
for radial fields (the Poincare gauge is purely angular), so each mode is a
radial profile on the mode-operator grid advanced by Crank-Nicolson.

Norms include the angular factor ``2 pi`` so that ``norm_u`` is the true
``L^2(R^2)`` norm of ``u(t)``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from . import kernels
from .fields import FluxProfile, MagneticField, poincare_gauge, total_flux
from .oscillator import default_m_range, eigenfunction_radial
from .radial import ModeAssembler, RadialGrid

TWO_PI = 2.0 * math.pi
DEFAULT_DS = 1e-3
DEFAULT_S_MAX = 16.0
FIT_RESIDUAL_THRESHOLD = 0.02
GRONWALL_SLACK = 1e-6


class EvolutionError(RuntimeError):
    pass


@dataclass(frozen=True)
class SelfSimilarMap:
    """(x, t) <-> (y, s) with y = (t+1)^{-1/2} x, s = log(t+1)."""

    dimension: int = 2

    @staticmethod
    def to_self_similar(x, t):
        t = np.asarray(t, dtype=float)
        return np.asarray(x, dtype=float) / np.sqrt(1.0 + t), np.log1p(t)

    @staticmethod
    def to_physical(y, s):
        s = np.asarray(s, dtype=float)
        return np.asarray(y, dtype=float) * np.exp(0.5 * s), np.expm1(s)

    def amplitude(self, s):
        """Factor e^{sd/4} in u~(y, s) = e^{sd/4} u(x, t)."""
        return np.exp(self.dimension * np.asarray(s, dtype=float) / 4.0)

    def physical_profile(self, profile_u_tilde, s):
        """Radial profile of u(., t) from the profile of u~(., s)."""
        scale = np.exp(0.5 * s)
        amp = self.amplitude(s)
        return lambda r: profile_u_tilde(np.asarray(r, dtype=float) / scale) / amp


@dataclass
class EvolutionState:
    """Radial profiles ``modes[j]`` of ``v_m`` for ``m = mode_numbers[j]``.

    Profiles are real; the angular phase is carried by ``m``.
    """

    s: float
    mode_numbers: np.ndarray
    modes: np.ndarray  # (n_modes, n_free), C-contiguous
    nodes: np.ndarray = field(repr=False)
    md: np.ndarray = field(repr=False)
    mo: np.ndarray = field(repr=False)
    weight_norm: float = 0.0
    transform_kind: str = "weighted"

    def __post_init__(self):
        self.modes = np.ascontiguousarray(self.modes, dtype=float)
        self.weight_norm = self.recompute_norm()

    def _mass_form(self, f):
        return float(np.sum(self.md * f * f) + 2.0 * np.sum(self.mo * f[:-1] * f[1:]))

    def recompute_norm(self) -> float:
        """||v||^2 = 2 pi sum_m int |v_m|^2 rho drho."""
        return TWO_PI * sum(self._mass_form(f) for f in self.modes)

    def norm_v(self) -> float:
        return math.sqrt(self.weight_norm)

    def norm_u(self) -> float:
        """||u(t)|| = ||u~(s)|| with u~ = e^{-rho^2/8} v."""
        g = np.exp(-self.nodes[:-1] ** 2 / 8.0)
        return math.sqrt(TWO_PI * sum(self._mass_form(g * f) for f in self.modes))

    def copy(self) -> "EvolutionState":
        return replace(self, modes=self.modes.copy())

    def mode(self, m: int) -> np.ndarray:
        idx = np.nonzero(self.mode_numbers == m)[0]
        if len(idx) == 0:
            return np.zeros(self.modes.shape[1])
        return self.modes[idx[0]]


# ---------------------------------------------------------------------------
# initial data


@dataclass(frozen=True)
class InitialDatum:
    """Initial data presets.

    ``eigenmode``: ``u0 = w^{-1/2} psi_1`` with ``psi_1 = e^{-|x|^2/8}``.
    ``gaussian``: ``u0 = e^{-a |x|^2} e^{i m theta}``.
    ``multimode``: ``u0 = e^{-|x|^2/4} sum_m (|x|/2)^{|m|} e^{i m theta} / |m|!``
    over ``|m| <= m_range``, a smooth function touching every mode.
    """

    kind: str = "multimode"
    m: int = 0
    a: float = 0.25
    m_range: int | None = None

    def profiles(self, rho: np.ndarray, m_range: int) -> dict[int, np.ndarray]:
        w_half = np.exp(rho * rho / 8.0)
        if self.kind == "eigenmode":
            return {0: np.exp(-rho * rho / 8.0)}
        if self.kind == "gaussian":
            if abs(self.m) > m_range:
                raise ValueError("datum mode outside the mode range")
            if self.a <= 1.0 / 8.0:
                raise ValueError("gaussian datum needs a > 1/8 to lie in the weighted space")
            return {self.m: w_half * np.exp(-self.a * rho * rho)}
        if self.kind == "multimode":
            mr = m_range if self.m_range is None else min(self.m_range, m_range)
            base = np.exp(-rho * rho / 8.0)
            return {m: (0.5 * rho) ** abs(m) / math.factorial(abs(m)) * base for m in range(-mr, mr + 1)}
        if self.kind == "zero":
            return {}
        raise ValueError(f"unknown datum {self.kind!r}")


def initial_mode_projection(u0: InitialDatum, grid: RadialGrid | np.ndarray | None = None,
                            m_range: int = 4, assembler: ModeAssembler | None = None) -> EvolutionState:
    """State at s = 0 holding the angular modes of ``w^{1/2} u0``."""
    if assembler is None:
        nodes = grid.nodes if isinstance(grid, RadialGrid) else (RadialGrid().nodes if grid is None else grid)
        assembler = ModeAssembler(np.asarray(nodes, dtype=float))
    rho = assembler.nodes[:-1]
    profiles = u0.profiles(rho, m_range)
    ms = np.arange(-m_range, m_range + 1)
    modes = np.zeros((len(ms), len(rho)))
    for m, prof in profiles.items():
        if not np.all(np.isfinite(prof)):
            raise ValueError("initial datum is not in the weighted space on this grid")
        modes[m + m_range] = prof
    state = EvolutionState(0.0, ms, modes, assembler.nodes, assembler.md, assembler.mo)
    if not math.isfinite(state.weight_norm):
        raise ValueError("weighted norm overflow")
    return state


# ---------------------------------------------------------------------------
# stepping


class HeatStepper:
    """Crank-Nicolson stepper for all modes of one radial field on one grid."""

    def __init__(self, flux: FluxProfile, assembler: ModeAssembler):
        self.flux = flux
        self.asm = assembler
        self._mid = assembler.midpoints
        self._phi_total = flux.total_flux
        self._R = flux.support_radius

    def element_flux(self, s: float) -> np.ndarray:
        """Phi_B(e^{s/2} rho) at element midpoints."""
        scaled = math.exp(0.5 * s) * self._mid
        out = np.full(len(scaled), self._phi_total)
        inside = scaled < self._R
        if np.any(inside):
            out[inside] = self.flux(scaled[inside])
        return out

    def stiffness(self, m: int, s: float):
        return self.asm.stiffness((m - self.element_flux(s)) ** 2)

    def quadratic_form(self, state: EvolutionState, s: float | None = None) -> float:
        """l_s[v] = 2 pi sum_m <K_m(s) v_m, v_m>."""
        s = state.s if s is None else s
        phi = self.element_flux(s)
        total = 0.0
        for m, f in zip(state.mode_numbers, state.modes):
            if not np.any(f):
                continue
            kd, ko = self.asm.stiffness((m - phi) ** 2)
            total += float(np.sum(kd * f * f) + 2.0 * np.sum(ko * f[:-1] * f[1:]))
        return TWO_PI * total

    def step(self, state: EvolutionState, ds: float, inplace: bool = False) -> EvolutionState:
        if not 0.0 < ds <= 0.1:
            raise ValueError("ds must lie in (0, 0.1]")
        out = state if inplace else state.copy()
        phi = self.element_flux(state.s + 0.5 * ds)
        md, mo = self.asm.md, self.asm.mo
        for j, m in enumerate(out.mode_numbers):
            row = out.modes[j]
            if not np.any(row):
                continue
            kd, ko = self.asm.stiffness((m - phi) ** 2)
            kernels.cn_step(kd, ko, md, mo, ds, row.reshape(-1, 1))
        out.s = state.s + ds
        out.weight_norm = out.recompute_norm()
        if not math.isfinite(out.weight_norm):
            raise EvolutionError("non-finite state after step")
        return out


def step(state: EvolutionState, flux: FluxProfile, ds: float, assembler: ModeAssembler | None = None) -> EvolutionState:
    """One Crank-Nicolson step of dv/ds = -L_s v with the operator frozen at s + ds/2."""
    asm = assembler or ModeAssembler(state.nodes)
    return HeatStepper(flux, asm).step(state, ds)


def energy_identity_check(before: EvolutionState, after: EvolutionState, ds: float,
                          stepper: HeatStepper, rule: str = "trapezoid") -> float:
    """Relative defect of (1/2) d/ds ||v||^2 = -l_s[v] over one step.

    With ``rule="midpoint"`` the form is evaluated at the midpoint state and
    time, for which Crank-Nicolson satisfies the identity exactly (the
    defect is round-off).  The default trapezoid rule averages
    ``l_{s0}[v0]`` and ``l_{s1}[v1]`` and has an O(ds^2) defect.
    """
    if before.weight_norm == 0.0 and after.weight_norm == 0.0:
        return 0.0
    lhs = 0.5 * (after.weight_norm - before.weight_norm) / ds
    if rule == "trapezoid":
        l_val = 0.5 * (stepper.quadratic_form(before) + stepper.quadratic_form(after))
    elif rule == "midpoint":
        mid = before.copy()
        mid.modes = 0.5 * (before.modes + after.modes)
        l_val = stepper.quadratic_form(mid, before.s + 0.5 * ds)
    else:
        raise ValueError(f"unknown rule {rule!r}")
    if l_val == 0.0:
        return 0.0
    return abs(lhs + l_val) / l_val


# ---------------------------------------------------------------------------
# evolution and fit


@dataclass
class DecayFit:
    samples_t: np.ndarray
    samples_norm: np.ndarray
    slope: float
    intercept: float
    residual: float
    window: tuple[float, float]
    gamma_theory: float | None = None
    flagged: bool = False

    def to_json(self) -> str:
        return json.dumps({"slope": self.slope, "intercept": self.intercept,
                           "residual": self.residual, "gamma_theory": self.gamma_theory})


def fit_decay(t, norm_u, window: tuple[float, float], gamma_theory: float | None = None) -> DecayFit:
    """Least-squares slope of -log ||u|| against log(1+t) over ``window`` (in s)."""
    t = np.asarray(t, dtype=float)
    norm_u = np.asarray(norm_u, dtype=float)
    s = np.log1p(t)
    sel = (s >= window[0] - 1e-12) & (s <= window[1] + 1e-12) & (norm_u > 0.0)
    if sel.sum() < 3:
        raise ValueError("fit window holds fewer than 3 samples")
    A = np.stack([s[sel], np.ones(sel.sum())], axis=1)
    y = np.log(norm_u[sel])
    (b, c), *_ = np.linalg.lstsq(A, y, rcond=None)
    residual = float(np.max(np.abs(A @ np.array([b, c]) - y)))
    return DecayFit(t, norm_u, float(-b), float(c), residual, window, gamma_theory,
                    residual > FIT_RESIDUAL_THRESHOLD)


@dataclass
class EvolutionRecord:
    t: np.ndarray
    s: np.ndarray
    norm_u: np.ndarray
    norm_v: np.ndarray
    gronwall_bound: np.ndarray
    fit: DecayFit
    gronwall_max_ratio: float  # max over all steps of ||v(s)|| / (||v0|| e^{-s/2})
    monotone: bool
    final_state: EvolutionState = field(repr=False)
    energy_defects: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def to_csv(self) -> str:
        rows = ["t,s,norm_u,norm_v,gronwall_bound"]
        for vals in zip(self.t, self.s, self.norm_u, self.norm_v, self.gronwall_bound):
            rows.append(",".join(repr(float(v)) for v in vals))
        return "\n".join(rows) + "\n"


def gamma_theory(field: MagneticField | None) -> float:
    """(1 + dist(Phi_B, Z))/2 in the plane."""
    if field is None or field.is_zero:
        return 0.5
    return 0.5 * (1.0 + total_flux(field).beta)


def evolve_and_fit(field: MagneticField, u0: InitialDatum | None = None, s_max: float = DEFAULT_S_MAX,
                   ds: float = DEFAULT_DS, fit_window: tuple[float, float] | None = None,
                   grid: RadialGrid | np.ndarray | None = None, m_range: int | None = None,
                   sample_every: float = 0.01, energy_every: float = 0.0) -> EvolutionRecord:
    """Evolve to ``s_max`` and fit the algebraic decay rate of ||u(t)||.

    Every step checks the Gronwall bound ``||v(s)|| <= ||v0|| e^{-s/2}`` and
    strict decrease of ``||v||``; the worst ratio is returned rather than
    raised, so callers decide on the tolerance.
    """
    if field.dimension != 2 or not field.radial_flag:
        raise ValueError("evolution is implemented for radial planar fields")
    if s_max < 8.0:
        raise ValueError("s_max must be at least 8")
    if fit_window is None:
        fit_window = (max(s_max - 6.0, 0.5 * s_max), s_max)
    if not (s_max / 2.0 - 1e-12 <= fit_window[0] < fit_window[1] <= s_max + 1e-12):
        raise ValueError("fit window must lie in [s_max/2, s_max]")
    _check_transversal(field)
    flux = total_flux(field)
    if m_range is None:
        m_range = default_m_range(flux.total_flux)
    u0 = u0 or InitialDatum()
    nodes = grid.nodes if isinstance(grid, RadialGrid) else (RadialGrid().nodes if grid is None else np.asarray(grid))
    asm = ModeAssembler(nodes)
    stepper = HeatStepper(flux, asm)
    state = initial_mode_projection(u0, m_range=m_range, assembler=asm)
    n_steps = int(round(s_max / ds))
    every = max(1, int(round(sample_every / ds)))
    e_every = int(round(energy_every / ds)) if energy_every > 0 else 0
    v0 = state.norm_v()
    ts, ss, nu, nv, gb = [0.0], [0.0], [state.norm_u()], [v0], [v0]
    worst, monotone, prev = 0.0, True, v0
    defects = []
    for k in range(1, n_steps + 1):
        before = state.copy() if e_every and k % e_every == 0 else None
        stepper.step(state, ds, inplace=True)
        state.s = k * ds  # avoid drift from repeated addition
        cur = state.norm_v()
        bound = v0 * math.exp(-0.5 * state.s)
        if bound > 0.0:
            worst = max(worst, cur / bound)
        if cur >= prev and cur > 0.0:
            monotone = False
        prev = cur
        if before is not None:
            defects.append(energy_identity_check(before, state, ds, stepper))
        if k % every == 0 or k == n_steps:
            ss.append(state.s)
            ts.append(math.expm1(state.s))
            nu.append(state.norm_u())
            nv.append(cur)
            gb.append(bound)
    ts, ss = np.array(ts), np.array(ss)
    fit = fit_decay(ts, np.array(nu), fit_window, gamma_theory(field))
    return EvolutionRecord(ts, ss, np.array(nu), np.array(nv), np.array(gb), fit, worst, monotone,
                           state, np.array(defects))


def _check_transversal(field: MagneticField, n: int = 64):
    """The stepper drops the term y.A_s, which needs the Poincare gauge."""
    rng = np.random.default_rng(0)
    x = rng.uniform(-2.0 * field.support_radius, 2.0 * field.support_radius, (n, 2))
    A = poincare_gauge(field)(x)
    worst = float(np.max(np.abs(np.sum(A * x, axis=-1))))
    if worst > 1e-10 * (1.0 + field.sup_norm):
        raise EvolutionError(f"gauge is not transversal (|x.A| = {worst:.2e})")


# ---------------------------------------------------------------------------
# explicit solutions


def exact_reference_profile(kind: str, field: MagneticField | None, s: float, rho):
    """v(rho, s) of the explicit solutions.

    ``free-eigenmode``: e^{-s/2} e^{-rho^2/8}.
    ``exterior-AB-eigenmode``: e^{-s lam} rho^{beta} e^{-rho^2/8} with
    beta = dist(Phi_B, Z) and lam = (1 + beta)/2; valid only outside the
    shrinking ball of radius e^{-s/2} R.
    """
    rho = np.asarray(rho, dtype=float)
    if kind == "free-eigenmode":
        return math.exp(-0.5 * s) * eigenfunction_radial(0, 0.0, 2, rho)
    if kind == "exterior-AB-eigenmode":
        if field is None or not field.radial_flag:
            raise ValueError("needs a radial planar field")
        beta = total_flux(field).beta
        core = math.exp(-0.5 * s) * field.support_radius
        if np.any(rho <= core):
            raise ValueError(f"AB eigenmode is only valid for rho > {core:.3e}")
        return math.exp(-s * 0.5 * (1.0 + beta)) * eigenfunction_radial(0, beta**2, 2, rho)
    raise ValueError(f"unknown reference solution {kind!r}")


def exact_reference_solution(kind: str, field: MagneticField | None, s: float,
                             grid: RadialGrid | np.ndarray | None = None) -> EvolutionState:
    nodes = grid.nodes if isinstance(grid, RadialGrid) else (RadialGrid().nodes if grid is None else np.asarray(grid))
    asm = ModeAssembler(nodes)
    rho = nodes[:-1]
    m = 0
    if kind == "exterior-AB-eigenmode":
        m = int(round(total_flux(field).total_flux))
    prof = exact_reference_profile(kind, field, s, rho)
    ms = np.array([m])
    return EvolutionState(s, ms, prof[None, :], nodes, asm.md, asm.mo)


def sweep_flux(fluxes: Sequence[float], radius: float = 1.0, **kw) -> list[EvolutionRecord]:
    """Independent evolutions over a list of total fluxes (radial bump preset)."""
    from .fields import FieldSpec, make_field

    return [evolve_and_fit(make_field(2, FieldSpec("radial-bump", flux=f, radius=radius)), **kw) for f in fluxes]
