"""Experiment dispatch, run records and parameter sweeps."""

from __future__ import annotations

import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import hardy, heat, oscillator, sphere
from .config import SWEEP_AXES, ConfigError, ExperimentConfig, validate
from .fields import (
    MagneticField,
    closedness_residual,
    curl_residual,
    dist_to_integers,
    flux_through_disc,
    gauge_decay_violation,
    poincare_gauge,
    sample_field_csv,
    spherical_pullback,
)
from .radial import RadialGrid

ASSERTION_KINDS = ("abs", "le", "ge", "lt", "gt", "true")


@dataclass
class Assertion:
    """``measured`` compared with ``theory`` under ``kind`` and ``tol``.

    ``abs``: |measured - theory| <= tol; ``le``/``lt``: measured <= / <
    theory + tol; ``ge``/``gt``: measured >= / > theory - tol; ``true``:
    measured is truthy.
    """

    name: str
    measured: Any
    theory: Any
    tol: float
    kind: str = "abs"
    passed: bool = False

    def evaluate(self) -> bool:
        m, t, tol = self.measured, self.theory, self.tol
        if self.kind == "true":
            return bool(m)
        if m is None or (isinstance(m, float) and math.isnan(m)):
            return False
        if self.kind == "abs":
            return abs(m - t) <= tol
        if self.kind == "le":
            return m <= t + tol
        if self.kind == "lt":
            return m < t + tol
        if self.kind == "ge":
            return m >= t - tol
        if self.kind == "gt":
            return m > t - tol
        raise ValueError(f"unknown assertion kind {self.kind!r}")


@dataclass
class RunRecord:
    experiment: str
    config_hash: str
    config: dict
    started: str
    finished: str | None = None
    payload: dict = field(default_factory=dict)
    theory: dict = field(default_factory=dict)
    assertions: list[Assertion] = field(default_factory=list)
    files: list[str] = field(default_factory=list)
    error: str | None = None

    def check(self, name, measured, theory, tol=0.0, kind="abs") -> Assertion:
        a = Assertion(name, _plain(measured), _plain(theory), float(tol), kind)
        a.passed = a.evaluate()
        self.assertions.append(a)
        return a

    @property
    def passed(self) -> bool:
        return self.error is None and all(a.passed for a in self.assertions)

    def to_json(self) -> dict:
        return {
            "experiment": self.experiment,
            "config_hash": self.config_hash,
            "config": self.config,
            "started": self.started,
            "finished": self.finished,
            "payload": self.payload,
            "theory": self.theory,
            "assertions": [a.__dict__ for a in self.assertions],
            "files": self.files,
            "error": self.error,
            "passed": self.passed,
        }

    @classmethod
    def from_json(cls, data: dict) -> "RunRecord":
        rec = cls(data["experiment"], data["config_hash"], data["config"], data["started"], data["finished"],
                  data["payload"], data["theory"], [Assertion(**a) for a in data["assertions"]], data["files"],
                  data["error"])
        return rec


def recheck(record: RunRecord | dict) -> bool:
    """Recompute pass/fail from the stored measured values alone."""
    rec = RunRecord.from_json(record) if isinstance(record, dict) else record
    ok = rec.error is None
    for a in rec.assertions:
        ok = a.evaluate() and ok
    return ok


def _plain(v):
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    if isinstance(v, np.bool_):
        return bool(v)
    if isinstance(v, np.ndarray):
        return [_plain(x) for x in v.tolist()]
    if isinstance(v, (list, tuple)):
        return [_plain(x) for x in v]
    return v


def _now() -> str:
    return time.strftime("%Y-%m-%dT%H:%M:%S%z")


class _Outputs:
    def __init__(self, directory: Path, record: RunRecord):
        self.dir = directory
        self.record = record
        self.plots: list[str] = []
        directory.mkdir(parents=True, exist_ok=True)

    def write(self, name: str, text: str, plot: tuple[str, str, str] | None = None):
        """Write a file of the run; ``plot = (xlabel, ylabel, extra gnuplot lines)`` adds it to plot.gp."""
        (self.dir / name).write_text(text)
        self.record.files.append(name)
        if plot is not None:
            xl, yl, extra = plot
            self.plots.append(f"set output '{Path(name).stem}.png'\nset xlabel '{xl}'\nset ylabel '{yl}'\n"
                              f"{extra}plot '{name}' using 1:2 with linespoints\nunset logscale\n")

    def finish(self):
        if self.plots:
            head = "set datafile separator ','\nset key autotitle columnhead\nset terminal pngcairo\n"
            (self.dir / "plot.gp").write_text(head + "".join(self.plots))
            self.record.files.append("plot.gp")


# ---------------------------------------------------------------------------
# experiments


def _linspace(rng) -> np.ndarray:
    lo, hi, n = rng
    return np.linspace(lo, hi, n)


def _radial_grid(cfg: ExperimentConfig, dimension: int = 2) -> RadialGrid:
    g = cfg["grid"]
    return RadialGrid(g["rho_min"], g["rho_max"], g["nodes"], "uniform", dimension)


def _total_flux(fld: MagneticField) -> float:
    # one disc at the support radius; the spline table of total_flux is not needed here
    return 0.0 if fld.is_zero else float(flux_through_disc(fld, [fld.support_radius])[0])


def _nu_theory(fld: MagneticField) -> float:
    """nu_B(inf): dist(flux, Z)^2 in the plane, 0 for the spatial preset (exact potential outside)."""
    if fld.dimension == 2:
        return float(dist_to_integers(_total_flux(fld)) ** 2)
    return 0.0


def exp_gauge_check(cfg, fld, out, rec):
    c = cfg["gauge"]
    rng = np.random.default_rng(cfg.seed)
    d, R = fld.dimension, fld.support_radius
    x = rng.uniform(-2.0 * R, 2.0 * R, (c["points"], d))
    gauge = poincare_gauge(fld, c["n_quad"])
    t0 = time.perf_counter()
    A = gauge(x)
    transversality = float(np.max(np.abs(np.einsum("pj,pj->p", x, A))))
    curl = curl_residual(fld, gauge, x[: min(len(x), 2000)], h=c["h"])
    decay = gauge_decay_violation(fld, gauge, x)
    closed = closedness_residual(fld, x[: min(len(x), 2000)], h=1e-3, order=c["order"]) if d == 3 else 0.0
    rec.payload.update(transversality=transversality, curl_residual=curl, decay_violation=decay,
                       closedness_residual=closed, seconds=time.perf_counter() - t0)
    rec.check("transversality", transversality, 0.0, 1e-10, "lt")
    rec.check("curl_residual", curl, 0.0, 1e-6, "lt")
    rec.check("decay_bound", decay, 0.0, 1e-12, "le")
    if d == 3:
        rec.check("closedness", closed, 0.0, 1e-8, "lt")
    if c["sample_rows"]:
        out.write("gauge_samples.csv", sample_field_csv(fld, gauge, x[: c["sample_rows"]]))


def exp_nu_profile(cfg, fld, out, rec):
    c = cfg["nu"]
    radii = _linspace(c["radii"])
    res = c["n_theta"] if fld.dimension == 2 else c["grid"]
    prof = sphere.nu_profile(fld, radii, res, c["method"])
    out.write("nu_profile.csv", prof.to_csv(), ("r", "nu_B(r)", ""))
    theory = _nu_theory(fld)
    rec.theory["nu_theory"] = theory
    rec.payload.update(nu_infinity=prof.nu_infinity, method=prof.method)
    tol = 1e-4 if fld.dimension == 2 else 1e-3
    rec.check("nu_infinity", prof.nu_infinity, theory, tol, "abs")
    rec.check("nu_nonnegative", float(np.min(prof.values)), 0.0, 1e-10, "ge")
    if fld.dimension == 3:
        pot = spherical_pullback(poincare_gauge(fld))
        far = 2.0 * fld.support_radius
        resid = sphere.exactness_check(pot, far, grid=tuple(c["grid"]))
        rec.payload["exactness_residual"] = resid
        rec.check("exactness_outside_support", resid, 0.0, 1e-6, "lt")
    return prof


def _limit_nu_list(fld: MagneticField, l_max: int) -> list[float]:
    if fld.dimension == 2:
        phi = _total_flux(fld)
        vals = sorted((m - phi) ** 2 for m in range(-l_max - int(math.ceil(abs(phi))) - 1,
                                                     l_max + int(math.ceil(abs(phi))) + 2))
        return vals[: l_max + 1]
    return [ell * (ell + 1.0) for ell in range(l_max + 1)]


def exp_spectrum(cfg, fld, out, rec):
    c = cfg["spectrum"]
    d = fld.dimension
    nu_list = _limit_nu_list(fld, c["l_max"])
    exact = oscillator.sigma_L_infinity_exact(nu_list, c["n_max"])
    grid = _radial_grid(cfg, d)
    from .radial import ModeAssembler, mode_operator

    asm = ModeAssembler(grid.nodes)
    vals, labels = [], []
    for ell, nu in enumerate(nu_list):
        op = mode_operator(nu, d, assembler=asm)
        for n, lam in enumerate(op.eigenvalues(c["n_max"] + 1)):
            vals.append(lam)
            labels.append((n, ell))
    order = np.argsort(vals, kind="stable")
    numeric = oscillator.SpectrumResult(np.array(vals)[order], [labels[i] for i in order], "numeric")
    out.write("spectrum.csv", numeric.to_csv())
    out.write("spectrum_exact.csv", exact.to_csv())
    err = float(np.max(np.abs(numeric.eigenvalues - exact.eigenvalues)))
    rec.theory["lowest"] = float(exact.eigenvalues[0])
    rec.payload.update(max_error=err, lowest=float(numeric.eigenvalues[0]))
    rec.check("spectrum_max_error", err, 0.0, c["tol"], "le")


def _lambda_theory(fld: MagneticField) -> float:
    return 0.5 * (1.0 + math.sqrt(_nu_theory(fld)))


def exp_lambda_curve(cfg, fld, out, rec):
    c = cfg["lambda"]
    s = _linspace(c["s"])
    lam = oscillator.lambda_curve(fld, s, c["m_range"], _radial_grid(cfg))
    out.write("lambda_curve.csv", oscillator.curve_to_csv(s, lam), ("s", "lambda_B(s)", ""))
    theory = _lambda_theory(fld)
    rec.theory["lambda_infinity"] = theory
    rec.payload.update(s=s, lambda_B=lam)
    rec.check("lambda_lower_bound", float(np.min(lam)), 0.5, 1e-3, "ge")
    if not fld.is_zero:
        rec.check("lambda_strict", float(np.min(lam[s > 0])) if np.any(s > 0) else float(np.min(lam)),
                  0.5 + 1e-4, 0.0, "ge")
    if s[-1] >= 16.0:
        rec.check("lambda_limit", float(lam[-1]), theory, c["tol"], "abs")


def exp_resolvent_check(cfg, fld, out, rec):
    c = cfg["resolvent"]
    s = np.array(c["s"], dtype=float)
    gaps = oscillator.resolvent_convergence(fld, s)
    out.write("resolvent.csv", oscillator.resolvent_to_csv(s, gaps), ("s", "resolvent gap", "set logscale y\n"))
    rec.payload.update(s=s, gaps=gaps)
    rec.check("resolvent_decreasing", bool(np.all(np.diff(gaps) < 0.0)), True, 0.0, "true")
    rec.check("resolvent_last", float(gaps[-1]), 0.0, c["tol"], "lt")


def exp_evolve(cfg, fld, out, rec):
    c = cfg["evolve"]
    datum = heat.InitialDatum(c["datum"])
    er = heat.evolve_and_fit(fld, datum, c["s_max"], c["ds"], c["fit_window"], _radial_grid(cfg),
                             sample_every=c["sample_every"])
    out.write("evolution.csv", er.to_csv(), ("t", "||u(t)||", "set logscale xy\n"))
    out.write("fit.json", er.fit.to_json() + "\n")
    gamma = heat.gamma_theory(fld)
    tol = c["tol"] if c["tol"] is not None else (0.02 if fld.is_zero else 0.05)
    rec.theory["gamma_theory"] = gamma
    rec.payload.update(slope=er.fit.slope, intercept=er.fit.intercept, fit_residual=er.fit.residual,
                       fit_flagged=er.fit.flagged, gronwall_max_ratio=er.gronwall_max_ratio, monotone=er.monotone)
    rec.check("decay_slope", er.fit.slope, gamma, tol, "abs")
    rec.check("gronwall", er.gronwall_max_ratio, 1.0, 1e-6, "le")
    rec.check("norm_monotone", er.monotone, True, 0.0, "true")
    return er


def exp_hardy(cfg, fld, out, rec):
    c = cfg["hardy"]
    R = c["R"] if c["R"] is not None else fld.support_radius
    mesh = None
    if c["n_radial"] is not None or c["n_angular"] is not None:
        base = hardy.HardyMesh() if c["weight"] == "none" else hardy.HardyMesh(16, 32)
        n_ang = c["n_angular"] if c["n_angular"] is not None else base.n_angular
        if fld.dimension == 3 and isinstance(n_ang, int):
            n_ang = (n_ang // 2, n_ang)
        mesh = hardy.HardyMesh(c["n_radial"] or base.n_radial, n_ang)
    if c["weight"] == "none":
        est = hardy.mu_B(fld, R, mesh)
        out.write("mu_B.csv", hardy.mu_curve_to_csv([R], [est.constant]))
        rec.payload["mu_B"] = est.constant
        rec.check("mu_nonnegative", est.constant, 0.0, 1e-10, "ge")
        if fld.is_zero:
            rec.check("mu_zero_field", est.constant, 0.0, 1e-8, "le")
        else:
            rec.check("mu_positive", est.constant, 0.0, 0.0, "gt")
    else:
        est = hardy.hardy_constant(fld, c["weight"], c["r_out"], mesh)
        out.write("hardy_constants.csv", hardy.constants_to_csv([est]))
        rec.payload.update(constant=est.constant, truncation=est.truncation, sensitivity=est.sensitivity)
        rec.check("constant_nonnegative", est.constant, 0.0, 1e-10, "ge")
        if est.lower_bound is not None:
            rec.theory.update(lower_bound=est.lower_bound, mean_bound=est.mean_bound)
            rec.check("lw_lower_bound", est.constant, est.lower_bound, 0.0, "ge")
    aux = hardy.aux_inequality_check(1.0, c["trials"], cfg.seed)
    rec.payload.update(aux_worst=[aux.worst_aux1, aux.worst_aux2])
    rec.theory["aux_gamma"] = [aux.gamma_aux1, aux.gamma_aux2]
    rec.check("aux1", aux.worst_aux1, aux.gamma_aux1, 0.0, "ge")
    rec.check("aux2", aux.worst_aux2, aux.gamma_aux2, 0.0, "ge")
    dia = hardy.diamagnetic_check(poincare_gauge(fld), c["trials"], seed=cfg.seed, dimension=fld.dimension)
    rec.payload["diamagnetic_violation"] = dia
    rec.check("diamagnetic", dia, 0.0, 1e-6, "le")
    return est


def exp_full_report(cfg, fld, out, rec):
    parts = {}
    for name, fn in (("gauge-check", exp_gauge_check), ("nu-profile", exp_nu_profile),
                     ("lambda-curve", exp_lambda_curve), ("evolve", exp_evolve), ("hardy", exp_hardy)):
        if name in ("lambda-curve", "evolve") and not (fld.dimension == 2 and fld.radial_flag):
            parts[name] = "skipped: needs a radial planar field"
            continue
        sub = RunRecord(name, rec.config_hash, {}, _now())
        sub_out = _Outputs(out.dir / name, sub)
        result = fn(cfg, fld, sub_out, sub)
        sub_out.finish()
        sub.finished = _now()
        parts[name] = sub.to_json()
        for a in sub.assertions:
            a.name = f"{name}/{a.name}"
            rec.assertions.append(a)
        rec.theory.update({k: v for k, v in sub.theory.items()})
        if name == "nu-profile":
            nu_inf = result.nu_infinity
        if name == "evolve":
            gamma_fit = result.fit.slope
            cross = 0.5 * (1.0 + math.sqrt(max(nu_inf, 0.0)))
            rec.theory["gamma_from_nu"] = cross
            rec.check("gamma_fit_vs_nu", gamma_fit, cross, 0.05, "abs")
    rec.payload["parts"] = parts


EXPERIMENT_FUNCS = {
    "gauge-check": exp_gauge_check,
    "nu-profile": exp_nu_profile,
    "spectrum": exp_spectrum,
    "lambda-curve": exp_lambda_curve,
    "resolvent-check": exp_resolvent_check,
    "evolve": exp_evolve,
    "hardy": exp_hardy,
    "full-report": exp_full_report,
}


def run(cfg: ExperimentConfig, out_dir: str | Path | None = None) -> RunRecord:
    """Run one experiment, write its files and ``record.json`` and return the record.

    Solver errors are re-raised with the experiment name attached.
    """
    validate(cfg)
    out_dir = Path(out_dir if out_dir is not None else cfg["run"]["out"])
    rec = RunRecord(cfg.experiment, cfg.digest(), cfg.to_json(), _now())
    out = _Outputs(out_dir, rec)
    fld = cfg.make_field()
    try:
        EXPERIMENT_FUNCS[cfg.experiment](cfg, fld, out, rec)
    except Exception as exc:
        rec.error = f"{type(exc).__name__}: {exc}"
        rec.finished = _now()
        _write_record(out_dir, rec)
        raise RuntimeError(f"experiment {cfg.experiment!r} failed: {exc}") from exc
    out.finish()
    rec.finished = _now()
    _write_record(out_dir, rec)
    return rec


def _write_record(out_dir: Path, rec: RunRecord):
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "record.json").write_text(json.dumps(rec.to_json(), indent=2, default=_plain) + "\n")
    # append-only index of every run written below the parent directory
    with open(out_dir.parent / "runs.jsonl", "a") as fh:
        fh.write(json.dumps({"dir": out_dir.name, "experiment": rec.experiment, "config_hash": rec.config_hash,
                             "passed": rec.passed, "finished": rec.finished}) + "\n")


# ---------------------------------------------------------------------------
# sweeps


def worker_count() -> int:
    cap = os.environ.get("MAGHEAT_THREADS")
    n = os.cpu_count() or 1
    if cap:
        try:
            n = min(n, max(1, int(cap)))
        except ValueError:
            raise ConfigError(f"MAGHEAT_THREADS must be an integer, got {cap!r}") from None
    return n


def _sweep_one(args):
    cfg, axis, value, directory = args
    sec, key = SWEEP_AXES[axis]
    try:
        sub = cfg.with_value(sec, key, value)
        return run(sub, directory)
    except Exception as exc:  # a failed point is recorded, the sweep goes on
        rec = RunRecord(cfg.experiment, cfg.digest(), cfg.to_json(), _now(), _now())
        rec.error = f"{type(exc).__name__}: {exc}"
        rec.payload[axis] = value
        return rec


def sweep(cfg: ExperimentConfig, axis: str, values: Sequence, out_dir: str | Path | None = None,
          workers: int | None = None) -> list[RunRecord]:
    """Independent runs over ``values`` of ``axis``; writes ``sweep.csv``.

    Each run goes to ``<out>/<axis>=<value>/``.  Failed runs are kept in the
    list with ``error`` set.
    """
    if axis not in SWEEP_AXES:
        raise ConfigError(f"cannot sweep {axis!r}; sweepable: {', '.join(SWEEP_AXES)}")
    values = list(values)
    if not values:
        return []
    out_dir = Path(out_dir if out_dir is not None else cfg["run"]["out"])
    out_dir.mkdir(parents=True, exist_ok=True)
    cast = int if axis == "nodes" else float
    jobs = [(cfg, axis, cast(v), out_dir / f"{axis}={v}") for v in values]
    workers = worker_count() if workers is None else workers
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=min(workers, len(jobs))) as pool:
            records = list(pool.map(_sweep_one, jobs))
    else:
        records = [_sweep_one(j) for j in jobs]
    (out_dir / "sweep.csv").write_text(sweep_to_csv(axis, [j[2] for j in jobs], records))
    return records


_SUMMARY_KEYS = ("slope", "mu_B", "constant", "nu_infinity", "max_error", "transversality")


def sweep_to_csv(axis: str, values, records: Sequence[RunRecord]) -> str:
    keys = [k for k in _SUMMARY_KEYS if any(k in r.payload for r in records)]
    theory_keys = sorted({k for r in records for k, v in r.theory.items() if isinstance(v, (int, float))})
    rows = [",".join([axis, "passed", *keys, *theory_keys, "error"])]
    for v, r in zip(values, records):
        cells = [repr(v), str(r.passed)]
        cells += [repr(r.payload.get(k)) if k in r.payload else "" for k in keys]
        cells += [repr(r.theory.get(k)) if k in r.theory else "" for k in theory_keys]
        cells.append((r.error or "").replace(",", ";"))
        rows.append(",".join(cells))
    return "\n".join(rows) + "\n"
