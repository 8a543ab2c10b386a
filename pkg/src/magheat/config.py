"""Experiment configuration: an INI file with a fixed schema.

Every key has a default, so a configuration file only lists what it
changes.  Unknown sections or keys and out-of-range values are rejected
with the file line that caused them.

Example::

    [field]
    dimension = 2
    preset = radial-bump
    flux = 0.5

    [evolve]
    s_max = 16
    ds = 1e-3
"""

from __future__ import annotations

import configparser
import hashlib
import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable

from .fields import PRESETS, FieldSpec, MagneticField, make_field

EXPERIMENTS = ("gauge-check", "nu-profile", "spectrum", "lambda-curve", "resolvent-check", "evolve", "hardy",
               "full-report")
SWEEP_AXES = {"flux": ("field", "flux"), "R": ("field", "radius"), "nodes": ("grid", "nodes"),
              "ds": ("evolve", "ds")}


class ConfigError(ValueError):
    """Invalid configuration; the message names the key and line."""


# ---------------------------------------------------------------------------
# value parsers


def _float(text: str) -> float:
    return float(text)


def _int(text: str) -> int:
    return int(text)


def _optional(parse):
    def inner(text: str):
        return None if text.strip().lower() in ("", "none", "auto") else parse(text)

    return inner


def parse_range(text: str) -> tuple[float, float, int]:
    """``lo:hi:n`` -> (lo, hi, n)."""
    parts = text.split(":")
    if len(parts) != 3:
        raise ValueError(f"expected lo:hi:n, got {text!r}")
    lo, hi, n = float(parts[0]), float(parts[1]), int(parts[2])
    if n < 1 or hi < lo:
        raise ValueError(f"bad range {text!r}")
    return lo, hi, n


def parse_window(text: str) -> tuple[float, float]:
    parts = text.split(":")
    if len(parts) != 2:
        raise ValueError(f"expected a:b, got {text!r}")
    a, b = float(parts[0]), float(parts[1])
    if not a < b:
        raise ValueError(f"empty window {text!r}")
    return a, b


def parse_floats(text: str) -> tuple[float, ...]:
    return tuple(float(v) for v in text.replace(";", ",").split(",") if v.strip())


def parse_ints(text: str) -> tuple[int, ...]:
    return tuple(int(v) for v in text.split(",") if v.strip())


def parse_centers(text: str) -> tuple[tuple[float, ...], ...]:
    """``x1,y1; x2,y2`` -> ((x1, y1), (x2, y2))."""
    return tuple(tuple(float(v) for v in item.split(",")) for item in text.split(";") if item.strip())


def _choice(*options):
    def inner(text: str):
        v = text.strip()
        if v not in options:
            raise ValueError(f"must be one of {', '.join(options)}")
        return v

    return inner


@dataclass(frozen=True)
class Key:
    parse: Callable[[str], Any]
    default: Any
    check: Callable[[Any], bool] | None = None
    doc: str = ""


def _pos(v) -> bool:
    return v > 0


SCHEMA: dict[str, dict[str, Key]] = {
    "field": {
        "dimension": Key(_int, 2, lambda v: v in (2, 3), "2 or 3"),
        "preset": Key(str, "radial-bump", lambda v: v in PRESETS[2] + PRESETS[3], "field preset"),
        "flux": Key(_optional(_float), None, None, "total flux (planar presets)"),
        "radius": Key(_float, 1.0, _pos, "support radius R"),
        "amplitude": Key(_optional(_float), None, None, "amplitude (curl-bump)"),
        "centers": Key(_optional(parse_centers), None, None, "bump centres 'x,y; x,y'"),
    },
    "run": {
        "seed": Key(_int, 0, lambda v: v >= 0, "seed of randomised trials"),
        "out": Key(str, "runs", None, "output directory"),
    },
    "gauge": {
        "points": Key(_int, 10_000, lambda v: 1 <= v <= 10**6, "number of sample points"),
        "n_quad": Key(_int, 64, lambda v: v >= 8, "Gauss nodes per gauge segment"),
        "h": Key(_float, 1e-4, lambda v: 0 < v < 1e-1, "difference step"),
        "order": Key(_int, 8, lambda v: v in (2, 4, 6, 8), "closedness stencil order"),
        "sample_rows": Key(_int, 200, lambda v: v >= 0, "rows written to gauge_samples.csv"),
    },
    "nu": {
        "radii": Key(parse_range, (0.25, 2.0, 8), None, "lo:hi:n"),
        "method": Key(_choice("auto", "exact", "numeric"), "auto"),
        "n_theta": Key(_int, 512, lambda v: v >= 32, "circle resolution"),
        "grid": Key(parse_ints, (24, 48), lambda v: len(v) == 2 and v[0] >= 4 and v[1] >= 8, "sphere n_phi,n_theta"),
    },
    "grid": {
        "rho_min": Key(_float, 1e-4, _pos),
        "rho_max": Key(_float, 20.0, _pos),
        "nodes": Key(_int, 4000, lambda v: v >= 16),
    },
    "spectrum": {
        "n_max": Key(_int, 2, lambda v: v >= 0),
        "l_max": Key(_int, 2, lambda v: v >= 0),
        "tol": Key(_float, 1e-3, _pos),
    },
    "lambda": {
        "s": Key(parse_range, (0.0, 16.0, 9), None, "lo:hi:n"),
        "m_range": Key(_optional(_int), None, None, "mode range (auto: ceil|flux|+3)"),
        "tol": Key(_float, 5e-3, _pos),
    },
    "resolvent": {
        "s": Key(parse_floats, (4.0, 8.0, 12.0, 16.0), lambda v: len(v) >= 1),
        "tol": Key(_float, 1e-2, _pos),
    },
    "evolve": {
        "s_max": Key(_float, 16.0, lambda v: v >= 8.0),
        "ds": Key(_float, 1e-3, lambda v: 0 < v <= 0.1),
        "fit_window": Key(_optional(parse_window), None, None, "a:b in s"),
        "datum": Key(_choice("multimode", "eigenmode", "gaussian"), "multimode"),
        "sample_every": Key(_float, 0.01, _pos),
        "tol": Key(_optional(_float), None, None, "slope tolerance (auto: 0.02 zero field, 0.05 otherwise)"),
    },
    "hardy": {
        "weight": Key(_choice("none", "log", "lw"), "none"),
        "R": Key(_optional(_float), None, None, "disc radius for mu_B (auto: support radius)"),
        "r_out": Key(_optional(_float), None, None, "truncation radius (auto: 40 R)"),
        "n_radial": Key(_optional(_int), None, None),
        "n_angular": Key(_optional(_int), None, None),
        "trials": Key(_int, 1000, lambda v: v >= 1, "random trials of the auxiliary checks"),
    },
}


@dataclass
class ExperimentConfig:
    experiment: str
    values: dict[str, dict[str, Any]] = field(default_factory=dict)
    source: str | None = None

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {self.experiment!r}; choose from {', '.join(EXPERIMENTS)}")
        full = {sec: {k: key.default for k, key in keys.items()} for sec, keys in SCHEMA.items()}
        for sec, kv in self.values.items():
            if sec not in SCHEMA:
                raise ConfigError(f"unknown section [{sec}]")
            for k, v in kv.items():
                if k not in SCHEMA[sec]:
                    raise ConfigError(f"unknown key {k!r} in [{sec}]")
                full[sec][k] = v
        self.values = full

    def __getitem__(self, section: str) -> dict[str, Any]:
        return self.values[section]

    @property
    def seed(self) -> int:
        return self.values["run"]["seed"]

    def field_spec(self) -> FieldSpec:
        f = self.values["field"]
        return FieldSpec(f["preset"], f["flux"], f["radius"], f["amplitude"], f["centers"])

    def make_field(self) -> MagneticField:
        return make_field(self.values["field"]["dimension"], self.field_spec())

    def with_value(self, section: str, key: str, value) -> "ExperimentConfig":
        vals = json.loads(json.dumps(self.values, default=list))
        vals[section][key] = value
        out = ExperimentConfig(self.experiment, _retuple(vals), self.source)
        validate(out)
        return out

    def to_json(self) -> dict:
        return {"experiment": self.experiment, "values": self.values}

    def digest(self) -> str:
        text = json.dumps(self.to_json(), sort_keys=True, default=list)
        return hashlib.sha256(text.encode()).hexdigest()


def _retuple(vals):
    # JSON round trips turn tuples into lists; the schema parsers produce tuples
    def conv(v):
        if isinstance(v, list):
            return tuple(conv(x) for x in v)
        return v

    return {sec: {k: conv(v) for k, v in kv.items()} for sec, kv in vals.items()}


def validate(cfg: ExperimentConfig, lines: dict | None = None) -> None:
    """Range checks and cross-key consistency."""
    lines = lines or {}

    def where(sec, key):
        ln = lines.get((sec, key))
        return f"[{sec}] {key}" + (f" (line {ln})" if ln else "")

    for sec, keys in SCHEMA.items():
        for k, key in keys.items():
            v = cfg.values[sec][k]
            if v is not None and key.check is not None and not key.check(v):
                raise ConfigError(f"{where(sec, k)}: value {v!r} out of range ({key.doc or 'see schema'})")
    f = cfg.values["field"]
    if f["preset"] not in PRESETS[f["dimension"]]:
        raise ConfigError(f"{where('field', 'preset')}: preset {f['preset']!r} is not available in d={f['dimension']}")
    g = cfg.values["grid"]
    if not g["rho_min"] < g["rho_max"]:
        raise ConfigError(f"{where('grid', 'rho_min')}: need rho_min < rho_max")
    ev = cfg.values["evolve"]
    if ev["fit_window"] is not None:
        a, b = ev["fit_window"]
        if not (ev["s_max"] / 2.0 <= a and b <= ev["s_max"]):
            raise ConfigError(f"{where('evolve', 'fit_window')}: window must lie in [s_max/2, s_max]")


_SECTION = re.compile(r"^\s*\[([^\]]+)\]")
_KEY = re.compile(r"^\s*([^=:#;\s][^=:]*?)\s*[=:]")


def _line_map(text: str) -> dict:
    out, sec = {}, None
    for i, line in enumerate(text.splitlines(), start=1):
        m = _SECTION.match(line)
        if m:
            sec = m.group(1).strip()
            out.setdefault((sec, None), i)
            continue
        m = _KEY.match(line)
        if m and sec is not None:
            out.setdefault((sec, m.group(1).strip()), i)
    return out


def parse_config_text(text: str, experiment: str, source: str | None = None) -> ExperimentConfig:
    lines = _line_map(text)

    def where(sec, key=None):
        ln = lines.get((sec, key))
        loc = f"[{sec}]" + (f" {key}" if key else "")
        return loc + (f" (line {ln})" if ln else "")

    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    cp.optionxform = str
    try:
        cp.read_string(text, source=source or "<config>")
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from None
    values: dict[str, dict[str, Any]] = {}
    for sec in cp.sections():
        if sec not in SCHEMA:
            raise ConfigError(f"{where(sec)}: unknown section; known: {', '.join(SCHEMA)}")
        values[sec] = {}
        for k, raw in cp.items(sec):
            if k not in SCHEMA[sec]:
                raise ConfigError(f"{where(sec, k)}: unknown key; known: {', '.join(SCHEMA[sec])}")
            try:
                values[sec][k] = SCHEMA[sec][k].parse(raw)
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"{where(sec, k)}: cannot parse {raw!r}: {exc}") from None
    cfg = ExperimentConfig(experiment, values, source)
    validate(cfg, lines)
    return cfg


def load_config(path: str | Path | None, experiment: str) -> ExperimentConfig:
    """Read a configuration file; ``None`` gives the defaults."""
    if path is None:
        cfg = ExperimentConfig(experiment)
        validate(cfg)
        return cfg
    path = Path(path)
    return parse_config_text(path.read_text(), experiment, str(path))


def schema_text() -> str:
    """Human-readable schema, printed by ``magheat --schema``."""
    rows = []
    for sec, keys in SCHEMA.items():
        rows.append(f"[{sec}]")
        for k, key in keys.items():
            default = key.default
            if key.parse in (parse_range, parse_window):
                default = ":".join(str(v) for v in default)
            elif isinstance(default, tuple):
                default = ",".join(str(v) for v in default)
            rows.append(f"  {k} = {default}" + (f"    # {key.doc}" if key.doc else ""))
    return "\n".join(rows) + "\n"
