"""Scenario configuration: parsing, validation and resolution to canonical form.

A config is a JSON object. :func:`resolve` turns it into a *canonical*
config in which every quantity has one representation (MHz, gauss, radians,
per-wire amplitude, explicit defaults). Simulation objects are built only
from the canonical form by :func:`build`, so resolving a canonical config
again is the identity and re-running a manifest reproduces its outputs.
"""
from __future__ import annotations

import copy
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .errors import InvalidInputError, NVPolarError
from .experiments import PhaseAverageSpec, RamseySpec, _resolve_phi, check_ramsey_sampling
from .model import (
    POLARIZATION_PHASES, SQRT2, DriveConfig, SystemParams, drive_for_lambda, mhz,
    rwa_rabi_frequency, to_mhz,
)
from .propagator import PropagationSettings

SCENARIOS = ("rabi", "phase-scan", "ramsey", "pipulse-sweep", "axial-demo")
CONFIG_DIR = Path(__file__).parent / "configs"

_SECTIONS = {
    "system": {"D_MHz", "gamma_MHz_per_G", "B_ext_G", "omega_minus_MHz", "omega_plus_MHz"},
    "drive": {"amplitude_MHz", "amplitude_convention", "lambda", "lambda_reference",
              "carrier_MHz", "phi", "polarization", "phi_g", "omega_z_MHz", "omega_z_ratio"},
    "grids": {"t_us", "phi", "lambda", "tau_us"},
    "averaging": {"n_phases", "sampling", "seed"},
    "propagation": {"dt_max_us", "substeps_per_period", "method", "model"},
    "analysis": {"prominence", "window", "pad"},
    "ramsey": {"hyperfine", "A_MHz", "calibration"},
    "sweep": {"polarization", "omega_z_ratio", "window_tpi", "n_points", "lambda_reference"},
    "output": {"format"},
}
_TOP = {"scenario", "tool_version", "description"} | set(_SECTIONS)

_GRIDS_NEEDED = {
    "rabi": ("t_us",),
    "phase-scan": ("t_us", "phi"),
    "axial-demo": ("t_us", "phi"),
    "ramsey": ("tau_us",),
    "pipulse-sweep": ("lambda",),
}

RAMSEY_CARRIER_OFFSET_MHZ = -10.0  # below both transitions keeps the three lines apart


class ConfigError(InvalidInputError):
    """Invalid configuration; ``field`` is the dotted path of the culprit."""

    def __init__(self, message, field=None, line=None):
        super().__init__(message)
        self.field = field
        self.line = line

    def as_dict(self):
        out = {"error": "config", "message": str(self)}
        if self.field is not None:
            out["field"] = self.field
        if self.line is not None:
            out["line"] = self.line
        return out


def load(path) -> dict:
    """Read a config file, resolving bare bundled names such as ``fig2b``."""
    p = Path(path)
    if not p.exists():
        bundled = CONFIG_DIR / (p.name if p.suffix else p.name + ".config")
        if p.parent == Path(".") and bundled.exists():
            p = bundled
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"JSON syntax error: {exc.msg} (column {exc.colno})",
                          line=exc.lineno) from exc
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    return raw


def bundled_names():
    return sorted(f.stem for f in CONFIG_DIR.glob("*.config"))


def apply_override(raw: dict, assignment: str) -> dict:
    """Set ``a.b.c=value`` in ``raw``; the value is parsed as JSON when possible."""
    key, sep, text = assignment.partition("=")
    if not sep or not key:
        raise ConfigError(f"override must look like key=value, got {assignment!r}")
    try:
        value = json.loads(text)
    except json.JSONDecodeError:
        value = text
    parts = key.split(".")
    node = raw
    for i, part in enumerate(parts[:-1]):
        here = ".".join(parts[:i + 1])
        if i == 0 and part not in _SECTIONS:
            raise ConfigError(f"unknown config section {part!r}", field=here)
        node = node.setdefault(part, {})
        if not isinstance(node, dict):
            raise ConfigError("cannot override inside a non-object", field=here)
    node[parts[-1]] = value
    return raw


# ---- field readers -------------------------------------------------------

def _num(sec, name, path, default=None, *, positive=False, nonneg=False, required=False):
    if name not in sec or sec[name] is None:
        if required:
            raise ConfigError("missing required field", field=f"{path}.{name}")
        return default
    v = sec[name]
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        raise ConfigError(f"expected a finite number, got {v!r}", field=f"{path}.{name}")
    if positive and not v > 0:
        raise ConfigError(f"must be positive, got {v!r}", field=f"{path}.{name}")
    if nonneg and not v >= 0:
        raise ConfigError(f"must be non-negative, got {v!r}", field=f"{path}.{name}")
    return v


def _int(sec, name, path, default, minimum):
    v = sec.get(name, default)
    if isinstance(v, bool) or not isinstance(v, int) or v < minimum:
        raise ConfigError(f"expected an integer >= {minimum}, got {v!r}", field=f"{path}.{name}")
    return v


def _choice(sec, name, path, default, choices):
    v = sec.get(name, default)
    if v not in choices:
        raise ConfigError(f"expected one of {list(choices)}, got {v!r}", field=f"{path}.{name}")
    return v


def _section(raw, name):
    sec = raw.get(name, {})
    if not isinstance(sec, dict):
        raise ConfigError("section must be an object", field=name)
    unknown = set(sec) - _SECTIONS[name]
    if unknown:
        key = sorted(unknown)[0]
        raise ConfigError(f"unknown key {key!r}", field=f"{name}.{key}")
    return sec


def _grid(spec, path):
    if isinstance(spec, dict):
        unknown = set(spec) - {"start", "stop", "count"}
        if unknown:
            raise ConfigError(f"unknown range key {sorted(unknown)[0]!r}", field=path)
        start = _num(spec, "start", path, required=True)
        stop = _num(spec, "stop", path, required=True)
        count = _int(spec, "count", path, None, 1) if "count" in spec else None
        if count is None:
            raise ConfigError("missing required field", field=f"{path}.count")
        if count > 1 and not stop > start:
            raise ConfigError("range stop must exceed start", field=path)
        return {"start": start, "stop": stop, "count": count}
    if isinstance(spec, list):
        if not spec:
            raise ConfigError("grid must not be empty", field=path)
        for i, v in enumerate(spec):
            _num({"v": v}, "v", f"{path}[{i}]")
        if any(b <= a for a, b in zip(spec, spec[1:])):
            raise ConfigError("grid must be strictly increasing", field=path)
        return list(spec)
    raise ConfigError("grid must be a list or a {start, stop, count} object", field=path)


def grid_values(spec) -> np.ndarray:
    if isinstance(spec, dict):
        return np.linspace(spec["start"], spec["stop"], spec["count"])
    return np.asarray(spec, dtype=float)


# ---- resolution ----------------------------------------------------------

def _resolve_system(raw):
    sec = _section(raw, "system")
    gamma = _num(sec, "gamma_MHz_per_G", "system", 2.8, positive=True)
    if "omega_minus_MHz" in sec or "omega_plus_MHz" in sec:
        if "D_MHz" in sec or "B_ext_G" in sec:
            raise ConfigError("give either D_MHz/B_ext_G or omega_minus_MHz/omega_plus_MHz",
                              field="system")
        wm = _num(sec, "omega_minus_MHz", "system", required=True, positive=True)
        wp = _num(sec, "omega_plus_MHz", "system", required=True, positive=True)
        if wp < wm:
            raise ConfigError("omega_plus_MHz must not be below omega_minus_MHz",
                              field="system.omega_plus_MHz")
        D, B = 0.5 * (wp + wm), 0.5 * (wp - wm) / gamma
    else:
        D = _num(sec, "D_MHz", "system", 2870.0, positive=True)
        B = _num(sec, "B_ext_G", "system", 0.0, nonneg=True)
    if not D - gamma * B > 0:
        raise ConfigError("bias field pushes omega_minus to or below zero", field="system.B_ext_G")
    return {"D_MHz": D, "gamma_MHz_per_G": gamma, "B_ext_G": B}


def _phi_value(sec, path, default):
    if "polarization" in sec and "phi" in sec:
        raise ConfigError("give either phi or polarization", field=path)
    if "polarization" in sec:
        name = sec["polarization"]
        if name not in POLARIZATION_PHASES:
            raise ConfigError(f"expected one of {sorted(POLARIZATION_PHASES)}, got {name!r}",
                              field=f"{path}.polarization")
        return POLARIZATION_PHASES[name]
    return _num(sec, "phi", path, default)


def _resolve_drive(raw, scenario, system):
    sec = _section(raw, "drive")
    p = SystemParams.from_mhz(**system)
    phi = _phi_value(sec, "drive", 0.0)
    phi_g = _num(sec, "phi_g", "drive", 0.0)
    scanned = scenario in ("phase-scan", "axial-demo")
    if scenario == "ramsey":
        carrier = _num(sec, "carrier_MHz", "drive", to_mhz(p.omega_minus) + RAMSEY_CARRIER_OFFSET_MHZ,
                       positive=True)
    else:
        carrier = _num(sec, "carrier_MHz", "drive", to_mhz(p.omega_minus), positive=True)
        if abs(carrier - to_mhz(p.omega_minus)) > 1e-9 * to_mhz(p.omega_minus):
            raise ConfigError("this scenario needs a carrier resonant with omega_minus "
                              f"({to_mhz(p.omega_minus)!r} MHz)", field="drive.carrier_MHz")

    has_amp, has_lam = "amplitude_MHz" in sec, "lambda" in sec
    if has_amp == has_lam:
        raise ConfigError("give exactly one of amplitude_MHz or lambda", field="drive")
    if has_amp:
        amp = _num(sec, "amplitude_MHz", "drive", nonneg=True)
        conv = _choice(sec, "amplitude_convention", "drive", "per-wire",
                       ("per-wire", "effective-circular"))
        per_wire = amp if conv == "per-wire" else amp / SQRT2
        if "lambda_reference" in sec:
            raise ConfigError("lambda_reference only applies with lambda",
                              field="drive.lambda_reference")
    else:
        if "amplitude_convention" in sec:
            raise ConfigError("amplitude_convention only applies with amplitude_MHz",
                              field="drive.amplitude_convention")
        lam = _num(sec, "lambda", "drive", nonneg=True)
        ref = _choice(sec, "lambda_reference", "drive", "circular" if scanned else "drive",
                      ("drive", "circular"))
        try:
            per_wire = to_mhz(drive_for_lambda(p, lam, phi, reference=ref).omega_w)
        except InvalidInputError as exc:
            raise ConfigError(str(exc), field="drive.lambda") from exc

    if "omega_z_MHz" in sec and "omega_z_ratio" in sec:
        raise ConfigError("give either omega_z_MHz or omega_z_ratio", field="drive")
    if "omega_z_ratio" in sec:
        omega_z = _num(sec, "omega_z_ratio", "drive", nonneg=True) * per_wire
    else:
        omega_z = _num(sec, "omega_z_MHz", "drive", 0.0, nonneg=True)
    return {"amplitude_MHz": per_wire, "carrier_MHz": carrier, "phi": phi, "phi_g": phi_g,
            "omega_z_MHz": omega_z}


def resolve(raw: dict) -> dict:
    """Validate ``raw`` and return the canonical config.

    Raises
    ------
    ConfigError
        With the dotted path of the offending field.
    """
    raw = copy.deepcopy(raw)
    unknown = set(raw) - _TOP
    if unknown:
        key = sorted(unknown)[0]
        raise ConfigError(f"unknown key {key!r}", field=key)
    scenario = raw.get("scenario")
    if scenario not in SCENARIOS:
        raise ConfigError(f"expected one of {list(SCENARIOS)}, got {scenario!r}", field="scenario")

    out = {"scenario": scenario, "tool_version": __version__}
    if "description" in raw:
        out["description"] = str(raw["description"])
    out["system"] = _resolve_system(raw)
    if scenario != "pipulse-sweep":
        out["drive"] = _resolve_drive(raw, scenario, out["system"])
    elif raw.get("drive"):
        raise ConfigError("pipulse-sweep builds its drives from the lambda grid; "
                          "use the sweep section", field="drive")

    gsec = _section(raw, "grids")
    grids = {}
    for name in _GRIDS_NEEDED[scenario]:
        if name not in gsec:
            raise ConfigError("missing required grid", field=f"grids.{name}")
        grids[name] = _grid(gsec[name], f"grids.{name}")
    extra = set(gsec) - set(_GRIDS_NEEDED[scenario])
    if extra:
        key = sorted(extra)[0]
        raise ConfigError(f"grid not used by scenario {scenario!r}", field=f"grids.{key}")
    out["grids"] = grids
    for name in ("t_us", "tau_us"):
        if name in grids:
            v = grid_values(grids[name])
            if v[0] != 0 or v.size < 2:
                raise ConfigError("time grid must start at 0 and have at least two points",
                                  field=f"grids.{name}")
    if "lambda" in grids and np.any(grid_values(grids["lambda"]) <= 0):
        raise ConfigError("lambda values must be positive", field="grids.lambda")

    asec = _section(raw, "averaging")
    out["averaging"] = {
        "n_phases": _int(asec, "n_phases", "averaging", 300, 1),
        "sampling": _choice(asec, "sampling", "averaging", "uniform-grid",
                            ("uniform-grid", "seeded-uniform-random")),
        "seed": _int(asec, "seed", "averaging", 0, 0),
    }
    psec = _section(raw, "propagation")
    out["propagation"] = {
        "dt_max_us": _num(psec, "dt_max_us", "propagation", 1e-3, positive=True),
        "substeps_per_period": _int(psec, "substeps_per_period", "propagation", 100, 50),
        "method": _choice(psec, "method", "propagation", "cf4", ("cf4", "midpoint")),
        "model": _choice(psec, "model", "propagation", "tls", ("tls", "three-level")),
    }
    ansec = _section(raw, "analysis")
    out["analysis"] = {
        "prominence": _num(ansec, "prominence", "analysis", 0.05, positive=True),
        "window": _choice(ansec, "window", "analysis", "hann", ("hann", "none")),
        "pad": _int(ansec, "pad", "analysis", 8, 1),
    }
    if scenario == "ramsey":
        rsec = _section(raw, "ramsey")
        out["ramsey"] = {
            "hyperfine": _choice(rsec, "hyperfine", "ramsey", "three-line", ("off", "three-line")),
            "A_MHz": _num(rsec, "A_MHz", "ramsey", 2.16, nonneg=True),
            "calibration": _choice(rsec, "calibration", "ramsey", "numeric",
                                   ("numeric", "analytic")),
        }
    elif raw.get("ramsey"):
        raise ConfigError("section only applies to the ramsey scenario", field="ramsey")
    if scenario == "pipulse-sweep":
        ssec = _section(raw, "sweep")
        pol = ssec.get("polarization", "linear")
        if isinstance(pol, str):
            if pol not in POLARIZATION_PHASES:
                raise ConfigError(f"expected one of {sorted(POLARIZATION_PHASES)} or a phase, "
                                  f"got {pol!r}", field="sweep.polarization")
        else:
            pol = _num(ssec, "polarization", "sweep")
        out["sweep"] = {
            "polarization": pol,
            "omega_z_ratio": _num(ssec, "omega_z_ratio", "sweep", 0.0, nonneg=True),
            "window_tpi": _num(ssec, "window_tpi", "sweep", 3.0, positive=True),
            "n_points": _int(ssec, "n_points", "sweep", 601, 5),
            "lambda_reference": _choice(ssec, "lambda_reference", "sweep", "drive",
                                        ("drive", "circular")),
        }
        try:
            if out["sweep"]["lambda_reference"] == "drive":
                phi = _resolve_phi(pol)
                if rwa_rabi_frequency(1.0, phi) < 1e-12:
                    raise InvalidInputError("polarization has no co-rotating component; "
                                            "use lambda_reference 'circular'")
        except InvalidInputError as exc:
            raise ConfigError(str(exc), field="sweep.polarization") from exc
    elif raw.get("sweep"):
        raise ConfigError("section only applies to the pipulse-sweep scenario", field="sweep")
    osec = _section(raw, "output")
    out["output"] = {"format": _choice(osec, "format", "output", "csv", ("csv", "json"))}

    # constructing the objects catches anything the field checks missed
    try:
        build(out)
    except ConfigError:
        raise
    except NVPolarError as exc:
        raise ConfigError(str(exc)) from exc
    return out


@dataclass
class Built:
    """Simulation objects of a canonical config."""

    system: SystemParams
    drive: DriveConfig | None
    avg: PhaseAverageSpec
    settings: PropagationSettings
    ramsey: RamseySpec | None


def build(c: dict) -> Built:
    system = SystemParams.from_mhz(**c["system"])
    drive = None
    if "drive" in c:
        dr = c["drive"]
        drive = DriveConfig(omega_w=mhz(dr["amplitude_MHz"]), carrier=mhz(dr["carrier_MHz"]),
                            phi=dr["phi"], phi_g=dr["phi_g"], omega_z=mhz(dr["omega_z_MHz"]))
    a = c["averaging"]
    avg = PhaseAverageSpec(n_phases=a["n_phases"], sampling=a["sampling"], seed=a["seed"])
    pr = c["propagation"]
    settings = PropagationSettings(dt_max=pr["dt_max_us"],
                                   substeps_per_period=pr["substeps_per_period"],
                                   method=pr["method"])
    ramsey = None
    if c["scenario"] == "ramsey":
        r = c["ramsey"]
        ramsey = RamseySpec(tau=grid_values(c["grids"]["tau_us"]), hyperfine=r["hyperfine"],
                            A=mhz(r["A_MHz"]), calibration=r["calibration"])
        check_ramsey_sampling(system, drive, ramsey)
    return Built(system, drive, avg, settings, ramsey)
