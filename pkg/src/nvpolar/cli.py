"""Command-line runner for the bundled and user-supplied scenarios.

Usage::

    nvpolar --config fig2b --out results/ [--threads N] [--format csv|json]
            [--seed K] [--override section.key=value ...]

Exit codes: 0 success, 2 invalid configuration, 3 computation failure,
4 I/O failure. Errors are reported on stderr as one JSON object.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__, analysis, config, experiments
from .errors import NVPolarError
from .model import TWO_PI, to_mhz

EXIT_OK, EXIT_CONFIG, EXIT_COMPUTE, EXIT_IO = 0, 2, 3, 4
MANIFEST = "manifest.json"


class Table:
    """Named columns written as one CSV or JSON file."""

    def __init__(self, name, columns):
        self.name = name
        self.columns = {k: np.asarray(v) for k, v in columns.items()}

    def rows(self):
        cols = list(self.columns.values())
        return zip(*cols) if cols else iter(())


def _fmt(x):
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    x = float(x)
    return "nan" if math.isnan(x) else f"{x:.15g}"


def _json_num(x):
    if isinstance(x, (int, np.integer)):
        return int(x)
    x = float(x)
    return None if math.isnan(x) else float(f"{x:.15g}")


def _csv_text(table):
    lines = [f"# manifest: {MANIFEST}", ",".join(table.columns)]
    lines += [",".join(_fmt(v) for v in row) for row in table.rows()]
    return "\n".join(lines) + "\n"


def _json_text(table):
    data = {k: [_json_num(v) for v in col] for k, col in table.columns.items()}
    doc = {"manifest": MANIFEST, "columns": list(table.columns), "data": data}
    return json.dumps(doc, indent=1) + "\n"


def _dump(obj):
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


# ---- scenarios -----------------------------------------------------------

def _run_rabi(c, b, threads):
    t = config.grid_values(c["grids"]["t_us"])
    tr = experiments.rabi_trace(b.system, b.drive, t, b.avg, model=c["propagation"]["model"],
                                settings=b.settings)
    return [Table("trace", {"t_us": t, "p0": tr.p0, "p_minus1": tr.p_minus1,
                            "p_plus1": tr.p_plus1})], None


def _map_table(m):
    n_phi, n_t = m.p0.shape
    return Table("phase_map", {
        "phi_rad": np.repeat(m.phis, n_t),
        "t_us": np.tile(m.times, n_phi),
        "p0": m.p0.ravel(),
    })


def _run_phase_scan(c, b, threads):
    m = experiments.phase_scan(b.system, b.drive, config.grid_values(c["grids"]["phi"]),
                               config.grid_values(c["grids"]["t_us"]), b.avg, b.settings,
                               workers=threads)
    return [_map_table(m)], None


def _run_axial(c, b, threads):
    m = experiments.axial_scenario(b.system, b.drive, config.grid_values(c["grids"]["phi"]),
                                   config.grid_values(c["grids"]["t_us"]), b.avg, b.settings,
                                   workers=threads)
    dom = Table("dominant", {"phi_rad": m.phis, "dominant_MHz": m.dominant_MHz})
    return [_map_table(m), dom], None


def _run_ramsey(c, b, threads):
    an = c["analysis"]
    r = experiments.ramsey_scan(b.system, b.drive, b.ramsey)
    s = analysis.spectrum(r.tau, r.simulated, window=an["window"], pad=an["pad"])
    est = analysis.infer_polarization(s, r.detuning)
    tables = [
        Table("trace", {"tau_us": r.tau, "p0": r.simulated, "p0_closed_form": r.closed_form}),
        Table("spectrum", {"freq_MHz": s.freqs, "amplitude": s.amplitudes}),
    ]
    pw, qw = r.polarization.weights
    summary = {
        "eps_minus_sq": _json_num(est.eps_minus_sq),
        "uncertainty": _json_num(est.uncertainty),
        "residual": _json_num(est.residual),
        "eps_minus_sq_drive": _json_num(pw),
        "eps_plus_sq_drive": _json_num(qw),
        "t_pi2_us": _json_num(r.t_pulse),
        "delta_minus_MHz": _json_num(to_mhz(r.detuning.delta_minus)),
        "delta_plus_MHz": _json_num(to_mhz(r.detuning.delta_plus)),
        "peaks": [[_json_num(f), _json_num(a)] for f, a in s.peaks],
    }
    return tables, summary


def _run_sweep(c, b, threads):
    sw = c["sweep"]
    sr = experiments.pi_pulse_sweep(
        b.system, sw["polarization"], config.grid_values(c["grids"]["lambda"]), b.avg,
        omega_z_ratio=sw["omega_z_ratio"], window=sw["window_tpi"], n_points=sw["n_points"],
        prominence=c["analysis"]["prominence"], reference=sw["lambda_reference"],
        settings=b.settings, workers=threads)
    sweep = Table("sweep", {
        "lambda": sr.column("lam"),
        "t_m_us": sr.column("t_m"),
        "fidelity": sr.column("fidelity"),
        "omega_eff_MHz": sr.column("omega_eff"),
        "omega_MHz": sr.column("omega_rabi"),
        "amplitude_MHz": sr.column("omega_w"),
        "n_minima": np.array([r.n_minima for r in sr.records], dtype=int),
    })
    fid, rate = analysis.sweep_curves(sr)
    return [sweep, Table("fidelity_curve", fid), Table("rate_curve", rate)], None


RUNNERS = {
    "rabi": _run_rabi,
    "phase-scan": _run_phase_scan,
    "axial-demo": _run_axial,
    "ramsey": _run_ramsey,
    "pipulse-sweep": _run_sweep,
}


# ---- entry point ---------------------------------------------------------

def _parser():
    ap = argparse.ArgumentParser(
        prog="nvpolar",
        description="Simulate polarized microwave driving of an NV spin.",
        epilog="Bundled configs: " + ", ".join(config.bundled_names()))
    ap.add_argument("--config", required=True,
                    help="config file, or the name of a bundled config (e.g. fig2b)")
    ap.add_argument("--out", default=".", help="output directory (default: current)")
    ap.add_argument("--threads", type=int, default=1, help="worker threads, 0 = one per CPU")
    ap.add_argument("--format", choices=("csv", "json"), help="table format")
    ap.add_argument("--seed", type=int, help="seed for random phase sampling")
    ap.add_argument("--override", action="append", default=[], metavar="KEY=VALUE",
                    help="dotted-path config override, value parsed as JSON; repeatable")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    return ap


def _fail(code, payload):
    sys.stderr.write(json.dumps(payload) + "\n")
    return code


def main(argv=None) -> int:
    ap = _parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK

    try:
        raw = config.load(args.config)
        for item in args.override:
            config.apply_override(raw, item)
        if args.seed is not None:
            raw.setdefault("averaging", {})["seed"] = args.seed
        if args.format is not None:
            raw.setdefault("output", {})["format"] = args.format
        if args.threads < 0:
            raise config.ConfigError("threads must be >= 0", field="--threads")
        canonical = config.resolve(raw)
        built = config.build(canonical)
    except config.ConfigError as exc:
        return _fail(EXIT_CONFIG, exc.as_dict())
    except NVPolarError as exc:
        return _fail(EXIT_CONFIG, {"error": "config", "message": str(exc)})

    threads = args.threads or os.cpu_count() or 1
    try:
        with np.errstate(all="raise"):
            tables, summary = RUNNERS[canonical["scenario"]](canonical, built, threads)
    except (NVPolarError, FloatingPointError, np.linalg.LinAlgError) as exc:
        return _fail(EXIT_COMPUTE, {"error": "computation", "kind": type(exc).__name__,
                                    "message": str(exc)})

    fmt = canonical["output"]["format"]
    files = {MANIFEST: _dump(canonical)}
    for t in tables:
        files[f"{t.name}.{fmt}"] = _csv_text(t) if fmt == "csv" else _json_text(t)
    if summary is not None:
        files["summary.json"] = _dump(summary)
    try:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        for name, text in files.items():
            with open(out / name, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(text)
    except OSError as exc:
        return _fail(EXIT_IO, {"error": "io", "message": str(exc)})
    return EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())
