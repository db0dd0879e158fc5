"""Command-line driver.

    echoloc SUBCOMMAND --config FILE [--out DIR] [--plot]

Exit status 0 on success, 2 on configuration errors, 3 when a numerical
contract fails (unsaturated orbit enumeration, spectral range too short, ...).
Errors are also reported as one JSON object on stderr.  Log verbosity comes
from the ECHOLOC_LOG_LEVEL environment variable (default WARNING).
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import io
from .config import ConfigError, ExperimentConfig
from .echo import (InconsistentSpectralData, SpectralData, classify_curvature, constancy_test,
                   detect_multiplicity, isolating_windows, klein_echolocate, synthesize_spectral_from_geometric)
from .geometry import FlatKleinSpec, FlatTorusSpec, HyperbolicSurfaceSpec, klein_canonicalize
from .loops import NotHyperbolic, SaturationError, geometric_side_flat, looping_times
from .spectrum import NotAnEigenvalue, level_sum, mode_table, weyl_sweep
from .traces import (QuadratureError, SpectralRangeError, Weight, Window, curvature_estimate, heat_trace,
                     smoothed_wave_spectral)

log = logging.getLogger("echoloc")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3
LOG_ENV = "ECHOLOC_LOG_LEVEL"
NUMERIC_ERRORS = (SaturationError, SpectralRangeError, QuadratureError, InconsistentSpectralData,
                  NotAnEigenvalue, NotHyperbolic)


def _flat(cfg):
    spec = cfg.surface()
    if not isinstance(spec, (FlatTorusSpec, FlatKleinSpec)):
        raise ConfigError("this subcommand needs a flat surface (torus or klein)")
    return spec


def _flat_points(cfg, spec):
    return [spec.reduce(p.x1, p.x2) for p in cfg.basepoints()]


def _window(cfg, default_weight="None"):
    try:
        return Window(cfg.number("window.r"), cfg.number("window.eps"),
                      cfg.get("window.profile", "GaussianBump"), cfg.get("window.weight", default_weight))
    except ValueError as exc:
        raise ConfigError(f"window: {exc}") from None


def cmd_spectrum(cfg, out):
    spec = _flat(cfg)
    table = mode_table(spec, cfg.number("spectrum.lambda_max", 20.0))
    return [io.write_csv(out / "spectrum.csv", ["family", "m", "n", "lambda", "multiplicity_in_level"],
                         io.modes_rows(table))], {}


def cmd_weyl(cfg, out):
    spec = _flat(cfg)
    pts = _flat_points(cfg, spec)
    lam_max = cfg.number("weyl.lambda_max", 50.0)
    if cfg.has("weyl.num"):
        grid = np.linspace(0.0, lam_max, int(cfg.number("weyl.num")))
    else:
        grid = np.unique(np.concatenate([mode_table(spec, lam_max).level_sums(pts[0])[0], [lam_max]]))
    cols = [weyl_sweep(spec, p, grid) for p in pts]
    header = ["lambda"] + [f"N_x{i}" for i in range(len(pts))]
    rows = ([float(g)] + [float(c[k]) for c in cols] for k, g in enumerate(grid))
    return [io.write_csv(out / "weyl.csv", header, rows)], {"weyl.csv": True}


def cmd_heat(cfg, out):
    spec = _flat(cfg)
    pts = _flat_points(cfg, spec)
    sweep = cfg.numbers("heat.sweep", np.geomspace(5e-4, 1.0, 25))
    times = cfg.numbers("heat.times", (0.002, 0.001, 0.0005))
    header = ["t"]
    for i in range(len(pts)):
        header += [f"value_x{i}", f"truncation_bound_x{i}"]
    rows = []
    for t in sweep:
        row = [float(t)]
        for p in pts:
            h = heat_trace(spec, p, t)
            row += [h.value, h.truncation_bound]
        rows.append(row)
    csv_path = io.write_csv(out / "heat.csv", header, rows)
    tol = cfg.number("curvature.tol", 1e-3)
    ks = [curvature_estimate(spec, p, times) for p in pts]
    record = {"points": [[p.x1, p.x2] for p in pts], "times": list(times), "curvature_estimate": ks,
              "classification": [classify_curvature(k, tol).value for k in ks]}
    return [csv_path, io.write_json(out / "heat.json", record)], {"heat.csv": False}


def cmd_wavetrace(cfg, out):
    spec = _flat(cfg)
    x = _flat_points(cfg, spec)[0]
    w = _window(cfg, "SqrtT")
    header = ["lambda", "value_re", "value_im", "truncation_bound", "geometric_re", "geometric_im", "abs_error"]
    rows = []
    for lam in cfg.numbers("wavetrace.lambdas", (100.0, 200.0, 400.0)):
        s = smoothed_wave_spectral(spec, x, lam, w)
        g = geometric_side_flat(spec, x, lam, w)
        rows.append([lam, s.value.real, s.value.imag, s.truncation_bound, g.value.real, g.value.imag,
                     abs(s.value - g.value)])
    return [io.write_csv(out / "wavetrace.csv", header, rows)], {"wavetrace.csv": False}


def _points_for(cfg, spec):
    if isinstance(spec, HyperbolicSurfaceSpec):
        return cfg.basepoints(hyperbolic=True)
    return _flat_points(cfg, spec)


def cmd_loops(cfg, out):
    spec = cfg.surface()
    R = cfg.number("loops.R", 3.0)
    written = []
    for i, p in enumerate(_points_for(cfg, spec)):
        table = looping_times(spec, p, R)
        name = "loops.csv" if i == 0 else f"loops_x{i}.csv"
        written.append(io.write_csv(out / name, ["r", "multiplicity", "word_example"], io.loop_rows(table)))
    return written, {}


def cmd_detect(cfg, out):
    spec = cfg.surface()
    schedule = cfg.numbers("detect.schedule", (100.0, 200.0, 400.0, 800.0))
    hyper = isinstance(spec, HyperbolicSurfaceSpec)
    weight = Weight(cfg.get("detect.weight", "SqrtSinh" if hyper else "SqrtT"))
    x = _points_for(cfg, spec)[0]
    if cfg.has("detect.r"):
        windows = [Window(cfg.number("detect.r"), cfg.number("detect.eps", 0.1), weight=weight)]
    else:
        R = cfg.number("detect.R", 3.0)
        eps_max = cfg.number("detect.eps_max", 0.1 if hyper else 0.2)
        table = looping_times(spec, x, R + eps_max)
        windows = isolating_windows(table, weight, eps_max=eps_max, upto=R)
    if hyper:
        data = synthesize_spectral_from_geometric(spec, x, schedule, windows)
    else:
        top = max(schedule)
        data = SpectralData.from_flat(spec, x, top + _pad(windows))
    results = [detect_multiplicity(data, w.r, w.eps, schedule, weight, w.profile) for w in windows]
    records = []
    for res in results:
        rec = res.to_record()
        if res.warning:
            rec["warning"] = res.warning
        records.append(rec)
    return [io.write_json(out / "detect.json", records)], {}


def _pad(windows):
    # generous: where the Gaussian envelope of the narrowest window is ~1e-16 of its peak
    eps = min(w.eps for w in windows)
    return math.sqrt(4 * 32 * 40.0) / eps


def cmd_echolocate(cfg, out):
    spec = cfg.surface()
    if not isinstance(spec, FlatKleinSpec):
        raise ConfigError("echolocate needs a Klein bottle surface")
    lam0 = 2 * math.pi / spec.b
    records = []
    for p in _flat_points(cfg, spec):
        value = level_sum(spec, p, lam0)
        found = klein_echolocate(spec, lambda lam, p=p: level_sum(spec, p, lam))
        truth = klein_canonicalize(p, spec)
        records.append({"point": [p.x1, p.x2], "level": lam0, "level_sum": value,
                        "recovered": [found.x1, found.x2], "canonical": [truth.x1, truth.x2]})
    return [io.write_json(out / "echolocate.json", records)], {}


def cmd_constancy(cfg, out):
    spec = _flat(cfg)
    pts = _flat_points(cfg, spec)
    if len(pts) < 2:
        raise ConfigError("constancy needs at least two basepoints")
    res = constancy_test(spec, cfg.number("constancy.lambda_max", 50.0), pts)
    return [io.write_json(out / "constancy.json", res.to_record())], {}


def cmd_plot(cfg, out):
    from .plotting import plot_csv

    src = Path(cfg.require("plot.input"))
    if not src.exists() and (out / src).exists():
        src = out / src
    if not src.exists():
        raise ConfigError(f"plot.input {src} does not exist")
    ys = [c.strip() for c in cfg.get("plot.y", "").split(",") if c.strip()] or None
    target = out / cfg.get("plot.output", src.with_suffix(".svg").name)
    try:
        return [plot_csv(src, cfg.get("plot.x"), ys, cfg.flag("plot.step"), target)], {}
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


COMMANDS = {
    "spectrum": cmd_spectrum,
    "weyl": cmd_weyl,
    "heat": cmd_heat,
    "wavetrace": cmd_wavetrace,
    "loops": cmd_loops,
    "detect": cmd_detect,
    "echolocate": cmd_echolocate,
    "constancy": cmd_constancy,
    "plot": cmd_plot,
}


def _fail(code, exc):
    sys.stderr.write(json.dumps({"error": type(exc).__name__, "message": str(exc), "exit_code": code}) + "\n")
    return code


def run(subcommand: str, config_path, output_dir, plot: bool = False) -> int:
    """Run one subcommand; returns the process exit status."""
    if subcommand not in COMMANDS:
        return _fail(EXIT_CONFIG, ConfigError(f"unknown subcommand {subcommand!r}"))
    try:
        cfg = ExperimentConfig.load(config_path)
        out = Path(output_dir)
        out.mkdir(parents=True, exist_ok=True)
        written, plots = COMMANDS[subcommand](cfg, out)
        if plot and plots:
            from .plotting import plot_csv

            for name, step in plots.items():
                written.append(plot_csv(out / name, step=step))
    except ConfigError as exc:
        return _fail(EXIT_CONFIG, exc)
    except NUMERIC_ERRORS as exc:
        return _fail(EXIT_NUMERIC, exc)
    except ValueError as exc:
        # parameters outside an operation's domain are configuration errors
        return _fail(EXIT_CONFIG, exc)
    for p in written:
        log.info("wrote %s", p)
    return EXIT_OK


def main(argv=None) -> int:
    logging.basicConfig(level=os.environ.get(LOG_ENV, "WARNING").upper(),
                        format="%(levelname)s %(name)s: %(message)s")
    parser = argparse.ArgumentParser(prog="echoloc", description=__doc__.splitlines()[0])
    parser.add_argument("subcommand", choices=sorted(COMMANDS))
    parser.add_argument("--config", "-c", required=True)
    parser.add_argument("--out", "-o", default=".")
    parser.add_argument("--plot", action="store_true", help="also render SVG figures for the CSV output")
    args = parser.parse_args(argv)
    return run(args.subcommand, args.config, args.out, args.plot)


if __name__ == "__main__":
    sys.exit(main())
