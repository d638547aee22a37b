"""Command-line scenario runner.

Every run writes CSV tables, ``effective_config.json`` (all defaults
resolved, internal units) and ``summary.json`` (files, column schemas and
key scalar results) into the output directory. A failed run leaves a
``FAILED`` marker there instead of a summary.
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager
from pathlib import Path

import numpy as np

from . import fitting, spectra, temporal, transverse
from .config import COMMANDS, FIGURES, ScenarioConfig, load_config, merge, preset, validate_config
from .errors import ConfigError, DelayLightError
from .model import pole_half_width, transfer, weak_eit_parameter
from .units import fwhm_hz

log = logging.getLogger("delaylight")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3
FAILURE_MARKER = "FAILED"


def fmt(value) -> str:
    return f"{float(value):.12g}"


class RunOutput:
    """Collects files written by a scenario and the scalar results."""

    def __init__(self, directory: Path):
        self.directory = directory
        self.files = []
        self.results = {}

    def csv(self, name, columns, rows):
        path = self.directory / name
        with open(path, "w") as fh:
            fh.write(",".join(columns) + "\n")
            for row in rows:
                fh.write(",".join(r if isinstance(r, str) else fmt(r) for r in row) + "\n")
        self.files.append({"path": name, "columns": list(columns)})
        return path

    def binary(self, name, description):
        self.files.append({"path": name, "columns": [description]})
        return self.directory / name


@contextmanager
def _executor(threads):
    if threads == 1:
        yield None
        return
    with ThreadPoolExecutor(max_workers=threads or os.cpu_count()) as pool:
        yield pool


def _map(pool, fn, items):
    return [fn(x) for x in items] if pool is None else list(pool.map(fn, items))


# --------------------------------------------------------------------------
# scenarios


def _spectra(cfg: ScenarioConfig, out: RunOutput, pool):
    m = cfg.medium

    def one(drive):
        grid = spectra.default_grid(m, drive, cfg.spectrum_points, cfg.spectrum_span)
        return spectra.scan_spectrum(m, drive, grid)

    results = _map(pool, one, cfg.drives)
    lines = []
    for i, (x, drive, spec) in enumerate(zip(cfg.sweep_values, cfg.drives, results)):
        out.csv(
            f"spectrum_{i:03d}.csv",
            ("omega_rad_s", "power_probe", "power_signal"),
            zip(spec.grid.omegas, spec.power_probe, spec.power_signal),
        )
        fit = fitting.fit_lorentzian(spec.grid.omegas, spec.power_signal)
        lines.append(
            {
                cfg.sweep_axis: x,
                "delta_rad_s": drive.delta,
                "signal_fwhm_hz": fwhm_hz(fit.half_width),
                "signal_center_rad_s": fit.center,
                "signal_lorentz_rms_residual": fit.rms_residual,
                "signal_asymmetry": spectra.lineshape_asymmetry(spec.power_signal, spec.grid),
                "probe_asymmetry": spectra.lineshape_asymmetry(spec.power_probe, spec.grid),
                "peak_efficiency": float(spec.power_signal.max()),
                "model_fwhm_hz": fwhm_hz(pole_half_width(m, drive)),
            }
        )
    out.results["lines"] = lines
    return results


def _contrast(cfg: ScenarioConfig, out: RunOutput, pool):
    pts = spectra.contrast_sweep(cfg.medium, cfg.drives, cfg.off_resonance, cfg.noise_floor)
    out.csv(
        "contrast.csv",
        ("P_c_or_Delta", "probe_contrast", "signal_contrast"),
        ((x, p.probe_contrast, p.signal_contrast) for x, p in zip(cfg.sweep_values, pts)),
    )
    out.results.update(
        x_axis=cfg.sweep_axis,
        probe_contrast_min=min(p.probe_contrast for p in pts),
        probe_contrast_max=max(p.probe_contrast for p in pts),
        signal_contrast_min=min(p.signal_contrast for p in pts),
        signal_contrast_max=max(p.signal_contrast for p in pts),
    )


def _s_eta_values(cfg: ScenarioConfig):
    if cfg.s_eta_table is None:
        return [None] * len(cfg.drives)
    if cfg.powers is None:
        raise ConfigError("calibration.s_eta_table: requires drives given as powers")
    table = fitting.read_s_eta_table(cfg.s_eta_table)
    return [float(table(p)) for p in cfg.powers]


def _delay(cfg: ScenarioConfig, out: RunOutput, pool):
    m = cfg.medium
    s_eta = _s_eta_values(cfg)

    def one(args):
        method, drive, se = args
        if method == "pulse":
            half = pole_half_width(m, drive)
            pulse = temporal.default_pulse(1.0 / half, cfg.pulse_duration_factor, cfg.pulse_window_factor)
            tp, ts = temporal.pulse_delays(m, drive, pulse)
            return temporal.DelayResult(tp, ts, method, drive)
        return temporal.delays(m, drive, method, se)

    jobs = [(meth, d, se) for meth in cfg.methods for d, se in zip(cfg.drives, s_eta)]
    res = _map(pool, one, jobs)
    xs = list(cfg.sweep_values) * len(cfg.methods)
    out.csv(
        "delays.csv",
        ("P_c_or_Delta", "tau_p_s", "tau_s_s", "method"),
        ((x, r.tau_p, r.tau_s, r.method) for x, r in zip(xs, res)),
    )
    n = len(cfg.drives)
    analytic = [r for r in res if r.method == cfg.methods[0]][:n]
    summary = {
        "x_axis": cfg.sweep_axis,
        "methods": list(cfg.methods),
        "tau_s_max_s": max(r.tau_s for r in analytic),
        "tau_s_min_s": min(r.tau_s for r in analytic),
        "tau_p_max_s": max(r.tau_p for r in analytic),
        "tau_p_argmax": cfg.sweep_values[int(np.argmax([r.tau_p for r in analytic]))],
        "max_weak_eit_parameter": max(weak_eit_parameter(m, d) for d in cfg.drives),
    }
    if cfg.powers is not None and len(set(cfg.powers)) >= 2 and all(d.delta == 0 for d in cfg.drives):
        line = fitting.extrapolate_gamma(cfg.powers, [r.tau_s for r in analytic])
        summary["gamma_extrapolated_rad_s"] = line.intercept
        summary["coherence_lifetime_extrapolated_s"] = 1.0 / line.intercept
    out.results.update(summary)
    return res


def _pulse(cfg: ScenarioConfig, out: RunOutput, pool):
    m = cfg.medium
    rows = []
    for i, drive in enumerate(cfg.drives):
        half = pole_half_width(m, drive)
        pulse = temporal.default_pulse(1.0 / half, cfg.pulse_duration_factor, cfg.pulse_window_factor)
        outs = {}
        for channel in ("t_p", "t_s"):
            fn = lambda w, c=channel: getattr(transfer(m, drive, w), c)
            outs[channel] = temporal.propagate_pulse(pulse, fn, memory_time=1.0 / half, linewidth=2 * half)
        out.csv(
            f"pulse_{i:03d}.csv",
            ("time_s", "input_real", "input_imag", "probe_real", "probe_imag", "signal_real", "signal_imag"),
            zip(
                pulse.times,
                pulse.samples.real,
                pulse.samples.imag,
                outs["t_p"].samples.real,
                outs["t_p"].samples.imag,
                outs["t_s"].samples.real,
                outs["t_s"].samples.imag,
            ),
        )
        t0 = temporal.pulse_centroid(pulse)
        rows.append(
            {
                "tau_p_s": temporal.pulse_centroid(outs["t_p"]) - t0,
                "tau_s_s": temporal.pulse_centroid(outs["t_s"]) - t0,
                "tau_s_analytic_s": temporal.analytic_tau_s(m, drive),
                "signal_energy_ratio": outs["t_s"].energy / pulse.energy,
            }
        )
    out.results["pulses"] = rows


def _beam(cfg: ScenarioConfig, out: RunOutput, pool):
    m = cfg.medium
    beam_in = transverse.gaussian_beam(cfg.beam_w_in, cfg.beam_n, cfg.beam_pitch)
    ext = "csv" if cfg.beam_format == "csv" else "bin"
    layout = "N,pitch_mm header then row-major real,imag" if ext == "csv" else \
        "int64 N, float64 pitch_mm, complex128 row-major"
    transverse.save_beam(out.binary(f"beam_in.{ext}", layout), beam_in)

    def one(drive):
        return transverse.propagate_beam(beam_in, m, drive, 0.0, cfg.beam_exact)

    beams = _map(pool, one, cfg.drives)
    rows, detail = [], []
    for i, (drive, b) in enumerate(zip(cfg.drives, beams)):
        transverse.save_beam(out.binary(f"beam_out_{i:03d}.{ext}", layout), b)
        meas = transverse.fit_gaussian_width(b)
        tau = temporal.analytic_tau_s(m, drive)
        rows.append((tau, meas.w2))
        detail.append((tau, meas.w2, meas.area, meas.gaussian_overlap, transverse.field_moment_w2(b)))
    out.csv("widths.csv", ("tau_s_s", "w2_mm2"), rows)
    out.csv(
        "width_details.csv",
        ("tau_s_s", "w2_mm2", "area_mm2", "gaussian_overlap", "field_moment_w2_mm2"),
        detail,
    )
    out.results.update(filter="exact" if cfg.beam_exact else "gaussian", min_overlap=min(r[3] for r in detail))
    if len({r[0] for r in rows}) >= 2:
        D, w02, line = fitting.fit_diffusion([r[0] for r in rows], [r[1] for r in rows])
        out.results.update(
            diffusion_fitted_mm2_s=D,
            w0_sq_fitted_mm2=w02,
            diffusion_r_squared=line.r_squared,
            w_in_sq_mm2=cfg.beam_w_in**2,
        )


def read_spectrum(path) -> spectra.Spectrum:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return spectra.Spectrum(spectra.FrequencyGrid(data[:, 0]), data[:, 1], data[:, 2])


def _calibrate(cfg: ScenarioConfig, out: RunOutput, pool):
    m = cfg.medium
    if cfg.calibration_spectra:
        pairs = [(p, read_spectrum(path)) for p, path in cfg.calibration_spectra]
        source = "files"
    else:
        if cfg.powers is None:
            raise ConfigError("calibrate: give calibration.spectra or drives as powers with kappa")
        if any(d.delta != 0 for d in cfg.drives):
            raise ConfigError("calibrate: synthetic spectra must be taken at delta = 0")
        grids = [spectra.default_grid(m, d, cfg.spectrum_points, cfg.spectrum_span) for d in cfg.drives]
        specs = _map(pool, lambda a: spectra.scan_spectrum(m, *a), list(zip(cfg.drives, grids)))
        pairs = list(zip(cfg.powers, specs))
        source = "synthetic"
    cal = fitting.calibrate_power(pairs, m.gamma_1p)
    table = fitting.calibrate_s_eta(pairs, cal)
    out.csv("linewidth.csv", ("P_c_mW", "value"), zip(cal.extras["powers"], cal.extras["half_widths"]))
    out.csv("s_eta.csv", ("P_c_mW", "value"), table.rows())
    out.results.update(
        source=source,
        kappa_rad2_s2_mW=cal.kappa,
        gamma_extrapolated_rad_s=cal.gamma_extrapolated,
        coherence_lifetime_s=1.0 / cal.gamma_extrapolated,
    )
    if cfg.kappa is not None:
        out.results["kappa_input_rad2_s2_mW"] = cfg.kappa


def _fig2a(cfg, out, pool):
    _spectra(cfg, out, pool)


def _fig4(cfg, out, pool):
    _beam(cfg, out, pool)
    if not cfg.beam_exact:
        # the exact rational k-filter for comparison
        beam_in = transverse.gaussian_beam(cfg.beam_w_in, cfg.beam_n, cfg.beam_pitch)
        pts = transverse.diffusion_sweep(cfg.medium, cfg.drives, beam_in, True, pool)
        D, _, _ = fitting.fit_diffusion([p.tau_s for p in pts], [p.w2 for p in pts])
        out.results["diffusion_fitted_exact_filter_mm2_s"] = D


RUNNERS = {
    "spectrum": _spectra,
    "contrast": _contrast,
    "delay": _delay,
    "pulse": _pulse,
    "beam": _beam,
    "calibrate": _calibrate,
    "fig2a": _fig2a,
    "fig2b": _contrast,
    "fig3a": _delay,
    "fig3b": _delay,
    "fig4": _fig4,
}


def _jsonable(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        return str(obj)
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.generic):
        return _jsonable(obj.item())
    return obj


def run_scenario(cfg: ScenarioConfig, output_dir=None) -> dict:
    """Run one scenario and return its summary (also written to ``summary.json``)."""
    directory = Path(output_dir or cfg.output_dir)
    directory.mkdir(parents=True, exist_ok=True)
    marker = directory / FAILURE_MARKER
    if marker.exists():
        marker.unlink()
    out = RunOutput(directory)
    try:
        with open(directory / "effective_config.json", "w") as fh:
            json.dump(_jsonable(cfg.effective), fh, indent=2, sort_keys=True)
        with _executor(cfg.threads) as pool:
            RUNNERS[cfg.scenario](cfg, out, pool)
        summary = {
            "scenario": cfg.scenario,
            "files": [{"path": "effective_config.json", "columns": []}] + out.files,
            "results": out.results,
        }
        with open(directory / "summary.json", "w") as fh:
            json.dump(_jsonable(summary), fh, indent=2, sort_keys=True)
    except BaseException as exc:
        marker.write_text(f"{type(exc).__name__}: {exc}\n")
        raise
    return summary


def build_config(raw, scenario=None, output_dir=None, threads=None) -> ScenarioConfig:
    raw = dict(raw or {})
    if scenario is not None:
        raw["scenario"] = scenario
    name = raw.get("scenario")
    if name in FIGURES:
        raw = merge(preset(name), raw)
    if output_dir is not None:
        raw["output_dir"] = output_dir
    if threads is not None:
        raw["threads"] = threads
    return validate_config(raw)


def _common_flags(parser, suppress):
    default = {"default": argparse.SUPPRESS} if suppress else {}
    parser.add_argument("--config", help="JSON configuration file", **default)
    parser.add_argument("--out", help="output directory (overrides output_dir)", **default)
    parser.add_argument("--threads", type=int, help="worker threads (0 = auto)", **default)
    parser.add_argument("-v", "--verbose", action="store_true", **default)


def make_parser():
    parser = argparse.ArgumentParser(
        prog="delaylight",
        description="Double-V four-wave-mixing delayed-light model: spectra, delays, diffusion, calibration.",
    )
    _common_flags(parser, suppress=False)
    parser.add_argument("--scenario", choices=COMMANDS + FIGURES, help="scenario to run")
    # flags are accepted after the subcommand as well
    shared = argparse.ArgumentParser(add_help=False)
    _common_flags(shared, suppress=True)
    sub = parser.add_subparsers(dest="command")
    for name in COMMANDS:
        sub.add_parser(name, parents=[shared], help=f"run the {name} scenario")
    rep = sub.add_parser("reproduce", parents=[shared], help="reproduce one of the figure scenarios")
    rep.add_argument("figure", choices=FIGURES)
    return parser


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    scenario = args.scenario
    if args.command == "reproduce":
        scenario = args.figure
    elif args.command is not None:
        scenario = args.command
    if args.threads is not None and args.threads < 0:
        print("config error: --threads must be >= 0", file=sys.stderr)
        return EXIT_CONFIG
    try:
        raw = load_config(args.config) if args.config else {}
        if scenario is None and "scenario" not in raw:
            raise ConfigError(["scenario: choose a subcommand, --scenario, or a 'scenario' key in the config"])
        cfg = build_config(raw, scenario, args.out, args.threads)
    except ConfigError as exc:
        for problem in exc.problems:
            print(f"config error: {problem}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        summary = run_scenario(cfg)
    except ConfigError as exc:
        for problem in exc.problems:
            print(f"config error: {problem}", file=sys.stderr)
        return EXIT_CONFIG
    except (DelayLightError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    log.info("wrote %d files to %s", len(summary["files"]), cfg.output_dir)
    print(json.dumps(_jsonable(summary["results"]), indent=2, sort_keys=True))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
