"""Command-line driver emitting plot-ready CSV and a JSON run record."""
from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import replace

import numpy as np

from . import __version__
from .bloch import doppler_average_scan
from .config import (MW_CM2_TO_W_M2, RunConfig, build_atom, build_drive,
                     build_environment, build_grid, build_lamp, config_as_dict,
                     lamp_environment, parse_config, scan_range)
from .errors import ConfigError, EitLampError
from .lamp import propagate
from .model import TWO_PI, Geometry, thermal_speed
from .spectra import (dip_metrics, doppler_fwhm, group_index,
                      residual_doppler_width, saturation_intensity,
                      saturation_sweep, scan_probe)

COMMANDS = ("spectrum", "dip", "sweep", "groupindex", "residual", "propagate")

EXIT_CONFIG = 2
EXIT_SOLVER = 3
EXIT_IO = 4


def _fmt(value: float) -> str:
    return f"{value:.17g}"


def _write_csv(path: str, columns: list[str], rows: list[list[float]]) -> None:
    with open(path, "w", newline="") as handle:
        handle.write(",".join(columns) + "\n")
        for row in rows:
            handle.write(",".join(_fmt(v) for v in row) + "\n")


def _mhz(rad_per_s: float) -> float:
    return rad_per_s / (TWO_PI * 1e6)


def _spectrum_pair(config: RunConfig):
    atom = build_atom(config)
    drive = build_drive(config, atom)
    env = build_environment(config)
    grid = build_grid(config, atom, env)
    rng = scan_range(config)
    coupled = scan_probe(atom, drive, env, grid, rng, config.numerics.scan_points)
    reference = scan_probe(atom, replace(drive, omega_c=0.0), env, grid, rng,
                           config.numerics.scan_points)
    return atom, drive, env, grid, coupled, reference


def _cmd_spectrum(config: RunConfig):
    _, _, _, _, coupled, reference = _spectrum_pair(config)
    columns = ["detuning_mhz", "im_chi", "re_chi", "im_chi_reference"]
    rows = [[_mhz(d), c.imag, c.real, r.imag]
            for d, c, r in zip(coupled.detunings, coupled.chi, reference.chi)]
    summary = {"im_chi_max": float(coupled.chi.imag.max()),
               "im_chi_reference_max": float(reference.chi.imag.max())}
    return columns, rows, summary


def _cmd_dip(config: RunConfig):
    _, _, _, _, coupled, reference = _spectrum_pair(config)
    metrics = dip_metrics(coupled, reference)
    columns = ["contrast", "fwhm_mhz", "center_mhz"]
    rows = [[metrics.contrast,
             _mhz(metrics.fwhm) if metrics.fwhm is not None else float("nan"),
             _mhz(metrics.center) if metrics.center is not None else float("nan")]]
    summary = {"found": metrics.found, "contrast": metrics.contrast}
    return columns, rows, summary


def _cmd_sweep(config: RunConfig):
    atom = build_atom(config)
    drive = build_drive(config, atom)
    env = build_environment(config)
    grid = build_grid(config, atom, env)
    rabis = [f * atom.gamma1 for f in config.numerics.sweep_rabi_gamma1]
    pairs = saturation_sweep(atom, drive, env, grid, rabis, scan_range(config),
                             config.numerics.scan_points)
    columns = ["omega_p_gamma1", "contrast"]
    rows = [[omega / atom.gamma1, contrast] for omega, contrast in pairs]
    summary = {"max_contrast": max(c for _, c in pairs)}
    return columns, rows, summary


def _cmd_groupindex(config: RunConfig):
    atom = build_atom(config)
    drive = build_drive(config, atom)
    env = build_environment(config)
    grid = build_grid(config, atom, env)
    step = config.numerics.group_index_step_gamma1 * atom.gamma1
    at = drive.delta_p
    n_g = group_index(atom, drive, env, grid, at_detuning=at, step=step)
    chi = doppler_average_scan(atom, drive, env, grid,
                               np.array([at - step, at, at + step]))
    slope = (chi[2].real - chi[0].real) / (2.0 * step)
    columns = ["at_detuning_mhz", "group_index", "re_chi", "re_chi_slope_s"]
    rows = [[_mhz(at), n_g, chi[1].real, slope]]
    summary = {"group_index": n_g}
    return columns, rows, summary


def _cmd_residual(config: RunConfig):
    atom = build_atom(config)
    env = build_environment(config)
    counter = residual_doppler_width(atom, env, Geometry.COUNTERPROPAGATING)
    co = residual_doppler_width(atom, env, Geometry.COPROPAGATING)
    columns = ["counterpropagating_width_mhz", "copropagating_width_mhz"]
    rows = [[_mhz(counter), _mhz(co)]]
    summary = {"ratio_co_over_counter": co / counter if counter else float("inf")}
    return columns, rows, summary


def _cmd_propagate(config: RunConfig):
    atom = build_atom(config)
    drive = build_drive(config, atom)
    env = lamp_environment(config)
    grid = build_grid(config, atom, env)
    lamp = build_lamp(config)
    traces = propagate(lamp, atom, drive, env, grid,
                       config.lamp.input_intensity_mw_cm2 * MW_CM2_TO_W_M2,
                       scan_range(config), config.numerics.scan_points,
                       rabi_mode=config.drive.intensity_mode)
    columns = ["detuning_mhz", "transmission", "fluorescence_absorbed",
               "optogalvanic_absorbed"]
    rows = [[_mhz(d), t, f, o] for d, t, f, o in
            zip(traces.detunings, traces.transmission, traces.fluorescence,
                traces.optogalvanic)]
    summary = {"min_transmission": float(traces.transmission.min()),
               "max_transmission": float(traces.transmission.max())}
    return columns, rows, summary


_DISPATCH = {
    "spectrum": _cmd_spectrum,
    "dip": _cmd_dip,
    "sweep": _cmd_sweep,
    "groupindex": _cmd_groupindex,
    "residual": _cmd_residual,
    "propagate": _cmd_propagate,
}


def _derived_quantities(config: RunConfig) -> dict:
    atom = build_atom(config)
    drive = build_drive(config, atom)
    env = build_environment(config)
    return {
        "gamma1_rad_s": atom.gamma1,
        "k_p_rad_m": atom.k_p,
        "k_c_rad_m": atom.k_c,
        "dipole_sq_p_c2m2": atom.dipole_sq_p,
        "omega_p_rad_s": drive.omega_p,
        "omega_c_rad_s": drive.omega_c,
        "most_probable_speed_m_s": thermal_speed(atom, env),
        "doppler_fwhm_rad_s": doppler_fwhm(atom, env),
        "residual_width_counter_rad_s":
            residual_doppler_width(atom, env, Geometry.COUNTERPROPAGATING),
        "residual_width_co_rad_s":
            residual_doppler_width(atom, env, Geometry.COPROPAGATING),
        "saturation_intensity_probe_w_m2": saturation_intensity(atom, "probe"),
        "saturation_intensity_coupling_w_m2": saturation_intensity(atom, "coupling"),
    }


def run_command(command: str, config: RunConfig, out_prefix: str) -> dict:
    """Execute one command; write `<prefix>.csv` and `<prefix>.json`."""
    if command not in _DISPATCH:
        raise ValueError(f"unknown command {command!r}")
    start = time.monotonic()
    columns, rows, summary = _DISPATCH[command](config)
    duration = time.monotonic() - start
    csv_path = f"{out_prefix}.csv"
    json_path = f"{out_prefix}.json"
    _write_csv(csv_path, columns, rows)
    record = {
        "command": command,
        "version": __version__,
        "duration_s": duration,
        "config": config_as_dict(config),
        "derived_si": _derived_quantities(config),
        "outputs": {"csv": csv_path, "columns": columns, "rows": len(rows),
                    "summary": summary},
    }
    with open(json_path, "w", newline="") as handle:
        json.dump(record, handle, indent=2, sort_keys=True)
        handle.write("\n")
    return record


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="eitlamp",
        description="Transparency spectra of a driven cascade vapor in a "
                    "hollow-cathode lamp: susceptibility scans, dip metrics, "
                    "group index and multi-channel lamp signals.")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", help="configuration file (defaults apply if omitted)")
    parser.add_argument("--out", help="output file prefix (default: command name)")
    parser.add_argument("--override", action="append", default=[],
                        metavar="SECTION.KEY=VALUE",
                        help="override one configuration value; repeatable")
    args = parser.parse_args(argv)

    if args.config is not None:
        try:
            with open(args.config, encoding="utf-8") as handle:
                text = handle.read()
        except OSError as exc:
            print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
            return EXIT_IO
    else:
        text = ""

    try:
        config = parse_config(text, overrides=args.override)
    except ConfigError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    out_prefix = args.out if args.out is not None else args.command
    try:
        run_command(args.command, config, out_prefix)
    except EitLampError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except OSError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_IO
    return 0


if __name__ == "__main__":
    sys.exit(main())
