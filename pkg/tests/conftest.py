"""Shared fixtures. The heavy velocity-averaged scans are session scoped so
the acceptance suite and the module tests compute them once."""
from __future__ import annotations

from dataclasses import replace

import numpy as np
import pytest

import eitlamp as el
from eitlamp.model import TWO_PI

FIG_RANGE_FULL = (-TWO_PI * 2.5e9, TWO_PI * 2.5e9)
FIG_RANGE_NARROW = (-TWO_PI * 0.8e9, TWO_PI * 0.8e9)


@pytest.fixture(scope="session")
def ca():
    return el.calcium()


@pytest.fixture(scope="session")
def lamp_env():
    return el.Environment(temperature=1000.0, density=1e16,
                          transit_rate=TWO_PI * 34e3)


@pytest.fixture(scope="session")
def fig_drive(ca):
    """Counterpropagating strong-probe drive of the headline observation."""
    return el.DriveField(delta_p=0.0, delta_c=0.0, omega_p=0.4 * ca.gamma1,
                        omega_c=1.1 * ca.gamma1,
                        geometry=el.Geometry.COUNTERPROPAGATING)


@pytest.fixture(scope="session")
def grid2048(ca, lamp_env):
    return el.make_velocity_grid(ca, lamp_env, 2048, rule="uniform")


@pytest.fixture(scope="session")
def grid1024(ca, lamp_env):
    return el.make_velocity_grid(ca, lamp_env, 1024, rule="uniform")


@pytest.fixture(scope="session")
def full_pair(ca, fig_drive, lamp_env, grid2048):
    """Default-resolution coupled and reference spectra, converged grid."""
    coupled = el.scan_probe(ca, fig_drive, lamp_env, grid2048, FIG_RANGE_FULL, 501)
    reference = el.scan_probe(ca, replace(fig_drive, omega_c=0.0), lamp_env,
                              grid2048, FIG_RANGE_FULL, 501)
    return coupled, reference


@pytest.fixture(scope="session")
def narrow_set(ca, fig_drive, lamp_env, grid2048):
    """Coupled/reference spectra for both geometries, open and closed system."""
    out = {}
    closed_atom = replace(ca, gamma3=0.0)
    for geom_name, geometry in (("counter", el.Geometry.COUNTERPROPAGATING),
                                ("co", el.Geometry.COPROPAGATING)):
        for system, atom in (("open", ca), ("closed", closed_atom)):
            drive = replace(fig_drive, geometry=geometry)
            coupled = el.scan_probe(atom, drive, lamp_env, grid2048,
                                    FIG_RANGE_NARROW, 321)
            reference = el.scan_probe(atom, replace(drive, omega_c=0.0), lamp_env,
                                      grid2048, FIG_RANGE_NARROW, 321)
            out[(geom_name, system)] = (coupled, reference)
    return out


@pytest.fixture(scope="session")
def sweep_result(ca, fig_drive, lamp_env, grid1024):
    rabis = [f * ca.gamma1 for f in (0.1, 0.2, 0.3, 0.4, 0.5, 0.6)]
    return el.saturation_sweep(ca, fig_drive, lamp_env, grid1024, rabis,
                               (-TWO_PI * 0.75e9, TWO_PI * 0.75e9), 151)


@pytest.fixture(scope="session")
def thick_lamp_run(ca, lamp_env, grid1024):
    """Probe-only propagation at thirty times the baseline column density.

    The baseline column is density times the 2 cm cathode; spreading the
    vapor over the whole 26 cm lamp at 30 * 2/26 times the density gives
    exactly thirty baseline columns along the full path.
    """
    lamp = el.LampGeometry.standard(vapor="extended")
    multiplier = 30.0 * 0.020 / lamp.total_length
    env = replace(lamp_env, density=lamp_env.density * multiplier)
    drive = el.DriveField(delta_c=0.0, omega_p=0.0, omega_c=0.0,
                          geometry=el.Geometry.COUNTERPROPAGATING)
    traces = el.propagate(lamp, ca, drive, env, grid1024, 850.0,
                          FIG_RANGE_FULL, 41)
    return traces


@pytest.fixture(scope="session")
def thin_lamp_run(ca, fig_drive, lamp_env, grid1024):
    """Coupled and reference lamp traces at one percent column density."""
    lamp = el.LampGeometry.standard(vapor="cathode")
    env = replace(lamp_env, density=lamp_env.density / 100.0)
    rng = (-TWO_PI * 1.25e9, TWO_PI * 1.25e9)
    coupled = el.propagate(lamp, ca, fig_drive, env, grid1024, 850.0, rng, 251)
    reference = el.propagate(lamp, ca, replace(fig_drive, omega_c=0.0), env,
                             grid1024, 850.0, rng, 251)
    return coupled, reference
