"""Probe-detuning spectra, transparency-dip metrics, and unit conversions."""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy.constants import c, h, k as k_B

from .bloch import doppler_average_scan
from .model import AtomModel, DriveField, Environment, Geometry, VelocityGrid, thermal_speed

DIP_WINDOW_FRACTION = 0.20
DEFAULT_GROUP_INDEX_STEP_FRACTION = 0.01

PROBE_CALIBRATION = (850.0, 0.4)      # (W/m^2, Rabi in units of gamma1)
COUPLING_CALIBRATION = (7070.0, 1.1)


@dataclass(frozen=True)
class Spectrum:
    """Velocity-averaged susceptibility on a probe-detuning grid."""

    detunings: np.ndarray
    chi: np.ndarray
    params: dict

    def __post_init__(self):
        detunings = np.asarray(self.detunings, dtype=float)
        chi = np.asarray(self.chi, dtype=complex)
        object.__setattr__(self, "detunings", detunings)
        object.__setattr__(self, "chi", chi)
        if detunings.ndim != 1 or len(detunings) != len(chi):
            raise ValueError("detunings and chi must be 1-D arrays of equal length")
        if np.any(np.diff(detunings) <= 0):
            raise ValueError("detunings must be strictly increasing")
        if not np.all(np.isfinite(chi)):
            raise ValueError("susceptibility contains non-finite values")


@dataclass(frozen=True)
class DipMetrics:
    """Transparency-dip summary extracted from a pair of spectra.

    found is False when no local absorption minimum exists in the central
    window; contrast is then zero and fwhm/center are None. fwhm can also be
    None for a found dip whose half-maximum crossings fall outside the scan.
    """

    contrast: float
    fwhm: float | None
    center: float | None
    found: bool


def scan_probe(atom: AtomModel, drive: DriveField, env: Environment,
               grid: VelocityGrid, detuning_range: tuple[float, float],
               n_points: int) -> Spectrum:
    """Scan the probe detuning over a uniform grid at fixed drive template."""
    lo, hi = detuning_range
    if n_points < 3:
        raise ValueError("n_points must be at least 3")
    if not lo < hi:
        raise ValueError("detuning range must satisfy min < max")
    detunings = np.linspace(lo, hi, n_points)
    chi = doppler_average_scan(atom, drive, env, grid, detunings)
    params = {
        "atom": atom,
        "drive": replace(drive, delta_p=0.0),
        "env": env,
        "n_nodes": len(grid),
    }
    return Spectrum(detunings=detunings, chi=chi, params=params)


def _dip_from_arrays(detunings: np.ndarray, absorption: np.ndarray,
                     reference: np.ndarray) -> DipMetrics:
    """Shared dip extraction on absorption-like arrays.

    The dip center is the minimum of the coupled absorption inside the
    central window; the width is measured on the difference profile
    reference - absorption at half its window maximum, with linear
    interpolation between grid points.
    """
    span = detunings[-1] - detunings[0]
    mid = 0.5 * (detunings[0] + detunings[-1])
    window = np.where(np.abs(detunings - mid) <= 0.5 * DIP_WINDOW_FRACTION * span)[0]
    local = window[np.argmin(absorption[window])]
    interior = window[0] < local < window[-1]
    depth = reference - absorption
    if not interior or depth[local] <= 0 or reference[local] <= 0:
        return DipMetrics(contrast=0.0, fwhm=None, center=None, found=False)
    contrast = float(depth[local] / reference[local])
    center = float(detunings[local])

    peak = window[np.argmax(depth[window])]
    half = depth[peak] / 2.0
    left = _cross_down(detunings, depth, peak, half, step=-1)
    right = _cross_down(detunings, depth, peak, half, step=+1)
    fwhm = float(right - left) if left is not None and right is not None else None
    return DipMetrics(contrast=contrast, fwhm=fwhm, center=center, found=True)


def _cross_down(x: np.ndarray, y: np.ndarray, start: int, level: float,
                step: int) -> float | None:
    """Walk from start until y drops below level; interpolate the crossing."""
    i = start
    limit = len(y) - 1 if step > 0 else 0
    while i != limit and y[i + step] > level:
        i += step
    if i == limit:
        return None
    x0, x1 = x[i], x[i + step]
    y0, y1 = y[i], y[i + step]
    return float(x0 + (level - y0) * (x1 - x0) / (y1 - y0))


def dip_metrics(with_coupling: Spectrum, reference: Spectrum) -> DipMetrics:
    """Transparency-dip contrast, width and center from two spectra.

    The reference is the same scan with the coupling beam off; the contrast
    is the fractional absorption reduction at the dip center.
    """
    if not np.array_equal(with_coupling.detunings, reference.detunings):
        raise ValueError("spectra must share an identical detuning grid")
    return _dip_from_arrays(with_coupling.detunings, with_coupling.chi.imag,
                            reference.chi.imag)


def two_photon_wavenumber(atom: AtomModel, geometry: Geometry) -> float:
    """Signed two-photon wavenumber k_p + s k_c along the probe axis (rad/m)."""
    return atom.k_p + geometry.sign * atom.k_c


def residual_doppler_width(atom: AtomModel, env: Environment,
                           geometry: Geometry) -> float:
    """Residual Doppler width |k_p + s k_c| u of the two-photon line (rad/s).

    Uses the most probable speed u = sqrt(2 k_B T / m); other speed
    conventions rescale this by a factor of order one.
    """
    return abs(two_photon_wavenumber(atom, geometry)) * thermal_speed(atom, env)


def group_index(atom: AtomModel, drive: DriveField, env: Environment,
                grid: VelocityGrid, at_detuning: float = 0.0,
                step: float | None = None) -> float:
    """Group refractive index 1 + Re chi/2 + (omega_p0/2) dRe chi/d delta.

    The derivative is a central difference with the given step, default
    one percent of the probe natural width.
    """
    if step is None:
        step = DEFAULT_GROUP_INDEX_STEP_FRACTION * atom.gamma1
    if step <= 0:
        raise ValueError("step must be positive")
    points = np.array([at_detuning - step, at_detuning, at_detuning + step])
    chi = doppler_average_scan(atom, drive, env, grid, points)
    slope = (chi[2].real - chi[0].real) / (2.0 * step)
    return float(1.0 + chi[1].real / 2.0 + 0.5 * atom.omega_p0 * slope)


def saturation_sweep(atom: AtomModel, drive: DriveField, env: Environment,
                     grid: VelocityGrid, probe_rabis,
                     detuning_range: tuple[float, float],
                     n_points: int) -> list[tuple[float, float]]:
    """Dip contrast versus probe Rabi frequency.

    For each probe Rabi the reference spectrum (coupling off) is recomputed
    at the same probe strength, matching how the transparency is measured
    against the no-coupling absorption profile.
    """
    probe_rabis = list(probe_rabis)
    if not probe_rabis:
        raise ValueError("probe_rabis must be nonempty")
    if any(b <= a for a, b in zip(probe_rabis, probe_rabis[1:])):
        raise ValueError("probe_rabis must be strictly ascending")
    out = []
    for omega_p in probe_rabis:
        coupled = scan_probe(atom, replace(drive, omega_p=omega_p), env, grid,
                             detuning_range, n_points)
        ref = scan_probe(atom, replace(drive, omega_p=omega_p, omega_c=0.0),
                         env, grid, detuning_range, n_points)
        out.append((float(omega_p), dip_metrics(coupled, ref).contrast))
    return out


def saturation_intensity(atom: AtomModel, transition: str) -> float:
    """Two-level saturation intensity pi h c gamma / (3 lambda^3) in W/m^2."""
    if transition == "probe":
        gamma, lam = atom.gamma1, atom.lambda_p
    elif transition == "coupling":
        gamma, lam = atom.gamma2, atom.lambda_c
    else:
        raise ValueError(f"unknown transition {transition!r}")
    return np.pi * h * c * gamma / (3.0 * lam**3)


def rabi_from_intensity(intensity: float, transition: str, atom: AtomModel,
                        mode: str = "standard") -> float:
    """Convert a beam intensity (W/m^2) to a Rabi frequency (rad/s).

    "standard" uses Omega = gamma sqrt(I / (2 I_sat)) with the textbook
    saturation intensity of the transition. "calibrated" anchors the square
    root law to the measured intensity/Rabi pairs of this lamp (850 W/m^2 at
    0.4 gamma1 for the probe, 7070 W/m^2 at 1.1 gamma1 for the coupling);
    the two modes differ by about a factor of two, reflecting an unresolved
    Rabi-frequency convention in the source calibration.
    """
    if intensity < 0:
        raise ValueError("intensity must be nonnegative")
    if mode == "standard":
        if transition == "probe":
            gamma = atom.gamma1
        elif transition == "coupling":
            gamma = atom.gamma2
        else:
            raise ValueError(f"unknown transition {transition!r}")
        return float(gamma * np.sqrt(intensity / (2.0 * saturation_intensity(atom, transition))))
    if mode == "calibrated":
        if transition == "probe":
            i_ref, rabi_ref = PROBE_CALIBRATION
        elif transition == "coupling":
            i_ref, rabi_ref = COUPLING_CALIBRATION
        else:
            raise ValueError(f"unknown transition {transition!r}")
        return float(rabi_ref * atom.gamma1 * np.sqrt(intensity / i_ref))
    raise ValueError(f"unknown conversion mode {mode!r}")


def doppler_fwhm(atom: AtomModel, env: Environment) -> float:
    """Gaussian Doppler FWHM of the probe transition (rad/s)."""
    return float(2.0 * np.pi / atom.lambda_p
                 * np.sqrt(8.0 * k_B * env.temperature * np.log(2.0) / atom.mass))
