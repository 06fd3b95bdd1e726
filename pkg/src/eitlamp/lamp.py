"""Saturating beam propagation through the segmented hollow-cathode lamp.

The lamp is a fixed sequence of five segments between the entry and exit
windows; atomic vapor is present only where a segment is marked active.
Detection channels are absorbed-intensity proxies over fixed regions:

    transmission  I_out / I_in over the whole lamp
    fluorescence  absorbed between the first anode and the cathode middle
    optogalvanic  absorbed between the two anode planes

The optogalvanic channel stands in for the discharge impedance change; the
absorbed optical power between the electrodes is what perturbs the
excitation balance there.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace

import numpy as np

from .bloch import (LiouvillianFactory, _chi_batch, _ordered_average,
                    _solve_steady_batch, doppler_average)
from .errors import StepUnderflow
from .model import AtomModel, DriveField, Environment, VelocityGrid
from .spectra import DipMetrics, _dip_from_arrays, rabi_from_intensity

ALPHA_DZ_LIMIT = 0.1
MIN_STEP_FRACTION = 1e-6
PROBE_RABI_FLOOR_FRACTION = 1e-9


class SegmentRole(enum.Enum):
    ENTRY_WINDOW_TO_ANODE1 = "entry-window-to-anode1"
    ANODE1_TO_CATHODE = "anode1-to-cathode"
    CATHODE = "cathode"
    CATHODE_TO_ANODE2 = "cathode-to-anode2"
    ANODE2_TO_EXIT_WINDOW = "anode2-to-exit-window"


SEGMENT_ORDER = (
    SegmentRole.ENTRY_WINDOW_TO_ANODE1,
    SegmentRole.ANODE1_TO_CATHODE,
    SegmentRole.CATHODE,
    SegmentRole.CATHODE_TO_ANODE2,
    SegmentRole.ANODE2_TO_EXIT_WINDOW,
)


@dataclass(frozen=True)
class LampSegment:
    role: SegmentRole
    length: float
    active: bool

    def __post_init__(self):
        if self.length <= 0:
            raise ValueError("segment length must be positive")


@dataclass(frozen=True)
class LampGeometry:
    """Ordered lamp segments; construct with LampGeometry.standard()."""

    segments: tuple[LampSegment, ...]

    def __post_init__(self):
        roles = tuple(seg.role for seg in self.segments)
        if roles != SEGMENT_ORDER:
            raise ValueError(f"segments must appear in the order {[r.value for r in SEGMENT_ORDER]}")

    @property
    def total_length(self) -> float:
        return sum(seg.length for seg in self.segments)

    @classmethod
    def standard(cls, window_to_anode: float = 0.115, anode_gap: float = 0.005,
                 cathode: float = 0.020, vapor: str = "cathode") -> "LampGeometry":
        """Symmetric lamp, 26 cm total with the default lengths.

        vapor "cathode" confines the vapor to the cathode bore (sputtering
        concentrates it there); "extended" fills the whole lamp, which is the
        high-current situation where metal vapor spreads past the anodes.
        """
        if vapor not in ("cathode", "extended"):
            raise ValueError(f"unknown vapor map {vapor!r}")
        spread = vapor == "extended"
        return cls(segments=(
            LampSegment(SegmentRole.ENTRY_WINDOW_TO_ANODE1, window_to_anode, spread),
            LampSegment(SegmentRole.ANODE1_TO_CATHODE, anode_gap, spread),
            LampSegment(SegmentRole.CATHODE, cathode, True),
            LampSegment(SegmentRole.CATHODE_TO_ANODE2, anode_gap, spread),
            LampSegment(SegmentRole.ANODE2_TO_EXIT_WINDOW, window_to_anode, spread),
        ))


REGION_LABELS = ("entry", "anode1_gap", "cathode_front", "cathode_back",
                 "anode2_gap", "exit")


@dataclass(frozen=True)
class SignalTraces:
    """Per-detuning detector outputs of one propagation run.

    transmission is I_out/I_in; the fluorescence and optogalvanic entries are
    absorbed intensities in W/m^2. region_absorbed holds the absorbed
    intensity in each bookkeeping region (cathode split at its midpoint),
    so the energy balance (1 - T) I_in = sum over regions is exact.
    """

    detunings: np.ndarray
    transmission: np.ndarray
    fluorescence: np.ndarray
    optogalvanic: np.ndarray
    intensity_in: float
    region_absorbed: np.ndarray

    def __post_init__(self):
        if np.any(self.transmission < 0) or np.any(self.transmission > 1 + 1e-12):
            raise ValueError("transmission must lie in [0, 1]")
        if np.any(self.region_absorbed < -1e-12 * self.intensity_in):
            raise ValueError("absorbed intensities must be nonnegative")


def absorption_coefficient(atom: AtomModel, drive: DriveField, env: Environment,
                           grid: VelocityGrid) -> float:
    """Absorption coefficient alpha = k_p Im(chi) in 1/m at the drive's settings."""
    return atom.k_p * doppler_average(atom, drive, env, grid).imag


class _AlphaEvaluator:
    """alpha(probe Rabi) at fixed detuning, built once per detuning.

    The generator batch over velocity nodes is assembled once; only the
    probe-Rabi term is added per evaluation. The probe Rabi is floored at a
    tiny value so that a fully absorbed beam still has a well-defined
    linear-response absorption coefficient.
    """

    def __init__(self, factory: LiouvillianFactory, atom: AtomModel,
                 drive: DriveField, env: Environment, grid: VelocityGrid):
        self.atom = atom
        self.env = env
        self.grid = grid
        self.drive = drive
        self.base = factory.generator_batch(replace(drive, omega_p=0.0), grid.nodes)
        self.s_omega_p = factory.omega_p_part
        self.floor = PROBE_RABI_FLOOR_FRACTION * atom.gamma1
        self.evaluations = 0

    def __call__(self, omega_p: float) -> float:
        omega_p = max(omega_p, self.floor)
        gens = self.base + omega_p * self.s_omega_p[None]
        rhos = _solve_steady_batch(gens)
        point_drive = replace(self.drive, omega_p=omega_p)
        chi = _ordered_average(self.grid.weights,
                               _chi_batch(rhos, self.atom, point_drive, self.env))
        self.evaluations += 1
        return self.atom.k_p * chi.imag


def _integrate_region(alpha, length: float, intensity: float, total_length: float,
                      rabi_of_intensity, extra_step_halvings: int = 0) -> float:
    """Fixed-step RK4 integration of dI/dz = -alpha(I) I over one region.

    The step is seeded from the entry and weak-field absorption and re-halved
    until every evaluated alpha satisfies alpha dz <= ALPHA_DZ_LIMIT.
    extra_step_halvings forces that many additional halvings beyond the rule
    (used for convergence checks).
    """
    seed = max(alpha(rabi_of_intensity(intensity)), alpha(0.0), 1e-12)
    n_steps = max(1, math.ceil(seed * length / ALPHA_DZ_LIMIT)) << extra_step_halvings
    while True:
        dz = length / n_steps
        if dz < total_length * MIN_STEP_FRACTION:
            raise StepUnderflow(
                f"propagation needs dz < {total_length * MIN_STEP_FRACTION:.3e} m "
                f"over a {length:.3e} m region (pathological opacity)")
        out = intensity
        alpha_max = 0.0

        def f(value):
            nonlocal alpha_max
            value = max(value, 0.0)
            a = alpha(rabi_of_intensity(value))
            alpha_max = max(alpha_max, a)
            return -a * value

        for _ in range(n_steps):
            k1 = f(out)
            k2 = f(out + 0.5 * dz * k1)
            k3 = f(out + 0.5 * dz * k2)
            k4 = f(out + dz * k3)
            out = out + dz / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if alpha_max * dz <= ALPHA_DZ_LIMIT:
            return max(out, 0.0)
        n_steps *= 2


def propagate(lamp: LampGeometry, atom: AtomModel, drive: DriveField,
              env: Environment, grid: VelocityGrid, intensity_in: float,
              detuning_range: tuple[float, float], n_points: int,
              rabi_mode: str = "calibrated",
              extra_step_halvings: int = 0) -> SignalTraces:
    """Propagate the probe through the lamp over a detuning scan.

    The local probe Rabi frequency follows the attenuated intensity via
    rabi_from_intensity in the given mode; drive.omega_p is ignored. The
    coupling beam is undepleted. Each detuning is independent of the others.
    """
    if intensity_in <= 0:
        raise ValueError("intensity_in must be positive")
    lo, hi = detuning_range
    if n_points < 2 or not lo < hi:
        raise ValueError("need at least two points and min < max")
    detunings = np.linspace(lo, hi, n_points)

    # bookkeeping regions: the five segments with the cathode split in half
    regions = []
    for seg in lamp.segments:
        if seg.role is SegmentRole.CATHODE:
            regions.append((seg.length / 2.0, seg.active))
            regions.append((seg.length / 2.0, seg.active))
        else:
            regions.append((seg.length, seg.active))
    total = lamp.total_length

    def rabi_of(value: float) -> float:
        return rabi_from_intensity(value, "probe", atom, mode=rabi_mode)

    factory = LiouvillianFactory(atom, env, drive.geometry)
    transmission = np.empty(n_points)
    absorbed = np.zeros((n_points, len(regions)))
    for i, delta in enumerate(detunings):
        alpha = _AlphaEvaluator(factory, atom,
                                replace(drive, delta_p=float(delta)), env, grid)
        intensity = intensity_in
        for j, (length, active) in enumerate(regions):
            if not active:
                continue
            out = _integrate_region(alpha, length, intensity, total, rabi_of,
                                    extra_step_halvings=extra_step_halvings)
            absorbed[i, j] = intensity - out
            intensity = out
        transmission[i] = intensity / intensity_in

    fluorescence = absorbed[:, 1] + absorbed[:, 2]
    optogalvanic = absorbed[:, 1] + absorbed[:, 2] + absorbed[:, 3] + absorbed[:, 4]
    return SignalTraces(detunings=detunings, transmission=transmission,
                        fluorescence=fluorescence, optogalvanic=optogalvanic,
                        intensity_in=intensity_in, region_absorbed=absorbed)


def channel_spectra(traces: SignalTraces, reference: SignalTraces) -> dict[str, DipMetrics]:
    """Dip metrics per detection channel against a no-coupling reference.

    The transmission trace is converted to absorbed fraction 1 - T first so
    every channel is a dip in an absorption-like quantity.
    """
    if not np.array_equal(traces.detunings, reference.detunings):
        raise ValueError("traces must share an identical detuning grid")
    out = {}
    for name, signal, ref in (
        ("transmission", 1.0 - traces.transmission, 1.0 - reference.transmission),
        ("fluorescence", traces.fluorescence, reference.fluorescence),
        ("optogalvanic", traces.optogalvanic, reference.optogalvanic),
    ):
        out[name] = _dip_from_arrays(traces.detunings, signal, ref)
    return out
