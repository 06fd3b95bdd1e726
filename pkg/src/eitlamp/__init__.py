"""Steady-state simulator of transparency resonances in an open cascade vapor.

Builds rotating-frame Lindblad generators for a Doppler-broadened three-level
cascade medium with a weak leak to a reservoir level, solves for steady-state
susceptibility spectra, and propagates a saturating probe through a segmented
hollow-cathode lamp to produce transmission, fluorescence and optogalvanic
signal traces.
"""

__version__ = "0.1.0"

from .errors import (ConfigError, EitLampError, InvariantViolation, NoConvergence,
                     ParseError, SingularSystem, StepUnderflow, ValidationError,
                     ZeroProbe)
from .model import (AtomModel, DensityState, DriveField, Environment, Geometry,
                    Liouvillian, VelocityGrid, calcium, thermal_speed)
from .bloch import (build_liouvillian, doppler_average, doppler_average_scan,
                    make_velocity_grid, steady_state, susceptibility_single,
                    vcc_steady_state)
from .spectra import (DipMetrics, Spectrum, dip_metrics, doppler_fwhm, group_index,
                      rabi_from_intensity, residual_doppler_width, saturation_intensity,
                      saturation_sweep, scan_probe, two_photon_wavenumber)
from .lamp import (LampGeometry, LampSegment, SegmentRole, SignalTraces,
                   absorption_coefficient, channel_spectra, propagate)
from .config import (RunConfig, build_atom, build_drive, build_environment,
                     build_grid, build_lamp, parse_config, serialize_config)

__all__ = [
    "__version__",
    "AtomModel", "DriveField", "Environment", "Geometry", "DensityState",
    "VelocityGrid", "Liouvillian", "calcium", "thermal_speed",
    "build_liouvillian", "steady_state", "susceptibility_single",
    "make_velocity_grid", "doppler_average", "doppler_average_scan",
    "vcc_steady_state",
    "Spectrum", "DipMetrics", "scan_probe", "dip_metrics",
    "residual_doppler_width", "two_photon_wavenumber", "group_index",
    "saturation_sweep", "rabi_from_intensity", "saturation_intensity",
    "doppler_fwhm",
    "LampGeometry", "LampSegment", "SegmentRole", "SignalTraces",
    "absorption_coefficient", "propagate", "channel_spectra",
    "RunConfig", "parse_config", "serialize_config", "build_atom",
    "build_drive", "build_environment", "build_grid", "build_lamp",
    "EitLampError", "SingularSystem", "ZeroProbe", "NoConvergence",
    "StepUnderflow", "InvariantViolation", "ConfigError", "ParseError",
    "ValidationError",
]
