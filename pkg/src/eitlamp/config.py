"""Run configuration: parsing, validation, serialization, SI conversion.

The file format is line oriented, `section.key = value` with `#` comments.
User-facing units follow lab conventions (nm, MHz as ordinary frequencies,
K, cm^-3, mW/cm^2, GHz, cm); everything is converted to SI angular
frequencies for computation.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, fields, replace

from .errors import ParseError, ValidationError
from .lamp import LampGeometry
from .model import (ATOMIC_MASS_KG, TWO_PI, AtomModel, DriveField, Environment,
                    Geometry, VelocityGrid)
from .bloch import make_velocity_grid
from .spectra import rabi_from_intensity

MW_CM2_TO_W_M2 = 10.0


@dataclass(frozen=True)
class AtomConfig:
    lambda_p_nm: float = 423.0
    lambda_c_nm: float = 586.0
    gamma1_mhz: float = 34.0
    gamma2_mhz: float = 11.0
    gamma3_mhz: float = 0.18
    mass_amu: float = 40.078


@dataclass(frozen=True)
class DriveConfig:
    delta_p_mhz: float = 0.0
    delta_c_mhz: float = 0.0
    omega_p_gamma1: float | None = 0.4
    omega_c_gamma1: float | None = 1.1
    probe_intensity_mw_cm2: float | None = None
    coupling_intensity_mw_cm2: float | None = None
    intensity_mode: str = "calibrated"
    geometry: str = "counterpropagating"


@dataclass(frozen=True)
class EnvironmentConfig:
    temperature_k: float = 1000.0
    density_cm3: float = 1e10
    transit_khz: float = 34.0
    pump_khz: float = 0.0
    vcc_mhz: float = 0.0


@dataclass(frozen=True)
class NumericsConfig:
    velocity_nodes: int = 2048
    velocity_rule: str = "uniform"
    scan_min_ghz: float = -2.5
    scan_max_ghz: float = 2.5
    scan_points: int = 501
    group_index_step_gamma1: float = 0.01
    sweep_rabi_gamma1: tuple[float, ...] = (0.1, 0.2, 0.3, 0.4, 0.5, 0.6)


@dataclass(frozen=True)
class LampConfig:
    window_to_anode_cm: float = 11.5
    anode_gap_cm: float = 0.5
    cathode_cm: float = 2.0
    vapor: str = "cathode"
    input_intensity_mw_cm2: float = 85.0
    density_multiplier: float = 1.0


@dataclass(frozen=True)
class RunConfig:
    atom: AtomConfig = AtomConfig()
    drive: DriveConfig = DriveConfig()
    environment: EnvironmentConfig = EnvironmentConfig()
    numerics: NumericsConfig = NumericsConfig()
    lamp: LampConfig = LampConfig()


_SECTIONS = {
    "atom": AtomConfig,
    "drive": DriveConfig,
    "environment": EnvironmentConfig,
    "numerics": NumericsConfig,
    "lamp": LampConfig,
}

# key -> (kind, constraint); kinds: float, optional_float, int, choice, float_list
_SPECS: dict[tuple[str, str], tuple] = {
    ("atom", "lambda_p_nm"): ("float", "positive"),
    ("atom", "lambda_c_nm"): ("float", "positive"),
    ("atom", "gamma1_mhz"): ("float", "positive"),
    ("atom", "gamma2_mhz"): ("float", "positive"),
    ("atom", "gamma3_mhz"): ("float", "nonnegative"),
    ("atom", "mass_amu"): ("float", "positive"),
    ("drive", "delta_p_mhz"): ("float", "any"),
    ("drive", "delta_c_mhz"): ("float", "any"),
    ("drive", "omega_p_gamma1"): ("optional_float", "nonnegative"),
    ("drive", "omega_c_gamma1"): ("optional_float", "nonnegative"),
    ("drive", "probe_intensity_mw_cm2"): ("optional_float", "nonnegative"),
    ("drive", "coupling_intensity_mw_cm2"): ("optional_float", "nonnegative"),
    ("drive", "intensity_mode"): ("choice", ("standard", "calibrated")),
    ("drive", "geometry"): ("choice", ("copropagating", "counterpropagating")),
    ("environment", "temperature_k"): ("float", "positive"),
    ("environment", "density_cm3"): ("float", "nonnegative"),
    ("environment", "transit_khz"): ("float", "nonnegative"),
    ("environment", "pump_khz"): ("float", "nonnegative"),
    ("environment", "vcc_mhz"): ("float", "nonnegative"),
    ("numerics", "velocity_nodes"): ("int", (2, 1_000_000)),
    ("numerics", "velocity_rule"): ("choice", ("uniform", "hermite")),
    ("numerics", "scan_min_ghz"): ("float", "any"),
    ("numerics", "scan_max_ghz"): ("float", "any"),
    ("numerics", "scan_points"): ("int", (3, 1_000_000)),
    ("numerics", "group_index_step_gamma1"): ("float", "positive"),
    ("numerics", "sweep_rabi_gamma1"): ("float_list", "ascending_positive"),
    ("lamp", "window_to_anode_cm"): ("float", "positive"),
    ("lamp", "anode_gap_cm"): ("float", "positive"),
    ("lamp", "cathode_cm"): ("float", "positive"),
    ("lamp", "vapor"): ("choice", ("cathode", "extended")),
    ("lamp", "input_intensity_mw_cm2"): ("float", "positive"),
    ("lamp", "density_multiplier"): ("float", "nonnegative"),
}


def _parse_float(text: str, key: str, line: int | None) -> float:
    try:
        value = float(text)
    except ValueError:
        raise ValidationError(f"not a number: {text!r}", key=key, line=line) from None
    if not math.isfinite(value):
        raise ValidationError("value must be finite", key=key, line=line)
    return value


def _check_range(value: float, constraint: str, key: str, line: int | None) -> None:
    if constraint == "positive" and value <= 0:
        raise ValidationError(f"must be > 0, got {value!r}", key=key, line=line)
    if constraint == "nonnegative" and value < 0:
        raise ValidationError(f"must be >= 0, got {value!r}", key=key, line=line)


def _convert(raw: str, spec: tuple, key: str, line: int | None):
    kind, constraint = spec
    if kind == "float":
        value = _parse_float(raw, key, line)
        _check_range(value, constraint, key, line)
        return value
    if kind == "optional_float":
        if raw.lower() == "none":
            return None
        value = _parse_float(raw, key, line)
        _check_range(value, constraint, key, line)
        return value
    if kind == "int":
        try:
            value = int(raw)
        except ValueError:
            raise ValidationError(f"not an integer: {raw!r}", key=key, line=line) from None
        lo, hi = constraint
        if not lo <= value <= hi:
            raise ValidationError(f"must be in [{lo}, {hi}], got {value}", key=key, line=line)
        return value
    if kind == "choice":
        if raw not in constraint:
            raise ValidationError(f"must be one of {constraint}, got {raw!r}",
                                  key=key, line=line)
        return raw
    if kind == "float_list":
        parts = [p.strip() for p in raw.split(",") if p.strip()]
        if not parts:
            raise ValidationError("list must be nonempty", key=key, line=line)
        values = tuple(_parse_float(p, key, line) for p in parts)
        if constraint == "ascending_positive":
            if any(v <= 0 for v in values):
                raise ValidationError("entries must be > 0", key=key, line=line)
            if any(b <= a for a, b in zip(values, values[1:])):
                raise ValidationError("entries must be strictly ascending", key=key, line=line)
        return values
    raise AssertionError(f"unhandled kind {kind}")


def _parse_assignments(text: str) -> dict[tuple[str, str], tuple[str, int]]:
    """Raw `section.key -> (value text, line number)` map with syntax checks."""
    out: dict[tuple[str, str], tuple[str, int]] = {}
    for lineno, rawline in enumerate(text.splitlines(), start=1):
        content = rawline.split("#", 1)[0].strip()
        if not content:
            continue
        if "=" not in content:
            raise ParseError(f"expected 'section.key = value', got {rawline.strip()!r}",
                             line=lineno)
        lhs, rhs = content.split("=", 1)
        lhs = lhs.strip()
        rhs = rhs.strip()
        if "." not in lhs:
            raise ParseError(f"key {lhs!r} must be of the form section.key", line=lineno)
        section, key = lhs.split(".", 1)
        section, key = section.strip(), key.strip()
        if (section, key) not in _SPECS:
            raise ValidationError("unknown configuration key",
                                  key=f"{section}.{key}", line=lineno)
        if not rhs:
            raise ParseError(f"missing value for {lhs}", line=lineno)
        if (section, key) in out:
            raise ValidationError("duplicate key", key=f"{section}.{key}", line=lineno)
        out[(section, key)] = (rhs, lineno)
    return out


def _resolve_beam(values: dict, explicit: set, beam: str, rabi_key: str,
                  intensity_key: str) -> None:
    """Enforce that exactly one of Rabi / intensity specifies each beam."""
    rabi = values.get(("drive", rabi_key))
    intensity = values.get(("drive", intensity_key))
    rabi_explicit = ("drive", rabi_key) in explicit
    intensity_explicit = ("drive", intensity_key) in explicit
    if intensity is not None and rabi is not None:
        if rabi_explicit and intensity_explicit:
            raise ValidationError(
                f"specify either drive.{rabi_key} or drive.{intensity_key}, not both",
                key=f"drive.{intensity_key}")
        # an explicit intensity displaces the default Rabi value
        values[("drive", rabi_key)] = None
    if intensity is None and rabi is None:
        raise ValidationError(
            f"the {beam} beam needs drive.{rabi_key} or drive.{intensity_key}",
            key=f"drive.{rabi_key}")


def parse_config(text: str, overrides: list[str] | None = None) -> RunConfig:
    """Parse configuration text plus optional `section.key=value` overrides.

    An empty file yields the full default configuration. Unknown keys,
    malformed lines, duplicate keys and out-of-range values are rejected
    with the offending line number.
    """
    raw = _parse_assignments(text)
    explicit = set(raw)
    if overrides:
        seen: set[tuple[str, str]] = set()
        for item in overrides:
            if "=" not in item:
                raise ParseError(f"override must be section.key=value, got {item!r}")
            lhs, rhs = item.split("=", 1)
            lhs = lhs.strip()
            if "." not in lhs:
                raise ParseError(f"override key {lhs!r} must be of the form section.key")
            section, key = lhs.split(".", 1)
            pair = (section.strip(), key.strip())
            if pair not in _SPECS:
                raise ValidationError("unknown configuration key", key=lhs)
            if pair in seen:
                raise ValidationError("duplicate override", key=lhs)
            seen.add(pair)
            raw[pair] = (rhs.strip(), 0)
            explicit.add(pair)

    values: dict[tuple[str, str], object] = {}
    for pair, spec in _SPECS.items():
        if pair in raw:
            rhs, lineno = raw[pair]
            values[pair] = _convert(rhs, spec, key=f"{pair[0]}.{pair[1]}",
                                    line=lineno if lineno > 0 else None)
        else:
            section_cls = _SECTIONS[pair[0]]
            default = next(f.default for f in fields(section_cls) if f.name == pair[1])
            values[pair] = default

    _resolve_beam(values, explicit, "probe", "omega_p_gamma1", "probe_intensity_mw_cm2")
    _resolve_beam(values, explicit, "coupling", "omega_c_gamma1", "coupling_intensity_mw_cm2")

    if values[("numerics", "scan_min_ghz")] >= values[("numerics", "scan_max_ghz")]:
        raise ValidationError("scan_min_ghz must be below scan_max_ghz",
                              key="numerics.scan_min_ghz")

    sections = {}
    for name, cls in _SECTIONS.items():
        kwargs = {f.name: values[(name, f.name)] for f in fields(cls)}
        sections[name] = cls(**kwargs)
    return RunConfig(atom=sections["atom"], drive=sections["drive"],
                     environment=sections["environment"],
                     numerics=sections["numerics"], lamp=sections["lamp"])


def _format_value(value) -> str:
    if value is None:
        return "none"
    if isinstance(value, tuple):
        return ", ".join(f"{v:.17g}" for v in value)
    if isinstance(value, bool):
        raise AssertionError("no boolean config keys")
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return f"{value:.17g}"
    return str(value)


def serialize_config(config: RunConfig) -> str:
    """Canonical text form; parse_config(serialize_config(c)) == c."""
    lines = []
    for name, cls in _SECTIONS.items():
        section = getattr(config, name if name != "environment" else "environment")
        for f in fields(cls):
            lines.append(f"{name}.{f.name} = {_format_value(getattr(section, f.name))}")
    return "\n".join(lines) + "\n"


def config_as_dict(config: RunConfig) -> dict:
    """Nested plain-type echo of the configuration (for run records)."""
    out: dict[str, dict] = {}
    for name, cls in _SECTIONS.items():
        section = getattr(config, name)
        out[name] = {}
        for f in fields(cls):
            value = getattr(section, f.name)
            out[name][f.name] = list(value) if isinstance(value, tuple) else value
    return out


def build_atom(config: RunConfig) -> AtomModel:
    a = config.atom
    return AtomModel(
        lambda_p=a.lambda_p_nm * 1e-9,
        lambda_c=a.lambda_c_nm * 1e-9,
        gamma1=TWO_PI * a.gamma1_mhz * 1e6,
        gamma2=TWO_PI * a.gamma2_mhz * 1e6,
        gamma3=TWO_PI * a.gamma3_mhz * 1e6,
        mass=a.mass_amu * ATOMIC_MASS_KG,
    )


def build_drive(config: RunConfig, atom: AtomModel) -> DriveField:
    d = config.drive
    if d.omega_p_gamma1 is not None:
        omega_p = d.omega_p_gamma1 * atom.gamma1
    else:
        omega_p = rabi_from_intensity(d.probe_intensity_mw_cm2 * MW_CM2_TO_W_M2,
                                      "probe", atom, mode=d.intensity_mode)
    if d.omega_c_gamma1 is not None:
        omega_c = d.omega_c_gamma1 * atom.gamma1
    else:
        omega_c = rabi_from_intensity(d.coupling_intensity_mw_cm2 * MW_CM2_TO_W_M2,
                                      "coupling", atom, mode=d.intensity_mode)
    return DriveField(
        delta_p=TWO_PI * d.delta_p_mhz * 1e6,
        delta_c=TWO_PI * d.delta_c_mhz * 1e6,
        omega_p=omega_p,
        omega_c=omega_c,
        geometry=Geometry(d.geometry),
    )


def build_environment(config: RunConfig) -> Environment:
    e = config.environment
    return Environment(
        temperature=e.temperature_k,
        density=e.density_cm3 * 1e6,
        transit_rate=TWO_PI * e.transit_khz * 1e3,
        pump_rate=TWO_PI * e.pump_khz * 1e3,
        vcc_rate=TWO_PI * e.vcc_mhz * 1e6,
    )


def build_grid(config: RunConfig, atom: AtomModel, env: Environment) -> VelocityGrid:
    n = config.numerics
    return make_velocity_grid(atom, env, n.velocity_nodes, rule=n.velocity_rule)


def build_lamp(config: RunConfig) -> LampGeometry:
    lamp = config.lamp
    return LampGeometry.standard(
        window_to_anode=lamp.window_to_anode_cm / 100.0,
        anode_gap=lamp.anode_gap_cm / 100.0,
        cathode=lamp.cathode_cm / 100.0,
        vapor=lamp.vapor,
    )


def scan_range(config: RunConfig) -> tuple[float, float]:
    n = config.numerics
    return (TWO_PI * n.scan_min_ghz * 1e9, TWO_PI * n.scan_max_ghz * 1e9)


def lamp_environment(config: RunConfig) -> Environment:
    """Environment with the lamp's column-density multiplier applied."""
    env = build_environment(config)
    return replace(env, density=env.density * config.lamp.density_multiplier)
