"""Domain types for the open three-level cascade medium.

Level ordering used throughout: |1> ground, |2> intermediate, |3> upper,
|4> reservoir. The reservoir collects the weak leak out of the upper state
and returns population to the ground state at the transit rate, which keeps
the system trace preserving and gives it a unique steady state.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np
from scipy.constants import c, epsilon_0, hbar, k as k_B

TWO_PI = 2.0 * np.pi
ATOMIC_MASS_KG = 1.66053906660e-27

HERMITICITY_RTOL = 1e-12
TRACE_ATOL = 1e-10
POSITIVITY_FLOOR = -1e-9
WEIGHT_SUM_ATOL = 1e-12


class Geometry(enum.Enum):
    """Relative propagation direction of the probe and coupling beams."""

    COPROPAGATING = "copropagating"
    COUNTERPROPAGATING = "counterpropagating"

    @property
    def sign(self) -> int:
        """Sign of the coupling wavenumber along the probe axis."""
        return 1 if self is Geometry.COPROPAGATING else -1


@dataclass(frozen=True)
class AtomModel:
    """Level-scheme constants of the cascade atom.

    Rates are angular frequencies (rad/s), wavelengths in meters, mass in kg.
    gamma3 is the leak from the upper state into the reservoir; setting it to
    zero closes the system.
    """

    lambda_p: float
    lambda_c: float
    gamma1: float
    gamma2: float
    gamma3: float
    mass: float

    def __post_init__(self):
        if self.lambda_p <= 0 or self.lambda_c <= 0:
            raise ValueError("wavelengths must be positive")
        if self.mass <= 0:
            raise ValueError("mass must be positive")
        # zero gamma1/gamma2 atoms are degenerate but constructible, so the
        # steady-state solver can diagnose them as singular systems
        if self.gamma1 < 0 or self.gamma2 < 0 or self.gamma3 < 0:
            raise ValueError("decay rates must be nonnegative")

    @property
    def k_p(self) -> float:
        """Probe wavenumber (rad/m)."""
        return TWO_PI / self.lambda_p

    @property
    def k_c(self) -> float:
        """Coupling wavenumber (rad/m)."""
        return TWO_PI / self.lambda_c

    @property
    def omega_p0(self) -> float:
        """Probe transition angular frequency (rad/s)."""
        return TWO_PI * c / self.lambda_p

    @property
    def dipole_sq_p(self) -> float:
        """Squared probe transition dipole moment (C^2 m^2)."""
        return 3.0 * np.pi * epsilon_0 * hbar * c**3 * self.gamma1 / self.omega_p0**3


@dataclass(frozen=True)
class DriveField:
    """Probe and coupling field parameters (all rates in rad/s)."""

    delta_p: float = 0.0
    delta_c: float = 0.0
    omega_p: float = 0.0
    omega_c: float = 0.0
    geometry: Geometry = Geometry.COUNTERPROPAGATING

    def __post_init__(self):
        if self.omega_p < 0 or self.omega_c < 0:
            raise ValueError("Rabi frequencies must be nonnegative")


@dataclass(frozen=True)
class Environment:
    """Vapor and discharge environment.

    density is the ground-state number density in m^-3. transit_rate is the
    reservoir-to-ground return rate modelling diffusion out of the beams,
    pump_rate an incoherent ground-to-excited collisional pump (split equally
    between the two excited states), vcc_rate the strong-collision
    velocity-changing collision rate. All rates in rad/s.
    """

    temperature: float = 1000.0
    density: float = 1e16
    transit_rate: float = TWO_PI * 34e3
    pump_rate: float = 0.0
    vcc_rate: float = 0.0

    def __post_init__(self):
        if self.temperature <= 0:
            raise ValueError("temperature must be positive")
        if self.density < 0:
            raise ValueError("density must be nonnegative")
        if self.transit_rate < 0 or self.pump_rate < 0 or self.vcc_rate < 0:
            raise ValueError("rates must be nonnegative")


def thermal_speed(atom: AtomModel, env: Environment) -> float:
    """Most probable speed u = sqrt(2 k_B T / m) of the vapor (m/s)."""
    return float(np.sqrt(2.0 * k_B * env.temperature / atom.mass))


@dataclass(frozen=True)
class DensityState:
    """4x4 density matrix over {ground, intermediate, upper, reservoir}.

    Validated on construction: Hermitian, unit trace, eigenvalues above a
    small negative numerical floor.
    """

    rho: np.ndarray

    def __post_init__(self):
        rho = np.asarray(self.rho, dtype=complex)
        if rho.shape != (4, 4):
            raise ValueError(f"expected a 4x4 density matrix, got {rho.shape}")
        object.__setattr__(self, "rho", rho)
        validate_density(rho)

    @property
    def populations(self) -> np.ndarray:
        return self.rho.diagonal().real.copy()


def validate_density(rho: np.ndarray) -> None:
    """Raise InvariantViolation unless rho is a valid density matrix.

    Accepts a single 4x4 matrix or a batch (..., 4, 4); the batch form checks
    every slice at once.
    """
    from .errors import InvariantViolation

    herm_defect = np.abs(rho - np.conj(np.swapaxes(rho, -1, -2))).max()
    scale = max(np.abs(rho).max(), 1e-300)
    if herm_defect > HERMITICITY_RTOL * scale:
        raise InvariantViolation(
            f"density matrix not Hermitian: defect {herm_defect:.3e} "
            f"(relative {herm_defect / scale:.3e})")
    traces = np.trace(rho, axis1=-2, axis2=-1)
    trace_defect = np.abs(traces - 1.0).max()
    if trace_defect > TRACE_ATOL:
        raise InvariantViolation(f"density matrix trace off by {trace_defect:.3e}")
    eigmin = np.linalg.eigvalsh(rho).min()
    if eigmin < POSITIVITY_FLOOR:
        raise InvariantViolation(f"density matrix not positive: min eigenvalue {eigmin:.3e}")


@dataclass(frozen=True)
class VelocityGrid:
    """Quadrature nodes and weights for the thermal velocity average.

    nodes are axial velocities in m/s in ascending order, weights are
    dimensionless and sum to one, u is the most probable speed the grid was
    built for.
    """

    nodes: np.ndarray
    weights: np.ndarray
    u: float
    rule: str = "hermite"

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        weights = np.asarray(self.weights, dtype=float)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", weights)
        if nodes.ndim != 1 or nodes.shape != weights.shape:
            raise ValueError("nodes and weights must be 1-D arrays of equal length")
        if len(nodes) < 1:
            raise ValueError("velocity grid must have at least one node")
        if np.any(np.diff(nodes) <= 0) and len(nodes) > 1:
            raise ValueError("velocity nodes must be strictly ascending")
        if abs(weights.sum() - 1.0) > WEIGHT_SUM_ATOL:
            raise ValueError(f"weights must sum to 1, got {weights.sum()!r}")
        if self.u <= 0:
            raise ValueError("u must be positive")

    def __len__(self) -> int:
        return len(self.nodes)


@dataclass(frozen=True)
class Liouvillian:
    """Steady-state generator for one velocity class.

    generator is a 16x16 complex matrix acting on the row-major flattened
    density matrix; context records what built it.
    """

    generator: np.ndarray
    context: tuple = field(default=(), compare=False)

    def __post_init__(self):
        gen = np.asarray(self.generator, dtype=complex)
        if gen.shape != (16, 16):
            raise ValueError(f"expected a 16x16 generator, got {gen.shape}")
        object.__setattr__(self, "generator", gen)

    def apply(self, rho: np.ndarray) -> np.ndarray:
        """Apply the generator to a 4x4 matrix, returning d(rho)/dt."""
        return (self.generator @ np.asarray(rho, dtype=complex).reshape(16)).reshape(4, 4)


def calcium() -> AtomModel:
    """Calcium cascade: 423 nm probe, 586 nm coupling, weak upper-state leak."""
    return AtomModel(
        lambda_p=423e-9,
        lambda_c=586e-9,
        gamma1=TWO_PI * 34e6,
        gamma2=TWO_PI * 11e6,
        gamma3=TWO_PI * 0.18e6,
        mass=40.078 * ATOMIC_MASS_KG,
    )
