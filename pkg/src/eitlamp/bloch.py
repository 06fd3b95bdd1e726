"""Rotating-frame Liouvillian, steady state, and thermal velocity averaging.

The generator acts on the row-major flattened 4x4 density matrix, so for
operators A, B:

    vec(A rho B) = kron(A, B.T) vec(rho)

The Hamiltonian part uses the rotating-frame detunings of one velocity
class, Doppler shifted along the probe axis:

    delta_p' = delta_p - k_p v
    delta_c' = delta_c - s k_c v     (s = +1 co, -1 counterpropagating)

Dissipation channels: gamma1 (2->1), gamma2 (3->2), gamma3 (3->reservoir),
transit (reservoir->1), and an incoherent pump split equally 1->2 and 1->3.
"""
from __future__ import annotations

from dataclasses import replace

import numpy as np
from scipy.constants import epsilon_0, hbar

from .errors import InvariantViolation, NoConvergence, SingularSystem, ZeroProbe
from .model import (AtomModel, DensityState, DriveField, Environment,
                    Liouvillian, VelocityGrid, thermal_speed, validate_density)

RESIDUAL_RTOL = 1e-9
VCC_TOL = 1e-9
VCC_MAX_ITER = 10_000
VCC_DAMPING = 0.5
UNIFORM_SPAN = 5.0

_I4 = np.eye(4, dtype=complex)
_TRACE_ROW = np.zeros(16, dtype=complex)
_TRACE_ROW[[0, 5, 10, 15]] = 1.0
_UNIT_RHS = np.zeros(16, dtype=complex)
_UNIT_RHS[0] = 1.0


def _ketbra(i: int, j: int) -> np.ndarray:
    m = np.zeros((4, 4), dtype=complex)
    m[i, j] = 1.0
    return m


def _spre(a: np.ndarray) -> np.ndarray:
    return np.kron(a, _I4)


def _spost(a: np.ndarray) -> np.ndarray:
    return np.kron(_I4, a.T)


def _dissipator(op: np.ndarray) -> np.ndarray:
    """Superoperator of D[L]rho = L rho L+ - {L+L, rho}/2."""
    ldl = op.conj().T @ op
    return np.kron(op, op.conj()) - 0.5 * (_spre(ldl) + _spost(ldl))


def _hamiltonian_superop(h: np.ndarray) -> np.ndarray:
    """Superoperator of -i [h, rho]."""
    return -1j * (_spre(h) - _spost(h))


class LiouvillianFactory:
    """Precomputed generator pieces for one (atom, environment, geometry).

    The generator is affine in the drive parameters and the class velocity,
    so scans assemble it as a fixed-order linear combination. Batched
    assembly over velocity nodes is bit-identical to single-node assembly.
    """

    def __init__(self, atom: AtomModel, env: Environment, geometry):
        self.atom = atom
        self.env = env
        self.geometry = geometry
        proj2 = _ketbra(1, 1)
        proj3 = _ketbra(2, 2)
        x12 = _ketbra(1, 0) + _ketbra(0, 1)
        x23 = _ketbra(2, 1) + _ketbra(1, 2)

        diss = _dissipator(np.sqrt(atom.gamma1) * _ketbra(0, 1))
        diss += _dissipator(np.sqrt(atom.gamma2) * _ketbra(1, 2))
        diss += _dissipator(np.sqrt(atom.gamma3) * _ketbra(3, 2))
        diss += _dissipator(np.sqrt(env.transit_rate) * _ketbra(0, 3))
        diss += _dissipator(np.sqrt(env.pump_rate / 2.0) * _ketbra(1, 0))
        diss += _dissipator(np.sqrt(env.pump_rate / 2.0) * _ketbra(2, 0))
        self._static = diss

        self._s_delta_p = _hamiltonian_superop(-(proj2 + proj3))
        self._s_delta_c = _hamiltonian_superop(-proj3)
        self._s_omega_p = _hamiltonian_superop(0.5 * x12)
        self._s_omega_c = _hamiltonian_superop(0.5 * x23)
        two_photon_k = atom.k_p + geometry.sign * atom.k_c
        self._s_velocity = _hamiltonian_superop(atom.k_p * proj2 + two_photon_k * proj3)

    def drive_part(self, drive: DriveField) -> np.ndarray:
        """Velocity-independent part of the generator for a drive setting."""
        return (self._static
                + drive.delta_p * self._s_delta_p
                + drive.delta_c * self._s_delta_c
                + drive.omega_p * self._s_omega_p
                + drive.omega_c * self._s_omega_c)

    def generator(self, drive: DriveField, v: float) -> np.ndarray:
        return self.drive_part(drive) + v * self._s_velocity

    def generator_batch(self, drive: DriveField, velocities: np.ndarray) -> np.ndarray:
        """Generators for many velocity classes, shape (n, 16, 16)."""
        base = self.drive_part(drive)
        v = np.asarray(velocities, dtype=float)
        return base[None, :, :] + v[:, None, None] * self._s_velocity[None, :, :]

    @property
    def omega_p_part(self) -> np.ndarray:
        """Generator piece multiplying the probe Rabi frequency."""
        return self._s_omega_p


def build_liouvillian(atom: AtomModel, drive: DriveField, env: Environment,
                      v: float = 0.0) -> Liouvillian:
    """Build the steady-state generator for one velocity class."""
    factory = LiouvillianFactory(atom, env, drive.geometry)
    return Liouvillian(generator=factory.generator(drive, v),
                       context=(atom, drive, env, v))


def _solve_steady_batch(generators: np.ndarray) -> np.ndarray:
    """Solve L rho = 0 with unit trace for a batch of generators.

    generators has shape (..., 16, 16). The first row (the redundant
    d rho_11/dt equation) is replaced by the trace constraint and the dense
    system solved by LU. The solution is Hermitized, trace normalized and
    validated; the residual of the unconstrained generator is checked
    against RESIDUAL_RTOL times its Frobenius norm.
    """
    gens = np.asarray(generators, dtype=complex)
    constrained = gens.copy()
    constrained[..., 0, :] = _TRACE_ROW
    rhs = np.broadcast_to(_UNIT_RHS, constrained.shape[:-1])
    try:
        x = np.linalg.solve(constrained, rhs[..., None])[..., 0]
    except np.linalg.LinAlgError as exc:
        cond = _worst_condition(constrained)
        raise SingularSystem(f"steady-state system is singular: {exc}",
                             condition=cond) from None
    rho = x.reshape(*x.shape[:-1], 4, 4)
    rho = 0.5 * (rho + np.conj(np.swapaxes(rho, -1, -2)))
    traces = np.trace(rho, axis1=-2, axis2=-1).real
    if np.any(np.abs(traces - 1.0) > 0.5) or not np.all(np.isfinite(traces)):
        cond = _worst_condition(constrained)
        raise SingularSystem("steady-state solution has no sensible trace",
                             condition=cond)
    rho = rho / traces[..., None, None]

    residual = np.linalg.norm(
        (gens @ rho.reshape(*rho.shape[:-2], 16)[..., None])[..., 0], axis=-1)
    scale = np.linalg.norm(gens, axis=(-2, -1))
    bad = residual > RESIDUAL_RTOL * np.maximum(scale, 1e-300)
    if np.any(bad):
        cond = _worst_condition(constrained)
        worst = float((residual / np.maximum(scale, 1e-300)).max())
        raise SingularSystem(
            f"steady-state residual {worst:.3e} exceeds {RESIDUAL_RTOL:.0e}",
            condition=cond)
    validate_density(rho)
    return rho


def _worst_condition(constrained: np.ndarray) -> float | None:
    try:
        return float(np.linalg.cond(constrained).max())
    except np.linalg.LinAlgError:
        return None


def steady_state(liouvillian: Liouvillian) -> DensityState:
    """Unique steady state of a trace-preserving generator."""
    rho = _solve_steady_batch(liouvillian.generator[None, :, :])[0]
    return DensityState(rho=rho)


def susceptibility_single(state: DensityState, atom: AtomModel,
                          drive: DriveField, env: Environment) -> complex:
    """Complex probe susceptibility of one velocity class.

    chi = (2 N d_p^2 / (eps0 hbar Omega_p)) * rho21~ with rho21~ = -rho_21.
    The overall phase is calibrated against the two-level limit: Im chi > 0
    is absorption and Re chi crosses from positive to negative through an
    absorption resonance (anomalous dispersion at line center), consistent
    with Kramers-Kronig.
    """
    if drive.omega_p == 0:
        raise ZeroProbe("susceptibility is defined only for a driven probe")
    coherence = -np.asarray(state.rho)[..., 1, 0]
    prefactor = 2.0 * env.density * atom.dipole_sq_p / (epsilon_0 * hbar * drive.omega_p)
    return complex(prefactor * coherence)


def _chi_batch(rhos: np.ndarray, atom: AtomModel, drive: DriveField,
               env: Environment) -> np.ndarray:
    if drive.omega_p == 0:
        raise ZeroProbe("susceptibility is defined only for a driven probe")
    prefactor = 2.0 * env.density * atom.dipole_sq_p / (epsilon_0 * hbar * drive.omega_p)
    return prefactor * (-rhos[..., 1, 0])


def make_velocity_grid(atom: AtomModel, env: Environment, n_nodes: int,
                       rule: str = "hermite", span: float = UNIFORM_SPAN) -> VelocityGrid:
    """Quadrature grid for the Maxwell velocity average.

    rule "hermite" maps Gauss-Hermite nodes x_i to v_i = u x_i with weights
    w_i / sqrt(pi), which integrates the Maxwell weight exactly for smooth
    integrands. rule "uniform" places equidistant nodes on [-span u, span u]
    with normalized Maxwell-times-trapezoid weights; it is the right choice
    whenever the per-class response carries structure much narrower than u,
    which is the case for this medium (natural width over Doppler width is
    about 1/50, so "hermite" needs tens of thousands of nodes to converge
    while a few thousand uniform nodes suffice).
    """
    if n_nodes < 2:
        raise ValueError("n_nodes must be at least 2")
    u = thermal_speed(atom, env)
    if rule == "hermite":
        x, w = np.polynomial.hermite.hermgauss(n_nodes)
        nodes = u * x
        weights = w / np.sqrt(np.pi)
    elif rule == "uniform":
        nodes = np.linspace(-span * u, span * u, n_nodes)
        weights = np.exp(-((nodes / u) ** 2))
        weights[0] *= 0.5
        weights[-1] *= 0.5
        weights /= weights.sum()
    else:
        raise ValueError(f"unknown quadrature rule {rule!r}")
    return VelocityGrid(nodes=nodes, weights=weights, u=u, rule=rule)


def _check_grid(atom: AtomModel, env: Environment, grid: VelocityGrid) -> None:
    u = thermal_speed(atom, env)
    if abs(grid.u - u) > 1e-9 * u:
        raise InvariantViolation(
            f"velocity grid built for u = {grid.u:.6g} m/s but the environment "
            f"gives u = {u:.6g} m/s")


def _ordered_average(weights: np.ndarray, values: np.ndarray) -> complex:
    # fixed ascending-node reduction order for bit reproducibility
    total = 0.0 + 0.0j
    for w, x in zip(weights, values):
        total += w * x
    return total


def doppler_average(atom: AtomModel, drive: DriveField, env: Environment,
                    grid: VelocityGrid) -> complex:
    """Thermal average of the probe susceptibility over the velocity grid.

    Velocity classes are solved independently (jointly as one batched linear
    solve) unless the environment has a nonzero velocity-changing collision
    rate, in which case the strong-collision fixed point couples them.
    """
    _check_grid(atom, env, grid)
    if env.vcc_rate > 0:
        states = vcc_steady_state(atom, drive, env, grid)
        chis = np.array([susceptibility_single(s, atom, drive, env) for s in states])
        return _ordered_average(grid.weights, chis)
    factory = LiouvillianFactory(atom, env, drive.geometry)
    rhos = _solve_batch_with_node_diagnostics(factory.generator_batch(drive, grid.nodes))
    return _ordered_average(grid.weights, _chi_batch(rhos, atom, drive, env))


def doppler_average_scan(atom: AtomModel, drive: DriveField, env: Environment,
                         grid: VelocityGrid, delta_ps: np.ndarray) -> np.ndarray:
    """doppler_average evaluated at many probe detunings, reusing one factory.

    Solver failures are re-raised naming the offending detuning index.
    """
    _check_grid(atom, env, grid)
    delta_ps = np.asarray(delta_ps, dtype=float)
    out = np.empty(delta_ps.shape, dtype=complex)
    if env.vcc_rate > 0:
        for i, d in enumerate(delta_ps):
            try:
                out[i] = doppler_average(atom, replace(drive, delta_p=float(d)),
                                         env, grid)
            except SingularSystem as exc:
                raise _with_detuning_index(exc, i) from None
        return out
    factory = LiouvillianFactory(atom, env, drive.geometry)
    for i, d in enumerate(delta_ps):
        point_drive = replace(drive, delta_p=float(d))
        try:
            rhos = _solve_batch_with_node_diagnostics(
                factory.generator_batch(point_drive, grid.nodes))
        except SingularSystem as exc:
            raise _with_detuning_index(exc, i) from None
        out[i] = _ordered_average(grid.weights, _chi_batch(rhos, atom, point_drive, env))
    return out


def _with_detuning_index(exc: SingularSystem, index: int) -> SingularSystem:
    return SingularSystem(exc.base_message, condition=exc.condition,
                          node_index=exc.node_index, detuning_index=index)


def _solve_batch_with_node_diagnostics(gens: np.ndarray) -> np.ndarray:
    try:
        return _solve_steady_batch(gens)
    except SingularSystem:
        # re-solve node by node so the failure names the offending node
        for idx in range(gens.shape[0]):
            try:
                _solve_steady_batch(gens[idx][None])
            except SingularSystem as exc:
                raise SingularSystem(exc.base_message, condition=exc.condition,
                                     node_index=idx) from None
        raise


def vcc_steady_state(atom: AtomModel, drive: DriveField, env: Environment,
                     grid: VelocityGrid) -> list[DensityState]:
    """Per-node steady states under strong velocity-changing collisions.

    The strong-collision kernel removes population from every class at the
    collision rate and reinjects the velocity-averaged populations with
    Maxwell weight (which the grid weights already carry); coherences decay
    at the collision rate with no redistribution. Solved by damped fixed-point
    iteration on the per-node steady states, starting from the collisionless
    solution.
    """
    _check_grid(atom, env, grid)
    factory = LiouvillianFactory(atom, env, drive.geometry)
    gens = factory.generator_batch(drive, grid.nodes)
    rhos = _solve_steady_batch(gens)
    rate = env.vcc_rate
    if rate > 0:
        damped = rhos
        constrained = gens - rate * np.eye(16, dtype=complex)[None]
        constrained[:, 0, :] = _TRACE_ROW
        converged = False
        change = np.inf
        for _ in range(VCC_MAX_ITER):
            mean_pops = np.einsum("n,nii->i", grid.weights, damped.real)
            source = np.zeros(16, dtype=complex)
            source[[0, 5, 10, 15]] = mean_pops
            rhs = np.broadcast_to(-rate * source, constrained.shape[:-1]).copy()
            rhs[:, 0] = 1.0
            x = np.linalg.solve(constrained, rhs[..., None])[..., 0]
            solved = x.reshape(-1, 4, 4)
            solved = 0.5 * (solved + np.conj(np.swapaxes(solved, -1, -2)))
            solved /= np.trace(solved, axis1=-2, axis2=-1).real[:, None, None]
            updated = (1.0 - VCC_DAMPING) * damped + VCC_DAMPING * solved
            change = float(np.abs(updated - damped).max())
            damped = updated
            if change < VCC_TOL:
                converged = True
                break
        if not converged:
            raise NoConvergence("velocity-changing collision fixed point",
                                last_residual=change, iterations=VCC_MAX_ITER)
        validate_density(damped)
        rhos = damped
    return [DensityState(rho=rhos[i]) for i in range(rhos.shape[0])]
