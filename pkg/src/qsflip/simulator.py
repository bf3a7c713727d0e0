"""Exact two-level dynamics under a fixed transverse drive and piecewise-constant detuning.

The Hamiltonian is H = (hbar/2) [Omega (1 + dOmega) sigma_x + (Delta + dDelta) sigma_z]
with basis convention |0> = (1, 0)^T and sigma_z |0> = +|0>, so the (1, 1) entry of the
density matrix is the target-state population after a flip.  Each step applies the closed
form SU(2) rotation U = cos(phi/2) I - i sin(phi/2) (n . sigma) with rotation vector
v = (Omega (1 + dOmega), 0, Delta + dDelta) and phi = |v| dt, which is exact for constant
fields and keeps unitarity at machine precision.
"""

from __future__ import annotations

import dataclasses
from typing import Sequence

import numpy as np

SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
SIGMA_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
SIGMA_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
_EYE2 = np.eye(2, dtype=complex)

HERMITICITY_TOL = 1e-12
TRACE_TOL = 1e-12
EIGENVALUE_TOL = 1e-12
BLOCH_NORM_TOL = 1e-10
# relative slack on the |delta| <= delta_max check; spline resampling of a
# continuous waveform may overshoot the sampled extremum by a few ulp
DELTA_BOUND_SLACK = 1e-9


def _freeze(array: np.ndarray) -> np.ndarray:
    array.setflags(write=False)
    return array


@dataclasses.dataclass(frozen=True)
class DensityMatrix:
    """2x2 Hermitian, unit-trace, positive-semidefinite qubit state."""

    entries: np.ndarray

    def __post_init__(self) -> None:
        m = np.array(self.entries, dtype=complex)
        if m.shape != (2, 2):
            raise ValueError("density matrix must be 2x2")
        if not np.all(np.isfinite(m.view(float))):
            raise ValueError("density matrix entries must be finite")
        if np.max(np.abs(m - m.conj().T)) > HERMITICITY_TOL:
            raise ValueError("density matrix must be Hermitian")
        tr = np.trace(m)
        if abs(tr - 1.0) > TRACE_TOL:
            raise ValueError("density matrix must have unit trace")
        if min(self._eigenvalues(m)) < -EIGENVALUE_TOL:
            raise ValueError("density matrix must be positive semidefinite")
        object.__setattr__(self, "entries", _freeze(m))

    @staticmethod
    def _eigenvalues(m: np.ndarray) -> tuple[float, float]:
        # closed form for a 2x2 Hermitian matrix
        half_tr = 0.5 * np.trace(m).real
        det = (m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]).real
        gap = np.sqrt(max(half_tr * half_tr - det, 0.0))
        return half_tr - gap, half_tr + gap

    @classmethod
    def ground(cls) -> "DensityMatrix":
        return cls(np.array([[1.0, 0.0], [0.0, 0.0]], dtype=complex))

    @classmethod
    def excited(cls) -> "DensityMatrix":
        return cls(np.array([[0.0, 0.0], [0.0, 1.0]], dtype=complex))

    @classmethod
    def maximally_mixed(cls) -> "DensityMatrix":
        return cls(0.5 * np.eye(2, dtype=complex))

    @classmethod
    def from_pure(cls, amplitudes: Sequence[complex]) -> "DensityMatrix":
        psi = np.asarray(amplitudes, dtype=complex).reshape(2)
        norm = np.linalg.norm(psi)
        if not np.isfinite(norm) or norm == 0.0:
            raise ValueError("pure-state amplitudes must be finite and nonzero")
        psi = psi / norm
        return cls(np.outer(psi, psi.conj()))

    def purity(self) -> float:
        return float(np.trace(self.entries @ self.entries).real)


@dataclasses.dataclass(frozen=True)
class ControlField:
    """Fixed transverse drive strength and the detuning bound, both in rad/s."""

    omega: float
    delta_max: float

    def __post_init__(self) -> None:
        if not (np.isfinite(self.omega) and self.omega > 0.0):
            raise ValueError("omega must be positive and finite")
        if not (np.isfinite(self.delta_max) and self.delta_max >= 0.0):
            raise ValueError("delta_max must be nonnegative and finite")


@dataclasses.dataclass(frozen=True)
class ErrorPair:
    """Systematic errors: relative drive error dOmega and absolute detuning offset dDelta (rad/s)."""

    delta_omega: float = 0.0
    delta_delta: float = 0.0

    def __post_init__(self) -> None:
        if not (np.isfinite(self.delta_omega) and np.isfinite(self.delta_delta)):
            raise ValueError("systematic errors must be finite")


ERROR_FREE = ErrorPair(0.0, 0.0)


@dataclasses.dataclass(frozen=True)
class PulseSequence:
    """Piecewise-constant detuning waveform on equal steps of duration dt."""

    dt: float
    deltas: np.ndarray
    field: ControlField

    def __post_init__(self) -> None:
        if not (np.isfinite(self.dt) and self.dt > 0.0):
            raise ValueError("dt must be positive and finite")
        d = np.array(self.deltas, dtype=float)
        if d.ndim != 1 or d.size < 1:
            raise ValueError("deltas must be a nonempty 1-d sequence")
        if not np.all(np.isfinite(d)):
            raise ValueError("deltas must be finite")
        bound = self.field.delta_max * (1.0 + DELTA_BOUND_SLACK)
        if np.max(np.abs(d)) > bound:
            raise ValueError(
                f"|delta| exceeds field.delta_max: {np.max(np.abs(d)):.6e} > {self.field.delta_max:.6e}"
            )
        object.__setattr__(self, "deltas", _freeze(d))

    def __len__(self) -> int:
        return int(self.deltas.size)

    @property
    def total_time(self) -> float:
        return self.dt * self.deltas.size


@dataclasses.dataclass(frozen=True)
class BlochVector:
    """Pauli expectation values (x, y, z)."""

    x: float
    y: float
    z: float

    def __post_init__(self) -> None:
        if self.x * self.x + self.y * self.y + self.z * self.z > 1.0 + BLOCH_NORM_TOL:
            raise ValueError("Bloch vector must lie inside the unit ball")


@dataclasses.dataclass(frozen=True)
class ScanTable:
    """Robustness-scan rows: relative detuning offset, relative drive error, final population."""

    delta_err_rel: np.ndarray
    omega_err_rel: np.ndarray
    population: np.ndarray

    def __post_init__(self) -> None:
        d = _freeze(np.array(self.delta_err_rel, dtype=float))
        w = _freeze(np.array(self.omega_err_rel, dtype=float))
        p = _freeze(np.array(self.population, dtype=float))
        if not (d.shape == w.shape == p.shape and d.ndim == 1):
            raise ValueError("scan columns must be 1-d and equally long")
        object.__setattr__(self, "delta_err_rel", d)
        object.__setattr__(self, "omega_err_rel", w)
        object.__setattr__(self, "population", p)

    def __len__(self) -> int:
        return int(self.population.size)


def step_unitary(field: ControlField, delta: float, dt: float, err: ErrorPair = ERROR_FREE) -> np.ndarray:
    """Exact one-step propagator for constant detuning, including systematic errors."""
    vx = field.omega * (1.0 + err.delta_omega)
    vz = delta + err.delta_delta
    vnorm = np.hypot(vx, vz)
    half = 0.5 * dt
    # sin(phi/2)/|v| written through sinc so the |v| -> 0 limit is exact
    ratio = half * np.sinc(vnorm * half / np.pi)
    return np.cos(vnorm * half) * _EYE2 - 1j * ratio * (vx * SIGMA_X + vz * SIGMA_Z)


def propagate_step(
    rho: DensityMatrix,
    field: ControlField,
    delta: float,
    dt: float,
    err: ErrorPair = ERROR_FREE,
) -> DensityMatrix:
    """Evolve rho for one constant-detuning step of duration dt."""
    if not (np.isfinite(delta) and np.isfinite(dt)):
        raise ValueError("delta and dt must be finite")
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    u = step_unitary(field, delta, dt, err)
    return DensityMatrix(u @ rho.entries @ u.conj().T)


def evolve_pulse(rho0: DensityMatrix, pulse: PulseSequence, err: ErrorPair = ERROR_FREE) -> list[DensityMatrix]:
    """Evolve through every step of the pulse; returns the length-(N+1) trajectory starting at rho0."""
    trajectory = [rho0]
    for delta in pulse.deltas:
        trajectory.append(propagate_step(trajectory[-1], pulse.field, float(delta), pulse.dt, err))
    return trajectory


def final_population(pulse: PulseSequence, err: ErrorPair = ERROR_FREE) -> float:
    """Population of |1> after the full pulse starting from |0><0|, without storing the trajectory."""
    rho = DensityMatrix.ground().entries
    for delta in pulse.deltas:
        u = step_unitary(pulse.field, float(delta), pulse.dt, err)
        rho = u @ rho @ u.conj().T
    return float(rho[1, 1].real)


def population_excited(rho: DensityMatrix) -> float:
    """Population of the target state |1>, i.e. the (1, 1) entry."""
    return float(rho.entries[1, 1].real)


def bloch_vector(rho: DensityMatrix) -> BlochVector:
    m = rho.entries
    return BlochVector(
        x=float(np.trace(SIGMA_X @ m).real),
        y=float(np.trace(SIGMA_Y @ m).real),
        z=float(np.trace(SIGMA_Z @ m).real),
    )


def scan_robustness(pulse: PulseSequence, grid: Sequence[ErrorPair]) -> ScanTable:
    """Final |1> population for each systematic-error pair, ordered as given.

    The detuning offset column is reported relative to the pulse's delta_max to match
    the usual robustness-map axes; a zero bound is only representable for zero offsets.
    """
    if len(grid) == 0:
        raise ValueError("scan grid must be nonempty")
    dmax = pulse.field.delta_max
    d_rel = np.empty(len(grid))
    w_rel = np.empty(len(grid))
    pops = np.empty(len(grid))
    for i, err in enumerate(grid):
        if dmax == 0.0:
            if err.delta_delta != 0.0:
                raise ValueError("cannot normalize a detuning offset: pulse has delta_max = 0")
            d_rel[i] = 0.0
        else:
            d_rel[i] = err.delta_delta / dmax
        w_rel[i] = err.delta_omega
        pops[i] = final_population(pulse, err)
    return ScanTable(delta_err_rel=d_rel, omega_err_rel=w_rel, population=pops)
