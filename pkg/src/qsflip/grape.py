"""Piecewise-constant gradient-ascent pulse engineering over the detuning.

The drive amplitude stays fixed; the only control is the detuning value on
each of M equal time slices.  The figure of merit is the final excited
population from the ground state.  Gradients are exact (directional
derivatives of each slice propagator), the Hessian is approximated by the
identity, and a backtracking line search keeps the fidelity history
monotone.  Amplitudes are clipped to the hardware bound after every update.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm_frechet

from .errors import NumericalFailure
from .simulator import ControlField, ERROR_FREE, SIGMA_X, SIGMA_Z, step_unitary

STAGNATION_GRAD_NORM = 1e-10
BACKTRACK_MAX_HALVINGS = 40

_KET0 = np.array([1.0, 0.0], dtype=complex)
_KET1 = np.array([0.0, 1.0], dtype=complex)


@dataclass(frozen=True)
class GrapeConfig:
    """Shape, budget, and initialization of one gradient-ascent run.

    init_kind selects the starting amplitudes: "linear" sweeps from
    +init_peak down to -init_peak, "constant" holds init_value on every
    slice, "custom" uses init_values verbatim.  learning_rate is
    dimensionless; the update is du = learning_rate * Omega^2 * gradient,
    which makes progress per iteration independent of the unit of time.
    """

    m_steps: int
    total_time: float
    learning_rate: float = 0.2
    max_iterations: int = 2000
    fidelity_threshold: float = 0.999
    init_kind: str = "linear"
    init_peak: float = 0.0
    init_value: float = 0.0
    init_values: "tuple[float, ...] | None" = None

    def __post_init__(self) -> None:
        if self.m_steps < 1:
            raise ValueError(f"m_steps must be >= 1, got {self.m_steps}")
        if self.total_time <= 0.0:
            raise ValueError(f"total_time must be positive, got {self.total_time}")
        if self.learning_rate <= 0.0:
            raise ValueError(f"learning_rate must be positive, got {self.learning_rate}")
        if self.max_iterations < 0:
            raise ValueError(f"max_iterations must be >= 0, got {self.max_iterations}")
        if not 0.0 < self.fidelity_threshold <= 1.0:
            raise ValueError(
                f"fidelity_threshold must be in (0, 1], got {self.fidelity_threshold}"
            )
        if self.init_kind not in ("linear", "constant", "custom"):
            raise ValueError(f"unknown init_kind: {self.init_kind!r}")
        if self.init_kind == "custom":
            if self.init_values is None or len(self.init_values) != self.m_steps:
                raise ValueError("custom init requires init_values of length m_steps")

    @property
    def dt(self) -> float:
        return self.total_time / self.m_steps


def initial_amplitudes(cfg: GrapeConfig) -> np.ndarray:
    """Starting detuning amplitudes for the configured initialization."""
    if cfg.init_kind == "linear":
        return np.linspace(cfg.init_peak, -cfg.init_peak, cfg.m_steps)
    if cfg.init_kind == "constant":
        return np.full(cfg.m_steps, cfg.init_value)
    return np.asarray(cfg.init_values, dtype=float)


def _final_state(amplitudes: np.ndarray, cfg: GrapeConfig, field: ControlField) -> np.ndarray:
    psi = _KET0
    for u in amplitudes:
        psi = step_unitary(field, float(u), cfg.dt, ERROR_FREE) @ psi
    return psi


def grape_fidelity(amplitudes, cfg: GrapeConfig, field: ControlField) -> float:
    """Final excited population from the ground state; the ascent objective.

    Uses the same slice propagator as the simulator, so it agrees with
    evolving the equivalent pulse sequence exactly.
    """
    amplitudes = np.asarray(amplitudes, dtype=float)
    if amplitudes.shape != (cfg.m_steps,):
        raise ValueError(
            f"expected {cfg.m_steps} amplitudes, got shape {amplitudes.shape}"
        )
    psi = _final_state(amplitudes, cfg, field)
    return float(np.abs(psi[1]) ** 2)


def grape_gradient(amplitudes, cfg: GrapeConfig, field: ControlField) -> np.ndarray:
    """Exact gradient of grape_fidelity with respect to each slice amplitude.

    With c = <1|U_{M-1}...U_0|0>, the derivative of slice k is
    df/du_k = 2 Re(conj(c) <1|U_{M-1}...U_{k+1} dU_k psi_k) where dU_k is
    the directional derivative of the slice exponential along the detuning
    generator, evaluated by the Frechet derivative of the matrix
    exponential.
    """
    amplitudes = np.asarray(amplitudes, dtype=float)
    if amplitudes.shape != (cfg.m_steps,):
        raise ValueError(
            f"expected {cfg.m_steps} amplitudes, got shape {amplitudes.shape}"
        )
    m = cfg.m_steps
    dt = cfg.dt

    units = [step_unitary(field, float(u), dt, ERROR_FREE) for u in amplitudes]
    forward = np.empty((m + 1, 2), dtype=complex)
    forward[0] = _KET0
    for k in range(m):
        forward[k + 1] = units[k] @ forward[k]
    backward = np.empty((m + 1, 2), dtype=complex)
    backward[m] = _KET1
    for k in range(m - 1, -1, -1):
        backward[k] = units[k].conj().T @ backward[k + 1]

    c = complex(backward[m].conj() @ forward[m])
    generator = -0.5j * dt * SIGMA_Z
    grad = np.empty(m)
    for k in range(m):
        hamiltonian = 0.5 * (field.omega * SIGMA_X + float(amplitudes[k]) * SIGMA_Z)
        _, du = expm_frechet(-1j * dt * hamiltonian, generator)
        overlap = complex(backward[k + 1].conj() @ (du @ forward[k]))
        grad[k] = 2.0 * np.real(np.conj(c) * overlap)
    return grad


@dataclass(frozen=True)
class GrapeResult:
    """Outcome of one ascent run; history[0] is the initial fidelity."""

    amplitudes: np.ndarray
    history: np.ndarray
    fidelity: float
    converged: bool
    iterations: int


def grape_optimize(cfg: GrapeConfig, field: ControlField) -> GrapeResult:
    """Gradient ascent with backtracking until threshold or budget.

    Each iteration proposes u + learning_rate * Omega^2 * gradient, clipped
    to the detuning bound, and halves the step until the fidelity does not
    decrease, so the recorded history is monotone non-decreasing.  Raises
    NumericalFailure when the gradient vanishes (or no uphill step exists)
    while the fidelity is still below threshold: a local optimum short of
    the target.
    """
    u = np.clip(initial_amplitudes(cfg), -field.delta_max, field.delta_max)
    f = grape_fidelity(u, cfg, field)
    history = [f]
    iterations = 0
    converged = f >= cfg.fidelity_threshold
    while not converged and iterations < cfg.max_iterations:
        grad = grape_gradient(u, cfg, field)
        gnorm = float(np.linalg.norm(grad)) * field.omega
        if gnorm < STAGNATION_GRAD_NORM:
            raise NumericalFailure(
                f"gradient vanished at fidelity {f:.6f}, below the "
                f"threshold {cfg.fidelity_threshold}: local optimum"
            )
        step = cfg.learning_rate * field.omega**2
        accepted = False
        for _ in range(BACKTRACK_MAX_HALVINGS):
            candidate = np.clip(u + step * grad, -field.delta_max, field.delta_max)
            f_candidate = grape_fidelity(candidate, cfg, field)
            if f_candidate >= f:
                u = candidate
                f = f_candidate
                accepted = True
                break
            step *= 0.5
        if not accepted:
            raise NumericalFailure(
                f"no uphill step at fidelity {f:.6f}, below the "
                f"threshold {cfg.fidelity_threshold}: local optimum"
            )
        history.append(f)
        iterations += 1
        converged = f >= cfg.fidelity_threshold
    return GrapeResult(
        amplitudes=u,
        history=np.asarray(history),
        fidelity=f,
        converged=converged,
        iterations=iterations,
    )
