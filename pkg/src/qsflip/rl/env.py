"""Episode environment: one qubit, N equal detuning slices, shaped rewards.

The agent picks a renormalized detuning value in [0, 1] per slice; the
environment applies Delta = (2*action - 1) * delta_max for one slice under
the episode's systematic-error draw and reports the excited population.
Rewards cover a dense shaping mode, a ramp-imitation mode used for
pre-training, and a terminal-threshold mode used for fine-tuning.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np

from ..simulator import ControlField, ErrorPair, ERROR_FREE, step_unitary

ERROR_MODES = ("none", "single-delta", "single-omega", "hybrid")
REWARD_KINDS = ("trivial", "pretrain", "finetune")


@dataclass(frozen=True)
class ErrorSampling:
    """Per-episode systematic-error draw; spread is the uniform half-width.

    single-delta draws the detuning offset relative to delta_max,
    single-omega draws the relative amplitude offset, hybrid draws both
    independently with the same spread.
    """

    mode: str = "none"
    spread: float = 0.0

    def __post_init__(self) -> None:
        if self.mode not in ERROR_MODES:
            raise ValueError(f"unknown error mode: {self.mode!r}")
        if self.spread < 0.0 or not np.isfinite(self.spread):
            raise ValueError(f"spread must be finite and >= 0, got {self.spread}")
        if self.mode != "none" and self.spread == 0.0:
            raise ValueError(f"mode {self.mode!r} needs a positive spread")


@dataclass(frozen=True)
class RewardSchedule:
    """Which reward the environment pays.

    trivial: population minus one at every step.  pretrain: negative
    distance of the action from a linear ramp 0 -> 1 across the episode.
    finetune: `constant` at the final step iff the final population exceeds
    `threshold`, else nothing.  endpoint_bonus additionally pays the
    constant unconditionally at the first and final steps; it speeds up
    reward propagation but lets the agent collect reward without fidelity,
    so it stays off by default.
    """

    kind: str = "trivial"
    threshold: float = 0.997
    constant: float = 1.0
    endpoint_bonus: bool = False

    def __post_init__(self) -> None:
        if self.kind not in REWARD_KINDS:
            raise ValueError(f"unknown reward kind: {self.kind!r}")
        if not 0.0 < self.threshold < 1.0:
            raise ValueError(f"threshold must be in (0, 1), got {self.threshold}")
        if not np.isfinite(self.constant):
            raise ValueError("constant must be finite")


@dataclass(frozen=True)
class EnvConfig:
    """Fixed parameters of one training environment."""

    field: ControlField
    n_steps: int
    total_time: float
    error_sampling: ErrorSampling = dc_field(default_factory=ErrorSampling)
    reward_schedule: RewardSchedule = dc_field(default_factory=RewardSchedule)
    seed: int = 0

    def __post_init__(self) -> None:
        if self.n_steps < 2:
            raise ValueError(f"n_steps must be >= 2, got {self.n_steps}")
        if self.total_time <= 0.0 or not np.isfinite(self.total_time):
            raise ValueError(f"total_time must be positive, got {self.total_time}")

    @property
    def dt(self) -> float:
        return self.total_time / self.n_steps


@dataclass(frozen=True)
class RLState:
    """Observation triple: population, previous action, elapsed fraction."""

    p: float
    d_prev: float
    tau: float

    def __post_init__(self) -> None:
        for name, value in (("p", self.p), ("d_prev", self.d_prev), ("tau", self.tau)):
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {value}")

    def as_array(self) -> np.ndarray:
        return np.array([self.p, self.d_prev, self.tau])


_GROUND = np.array([[1.0, 0.0], [0.0, 0.0]], dtype=complex)


class FlipEnv:
    """Mutable episode state; reset draws the episode's error pair."""

    def __init__(self, cfg: EnvConfig):
        self.cfg = cfg
        self._rho: "np.ndarray | None" = None
        self._steps_taken = 0
        self._done = True
        self._err = ERROR_FREE

    @property
    def current_error(self) -> ErrorPair:
        return self._err

    def _draw_error(self, rng: np.random.Generator) -> ErrorPair:
        sampling = self.cfg.error_sampling
        s = sampling.spread
        if sampling.mode == "none":
            return ERROR_FREE
        if sampling.mode == "single-delta":
            return ErrorPair(0.0, rng.uniform(-s, s) * self.cfg.field.delta_max)
        if sampling.mode == "single-omega":
            return ErrorPair(rng.uniform(-s, s), 0.0)
        return ErrorPair(
            delta_delta=rng.uniform(-s, s) * self.cfg.field.delta_max,
            delta_omega=rng.uniform(-s, s),
        )

    def reset(self, rng: "np.random.Generator | None" = None) -> RLState:
        """Start a fresh episode from the ground state.

        The generator drives the error draw; callers that also sample
        actions stochastically should pass the same per-episode generator
        so the whole episode is a pure function of (config, seed).
        """
        if rng is None:
            rng = np.random.default_rng(self.cfg.seed)
        self._err = self._draw_error(rng)
        self._rho = _GROUND.copy()
        self._steps_taken = 0
        self._done = False
        return RLState(p=0.0, d_prev=0.5, tau=0.0)

    def step(self, action: float) -> "tuple[RLState, float, bool]":
        """Apply one detuning slice; returns (state, reward, done)."""
        if self._done or self._rho is None:
            raise ValueError("episode is finished; call reset() first")
        a = float(min(max(float(action), 0.0), 1.0))
        cfg = self.cfg
        delta = (2.0 * a - 1.0) * cfg.field.delta_max
        u = step_unitary(cfg.field, delta, cfg.dt, self._err)
        self._rho = u @ self._rho @ u.conj().T
        self._steps_taken += 1
        i = self._steps_taken
        n = cfg.n_steps
        p = float(min(max(self._rho[1, 1].real, 0.0), 1.0))
        done = i == n
        self._done = done

        schedule = cfg.reward_schedule
        if schedule.kind == "trivial":
            reward = p - 1.0
        elif schedule.kind == "pretrain":
            reward = -abs(a - (i - 1) / (n - 1))
        else:
            reward = 0.0
            if done and p > schedule.threshold:
                reward += schedule.constant
            if schedule.endpoint_bonus and (i == 1 or done):
                reward += schedule.constant
        return RLState(p=p, d_prev=a, tau=i / n), float(reward), done
