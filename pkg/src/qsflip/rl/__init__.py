"""Reinforcement-learning discovery of digital detuning pulses.

env holds the episode environment (one qubit, N equal detuning slices,
per-episode systematic-error draws, three reward schedules).  policy holds
the small actor-critic pair.  ppo holds the clipped-surrogate trainer,
batch collection, pulse extraction, and the train loop.
"""

from .env import EnvConfig, ErrorSampling, FlipEnv, RewardSchedule, RLState
from .policy import PolicyNetwork, policy_forward
from .ppo import (
    PPOConfig,
    TrainRecord,
    clipped_surrogate,
    collect_batch,
    compute_gae,
    extract_pulse,
    ppo_update,
    train,
)

__all__ = [
    "EnvConfig",
    "ErrorSampling",
    "FlipEnv",
    "RewardSchedule",
    "RLState",
    "PolicyNetwork",
    "policy_forward",
    "PPOConfig",
    "TrainRecord",
    "clipped_surrogate",
    "collect_batch",
    "compute_gae",
    "extract_pulse",
    "ppo_update",
    "train",
]
