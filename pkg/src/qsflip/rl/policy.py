"""Actor-critic pair for renormalized-detuning control.

Two independent multilayer perceptrons of identical shape (3 inputs, three
hidden layers of 32 rectified-linear units): the actor squashes its output
through a sigmoid to give the action mean in [0, 1] and shares one global
learnable log-spread; the critic outputs the state value.  Everything runs
in double precision so that gradient checks against finite differences are
meaningful.
"""

from __future__ import annotations

import math

import numpy as np
import torch
from torch import nn

from .env import RLState

HIDDEN_WIDTH = 32
HIDDEN_DEPTH = 3
LOG_STD_INIT = -1.0

_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)


def _build_mlp(rng: np.random.Generator) -> nn.Sequential:
    sizes = [3] + [HIDDEN_WIDTH] * HIDDEN_DEPTH + [1]
    layers: "list[nn.Module]" = []
    for k, (fan_in, fan_out) in enumerate(zip(sizes[:-1], sizes[1:])):
        linear = nn.Linear(fan_in, fan_out, dtype=torch.float64)
        # weights drawn from the process-independent generator so a seed
        # fully determines the network regardless of torch's global state
        bound = 1.0 / math.sqrt(fan_in)
        with torch.no_grad():
            linear.weight.copy_(
                torch.from_numpy(rng.uniform(-bound, bound, (fan_out, fan_in)))
            )
            linear.bias.copy_(torch.from_numpy(rng.uniform(-bound, bound, fan_out)))
        layers.append(linear)
        if k < len(sizes) - 2:
            layers.append(nn.ReLU())
    return nn.Sequential(*layers)


class PolicyNetwork(nn.Module):
    """Separate actor and critic plus the global action log-spread."""

    def __init__(self, seed: int = 0):
        super().__init__()
        rng = np.random.default_rng((int(seed), 0x1217))
        self.actor = _build_mlp(rng)
        self.critic = _build_mlp(rng)
        self.log_std = nn.Parameter(torch.tensor(LOG_STD_INIT, dtype=torch.float64))

    def action_mean(self, states: torch.Tensor) -> torch.Tensor:
        return torch.sigmoid(self.actor(states)).squeeze(-1)

    def value(self, states: torch.Tensor) -> torch.Tensor:
        return self.critic(states).squeeze(-1)

    @property
    def std(self) -> torch.Tensor:
        return torch.exp(self.log_std)


def gaussian_log_prob(
    sample: torch.Tensor, mean: torch.Tensor, log_std: torch.Tensor
) -> torch.Tensor:
    """Log-density of the (unclamped) Gaussian action sample."""
    z = (sample - mean) * torch.exp(-log_std)
    return -0.5 * z * z - log_std - _LOG_SQRT_2PI


def policy_forward(
    net: PolicyNetwork,
    state: RLState,
    stochastic: bool = False,
    rng: "np.random.Generator | None" = None,
) -> "tuple[float, float, float]":
    """Evaluate the policy at one state: (action, log_prob, value).

    Deterministic mode returns the squashed mean.  Stochastic mode draws
    mean + spread * normal from the supplied generator and clamps the
    sample to [0, 1]; the log-probability refers to the raw (unclamped)
    sample, which is the quantity the trainer's probability ratios use.
    """
    with torch.no_grad():
        t = torch.from_numpy(state.as_array())
        mean = net.action_mean(t)
        value = net.value(t)
        if stochastic:
            if rng is None:
                raise ValueError("stochastic evaluation needs a generator")
            raw = mean + net.std * float(rng.standard_normal())
        else:
            raw = mean
        log_prob = gaussian_log_prob(raw, mean, net.log_std)
        action = float(min(max(float(raw), 0.0), 1.0))
    return action, float(log_prob), float(value)
