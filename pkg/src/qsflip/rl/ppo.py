"""Clipped-surrogate proximal policy optimization over flip episodes.

Batches of complete episodes are collected with per-episode generators
derived from (environment seed, episode index), so a run is a pure
function of its configuration.  Updates maximize the clipped surrogate
with a value-regression term and an entropy bonus; advantages come from
generalized advantage estimation with terminal bootstrap zero.
"""

from __future__ import annotations

import copy
import math
from dataclasses import dataclass, replace

import numpy as np
import torch

from ..errors import NumericalFailure
from ..simulator import PulseSequence, final_population
from .env import EnvConfig, ErrorSampling, FlipEnv
from .policy import PolicyNetwork, gaussian_log_prob

_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)
ADVANTAGE_NORM_EPS = 1e-8


@dataclass(frozen=True)
class PPOConfig:
    """Trainer hyperparameters; defaults follow the training protocol."""

    batch_episodes: int = 20
    learning_rate: float = 1e-4
    clip_ratio: float = 0.2
    discount: float = 1.0
    gae_lambda: float = 0.95
    epochs_per_update: int = 10
    entropy_coeff: float = 0.01
    value_coeff: float = 0.5
    max_episodes: int = 4000
    seed: int = 0
    plateau_window: int = 200
    plateau_tol: float = 1e-3
    plateau_patience: int = 5
    # drop the carried-over critic when resuming from a checkpoint; the
    # value scale of one reward schedule poisons advantages under another
    reset_critic: bool = False

    def __post_init__(self) -> None:
        if self.batch_episodes < 1:
            raise ValueError(f"batch_episodes must be >= 1, got {self.batch_episodes}")
        if self.learning_rate <= 0.0:
            raise ValueError(f"learning_rate must be positive, got {self.learning_rate}")
        if not 0.0 < self.clip_ratio < 1.0:
            raise ValueError(f"clip_ratio must be in (0, 1), got {self.clip_ratio}")
        if not 0.0 < self.discount <= 1.0:
            raise ValueError(f"discount must be in (0, 1], got {self.discount}")
        if not 0.0 <= self.gae_lambda <= 1.0:
            raise ValueError(f"gae_lambda must be in [0, 1], got {self.gae_lambda}")
        if self.epochs_per_update < 1:
            raise ValueError(
                f"epochs_per_update must be >= 1, got {self.epochs_per_update}"
            )
        if self.max_episodes < 0:
            raise ValueError(f"max_episodes must be >= 0, got {self.max_episodes}")
        if self.plateau_window < 1 or self.plateau_patience < 1:
            raise ValueError("plateau_window and plateau_patience must be >= 1")


def clipped_surrogate(
    ratio: torch.Tensor, advantage: torch.Tensor, clip_ratio: float
) -> torch.Tensor:
    """Per-sample clipped objective min(r*A, clip(r, 1-eps, 1+eps)*A)."""
    clipped = torch.clamp(ratio, 1.0 - clip_ratio, 1.0 + clip_ratio) * advantage
    return torch.minimum(ratio * advantage, clipped)


def compute_gae(
    rewards: np.ndarray,
    values: np.ndarray,
    discount: float,
    gae_lambda: float,
) -> "tuple[np.ndarray, np.ndarray]":
    """Advantages and returns for one complete episode, terminal value 0."""
    rewards = np.asarray(rewards, dtype=float)
    values = np.asarray(values, dtype=float)
    if rewards.shape != values.shape:
        raise ValueError("rewards and values must have matching lengths")
    n = rewards.size
    advantages = np.empty(n)
    acc = 0.0
    for t in range(n - 1, -1, -1):
        next_value = values[t + 1] if t + 1 < n else 0.0
        delta = rewards[t] + discount * next_value - values[t]
        acc = delta + discount * gae_lambda * acc
        advantages[t] = acc
    return advantages, advantages + values


@dataclass
class Batch:
    """Flattened rollout data for one update."""

    states: np.ndarray
    raw_actions: np.ndarray
    log_probs: np.ndarray
    advantages: np.ndarray
    returns: np.ndarray
    step_rewards: np.ndarray
    episode_rewards: np.ndarray


def collect_batch(
    env: FlipEnv, net: PolicyNetwork, cfg: PPOConfig, first_episode: int
) -> Batch:
    """Roll out a batch of episodes with per-episode generator streams.

    Episode k uses np.random.default_rng((env seed, first_episode + k))
    for both the environment's error draw and the action noise, so any
    episode can be reproduced in isolation.  All episodes have the same
    length, so they advance in lockstep and each time step costs one
    batched network evaluation.
    """
    n_ep = cfg.batch_episodes
    n_steps = env.cfg.n_steps
    with torch.no_grad():
        log_std = float(net.log_std)
    std = math.exp(log_std)

    rngs = [
        np.random.default_rng((env.cfg.seed, first_episode + k)) for k in range(n_ep)
    ]
    envs = [FlipEnv(env.cfg) for _ in range(n_ep)]
    current = np.stack([e.reset(r).as_array() for e, r in zip(envs, rngs)])

    states = np.empty((n_steps, n_ep, 3))
    raws = np.empty((n_steps, n_ep))
    log_probs = np.empty((n_steps, n_ep))
    values = np.empty((n_steps, n_ep))
    rewards = np.empty((n_steps, n_ep))
    for i in range(n_steps):
        with torch.no_grad():
            t = torch.from_numpy(current)
            means = net.action_mean(t).numpy()
            values[i] = net.value(t).numpy()
        noise = np.array([r.standard_normal() for r in rngs])
        raw = means + std * noise
        states[i] = current
        raws[i] = raw
        log_probs[i] = -0.5 * ((raw - means) / std) ** 2 - log_std - _LOG_SQRT_2PI
        for k in range(n_ep):
            action = min(max(raw[k], 0.0), 1.0)
            state, rewards[i, k], _ = envs[k].step(action)
            current[k] = state.as_array()

    advantages = np.empty((n_steps, n_ep))
    returns = np.empty((n_steps, n_ep))
    for k in range(n_ep):
        advantages[:, k], returns[:, k] = compute_gae(
            rewards[:, k], values[:, k], cfg.discount, cfg.gae_lambda
        )

    # flatten episode-major so samples of one episode stay contiguous
    return Batch(
        states=states.transpose(1, 0, 2).reshape(-1, 3),
        raw_actions=raws.T.reshape(-1),
        log_probs=log_probs.T.reshape(-1),
        advantages=advantages.T.reshape(-1),
        returns=returns.T.reshape(-1),
        step_rewards=rewards.T.reshape(-1),
        episode_rewards=rewards.sum(axis=0),
    )


def ppo_update(
    net: PolicyNetwork,
    batch: Batch,
    cfg: PPOConfig,
    optimizer: "torch.optim.Optimizer | None" = None,
) -> "dict[str, float]":
    """Run the configured number of epochs on one batch; returns diagnostics.

    Advantages are normalized per batch.  A non-finite loss aborts with
    NumericalFailure before the offending gradient step is applied.
    """
    if optimizer is None:
        optimizer = torch.optim.Adam(net.parameters(), lr=cfg.learning_rate)
    states = torch.from_numpy(batch.states)
    raw = torch.from_numpy(batch.raw_actions)
    log_probs_old = torch.from_numpy(batch.log_probs)
    adv_np = batch.advantages
    ret_np = batch.returns
    if not np.any(batch.step_rewards):
        # a batch with no reward anywhere carries no policy ranking signal;
        # the Monte-Carlo gradient and return are both exactly zero, and
        # using the critic-shaped estimates instead would inject noise
        adv_np = np.zeros_like(adv_np)
        ret_np = np.zeros_like(ret_np)
    adv = torch.from_numpy(adv_np)
    spread = adv.std(unbiased=False)
    if float(spread) > ADVANTAGE_NORM_EPS:
        adv = (adv - adv.mean()) / (spread + ADVANTAGE_NORM_EPS)
    ret = torch.from_numpy(ret_np)

    diagnostics: "dict[str, float]" = {}
    for epoch in range(cfg.epochs_per_update):
        mean = net.action_mean(states)
        log_probs = gaussian_log_prob(raw, mean, net.log_std)
        ratio = torch.exp(log_probs - log_probs_old)
        surrogate = clipped_surrogate(ratio, adv, cfg.clip_ratio).mean()
        values = net.value(states)
        value_loss = torch.mean((values - ret) ** 2)
        entropy = 0.5 + _LOG_SQRT_2PI + net.log_std
        loss = (
            -surrogate
            + cfg.value_coeff * value_loss
            - cfg.entropy_coeff * entropy
        )
        if not bool(torch.isfinite(loss)):
            raise NumericalFailure(
                f"non-finite loss at epoch {epoch}: "
                f"surrogate={float(surrogate.detach())!r}, "
                f"value_loss={float(value_loss.detach())!r}, "
                f"entropy={float(entropy.detach())!r}"
            )
        optimizer.zero_grad()
        loss.backward()
        optimizer.step()
        diagnostics = {
            "policy_loss": float(-surrogate.detach()),
            "value_loss": float(value_loss.detach()),
            "entropy": float(entropy.detach()),
            "loss": float(loss.detach()),
        }
    return diagnostics


def extract_pulse(net: PolicyNetwork, env_cfg: EnvConfig) -> PulseSequence:
    """Deterministic error-free rollout turned into an N-step pulse.

    The policy observes the simulated nominal states while the pulse is
    generated; the result is a fixed open-loop sequence.
    """
    cfg = replace(env_cfg, error_sampling=ErrorSampling())
    env = FlipEnv(cfg)
    state = env.reset(np.random.default_rng(cfg.seed))
    actions: "list[float]" = []
    done = False
    while not done:
        with torch.no_grad():
            a = float(net.action_mean(torch.from_numpy(state.as_array())))
        a = min(max(a, 0.0), 1.0)
        state, _, done = env.step(a)
        actions.append(a)
    deltas = (2.0 * np.asarray(actions) - 1.0) * env_cfg.field.delta_max
    return PulseSequence(dt=env_cfg.dt, deltas=deltas, field=env_cfg.field)


@dataclass
class TrainRecord:
    """Per-episode rewards, per-update losses, and evaluation fidelities."""

    episode_rewards: np.ndarray
    policy_losses: np.ndarray
    value_losses: np.ndarray
    entropies: np.ndarray
    eval_fidelities: np.ndarray
    stop_reason: str


def train(
    env_cfg: EnvConfig,
    ppo_cfg: PPOConfig,
    phase: str,
    init_net: "PolicyNetwork | None" = None,
    allow_fresh: bool = False,
) -> "tuple[PolicyNetwork, TrainRecord]":
    """Run episodes in batches until plateau, budget, or divergence.

    phase selects the protocol stage: pretraining starts fresh (or from a
    given network), fine-tuning refuses to start without a network unless
    allow_fresh is set.  The reward schedule itself lives in env_cfg.  On
    divergence the last pre-update parameters are restored, so the
    returned network is always finite.
    """
    if phase not in ("pretrain", "finetune"):
        raise ValueError(f"unknown phase: {phase!r}")
    if phase == "finetune" and init_net is None and not allow_fresh:
        raise ValueError(
            "finetune requires a pre-trained network; pass allow_fresh=True to override"
        )
    net = copy.deepcopy(init_net) if init_net is not None else PolicyNetwork(ppo_cfg.seed)
    if ppo_cfg.reset_critic and init_net is not None:
        net.critic.load_state_dict(PolicyNetwork(ppo_cfg.seed).critic.state_dict())
    env = FlipEnv(env_cfg)
    optimizer = torch.optim.Adam(net.parameters(), lr=ppo_cfg.learning_rate)

    episode_rewards: "list[float]" = []
    policy_losses: "list[float]" = []
    value_losses: "list[float]" = []
    entropies: "list[float]" = []
    eval_fidelities: "list[float]" = []
    stop_reason = "max-episodes"
    window_means: "list[float]" = []
    stall_count = 0
    episodes_done = 0

    while episodes_done < ppo_cfg.max_episodes:
        batch = collect_batch(env, net, ppo_cfg, episodes_done)
        snapshot = copy.deepcopy(net.state_dict())
        try:
            diag = ppo_update(net, batch, ppo_cfg, optimizer)
        except NumericalFailure:
            net.load_state_dict(snapshot)
            stop_reason = "diverged"
            break
        episode_rewards.extend(batch.episode_rewards.tolist())
        policy_losses.append(diag["policy_loss"])
        value_losses.append(diag["value_loss"])
        entropies.append(diag["entropy"])
        eval_fidelities.append(float(final_population(extract_pulse(net, env_cfg))))
        episodes_done += ppo_cfg.batch_episodes

        window = ppo_cfg.plateau_window
        while (len(window_means) + 1) * window <= len(episode_rewards):
            k = len(window_means)
            window_means.append(
                float(np.mean(episode_rewards[k * window : (k + 1) * window]))
            )
            if len(window_means) >= 2:
                if window_means[-1] - window_means[-2] < ppo_cfg.plateau_tol:
                    stall_count += 1
                else:
                    stall_count = 0
        if stall_count >= ppo_cfg.plateau_patience:
            stop_reason = "plateau"
            break

    record = TrainRecord(
        episode_rewards=np.asarray(episode_rewards),
        policy_losses=np.asarray(policy_losses),
        value_losses=np.asarray(value_losses),
        entropies=np.asarray(entropies),
        eval_fidelities=np.asarray(eval_fidelities),
        stop_reason=stop_reason,
    )
    return net, record
