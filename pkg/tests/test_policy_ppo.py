"""Policy/trainer checks: network determinism, exact clipping arithmetic,
advantage estimation, gradient correctness, and the training loop."""

import copy

import numpy as np
import pytest
import torch
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import norm

from qsflip.errors import NumericalFailure
from qsflip.rl import (
    EnvConfig,
    ErrorSampling,
    FlipEnv,
    PolicyNetwork,
    PPOConfig,
    RewardSchedule,
    clipped_surrogate,
    collect_batch,
    compute_gae,
    extract_pulse,
    policy_forward,
    ppo_update,
    train,
)
from qsflip.rl.policy import gaussian_log_prob
from qsflip.rl.ppo import Batch
from qsflip.rl.env import RLState
from qsflip.simulator import ControlField, PulseSequence

OMEGA = 2.0 * np.pi * 20e6


def tiny_env_cfg(
    n_steps: int = 4,
    reward_kind: str = "pretrain",
    seed: int = 0,
    error_sampling: ErrorSampling | None = None,
) -> EnvConfig:
    return EnvConfig(
        field=ControlField(omega=OMEGA, delta_max=1.5 * OMEGA),
        n_steps=n_steps,
        total_time=60.6e-9,
        error_sampling=error_sampling if error_sampling is not None else ErrorSampling(),
        reward_schedule=RewardSchedule(kind=reward_kind),
        seed=seed,
    )


class TestPolicyNetwork:
    def test_seed_determinism(self):
        a = PolicyNetwork(seed=5)
        b = PolicyNetwork(seed=5)
        for pa, pb in zip(a.parameters(), b.parameters()):
            assert torch.equal(pa, pb)

    def test_different_seeds_differ(self):
        a = PolicyNetwork(seed=5)
        b = PolicyNetwork(seed=6)
        assert not torch.equal(
            next(a.actor.parameters()), next(b.actor.parameters())
        )

    def test_double_precision(self):
        net = PolicyNetwork(seed=0)
        assert all(p.dtype == torch.float64 for p in net.parameters())

    def test_log_std_initial_value(self):
        assert float(PolicyNetwork(seed=3).log_std.detach()) == -1.0

    def test_actor_critic_independent(self):
        net = PolicyNetwork(seed=0)
        assert not torch.equal(
            next(net.actor.parameters()), next(net.critic.parameters())
        )

    def test_mean_in_unit_interval(self):
        net = PolicyNetwork(seed=1)
        states = torch.rand(32, 3, dtype=torch.float64)
        means = net.action_mean(states)
        assert torch.all(means > 0.0)
        assert torch.all(means < 1.0)


class TestPolicyForward:
    def test_deterministic_returns_mean(self):
        net = PolicyNetwork(seed=0)
        state = RLState(p=0.3, d_prev=0.5, tau=0.25)
        action, log_prob, value = policy_forward(net, state)
        with torch.no_grad():
            expected = float(net.action_mean(torch.from_numpy(state.as_array())))
        assert action == pytest.approx(expected, abs=1e-15)
        assert np.isfinite(log_prob)
        assert np.isfinite(value)

    def test_stochastic_needs_generator(self):
        net = PolicyNetwork(seed=0)
        with pytest.raises(ValueError, match="generator"):
            policy_forward(net, RLState(p=0.0, d_prev=0.5, tau=0.0), stochastic=True)

    def test_stochastic_reproducible(self):
        net = PolicyNetwork(seed=0)
        state = RLState(p=0.1, d_prev=0.4, tau=0.5)
        out1 = policy_forward(net, state, stochastic=True, rng=np.random.default_rng(7))
        out2 = policy_forward(net, state, stochastic=True, rng=np.random.default_rng(7))
        assert out1 == out2

    def test_log_prob_of_unclamped_sample(self):
        """When the raw draw lands inside [0, 1] the action equals the draw
        and the log-probability is the plain Gaussian density at it."""
        net = PolicyNetwork(seed=0)
        state = RLState(p=0.2, d_prev=0.5, tau=0.25)
        rng = np.random.default_rng(11)
        z = np.random.default_rng(11).standard_normal()
        action, log_prob, _ = policy_forward(net, state, stochastic=True, rng=rng)
        with torch.no_grad():
            mean = float(net.action_mean(torch.from_numpy(state.as_array())))
            std = float(net.std)
        raw = mean + std * z
        assert 0.0 < raw < 1.0, "draw chosen to land inside the interval"
        assert action == pytest.approx(raw, abs=1e-15)
        assert log_prob == pytest.approx(norm.logpdf(raw, mean, std), abs=1e-12)

    def test_action_clamped(self):
        net = PolicyNetwork(seed=0)
        state = RLState(p=0.0, d_prev=1.0, tau=0.0)
        for seed in range(40):
            action, _, _ = policy_forward(
                net, state, stochastic=True, rng=np.random.default_rng(seed)
            )
            assert 0.0 <= action <= 1.0


class TestGaussianLogProb:
    @given(
        x=st.floats(-3.0, 3.0),
        mean=st.floats(-1.0, 2.0),
        log_std=st.floats(-3.0, 1.0),
    )
    def test_matches_reference_density(self, x, mean, log_std):
        got = gaussian_log_prob(
            torch.tensor(x, dtype=torch.float64),
            torch.tensor(mean, dtype=torch.float64),
            torch.tensor(log_std, dtype=torch.float64),
        )
        expected = norm.logpdf(x, mean, np.exp(log_std))
        assert float(got) == pytest.approx(expected, abs=1e-12)


class TestClippedSurrogate:
    @pytest.mark.parametrize(
        "ratio, advantage, expected",
        [
            (1.5, 1.0, 1.2),  # upside clipped at 1 + 0.2
            (0.5, 1.0, 0.5),  # shrinking ratio with positive advantage passes
            (0.5, -1.0, -0.8),  # downside clipped at 1 - 0.2
            (1.1, -1.0, -1.1),  # inside the clip window: untouched
            (1.3, -2.0, -2.6),  # min() keeps the more pessimistic branch
            (1.0, 3.0, 3.0),
        ],
    )
    def test_exact_values(self, ratio, advantage, expected):
        out = clipped_surrogate(
            torch.tensor(ratio, dtype=torch.float64),
            torch.tensor(advantage, dtype=torch.float64),
            clip_ratio=0.2,
        )
        assert float(out) == pytest.approx(expected, abs=1e-15)

    @given(
        ratio=st.floats(0.01, 3.0),
        advantage=st.floats(-5.0, 5.0),
    )
    def test_never_exceeds_unclipped(self, ratio, advantage):
        out = clipped_surrogate(
            torch.tensor(ratio, dtype=torch.float64),
            torch.tensor(advantage, dtype=torch.float64),
            clip_ratio=0.2,
        )
        assert float(out) <= ratio * advantage + 1e-12


class TestGae:
    def test_hand_worked_example(self):
        rewards = np.array([1.0, 0.0, 2.0])
        values = np.array([0.5, 0.2, 0.1])
        adv, ret = compute_gae(rewards, values, discount=0.9, gae_lambda=0.8)
        # backward pass: deltas are 0.68, -0.11, 1.9; decay factor 0.72
        assert adv[2] == pytest.approx(1.9)
        assert adv[1] == pytest.approx(-0.11 + 0.72 * 1.9)
        assert adv[0] == pytest.approx(0.68 + 0.72 * adv[1])
        assert np.allclose(ret, adv + values)

    def test_monte_carlo_limit(self):
        """discount = lambda = 1 reduces to reward-to-go minus the value."""
        rewards = np.array([0.0, 0.0, 1.0, 0.5])
        values = np.array([0.3, -0.2, 0.9, 0.4])
        adv, ret = compute_gae(rewards, values, discount=1.0, gae_lambda=1.0)
        to_go = np.array([1.5, 1.5, 1.5, 0.5])
        assert np.allclose(adv, to_go - values)
        assert np.allclose(ret, to_go)

    def test_rejects_mismatched_lengths(self):
        with pytest.raises(ValueError, match="matching"):
            compute_gae(np.zeros(3), np.zeros(4), 1.0, 0.95)


class TestCollectBatch:
    def test_shapes_and_determinism(self):
        cfg = PPOConfig(batch_episodes=3)
        env_cfg = tiny_env_cfg(n_steps=4)
        net = PolicyNetwork(seed=0)
        a = collect_batch(FlipEnv(env_cfg), net, cfg, first_episode=0)
        b = collect_batch(FlipEnv(env_cfg), net, cfg, first_episode=0)
        assert a.states.shape == (12, 3)
        assert a.episode_rewards.shape == (3,)
        for name in ("states", "raw_actions", "log_probs", "advantages", "returns"):
            assert np.array_equal(getattr(a, name), getattr(b, name))

    def test_matches_sequential_rollout(self):
        """The lockstep batch must reproduce a plain per-episode loop using
        the same (seed, episode) generator streams, bit for bit."""
        env_cfg = tiny_env_cfg(
            n_steps=3, error_sampling=ErrorSampling(mode="hybrid", spread=0.1)
        )
        cfg = PPOConfig(batch_episodes=2)
        net = PolicyNetwork(seed=0)
        batch = collect_batch(FlipEnv(env_cfg), net, cfg, first_episode=10)

        for k in range(2):
            rng = np.random.default_rng((env_cfg.seed, 10 + k))
            env = FlipEnv(env_cfg)
            state = env.reset(rng)
            for i in range(3):
                action, log_prob, _ = policy_forward(
                    net, state, stochastic=True, rng=rng
                )
                flat = k * 3 + i
                assert batch.states[flat].tolist() == state.as_array().tolist()
                assert batch.log_probs[flat] == log_prob
                state, reward, _ = env.step(action)
                assert batch.step_rewards[flat] == reward

    def test_distinct_episode_streams(self):
        env_cfg = tiny_env_cfg(n_steps=4)
        net = PolicyNetwork(seed=0)
        batch = collect_batch(FlipEnv(env_cfg), net, PPOConfig(batch_episodes=4), 0)
        raws = batch.raw_actions.reshape(4, 4)
        assert not np.allclose(raws[0], raws[1])


def make_batch(n: int = 24, seed: int = 0, zero_rewards: bool = False) -> Batch:
    rng = np.random.default_rng(seed)
    rewards = np.zeros(n) if zero_rewards else rng.normal(size=n)
    return Batch(
        states=rng.uniform(0.0, 1.0, (n, 3)),
        raw_actions=rng.uniform(-0.2, 1.2, n),
        log_probs=rng.normal(-1.0, 0.3, n),
        advantages=rng.normal(size=n),
        returns=rng.normal(size=n),
        step_rewards=rewards,
        episode_rewards=rewards.reshape(4, -1).sum(axis=1),
    )


class TestPpoUpdate:
    def test_surrogate_gradient_matches_finite_differences(self):
        """Autograd through ratio -> clip -> min against central differences
        on a smooth point (ratios inside the clip window)."""
        net = PolicyNetwork(seed=2)
        batch = make_batch()
        states = torch.from_numpy(batch.states)
        raw = torch.from_numpy(batch.raw_actions)
        adv = torch.from_numpy(batch.advantages)
        with torch.no_grad():
            # frozen old log-probs a fixed 0.05 below the starting ones, so
            # every ratio sits near e^0.05, inside the smooth unclipped region
            old = gaussian_log_prob(raw, net.action_mean(states), net.log_std) - 0.05

        def loss_value() -> torch.Tensor:
            mean = net.action_mean(states)
            log_probs = gaussian_log_prob(raw, mean, net.log_std)
            ratio = torch.exp(log_probs - old)
            return -clipped_surrogate(ratio, adv, 0.2).mean()

        loss = loss_value()
        loss.backward()
        params = list(net.actor.parameters()) + [net.log_std]
        checked = 0
        for p in params[-3:]:
            grad = p.grad
            flat = p.data.view(-1)
            for idx in range(min(4, flat.numel())):
                original = float(flat[idx])
                h = 1e-6
                flat[idx] = original + h
                up = float(loss_value().detach())
                flat[idx] = original - h
                down = float(loss_value().detach())
                flat[idx] = original
                fd = (up - down) / (2.0 * h)
                g = float(grad.view(-1)[idx])
                assert g == pytest.approx(fd, rel=1e-4, abs=1e-9)
                checked += 1
        assert checked >= 5

    def test_zero_signal_batch_freezes_actor(self):
        """A batch with no reward anywhere must not move the actor: the
        exact policy gradient is zero, whatever the critic thinks."""
        net = PolicyNetwork(seed=0)
        before = copy.deepcopy(net.actor.state_dict())
        ppo_update(net, make_batch(zero_rewards=True), PPOConfig())
        after = net.actor.state_dict()
        for key in before:
            assert torch.equal(before[key], after[key])

    def test_nonzero_batch_moves_actor(self):
        net = PolicyNetwork(seed=0)
        before = copy.deepcopy(net.actor.state_dict())
        ppo_update(net, make_batch(), PPOConfig())
        moved = any(
            not torch.equal(before[key], net.actor.state_dict()[key])
            for key in before
        )
        assert moved

    def test_diagnostics_keys(self):
        net = PolicyNetwork(seed=0)
        out = ppo_update(net, make_batch(), PPOConfig(epochs_per_update=2))
        assert set(out) == {"policy_loss", "value_loss", "entropy", "loss"}
        assert all(np.isfinite(v) for v in out.values())

    def test_non_finite_loss_raises(self):
        net = PolicyNetwork(seed=0)
        batch = make_batch()
        batch.advantages[0] = np.nan
        with pytest.raises(NumericalFailure, match="non-finite"):
            ppo_update(net, batch, PPOConfig())


class TestExtractPulse:
    def test_shape_bound_and_determinism(self):
        env_cfg = tiny_env_cfg(n_steps=6)
        net = PolicyNetwork(seed=4)
        pulse = extract_pulse(net, env_cfg)
        again = extract_pulse(net, env_cfg)
        assert isinstance(pulse, PulseSequence)
        assert len(pulse) == 6
        assert np.max(np.abs(pulse.deltas)) <= env_cfg.field.delta_max
        assert np.array_equal(pulse.deltas, again.deltas)

    def test_ignores_error_sampling(self):
        noisy = tiny_env_cfg(
            n_steps=6, error_sampling=ErrorSampling(mode="hybrid", spread=0.1)
        )
        clean = tiny_env_cfg(n_steps=6)
        net = PolicyNetwork(seed=4)
        assert np.array_equal(
            extract_pulse(net, noisy).deltas, extract_pulse(net, clean).deltas
        )


class TestTrain:
    def test_rejects_unknown_phase(self):
        with pytest.raises(ValueError, match="phase"):
            train(tiny_env_cfg(), PPOConfig(max_episodes=20), phase="warmup")

    def test_finetune_requires_checkpoint(self):
        with pytest.raises(ValueError, match="fine-tun|checkpoint|network"):
            train(tiny_env_cfg(reward_kind="finetune"), PPOConfig(max_episodes=20),
                  phase="finetune")

    def test_finetune_allow_fresh(self):
        env_cfg = tiny_env_cfg(n_steps=3, reward_kind="finetune")
        net, record = train(
            env_cfg, PPOConfig(max_episodes=20), phase="finetune", allow_fresh=True
        )
        assert record.episode_rewards.size == 20

    def test_record_shapes_and_budget(self):
        env_cfg = tiny_env_cfg(n_steps=3)
        net, record = train(env_cfg, PPOConfig(max_episodes=60), phase="pretrain")
        assert record.episode_rewards.size == 60
        assert record.policy_losses.size == 3
        assert record.value_losses.size == 3
        assert record.eval_fidelities.size == 3
        assert record.stop_reason == "max-episodes"

    def test_deterministic_runs(self):
        env_cfg = tiny_env_cfg(n_steps=3)
        cfg = PPOConfig(max_episodes=40)
        net_a, rec_a = train(env_cfg, cfg, phase="pretrain")
        net_b, rec_b = train(env_cfg, cfg, phase="pretrain")
        assert np.array_equal(rec_a.episode_rewards, rec_b.episode_rewards)
        for pa, pb in zip(net_a.parameters(), net_b.parameters()):
            assert torch.equal(pa, pb)

    def test_init_net_not_mutated(self):
        env_cfg = tiny_env_cfg(n_steps=3)
        init = PolicyNetwork(seed=0)
        frozen = copy.deepcopy(init.state_dict())
        train(env_cfg, PPOConfig(max_episodes=20), phase="pretrain", init_net=init)
        for key, value in init.state_dict().items():
            assert torch.equal(frozen[key], value)

    def test_plateau_stop(self):
        """A huge tolerance declares every window flat, so the run must stop
        after patience + 1 windows instead of exhausting the budget."""
        env_cfg = tiny_env_cfg(n_steps=3)
        cfg = PPOConfig(
            max_episodes=400,
            plateau_window=20,
            plateau_tol=1e9,
            plateau_patience=2,
        )
        net, record = train(env_cfg, cfg, phase="pretrain")
        assert record.stop_reason == "plateau"
        assert record.episode_rewards.size == 60

    def test_pretrain_improves_ramp_imitation(self):
        env_cfg = tiny_env_cfg(n_steps=4)
        net, record = train(env_cfg, PPOConfig(max_episodes=600), phase="pretrain")
        first = record.episode_rewards[:20].mean()
        last = record.episode_rewards[-20:].mean()
        assert last > first

    def test_reset_critic_restores_seed_initialization(self):
        env_cfg = tiny_env_cfg(n_steps=3)
        donor = PolicyNetwork(seed=0)
        with torch.no_grad():
            for p in donor.critic.parameters():
                p.add_(1.0)  # corrupt the carried critic
        cfg = PPOConfig(max_episodes=0, reset_critic=True, seed=0)
        net, _ = train(env_cfg, cfg, phase="pretrain", init_net=donor)
        fresh = PolicyNetwork(seed=0)
        for got, expected in zip(net.critic.parameters(), fresh.critic.parameters()):
            assert torch.equal(got, expected)
