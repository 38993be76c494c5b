"""Returns, advantages, the clipped surrogate, and the update loop."""

import math

import numpy as np
import pytest

from conftest import ConstRewardEnv, const_policy, fd_flat_grads, make_memory, rel_err, small_policy
from fueladapt.fuelsim import EnvConfig, FuelEnv
from fueladapt.meta import policy_params_equal
from fueladapt.policy import log_prob, log_prob_grads, policy_init
from fueladapt.ppo import (
    Hyperparameters,
    Memory,
    Transition,
    advantages,
    collect,
    discounted_returns,
    evaluate_return,
    ppo_update,
    prepare_batch,
    surrogate_gain,
    value_loss_and_grads,
)


def brute_force_returns(rewards, dones, gamma, tail_value):
    """Forward sum to the episode end; bootstraps episodes cut off by the buffer."""
    n = len(rewards)
    out = np.zeros(n)
    for t in range(n):
        acc = 0.0
        disc = 1.0
        k = t
        while True:
            acc += disc * rewards[k]
            if dones[k]:
                break
            disc *= gamma
            k += 1
            if k == n:
                acc += disc * tail_value
                break
        out[t] = acc
    return out


def test_returns_hand_example():
    mem = make_memory([1.0, 1.0, 1.0], [False, False, False])
    assert np.array_equal(discounted_returns(mem, 0.5), [1.75, 1.5, 1.0])


def test_returns_gamma_zero():
    rewards = [0.3, -1.0, 2.0, 0.5]
    mem = make_memory(rewards, [False, True, False, False])
    assert np.array_equal(discounted_returns(mem, 0.0), rewards)


def test_returns_match_brute_force():
    rng = np.random.default_rng(0)
    for _ in range(30):
        n = 100
        rewards = rng.normal(size=n)
        dones = rng.random(n) < 0.05
        gamma = rng.uniform(0.0, 1.0)
        tail = rng.normal()
        mem = make_memory(rewards, dones, tail_value=tail)
        got = discounted_returns(mem, gamma, tail_value=tail)
        want = brute_force_returns(rewards, dones, gamma, tail)
        assert np.abs(got - want).max() < 1e-10


def test_returns_tail_bootstrap_hand_example():
    mem = make_memory([1.0, 2.0], [False, False], tail_value=10.0)
    g = 0.9
    got = discounted_returns(mem, g, tail_value=mem.tail_value)
    assert np.allclose(got, [1.0 + g * 2.0 + g * g * 10.0, 2.0 + g * 10.0], atol=1e-12)


def test_advantages_normalized():
    rng = np.random.default_rng(1)
    mem = make_memory(rng.normal(size=50), rng.random(50) < 0.1, values=rng.normal(size=50))
    rets = discounted_returns(mem, 0.99)
    adv = advantages(rets, mem)
    assert abs(adv.mean()) < 1e-12
    assert abs(adv.std() - 1.0) < 1e-9


def test_advantages_constant_input_gives_zeros():
    # gamma = 0 with flat rewards and values: every raw advantage ties,
    # and the degenerate normalization maps them all to 0. Values are
    # powers of two so the ties are exact rather than 1e-17 apart.
    mem = make_memory(np.full(10, 0.75), np.zeros(10), values=np.full(10, 0.25))
    rets = discounted_returns(mem, 0.0)
    assert np.array_equal(advantages(rets, mem), np.zeros(10))


def test_collect_counts_episodes_and_tail():
    env = FuelEnv(EnvConfig())
    params = policy_init(0)
    mem = collect(env, params, 450, np.random.default_rng(0))
    assert len(mem) == 450
    dones = np.flatnonzero(mem.done_array())
    assert dones.tolist() == [199, 399]
    assert mem.tail_value != 0.0

    mem2 = collect(env, params, 400, np.random.default_rng(0))
    assert mem2.done_array()[-1]
    assert mem2.tail_value == 0.0


def test_collect_deterministic():
    env = FuelEnv(EnvConfig())
    params = policy_init(1)
    a = collect(env, params, 300, np.random.default_rng(7))
    b = collect(FuelEnv(EnvConfig()), params, 300, np.random.default_rng(7))
    assert np.array_equal(a.obs_array(), b.obs_array())
    assert np.array_equal(a.action_array(), b.action_array())
    assert np.array_equal(a.reward_array(), b.reward_array())


def test_collect_capacity_keeps_most_recent():
    params = policy_init(2)
    full = collect(FuelEnv(EnvConfig()), params, 150, np.random.default_rng(3))
    capped = collect(FuelEnv(EnvConfig()), params, 150, np.random.default_rng(3), capacity=100)
    assert len(capped) == 100
    assert np.array_equal(capped.obs_array(), full.obs_array()[50:])
    assert capped.tail_value == full.tail_value


def test_memory_slice_tail_semantics():
    mem = make_memory([1.0, 2.0, 3.0], [False, False, False], tail_value=5.0)
    assert mem.slice(0, 2).tail_value == 0.0
    assert mem.slice(1, 3).tail_value == 5.0
    assert np.array_equal(mem.slice(1, 3).reward_array(), [2.0, 3.0])


def test_memory_eviction_and_validation():
    mem = Memory(3)
    for i in range(5):
        mem.append(Transition(np.zeros(6), np.zeros(6), 0.0, float(i), False, 0.0))
    assert np.array_equal(mem.reward_array(), [2.0, 3.0, 4.0])
    with pytest.raises(ValueError):
        Memory(0)
    with pytest.raises(ValueError):
        collect(FuelEnv(EnvConfig()), policy_init(0), 0, np.random.default_rng(0))


def test_surrogate_unit_ratio_gain_is_mean_advantage():
    env = FuelEnv(EnvConfig())
    params = policy_init(3)
    mem = collect(env, params, 200, np.random.default_rng(4))
    _, adv = prepare_batch(mem, 0.99)
    gain, _ = surrogate_gain(params, mem, adv, 0.2)
    # ratios are exactly 1 under the collecting policy, so the gain is the
    # mean normalized advantage, i.e. zero.
    assert abs(gain) < 1e-10


def test_surrogate_clip_hand_cases():
    params = small_policy(5)
    obs = np.full((1, 6), 0.5)
    action = np.array([[1.0, 0, 1, 0, 0, 1]])
    lp = log_prob(params, obs[0], action[0])

    def memory_with_ratio(rho):
        return make_memory([0.0], [True], obs=obs, actions=action, log_probs=[lp - math.log(rho)])

    # ratio 1.5, advantage +1: clipped at 1.2, gradient suppressed
    gain, grads = surrogate_gain(params, memory_with_ratio(1.5), np.array([1.0]), 0.2)
    assert abs(gain - 1.2) < 1e-12
    assert np.array_equal(grads.ravel(), np.zeros_like(grads.ravel()))

    # ratio 0.5, advantage -1: the pessimistic clipped branch wins
    gain, grads = surrogate_gain(params, memory_with_ratio(0.5), np.array([-1.0]), 0.2)
    assert abs(gain - (-0.8)) < 1e-12
    assert np.array_equal(grads.ravel(), np.zeros_like(grads.ravel()))

    # ratio 0.5, advantage +1: unclipped branch active, gradient flows
    gain, grads = surrogate_gain(params, memory_with_ratio(0.5), np.array([1.0]), 0.2)
    assert abs(gain - 0.5) < 1e-12
    expected = log_prob_grads(params, obs, action, np.array([0.5]))
    assert np.allclose(grads.ravel(), expected.ravel(), atol=1e-12)


def test_surrogate_gain_matches_finite_differences():
    # Differentiate at the collecting policy: every ratio sits at 1, far
    # from the clip kinks, so central differences are valid.
    params = small_policy(8)
    mem = collect(FuelEnv(EnvConfig()), params, 16, np.random.default_rng(8))
    adv = np.random.default_rng(9).normal(size=16)
    _, analytic = surrogate_gain(params, mem, adv, 0.2)

    def objective(net):
        trial = params.copy()
        trial.action_net = net
        return surrogate_gain(trial, mem, adv, 0.2)[0]

    fd = fd_flat_grads(objective, params.action_net)
    assert rel_err(analytic.ravel(), fd) < 1e-4


def test_ppo_update_zero_epochs_is_identity():
    params = policy_init(4)
    mem = collect(FuelEnv(EnvConfig()), params, 50, np.random.default_rng(5))
    out = ppo_update(params, mem, Hyperparameters(), epochs=0)
    assert policy_params_equal(out, params)


def test_ppo_update_deterministic_and_pure():
    hp = Hyperparameters(t_update=200, epochs=2)
    params = policy_init(6)
    before = params.copy()
    mem = collect(FuelEnv(EnvConfig()), params, 200, np.random.default_rng(6))
    rewards_before = mem.reward_array()
    a = ppo_update(params, mem, hp)
    b = ppo_update(params, mem, hp)
    assert policy_params_equal(a, b)
    assert policy_params_equal(params, before)
    assert np.array_equal(mem.reward_array(), rewards_before)
    assert not policy_params_equal(a, params)


def test_ppo_update_mean_ratio_contained():
    hp = Hyperparameters()
    params = policy_init(7)
    mem = collect(FuelEnv(EnvConfig()), params, 600, np.random.default_rng(7))
    new = ppo_update(params, mem, hp)
    from fueladapt.policy import log_prob_batch

    rho = np.exp(log_prob_batch(new, mem.obs_array(), mem.action_array()) - mem.log_prob_array())
    assert 1.0 - hp.clip_eps - 0.1 <= rho.mean() <= 1.0 + hp.clip_eps + 0.1


def test_ppo_update_value_loss_descends():
    hp = Hyperparameters(epochs=5)
    wins = 0
    for seed in range(20):
        params = policy_init(seed)
        mem = collect(FuelEnv(EnvConfig()), params, 200, np.random.default_rng(seed))
        returns, _ = prepare_batch(mem, hp.gamma)
        before, _ = value_loss_and_grads(params, mem, returns)
        after, _ = value_loss_and_grads(ppo_update(params, mem, hp), mem, returns)
        wins += after < before
    assert wins >= 18


def test_ppo_update_aborts_on_nonfinite_loss():
    params = policy_init(9)
    mem = collect(FuelEnv(EnvConfig()), params, 50, np.random.default_rng(9))
    mem[10].reward = float("nan")
    out = ppo_update(params, mem, Hyperparameters())
    assert policy_params_equal(out, params)


def test_evaluate_return_constant_env_exact():
    env = ConstRewardEnv(c=0.25, horizon=8)
    got = evaluate_return(env, policy_init(0), episodes=3, rng=np.random.default_rng(0))
    assert got == 0.25 * 8


def test_evaluate_return_ranks_hand_ordered_policies():
    # From a symmetric start, keeping valves shut only pays the slow
    # variance penalty of engine drain; opening everything pays the valve
    # penalty every step. The gap is roughly 10 reward units.
    rng = np.random.default_rng(1)
    closed = evaluate_return(FuelEnv(EnvConfig()), const_policy(-50.0), 2, rng)
    opened = evaluate_return(FuelEnv(EnvConfig()), const_policy(50.0), 2, rng)
    assert closed > opened + 5.0


def test_hyperparameters_validation():
    with pytest.raises(ValueError):
        Hyperparameters(gamma=1.5)
    with pytest.raises(ValueError):
        Hyperparameters(epochs=0)
    with pytest.raises(ValueError):
        Hyperparameters(clip_eps=0.0)
    with pytest.raises(ValueError):
        Hyperparameters(k_in=-1)
