"""Meta-update reductions, library selection, and a learn-to-adapt oracle."""

import numpy as np
import pytest

from conftest import make_memory, small_policy
from fueladapt.fuelsim import EnvConfig, FuelEnv
from fueladapt.meta import (
    Complement,
    MetaConfig,
    baseline_update,
    inner_adapt,
    maml_update,
    meta_update,
    policy_params_equal,
    populate_complement,
)
from fueladapt.nets import params_add_scaled
from fueladapt.policy import act_probs, policy_divergence, policy_init
from fueladapt.ppo import Hyperparameters, collect, prepare_batch, surrogate_gain, value_loss_and_grads


def _env_memory(seed: int, steps: int = 120):
    params = policy_init(seed)
    mem = collect(FuelEnv(EnvConfig()), params, steps, np.random.default_rng(seed))
    return params, mem


def test_meta_config_validation():
    with pytest.raises(ValueError):
        MetaConfig(alpha_in=1.5)
    with pytest.raises(ValueError):
        MetaConfig(alpha_out=-0.1)
    with pytest.raises(ValueError):
        MetaConfig(k_out=0)
    with pytest.raises(ValueError):
        MetaConfig(k_in=-1)
    with pytest.raises(ValueError):
        MetaConfig(test_fraction=1.0)


def test_complement_size_bound():
    members = [small_policy(i) for i in range(4)]
    with pytest.raises(ValueError):
        Complement(members=members, max_size=3)
    assert len(Complement(members=members[:2], max_size=3)) == 2


def test_inner_adapt_identities():
    params, mem = _env_memory(0)
    assert policy_params_equal(inner_adapt(params, mem, 0.01, 0), params)
    assert policy_params_equal(inner_adapt(params, mem, 0.0, 3), params)


def test_inner_adapt_single_step_decomposition():
    params, mem = _env_memory(1)
    _, adv = prepare_batch(mem, 0.99)
    _, grads = surrogate_gain(params, mem, adv, 0.2)
    expected = params.copy()
    expected.action_net = params_add_scaled(expected.action_net, grads, 0.01)
    got = inner_adapt(params, mem, 0.01, 1)
    assert policy_params_equal(got, expected)
    # the value head is never touched by inner adaptation
    assert np.array_equal(got.value_net.ravel(), params.value_net.ravel())


def test_baseline_update_composition():
    params, mem = _env_memory(2)
    alpha, k_out, gamma, eps = 0.005, 3, 0.99, 0.2
    returns, adv = prepare_batch(mem, gamma)
    expected = params.copy()
    for _ in range(k_out):
        _, g = surrogate_gain(expected, mem, adv, eps)
        expected.action_net = params_add_scaled(expected.action_net, g, alpha)
        _, vg = value_loss_and_grads(expected, mem, returns)
        expected.value_net = params_add_scaled(expected.value_net, vg, -alpha)
    got = baseline_update(params, mem, alpha, k_out, gamma=gamma, clip_eps=eps)
    assert policy_params_equal(got, expected)


def _split(mem, gamma, test_fraction):
    _, adv = prepare_batch(mem, gamma)
    n = len(mem)
    n_test = min(max(1, int(round(n * test_fraction))), n - 1)
    return (
        mem.slice(0, n - n_test),
        adv[: n - n_test],
        mem.slice(n - n_test, n),
        adv[n - n_test :],
    )


def test_meta_update_empty_complement_selects_by_measured_gain():
    # With nothing in the library the meta candidate never moves, so the
    # output must be theta_k or the plain-RL candidate, whichever scores
    # higher on the held-out slice.
    params, mem = _env_memory(3)
    hp = Hyperparameters()
    cfg = MetaConfig(alpha_in=0.001, alpha_out=0.01, k_in=2, k_out=4)
    got = meta_update(params, mem, Complement(members=[], max_size=3), cfg, hp)

    theta_b = baseline_update(params, mem, cfg.alpha_out, cfg.k_out, hp.gamma, hp.clip_eps)
    _, _, test, adv_test = _split(mem, hp.gamma, cfg.test_fraction)
    j_prime, _ = surrogate_gain(params, test, adv_test, hp.clip_eps)
    j_base, _ = surrogate_gain(theta_b, test, adv_test, hp.clip_eps)
    expected = params if j_prime >= j_base else theta_b
    assert policy_params_equal(got, expected)


def test_meta_update_singleton_accumulation_is_plain_test_gradient():
    # One worker, no inner steps, one outer iteration: the meta move is
    # exactly alpha_out times the test-slice gain gradient at theta_k.
    params, mem = _env_memory(4)
    hp = Hyperparameters()
    cfg = MetaConfig(alpha_in=0.001, alpha_out=0.05, k_in=0, k_out=1)
    comp = Complement(members=[params.copy()], max_size=3)
    got = meta_update(params, mem, comp, cfg, hp)

    _, _, test, adv_test = _split(mem, hp.gamma, cfg.test_fraction)
    _, g_test = surrogate_gain(params, test, adv_test, hp.clip_eps)
    theta_prime = params.copy()
    theta_prime.action_net = params_add_scaled(theta_prime.action_net, g_test, cfg.alpha_out)

    theta_b = baseline_update(params, mem, cfg.alpha_out, cfg.k_out, hp.gamma, hp.clip_eps)
    j_prime, _ = surrogate_gain(theta_prime, test, adv_test, hp.clip_eps)
    j_base, _ = surrogate_gain(theta_b, test, adv_test, hp.clip_eps)
    expected = theta_prime if j_prime >= j_base else theta_b
    diff = np.abs(got.action_net.ravel() - expected.action_net.ravel()).max()
    assert diff < 1e-10


def test_meta_update_zero_rates_are_identities():
    params, mem = _env_memory(5)
    hp = Hyperparameters()
    cfg = MetaConfig(alpha_in=0.0, alpha_out=0.0, k_in=2, k_out=3)
    comp = Complement(members=[policy_init(10), policy_init(11)], max_size=3)
    got = meta_update(params, mem, comp, cfg, hp)
    assert policy_params_equal(got, params)
    assert policy_params_equal(baseline_update(params, mem, 0.0, 3), params)


def test_meta_update_empty_memory_rejected():
    from fueladapt.ppo import Memory

    with pytest.raises(ValueError):
        meta_update(policy_init(0), Memory(4), Complement(), MetaConfig(), Hyperparameters())


def test_populate_collapses_bit_identical_duplicates():
    a = small_policy(0)
    b = small_policy(1)
    mem = make_memory(np.zeros(6), np.zeros(6), obs=np.random.default_rng(0).uniform(size=(6, 6)))
    comp = populate_complement([a, a.copy(), b], s=2, memory=mem)
    assert len(comp) == 2
    assert sum(policy_params_equal(m, a) for m in comp.members) == 1
    assert sum(policy_params_equal(m, b) for m in comp.members) == 1


def test_populate_matches_brute_force_ranking():
    rng = np.random.default_rng(1)
    for pool_seed in range(5):
        cands = [small_policy(pool_seed * 10 + i) for i in range(5)]
        mem = make_memory(np.zeros(8), np.zeros(8), obs=rng.uniform(size=(8, 6)))
        got = populate_complement(cands, s=3, memory=mem)

        n = len(cands)
        totals = [
            sum(policy_divergence(cands[i], cands[j], mem) for j in range(n) if j != i)
            for i in range(n)
        ]
        order = sorted(range(n), key=lambda i: (-totals[i], i))
        expected = [cands[i] for i in order[:3]]
        assert len(got) == 3
        for kept, want in zip(got.members, expected):
            assert policy_params_equal(kept, want)


def test_populate_size_and_errors():
    mem = make_memory(np.zeros(4), np.zeros(4), obs=np.random.default_rng(2).uniform(size=(4, 6)))
    cands = [small_policy(i) for i in range(2)]
    assert len(populate_complement(cands, s=5, memory=mem)) == 2
    with pytest.raises(ValueError):
        populate_complement([], s=2, memory=mem)
    from fueladapt.ppo import Memory

    with pytest.raises(ValueError):
        populate_complement(cands, s=2, memory=Memory(4))


class _BanditEnv:
    """One-step episodes on a frozen observation; pays 1 when the chosen
    valve command matches the task's target."""

    def __init__(self, valve: int, target: float):
        self.valve = valve
        self.target = target
        self.obs = np.full(6, 0.5)

    def reset(self, rng=None):
        return self.obs.copy()

    def step(self, action):
        return self.obs.copy(), float(action[self.valve] == self.target), True


def _adaptation_score(params, tasks, cfg, rng):
    """Expected post-adaptation reward, averaged over tasks."""
    total = 0.0
    for env in tasks:
        adapted = params.copy()
        for _ in range(cfg.k_in):
            mem = collect(env, adapted, 64, rng)
            _, adv = prepare_batch(mem, 0.99)
            _, g = surrogate_gain(adapted, mem, adv, 0.2)
            adapted.action_net = params_add_scaled(adapted.action_net, g, cfg.alpha_in)
        p = act_probs(adapted, env.obs)[env.valve]
        total += p if env.target == 1.0 else 1.0 - p
    return total / len(tasks)


def test_maml_update_alpha_out_zero_is_identity():
    params = small_policy(0)
    cfg = MetaConfig(alpha_in=0.5, alpha_out=0.0, k_in=1, k_out=2)
    got = maml_update(
        params, lambda rng: [_BanditEnv(0, 1.0)], cfg, np.random.default_rng(0), steps_per_task=16
    )
    assert policy_params_equal(got, params)


def test_maml_update_improves_bandit_adaptation():
    # Two opposing one-step tasks: the meta phase should leave an
    # initialization that adapts further in k_in steps than a fresh one.
    cfg = MetaConfig(alpha_in=1.0, alpha_out=0.3, k_in=2, k_out=20)
    tasks = [_BanditEnv(0, 1.0), _BanditEnv(0, 0.0)]
    improved = 0
    for seed in range(5):
        rng = np.random.default_rng(seed)
        theta0 = small_policy(seed)
        before = _adaptation_score(theta0, tasks, cfg, np.random.default_rng(seed + 100))
        trained = maml_update(theta0, lambda r: tasks, cfg, rng, steps_per_task=64)
        after = _adaptation_score(trained, tasks, cfg, np.random.default_rng(seed + 100))
        improved += after > before
    assert improved == 5
