"""Meta-updates for fast post-fault re-initialization of the policy.

Three pieces: a first-order MAML baseline that adapts fresh copies on
sampled tasks, the complement-based meta-update that instead adapts a
library of previously learned policies against one buffered process, and
the KL-divergence ranking that keeps the library small but diverse.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .nets import Grads, NetParams, params_add_scaled, params_equal
from .policy import PolicyParams, policy_divergence
from .ppo import Hyperparameters, Memory, collect, evaluate_return, prepare_batch, surrogate_gain, value_loss_and_grads


@dataclass
class MetaConfig:
    alpha_in: float = 0.001
    alpha_out: float = 0.001
    k_in: int = 2
    k_out: int = 4
    test_fraction: float = 0.25

    def __post_init__(self):
        if not (0.0 <= self.alpha_in <= 1.0 and 0.0 <= self.alpha_out <= 1.0):
            raise ValueError("learning rates must lie in [0, 1]")
        if self.k_out < 1 or self.k_in < 0:
            raise ValueError("k_out must be >= 1 and k_in >= 0")
        if not 0.0 < self.test_fraction < 1.0:
            raise ValueError("test_fraction must lie in (0, 1)")


@dataclass
class Complement:
    """Ordered library of prior policies, at most `max_size` entries."""

    members: list[PolicyParams] = field(default_factory=list)
    max_size: int = 3

    def __post_init__(self):
        if len(self.members) > self.max_size:
            raise ValueError("complement exceeds its size bound")

    def __len__(self) -> int:
        return len(self.members)


def policy_params_equal(a: PolicyParams, b: PolicyParams) -> bool:
    return params_equal(a.action_net, b.action_net) and params_equal(a.value_net, b.value_net)


def _zero_like(net: NetParams) -> Grads:
    return Grads([np.zeros_like(w) for w in net.weights], [np.zeros_like(b) for b in net.biases])


def _accumulate(total: Grads, extra: Grads) -> Grads:
    return Grads(
        [t + e for t, e in zip(total.weights, extra.weights)],
        [t + e for t, e in zip(total.biases, extra.biases)],
    )


def inner_adapt(
    theta: PolicyParams,
    memory: Memory,
    alpha_in: float,
    k_in: int,
    clip_eps: float = 0.2,
    adv: np.ndarray | None = None,
    gamma: float = 0.99,
) -> PolicyParams:
    """Plain gradient ascent on the importance-sampled surrogate, action net only."""
    if len(memory) == 0:
        raise ValueError("memory is empty")
    if adv is None:
        _, adv = prepare_batch(memory, gamma)
    new = theta.copy()
    for _ in range(k_in):
        _, grads = surrogate_gain(new, memory, adv, clip_eps)
        new.action_net = params_add_scaled(new.action_net, grads, alpha_in)
    return new


def baseline_update(
    theta_k: PolicyParams,
    memory: Memory,
    alpha_out: float,
    k_out: int,
    gamma: float = 0.99,
    clip_eps: float = 0.2,
) -> PolicyParams:
    """Plain-RL candidate: k_out ascent steps on the buffered gain.

    The value head takes one gradient-descent step toward the discounted
    returns per iteration; the action path never depends on it because
    advantages use the value estimates stored at collection time.
    """
    if len(memory) == 0:
        raise ValueError("memory is empty")
    returns, adv = prepare_batch(memory, gamma)
    new = theta_k.copy()
    for _ in range(k_out):
        _, grads = surrogate_gain(new, memory, adv, clip_eps)
        new.action_net = params_add_scaled(new.action_net, grads, alpha_out)
        _, v_grads = value_loss_and_grads(new, memory, returns)
        new.value_net = params_add_scaled(new.value_net, v_grads, -alpha_out)
    return new


def meta_update(
    theta_k: PolicyParams,
    memory: Memory,
    complement: Complement,
    cfg: MetaConfig,
    hp: Hyperparameters,
    process_model=None,
    rng: np.random.Generator | None = None,
    eval_episodes: int = 4,
) -> PolicyParams:
    """Complement-driven re-initialization of the policy after a fault.

    When a process model is supplied it is refreshed from the buffer and
    trajectories are sampled from it; otherwise the buffered experience
    itself is reused through importance ratios. Library members are then
    trained for a few steps against that single process while a plain-RL
    baseline candidate advances in parallel; the aggregated first-order
    test gradients move the meta candidate. Whichever candidate scores
    higher (model rollouts when available, held-out surrogate gain
    otherwise) becomes the new initialization.
    """
    if len(memory) == 0:
        raise ValueError("memory is empty")

    model_env = None
    if process_model is not None:
        from . import procmodel

        if rng is None:
            rng = np.random.default_rng(hp.seed)
        refreshed = procmodel.model_fit(process_model, memory)
        model_env = procmodel.ModelEnv(refreshed, memory.obs_array())
        data = collect(model_env, theta_k, hp.t_update, rng)
    else:
        data = memory

    returns, adv = prepare_batch(data, hp.gamma)
    n = len(data)
    n_test = min(max(1, int(round(n * cfg.test_fraction))), n - 1)
    train = data.slice(0, n - n_test)
    adv_train = adv[: n - n_test]
    test = data.slice(n - n_test, n)
    adv_test = adv[n - n_test :]

    theta_prime = theta_k.copy()
    theta_b = theta_k.copy()
    workers = [m.copy() for m in complement.members]

    for _ in range(cfg.k_out):
        _, b_grads = surrogate_gain(theta_b, data, adv, hp.clip_eps)
        theta_b.action_net = params_add_scaled(theta_b.action_net, b_grads, cfg.alpha_out)
        _, bv_grads = value_loss_and_grads(theta_b, data, returns)
        theta_b.value_net = params_add_scaled(theta_b.value_net, bv_grads, -cfg.alpha_out)

        if workers:
            accum = _zero_like(theta_prime.action_net)
            for i, w in enumerate(workers):
                workers[i] = inner_adapt(
                    w, train, cfg.alpha_in, cfg.k_in, hp.clip_eps, adv=adv_train
                )
                _, g_test = surrogate_gain(workers[i], test, adv_test, hp.clip_eps)
                accum = _accumulate(accum, g_test)
            theta_prime.action_net = params_add_scaled(
                theta_prime.action_net, accum, cfg.alpha_out
            )

    if model_env is not None:
        j_prime = evaluate_return(model_env, theta_prime, eval_episodes, rng)
        j_base = evaluate_return(model_env, theta_b, eval_episodes, rng)
    else:
        j_prime, _ = surrogate_gain(theta_prime, test, adv_test, hp.clip_eps)
        j_base, _ = surrogate_gain(theta_b, test, adv_test, hp.clip_eps)
    return theta_prime if j_prime >= j_base else theta_b


def maml_update(
    params: PolicyParams,
    task_sampler,
    cfg: MetaConfig,
    rng: np.random.Generator,
    steps_per_task: int = 200,
    gamma: float = 0.99,
    clip_eps: float = 0.2,
) -> PolicyParams:
    """First-order MAML outer step over freshly sampled tasks.

    `task_sampler(rng)` yields one batch of environments per outer
    iteration. Each task adapts a copy of the current params on its own
    training rollouts; the test-rollout gradients, taken at the adapted
    copies, aggregate into the outer update.
    """
    theta_prime = params.copy()
    for _ in range(cfg.k_out):
        tasks = list(task_sampler(rng))
        if not tasks:
            raise ValueError("task sampler returned no tasks")
        accum = _zero_like(theta_prime.action_net)
        for env in tasks:
            theta_i = theta_prime.copy()
            for _ in range(cfg.k_in):
                mem = collect(env, theta_i, steps_per_task, rng)
                _, adv = prepare_batch(mem, gamma)
                _, grads = surrogate_gain(theta_i, mem, adv, clip_eps)
                theta_i.action_net = params_add_scaled(theta_i.action_net, grads, cfg.alpha_in)
            test_mem = collect(env, theta_i, steps_per_task, rng)
            _, test_adv = prepare_batch(test_mem, gamma)
            _, g_test = surrogate_gain(theta_i, test_mem, test_adv, clip_eps)
            accum = _accumulate(accum, g_test)
        theta_prime.action_net = params_add_scaled(theta_prime.action_net, accum, cfg.alpha_out)
    return theta_prime


def populate_complement(candidates, s: int, memory: Memory) -> Complement:
    """Keep the s most mutually divergent policies.

    Divergence of each candidate is its row sum over the pairwise
    KL-divergence matrix evaluated on the remembered states; ranking is
    descending with earlier candidates winning ties. Bit-identical
    duplicates are collapsed first (a library gains nothing from copies).
    """
    members = list(candidates.members) if isinstance(candidates, Complement) else list(candidates)
    if not members:
        raise ValueError("no candidates")
    if len(memory) == 0:
        raise ValueError("memory is empty")

    unique: list[PolicyParams] = []
    for cand in members:
        if not any(policy_params_equal(cand, kept) for kept in unique):
            unique.append(cand)

    n = len(unique)
    div = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            if i != j:
                div[i, j] = policy_divergence(unique[i], unique[j], memory)
    totals = div.sum(axis=1)
    order = np.argsort(-totals, kind="stable")
    keep = [unique[i] for i in order[:s]]
    return Complement(members=keep, max_size=s)
