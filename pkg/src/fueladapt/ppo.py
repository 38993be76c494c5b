"""On-policy data collection and the clipped-surrogate policy update.

A bounded memory buffers recent interactions together with the
log-likelihoods of the collecting policy, so later updates can reweigh
the same experience by importance ratios. Updates ascend the clipped
surrogate on the action network and regress the value network to
discounted returns.
"""

from __future__ import annotations

import logging
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from . import policy as pol
from .nets import AdamState, Grads, adam_step, backward_batch
from .policy import PolicyParams

log = logging.getLogger(__name__)


@dataclass
class Transition:
    obs: np.ndarray
    action: np.ndarray
    log_prob: float
    reward: float
    done: bool
    value_est: float


@dataclass
class Hyperparameters:
    """All tunables; defaults follow the reference experimental setup."""

    gamma: float = 0.99
    clip_eps: float = 0.2
    epochs: int = 5
    t_update: int = 2000
    lr_ppo: float = 0.02
    alpha_in: float = 0.001
    alpha_out: float = 0.001
    k_in: int = 2
    k_out: int = 4
    s: int = 3
    mem_capacity: int = 2000
    adam_betas: tuple = (0.9, 0.999)
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.gamma <= 1.0:
            raise ValueError("gamma must lie in [0, 1]")
        if self.clip_eps <= 0:
            raise ValueError("clip_eps must be positive")
        if min(self.epochs, self.t_update, self.k_out, self.s, self.mem_capacity) < 1:
            raise ValueError("counts must be >= 1")
        if self.k_in < 0:
            raise ValueError("k_in must be >= 0")


class Memory:
    """Bounded FIFO of transitions; the oldest are evicted first when full.

    `tail_value` is the value estimate of the state following the final
    transition, used to bootstrap a truncated last episode (0 when that
    episode actually finished).
    """

    def __init__(self, capacity: int):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self.capacity = capacity
        self._items: deque[Transition] = deque(maxlen=capacity)
        self.tail_value: float = 0.0

    def append(self, transition: Transition) -> None:
        self._items.append(transition)

    def __len__(self) -> int:
        return len(self._items)

    def __getitem__(self, i: int) -> Transition:
        return self._items[i]

    def __iter__(self):
        return iter(self._items)

    def slice(self, start: int, stop: int) -> "Memory":
        """A new memory holding transitions [start, stop); keeps the tail value
        only when the slice reaches the end of this memory."""
        items = list(self._items)[start:stop]
        out = Memory(max(len(items), 1))
        for t in items:
            out.append(t)
        out.tail_value = self.tail_value if stop >= len(self._items) else 0.0
        return out

    def obs_array(self) -> np.ndarray:
        return np.array([t.obs for t in self._items], dtype=np.float64)

    def action_array(self) -> np.ndarray:
        return np.array([t.action for t in self._items], dtype=np.float64)

    def log_prob_array(self) -> np.ndarray:
        return np.array([t.log_prob for t in self._items], dtype=np.float64)

    def reward_array(self) -> np.ndarray:
        return np.array([t.reward for t in self._items], dtype=np.float64)

    def done_array(self) -> np.ndarray:
        return np.array([t.done for t in self._items], dtype=bool)

    def value_array(self) -> np.ndarray:
        return np.array([t.value_est for t in self._items], dtype=np.float64)


def collect(env, params: PolicyParams, steps: int, rng: np.random.Generator,
            capacity: int | None = None) -> Memory:
    """Roll the policy out for exactly `steps` transitions, resetting on done.

    Log-likelihoods and value estimates are recorded under `params`; the
    value of the state after the final transition is kept for
    bootstrapping unless that transition closed its episode.
    """
    if steps < 1:
        raise ValueError("steps must be >= 1")
    memory = Memory(capacity if capacity is not None else steps)
    obs = env.reset(rng)
    for _ in range(steps):
        action, lp = pol.sample_action(params, obs, rng)
        next_obs, r, done = env.step(action)
        memory.append(
            Transition(
                obs=np.asarray(obs, dtype=np.float64),
                action=action,
                log_prob=lp,
                reward=float(r),
                done=bool(done),
                value_est=pol.value(params, obs),
            )
        )
        obs = env.reset(rng) if done else next_obs
    memory.tail_value = 0.0 if memory[len(memory) - 1].done else pol.value(params, obs)
    return memory


def discounted_returns(memory: Memory, gamma: float, tail_value: float = 0.0) -> np.ndarray:
    """Per-transition discounted return, restarting at episode boundaries.

    `tail_value` bootstraps the final unfinished episode; the default 0
    matches the plain within-episode sum.
    """
    if len(memory) == 0:
        raise ValueError("memory is empty")
    rewards = memory.reward_array()
    dones = memory.done_array()
    returns = np.empty_like(rewards)
    running = 0.0 if dones[-1] else float(tail_value)
    for t in range(len(rewards) - 1, -1, -1):
        if t < len(rewards) - 1 and dones[t]:
            running = 0.0
        running = rewards[t] + gamma * running
        returns[t] = running
    return returns


def advantages(returns: np.ndarray, memory: Memory) -> np.ndarray:
    """Return-minus-value baseline, normalized to zero mean and unit std."""
    if len(returns) != len(memory):
        raise ValueError("returns and memory lengths differ")
    adv = returns - memory.value_array()
    std = adv.std()
    return (adv - adv.mean()) / max(std, 1e-8)


def prepare_batch(memory: Memory, gamma: float) -> tuple[np.ndarray, np.ndarray]:
    """Bootstrapped returns plus normalized advantages for one training batch."""
    rets = discounted_returns(memory, gamma, tail_value=memory.tail_value)
    return rets, advantages(rets, memory)


def surrogate_gain(
    params: PolicyParams, memory: Memory, adv: np.ndarray, clip_eps: float
) -> tuple[float, Grads]:
    """Clipped importance-sampling surrogate and its action-net gradients.

    gain = mean_t min(rho_t A_t, clip(rho_t, 1 - eps, 1 + eps) A_t)
    with rho_t the likelihood ratio of the stored action under `params`
    versus the collecting policy. The gradient flows only through terms
    where the unclipped branch attains the min.
    """
    obs = memory.obs_array()
    actions = memory.action_array()
    old_lp = memory.log_prob_array()
    new_lp = pol.log_prob_batch(params, obs, actions)
    rho = np.exp(new_lp - old_lp)
    unclipped = rho * adv
    clipped = np.clip(rho, 1.0 - clip_eps, 1.0 + clip_eps) * adv
    gain = float(np.minimum(unclipped, clipped).mean())
    active = unclipped <= clipped
    coeffs = np.where(active, rho * adv, 0.0) / len(memory)
    grads = pol.log_prob_grads(params, obs, actions, coeffs)
    return gain, grads


def value_loss_and_grads(
    params: PolicyParams, memory: Memory, returns: np.ndarray
) -> tuple[float, Grads]:
    """Mean squared error of the value head against returns, with gradients."""
    obs = memory.obs_array()
    v = pol.value_batch(params, obs)
    err = v - returns
    loss = float((err * err).mean())
    upstream = (2.0 * err / len(err))[:, None]
    grads, _ = backward_batch(params.value_net, params.value_spec, obs, upstream)
    return loss, grads


def ppo_update(params: PolicyParams, memory: Memory, hp: Hyperparameters,
               epochs: int | None = None) -> PolicyParams:
    """Clipped-surrogate update: ascend the gain, regress the value head.

    Full-batch Adam for `epochs` passes; inputs are left untouched. A
    non-finite loss aborts the update and returns the original params.
    """
    if epochs is None:
        epochs = hp.epochs
    if epochs == 0:
        return params
    if len(memory) < 2:
        raise ValueError("memory must hold at least 2 transitions")
    returns, adv = prepare_batch(memory, hp.gamma)

    new = params.copy()
    a_state = AdamState.fresh(new.action_net, betas=hp.adam_betas)
    v_state = AdamState.fresh(new.value_net, betas=hp.adam_betas)
    for _ in range(epochs):
        gain, a_grads = surrogate_gain(new, memory, adv, hp.clip_eps)
        v_loss, v_grads = value_loss_and_grads(new, memory, returns)
        if not (np.isfinite(gain) and np.isfinite(v_loss)):
            log.warning("non-finite PPO loss (gain=%s, value=%s); update aborted", gain, v_loss)
            return params
        neg = Grads([-g for g in a_grads.weights], [-g for g in a_grads.biases])
        new.action_net, a_state = adam_step(new.action_net, neg, a_state, hp.lr_ppo)
        new.value_net, v_state = adam_step(new.value_net, v_grads, v_state, hp.lr_ppo)
    return new


def evaluate_return(env_or_model, params: PolicyParams, episodes: int,
                    rng: np.random.Generator) -> float:
    """Mean undiscounted episodic reward over stochastic rollouts."""
    if episodes < 1:
        raise ValueError("episodes must be >= 1")
    totals = []
    for _ in range(episodes):
        obs = env_or_model.reset(rng)
        total = 0.0
        done = False
        while not done:
            action, _ = pol.sample_action(params, obs, rng)
            obs, r, done = env_or_model.step(action)
            total += r
        totals.append(total)
    return float(np.mean(totals))
