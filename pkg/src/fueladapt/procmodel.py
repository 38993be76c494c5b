"""Data-driven one-step process model fit from buffered interactions.

A single dense network maps (observation, action) to the observation
delta and the one-step reward. It stands in for the real system when the
meta-update wants rollouts without touching the plant.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .nets import AdamState, NetParams, NetSpec, adam_step, backward_batch, forward_batch, net_init
from .ppo import Memory

DYNAMICS_SPEC = NetSpec((12, 64, 64, 7), ("tanh", "tanh", "linear"))

MIN_FIT_TRANSITIONS = 32


@dataclass
class ProcessModel:
    dynamics_net: NetParams
    fit_loss: float = float("inf")
    spec: NetSpec = DYNAMICS_SPEC

    def copy(self) -> "ProcessModel":
        return ProcessModel(self.dynamics_net.copy(), self.fit_loss, self.spec)


def _training_pairs(memory: Memory) -> tuple[np.ndarray, np.ndarray]:
    """(obs ++ action) inputs and (next_obs - obs, reward) targets for
    consecutive transitions inside one episode."""
    obs = memory.obs_array()
    actions = memory.action_array()
    rewards = memory.reward_array()
    dones = memory.done_array()
    keep = ~dones[:-1]
    x = np.hstack([obs[:-1], actions[:-1]])[keep]
    y = np.hstack([(obs[1:] - obs[:-1]), rewards[:-1, None]])[keep]
    return x, y


def model_fit(
    model: ProcessModel | None,
    memory: Memory,
    seed: int = 0,
    epochs: int = 300,
    lr: float = 0.003,
) -> ProcessModel:
    """Full-batch Adam regression of deltas and rewards from the buffer.

    Warm-starts from `model` when given, otherwise initializes fresh from
    `seed`. Deterministic for fixed inputs.
    """
    if len(memory) < MIN_FIT_TRANSITIONS:
        raise ValueError(f"memory holds {len(memory)} transitions; need >= {MIN_FIT_TRANSITIONS}")
    x, y = _training_pairs(memory)
    if len(x) == 0:
        raise ValueError("memory has no consecutive within-episode pairs")

    spec = model.spec if model is not None else DYNAMICS_SPEC
    net = model.dynamics_net.copy() if model is not None else net_init(spec, seed)
    state = AdamState.fresh(net)
    loss = float("inf")
    for _ in range(epochs):
        pred = forward_batch(net, spec, x)
        err = pred - y
        loss = float((err * err).mean())
        upstream = 2.0 * err / err.size
        grads, _ = backward_batch(net, spec, x, upstream)
        net, state = adam_step(net, grads, state, lr)
    pred = forward_batch(net, spec, x)
    loss = float(((pred - y) ** 2).mean())
    return ProcessModel(dynamics_net=net, fit_loss=loss, spec=spec)


def model_step(model: ProcessModel, obs: np.ndarray, action: np.ndarray):
    """Predicted (next_obs, reward); next_obs is clamped to the unit box."""
    x = np.concatenate([np.asarray(obs, dtype=np.float64), np.asarray(action, dtype=np.float64)])
    out = forward_batch(model.dynamics_net, model.spec, x[None, :])[0]
    next_obs = np.clip(obs + out[:6], 0.0, 1.0)
    return next_obs, float(out[6])


class ModelEnv:
    """Rollout adapter: episodes start from remembered observations and
    run for a fixed horizon under the learned dynamics."""

    def __init__(self, model: ProcessModel, start_obs: np.ndarray, horizon: int = 200):
        if len(start_obs) == 0:
            raise ValueError("need at least one start observation")
        self.model = model
        self.start_obs = np.asarray(start_obs, dtype=np.float64)
        self.horizon = horizon
        self._obs: np.ndarray | None = None
        self._t = 0

    def reset(self, rng: np.random.Generator) -> np.ndarray:
        self._obs = self.start_obs[rng.integers(len(self.start_obs))].copy()
        self._t = 0
        return self._obs

    def step(self, action: np.ndarray):
        if self._obs is None:
            raise RuntimeError("step() before reset()")
        self._obs, r = model_step(self.model, self._obs, action)
        self._t += 1
        return self._obs, r, self._t >= self.horizon
