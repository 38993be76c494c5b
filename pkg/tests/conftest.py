"""Shared fixtures and numeric helpers for the test suite."""

from __future__ import annotations

import numpy as np

from fueladapt.nets import NetParams, NetSpec
from fueladapt.policy import PolicyParams
from fueladapt.ppo import Memory, Transition


def fd_flat_grads(fn, params: NetParams, h: float = 1e-5) -> np.ndarray:
    """Central finite differences of a scalar function over raveled params."""
    flat = params.ravel()
    out = np.empty_like(flat)
    for i in range(flat.size):
        up = flat.copy()
        up[i] += h
        dn = flat.copy()
        dn[i] -= h
        out[i] = (fn(NetParams.unravel(up, params)) - fn(NetParams.unravel(dn, params))) / (2 * h)
    return out


def rel_err(analytic: np.ndarray, reference: np.ndarray) -> float:
    """Worst-case elementwise error scaled by the reference magnitude."""
    denom = max(float(np.abs(reference).max()), 1e-10)
    return float(np.abs(analytic - reference).max()) / denom


SMALL_ACTION_SPEC = NetSpec((6, 8, 6), ("tanh", "sigmoid"))
SMALL_VALUE_SPEC = NetSpec((6, 8, 1), ("tanh", "linear"))


def small_policy(seed: int) -> PolicyParams:
    """Full policy semantics on narrow nets, cheap enough for exhaustive FD."""
    from fueladapt.policy import policy_init

    return policy_init(seed, action_spec=SMALL_ACTION_SPEC, value_spec=SMALL_VALUE_SPEC)


def const_policy(logit: float, value: float = 0.0) -> PolicyParams:
    """Policy emitting sigmoid(logit) for every valve on every observation."""
    aspec = NetSpec((6, 6), ("sigmoid",))
    vspec = NetSpec((6, 1), ("linear",))
    return PolicyParams(
        action_net=NetParams([np.zeros((6, 6))], [np.full(6, float(logit))]),
        value_net=NetParams([np.zeros((1, 6))], [np.array([float(value)])]),
        action_spec=aspec,
        value_spec=vspec,
    )


def make_memory(rewards, dones, values=None, obs=None, actions=None, log_probs=None,
                tail_value: float = 0.0) -> Memory:
    """Assemble a memory buffer directly from per-transition arrays."""
    n = len(rewards)
    values = np.zeros(n) if values is None else np.asarray(values, dtype=np.float64)
    obs = np.zeros((n, 6)) if obs is None else np.asarray(obs, dtype=np.float64)
    actions = np.zeros((n, 6)) if actions is None else np.asarray(actions, dtype=np.float64)
    log_probs = np.zeros(n) if log_probs is None else np.asarray(log_probs, dtype=np.float64)
    mem = Memory(n)
    for i in range(n):
        mem.append(
            Transition(
                obs=obs[i].copy(),
                action=actions[i].copy(),
                log_prob=float(log_probs[i]),
                reward=float(rewards[i]),
                done=bool(dones[i]),
                value_est=float(values[i]),
            )
        )
    mem.tail_value = float(tail_value)
    return mem


class ConstRewardEnv:
    """Fixed-horizon environment paying a constant reward on a frozen observation."""

    def __init__(self, c: float = 0.25, horizon: int = 8, obs=None):
        self.c = c
        self.horizon = horizon
        self.obs = np.zeros(6) if obs is None else np.asarray(obs, dtype=np.float64)
        self.t = 0

    def reset(self, rng=None):
        self.t = 0
        return self.obs.copy()

    def step(self, action):
        self.t += 1
        return self.obs.copy(), self.c, self.t >= self.horizon
