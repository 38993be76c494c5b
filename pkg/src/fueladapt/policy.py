"""Stochastic valve-control policy and state-value estimator.

The action network maps normalized tank levels to six independent
Bernoulli "open" probabilities through a sigmoid head; the value network
estimates the discounted return of a state. Divergence between two
policies is the mean (over remembered states) of summed per-valve
Bernoulli KL divergences.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .nets import NetParams, NetSpec, backward_batch, forward_batch, net_init

N_VALVES = 6
OBS_DIM = 6

# Probabilities are clamped before any log so log-likelihoods stay finite.
PROB_FLOOR = 1e-6

ACTION_SPEC = NetSpec((OBS_DIM, 64, 64, N_VALVES), ("tanh", "tanh", "sigmoid"))
VALUE_SPEC = NetSpec((OBS_DIM, 64, 64, 1), ("tanh", "tanh", "linear"))


@dataclass
class PolicyParams:
    """All weights of the action network and the value network."""

    action_net: NetParams
    value_net: NetParams
    action_spec: NetSpec = ACTION_SPEC
    value_spec: NetSpec = VALUE_SPEC

    def copy(self) -> "PolicyParams":
        return PolicyParams(
            self.action_net.copy(), self.value_net.copy(), self.action_spec, self.value_spec
        )


def policy_init(seed: int, action_spec: NetSpec = ACTION_SPEC, value_spec: NetSpec = VALUE_SPEC) -> PolicyParams:
    """Fresh Glorot-initialized policy; action and value nets get distinct streams."""
    return PolicyParams(
        action_net=net_init(action_spec, seed),
        value_net=net_init(value_spec, seed + 1),
        action_spec=action_spec,
        value_spec=value_spec,
    )


def _clamp(p: np.ndarray) -> np.ndarray:
    return np.clip(p, PROB_FLOOR, 1.0 - PROB_FLOOR)


def act_probs(params: PolicyParams, obs: np.ndarray) -> np.ndarray:
    """Per-valve open probabilities, each strictly inside (0, 1)."""
    return forward_batch(params.action_net, params.action_spec, np.atleast_2d(obs))[0]


def act_probs_batch(params: PolicyParams, obs: np.ndarray) -> np.ndarray:
    return forward_batch(params.action_net, params.action_spec, obs)


def _bernoulli_log_prob(probs: np.ndarray, actions: np.ndarray) -> np.ndarray:
    p = _clamp(probs)
    return (actions * np.log(p) + (1.0 - actions) * np.log1p(-p)).sum(axis=-1)


def sample_action(
    params: PolicyParams, obs: np.ndarray, rng: np.random.Generator
) -> tuple[np.ndarray, float]:
    """Draw one binary command per valve; returns the action and its log-likelihood."""
    p = act_probs(params, obs)
    action = (rng.random(p.shape) < p).astype(np.float64)
    return action, float(_bernoulli_log_prob(p, action))


def log_prob(params: PolicyParams, obs: np.ndarray, action: np.ndarray) -> float:
    """Exact Bernoulli log-likelihood of a valve command under this policy."""
    p = act_probs(params, obs)
    return float(_bernoulli_log_prob(p, np.asarray(action, dtype=np.float64)))


def log_prob_batch(params: PolicyParams, obs: np.ndarray, actions: np.ndarray) -> np.ndarray:
    return _bernoulli_log_prob(act_probs_batch(params, obs), actions)


def log_prob_grads(params: PolicyParams, obs: np.ndarray, actions: np.ndarray, coeffs: np.ndarray):
    """Action-net gradients of sum_n coeffs_n * log pi(action_n | obs_n).

    The upstream derivative w.r.t. the sigmoid output p is
    u/p - (1-u)/(1-p), scaled per row by `coeffs`.
    """
    p = _clamp(act_probs_batch(params, obs))
    upstream = coeffs[:, None] * (actions / p - (1.0 - actions) / (1.0 - p))
    grads, _ = backward_batch(params.action_net, params.action_spec, obs, upstream)
    return grads


def value(params: PolicyParams, obs: np.ndarray) -> float:
    """State-value estimate from the value head."""
    return float(forward_batch(params.value_net, params.value_spec, np.atleast_2d(obs))[0, 0])


def value_batch(params: PolicyParams, obs: np.ndarray) -> np.ndarray:
    return forward_batch(params.value_net, params.value_spec, obs)[:, 0]


def policy_divergence(a: PolicyParams, b: PolicyParams, memory) -> float:
    """Mean over stored states of the summed per-valve KL(p_a || p_b).

    Nonnegative, and zero exactly when both policies emit identical
    probabilities on every remembered state.
    """
    if len(memory) == 0:
        raise ValueError("memory is empty")
    obs = memory.obs_array()
    pa = _clamp(act_probs_batch(a, obs))
    pb = _clamp(act_probs_batch(b, obs))
    kl = pa * np.log(pa / pb) + (1.0 - pa) * np.log((1.0 - pa) / (1.0 - pb))
    return float(kl.sum(axis=1).mean())
