"""Minimal dense-network stack with exact reverse-mode gradients and Adam.

Everything downstream (control policy, value estimator, learned process
model) is a plain multilayer perceptron built from these primitives. All
math is float64 so finite-difference checks are reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

ACTIVATIONS = ("tanh", "sigmoid", "linear")


@dataclass(frozen=True)
class NetSpec:
    """Architecture of a dense stack: layer sizes plus per-layer activation."""

    layer_sizes: tuple[int, ...]
    activations: tuple[str, ...]

    def __post_init__(self):
        if len(self.activations) != len(self.layer_sizes) - 1:
            raise ValueError(
                f"need {len(self.layer_sizes) - 1} activations, got {len(self.activations)}"
            )
        if any(n < 1 for n in self.layer_sizes):
            raise ValueError(f"layer sizes must be >= 1: {self.layer_sizes}")
        for a in self.activations:
            if a not in ACTIVATIONS:
                raise ValueError(f"unknown activation {a!r}")

    @property
    def in_dim(self) -> int:
        return self.layer_sizes[0]

    @property
    def out_dim(self) -> int:
        return self.layer_sizes[-1]


@dataclass
class NetParams:
    """Per-layer weight matrices (out x in) and bias vectors (out)."""

    weights: list[np.ndarray] = field(default_factory=list)
    biases: list[np.ndarray] = field(default_factory=list)

    def copy(self) -> "NetParams":
        return NetParams([w.copy() for w in self.weights], [b.copy() for b in self.biases])

    def allfinite(self) -> bool:
        return all(np.isfinite(w).all() for w in self.weights) and all(
            np.isfinite(b).all() for b in self.biases
        )

    def ravel(self) -> np.ndarray:
        """Flatten all parameters into one vector (weights then bias per layer)."""
        parts = []
        for w, b in zip(self.weights, self.biases):
            parts.append(w.ravel())
            parts.append(b.ravel())
        return np.concatenate(parts)

    @staticmethod
    def unravel(flat: np.ndarray, like: "NetParams") -> "NetParams":
        out = like.copy()
        i = 0
        for l in range(len(out.weights)):
            n = out.weights[l].size
            out.weights[l] = flat[i : i + n].reshape(out.weights[l].shape).copy()
            i += n
            n = out.biases[l].size
            out.biases[l] = flat[i : i + n].copy()
            i += n
        return out


# Gradients carry one entry per parameter; the container is identical.
Grads = NetParams


@dataclass
class AdamState:
    """First/second-moment accumulators plus the step counter."""

    m: NetParams
    v: NetParams
    t: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @staticmethod
    def fresh(params: NetParams, betas=(0.9, 0.999), eps: float = 1e-8) -> "AdamState":
        zeros = lambda: NetParams(
            [np.zeros_like(w) for w in params.weights],
            [np.zeros_like(b) for b in params.biases],
        )
        return AdamState(m=zeros(), v=zeros(), t=0, beta1=betas[0], beta2=betas[1], eps=eps)


def net_init(spec: NetSpec, seed: int) -> NetParams:
    """Glorot-uniform weights, zero biases; deterministic for a given seed."""
    rng = np.random.default_rng(seed)
    weights, biases = [], []
    for fan_in, fan_out in zip(spec.layer_sizes[:-1], spec.layer_sizes[1:]):
        bound = np.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-bound, bound, size=(fan_out, fan_in)))
        biases.append(np.zeros(fan_out))
    return NetParams(weights, biases)


def _activate(z: np.ndarray, kind: str) -> np.ndarray:
    if kind == "tanh":
        return np.tanh(z)
    if kind == "sigmoid":
        return 1.0 / (1.0 + np.exp(-z))
    return z


def _activate_deriv_from_value(a: np.ndarray, kind: str) -> np.ndarray:
    # Derivative written in terms of the activation value, so forward caches suffice.
    if kind == "tanh":
        return 1.0 - a * a
    if kind == "sigmoid":
        return a * (1.0 - a)
    return np.ones_like(a)


def forward_batch(params: NetParams, spec: NetSpec, x: np.ndarray) -> np.ndarray:
    """Forward pass over a batch, rows are inputs. Returns (n, out_dim)."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != spec.in_dim:
        raise ValueError(f"expected input shape (n, {spec.in_dim}), got {x.shape}")
    a = x
    for w, b, act in zip(params.weights, params.biases, spec.activations):
        a = _activate(a @ w.T + b, act)
    return a


def net_forward(params: NetParams, spec: NetSpec, x: np.ndarray) -> np.ndarray:
    """Single-input forward pass; `x` has length spec.in_dim."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (spec.in_dim,):
        raise ValueError(f"expected input shape ({spec.in_dim},), got {x.shape}")
    return forward_batch(params, spec, x[None, :])[0]


def backward_batch(
    params: NetParams, spec: NetSpec, x: np.ndarray, upstream: np.ndarray
) -> tuple[Grads, np.ndarray]:
    """Reverse-mode gradients of sum_n <upstream_n, output_n> over a batch.

    Returns (parameter grads summed over the batch, per-row input grads).
    """
    x = np.asarray(x, dtype=np.float64)
    upstream = np.asarray(upstream, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != spec.in_dim:
        raise ValueError(f"expected input shape (n, {spec.in_dim}), got {x.shape}")
    if upstream.shape != (x.shape[0], spec.out_dim):
        raise ValueError(
            f"expected upstream shape ({x.shape[0]}, {spec.out_dim}), got {upstream.shape}"
        )

    acts = [x]
    a = x
    for w, b, act in zip(params.weights, params.biases, spec.activations):
        a = _activate(a @ w.T + b, act)
        acts.append(a)

    d_weights = [np.empty(0)] * len(params.weights)
    d_biases = [np.empty(0)] * len(params.biases)
    delta = upstream
    for l in range(len(params.weights) - 1, -1, -1):
        delta = delta * _activate_deriv_from_value(acts[l + 1], spec.activations[l])
        d_weights[l] = delta.T @ acts[l]
        d_biases[l] = delta.sum(axis=0)
        delta = delta @ params.weights[l]
    return NetParams(d_weights, d_biases), delta


def net_backward(
    params: NetParams, spec: NetSpec, x: np.ndarray, upstream: np.ndarray
) -> tuple[Grads, np.ndarray]:
    """Exact gradients of <upstream, net(x)> w.r.t. every parameter and the input."""
    x = np.asarray(x, dtype=np.float64)
    upstream = np.asarray(upstream, dtype=np.float64)
    if upstream.shape != (spec.out_dim,):
        raise ValueError(f"expected upstream shape ({spec.out_dim},), got {upstream.shape}")
    grads, dx = backward_batch(params, spec, x[None, :], upstream[None, :])
    return grads, dx[0]


def adam_step(
    params: NetParams, grads: Grads, state: AdamState, lr: float
) -> tuple[NetParams, AdamState]:
    """One bias-corrected Adam descent step along `grads`.

    Descent convention: callers maximizing a gain pass its negated gradient.
    """
    if lr <= 0:
        raise ValueError("lr must be positive")
    if not grads.allfinite():
        raise ValueError("non-finite gradients")
    t = state.t + 1
    b1, b2 = state.beta1, state.beta2

    def update(ps, gs, ms, vs):
        new_p, new_m, new_v = [], [], []
        for p, g, m, v in zip(ps, gs, ms, vs):
            if p.shape != g.shape:
                raise ValueError(f"shape mismatch {p.shape} vs {g.shape}")
            m2 = b1 * m + (1 - b1) * g
            v2 = b2 * v + (1 - b2) * g * g
            m_hat = m2 / (1 - b1**t)
            v_hat = v2 / (1 - b2**t)
            new_p.append(p - lr * m_hat / (np.sqrt(v_hat) + state.eps))
            new_m.append(m2)
            new_v.append(v2)
        return new_p, new_m, new_v

    pw, mw, vw = update(params.weights, grads.weights, state.m.weights, state.v.weights)
    pb, mb, vb = update(params.biases, grads.biases, state.m.biases, state.v.biases)
    new_state = AdamState(
        m=NetParams(mw, mb), v=NetParams(vw, vb), t=t, beta1=b1, beta2=b2, eps=state.eps
    )
    return NetParams(pw, pb), new_state


def params_add_scaled(params: NetParams, grads: Grads, step: float) -> NetParams:
    """Elementwise params + step * grads (the plain gradient-ascent update)."""
    return NetParams(
        [p + step * g for p, g in zip(params.weights, grads.weights)],
        [p + step * g for p, g in zip(params.biases, grads.biases)],
    )


def params_equal(a: NetParams, b: NetParams) -> bool:
    return (
        len(a.weights) == len(b.weights)
        and all(np.array_equal(x, y) for x, y in zip(a.weights, b.weights))
        and all(np.array_equal(x, y) for x, y in zip(a.biases, b.biases))
    )
