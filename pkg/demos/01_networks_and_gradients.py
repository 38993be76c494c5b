"""Sanity walk through the neural net layer: forward pass, exact backward
pass against finite differences, and an Adam fit of a 1-d function.

Run:  python3 demos/01_networks_and_gradients.py
"""

import numpy as np

from fueladapt.nets import (
    AdamState,
    NetParams,
    NetSpec,
    adam_step,
    backward_batch,
    forward_batch,
    net_backward,
    net_forward,
    net_init,
)


def fd_grads(fn, params, h=1e-5):
    flat = params.ravel()
    out = np.empty_like(flat)
    for i in range(flat.size):
        up, dn = flat.copy(), flat.copy()
        up[i] += h
        dn[i] -= h
        out[i] = (fn(NetParams.unravel(up, params)) - fn(NetParams.unravel(dn, params))) / (2 * h)
    return out


def main():
    rng = np.random.default_rng(0)

    spec = NetSpec((3, 8, 2), ("tanh", "sigmoid"))
    params = net_init(spec, seed=0)
    x = rng.normal(size=3)
    y = net_forward(params, spec, x)
    print(f"spec {spec.layer_sizes} {spec.activations}")
    print(f"forward({np.round(x, 3)}) = {np.round(y, 4)}")

    upstream = rng.normal(size=2)
    analytic, _ = net_backward(params, spec, x, upstream)
    numeric = fd_grads(lambda p: float(upstream @ net_forward(p, spec, x)), params)
    err = np.abs(analytic.ravel() - numeric).max()
    print(f"backward vs central differences: max |diff| = {err:.2e}")

    # regress sin(3x) on [-1, 1] with full-batch Adam
    spec = NetSpec((1, 16, 1), ("tanh", "linear"))
    params = net_init(spec, seed=1)
    state = AdamState.fresh(params)
    xs = np.linspace(-1.0, 1.0, 64)[:, None]
    ys = np.sin(3.0 * xs)
    print("\nfitting sin(3x), 64 points, Adam lr=0.01")
    for epoch in range(801):
        pred = forward_batch(params, spec, xs)
        resid = pred - ys
        loss = float(np.mean(resid**2))
        if epoch % 200 == 0:
            print(f"  epoch {epoch:4d}  mse {loss:.6f}")
        grads, _ = backward_batch(params, spec, xs, 2.0 * resid / len(xs))
        params, state = adam_step(params, grads, state, lr=0.01)


if __name__ == "__main__":
    main()
