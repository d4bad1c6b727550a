"""Finite-difference verification of analytic gradients."""

from __future__ import annotations

import numpy as np

from .net import NetSpec, ParamSet, backward, forward


def _probe(shape: tuple[int, ...]) -> np.ndarray:
    # deterministic, sign-varying weights so the scalar loss exercises every output
    n = int(np.prod(shape))
    return np.cos(np.arange(n, dtype=np.float64) * 0.7 + 0.3).reshape(shape)


def grad_check(net: NetSpec, params: ParamSet, x: np.ndarray, eps: float = 1e-5) -> float:
    """Max relative error between analytic and central-difference gradients.

    Loss is sum(output * fixed_probe). Requires float64 tensors; the error is
    max over all parameter entries of |analytic - numeric| / max(1, |analytic|).
    """
    if not (1e-7 <= eps <= 1e-3):
        raise ValueError(f"eps {eps} outside [1e-7, 1e-3]")
    if x.dtype != np.float64 or any(p.dtype != np.float64 for p in params.params.values()):
        raise ValueError("grad_check requires float64 parameters and input")

    r = _probe(net.out_shape(x.shape))

    def loss() -> float:
        return float((forward(net, params, x) * r).sum())

    params.zero_grads()
    backward(net, params, x, r)

    worst = 0.0
    for name, p in params.params.items():
        analytic = params.grads[name]
        it = np.nditer(p, flags=["multi_index"])
        while not it.finished:
            idx = it.multi_index
            orig = p[idx]
            p[idx] = orig + eps
            hi = loss()
            p[idx] = orig - eps
            lo = loss()
            p[idx] = orig
            numeric = (hi - lo) / (2.0 * eps)
            a = analytic[idx]
            err = abs(a - numeric) / max(1.0, abs(a))
            if err > worst:
                worst = err
            it.iternext()
    return worst


def numeric_grad(fn, x: np.ndarray, eps: float = 1e-5) -> np.ndarray:
    """Central-difference gradient of a scalar function of an array."""
    g = np.zeros_like(x, dtype=np.float64)
    it = np.nditer(x, flags=["multi_index"])
    while not it.finished:
        idx = it.multi_index
        orig = x[idx]
        x[idx] = orig + eps
        hi = fn(x)
        x[idx] = orig - eps
        lo = fn(x)
        x[idx] = orig
        g[idx] = (hi - lo) / (2.0 * eps)
        it.iternext()
    return g
