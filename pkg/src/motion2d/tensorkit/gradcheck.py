"""Finite-difference gradient checking utilities.

The numerical side only ever calls the forward function, so it stays an
independent oracle for the analytic backward pass.
"""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from .tensor import Tensor


def numerical_gradient(f: Callable[[np.ndarray], float], x: np.ndarray, h: float = 1e-5) -> np.ndarray:
    """Central-difference gradient of a scalar function at x."""
    x = np.asarray(x, dtype=np.float64)
    grad = np.zeros_like(x)
    flat = x.reshape(-1)
    gflat = grad.reshape(-1)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + h
        fp = f(x)
        flat[i] = orig - h
        fm = f(x)
        flat[i] = orig
        gflat[i] = (fp - fm) / (2.0 * h)
    return grad


def relative_error(analytic: np.ndarray, numeric: np.ndarray, floor: float = 1e-4) -> float:
    """Max elementwise |a-n| / max(floor, |a|, |n|)."""
    a = np.asarray(analytic, dtype=np.float64)
    n = np.asarray(numeric, dtype=np.float64)
    denom = np.maximum(floor, np.maximum(np.abs(a), np.abs(n)))
    return float(np.max(np.abs(a - n) / denom)) if a.size else 0.0


def check_gradients(
    build: Callable[..., Tensor],
    inputs: Sequence[np.ndarray],
    h: float = 1e-5,
) -> float:
    """Compare backward() gradients of build(*inputs) against central
    finite differences; returns the max relative error over all inputs.

    `build` must be deterministic (recreate any rng inside it).
    """
    tensors = [Tensor(np.asarray(x, dtype=np.float64), requires_grad=True) for x in inputs]
    loss = build(*tensors)
    loss.backward()

    worst = 0.0
    for idx, tensor in enumerate(tensors):
        def f(x: np.ndarray, _idx: int = idx) -> float:
            args = [Tensor(t.data) for t in tensors]
            args[_idx] = Tensor(x)
            return float(build(*args).data)

        numeric = numerical_gradient(f, tensor.data.copy(), h=h)
        analytic = tensor.grad if tensor.grad is not None else np.zeros_like(tensor.data)
        worst = max(worst, relative_error(analytic, numeric))
    return worst


def sampled_parameter_errors(
    forward: Callable[[], Tensor],
    params: dict[str, Tensor],
    n_per_param: int,
    rng: np.random.Generator,
    h: float = 1e-5,
) -> float:
    """Spot-check dL/dtheta for a random subset of entries of each parameter."""
    loss = forward()
    loss.backward()
    worst = 0.0
    for name, p in params.items():
        flat = p.data.reshape(-1)
        gflat = (p.grad if p.grad is not None else np.zeros_like(p.data)).reshape(-1)
        count = min(n_per_param, flat.size)
        for i in rng.choice(flat.size, size=count, replace=False):
            orig = flat[i]
            flat[i] = orig + h
            fp = float(forward().data)
            flat[i] = orig - h
            fm = float(forward().data)
            flat[i] = orig
            numeric = (fp - fm) / (2.0 * h)
            worst = max(worst, relative_error(np.array(gflat[i]), np.array(numeric)))
    return worst
