"""Network layer ops: 1D convolution with reflected padding, leaky ReLU,
pooling, nearest-neighbor upsampling, and dropout.

All ops accept [channels x time] or [batch x channels x time] arrays and
preserve the input rank.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ..errors import DataError
from .tensor import Tensor, as_tensor, make_op


@dataclass(frozen=True)
class ConvSpec:
    """Shape contract of one convolution layer.

    Reflected padding always totals kernel-1, split left=floor((k-1)/2),
    right=ceil((k-1)/2), so stride 1 preserves time and stride 2 yields
    ceil(T/2).
    """

    in_channels: int
    out_channels: int
    kernel: int
    stride: int = 1

    def __post_init__(self):
        if self.in_channels <= 0 or self.out_channels <= 0 or self.kernel <= 0:
            raise DataError("conv channels and kernel must be positive")
        if self.stride not in (1, 2):
            raise DataError(f"stride must be 1 or 2, got {self.stride}")

    @property
    def pad_left(self) -> int:
        return (self.kernel - 1) // 2

    @property
    def pad_right(self) -> int:
        return self.kernel - 1 - self.pad_left

    def out_time(self, in_time: int) -> int:
        return in_time if self.stride == 1 else math.ceil(in_time / 2)


def _with_batch(x: np.ndarray) -> tuple[np.ndarray, bool]:
    if x.ndim == 2:
        return x[None], False
    if x.ndim == 3:
        return x, True
    raise DataError(f"expected rank 2 or 3 sequence tensor, got rank {x.ndim}")


def _restore(x: np.ndarray, batched: bool) -> np.ndarray:
    return x if batched else x[0]


def reflect_indices(time: int, left: int, right: int) -> np.ndarray:
    """Source index for every padded position (reflection excludes the edge)."""
    if left > time - 1 or right > time - 1:
        raise DataError(f"reflected padding ({left},{right}) needs time > pad, got {time}")
    lead = np.arange(left, 0, -1)
    mid = np.arange(time)
    tail = np.arange(time - 2, time - 2 - right, -1)
    return np.concatenate([lead, mid, tail])


def conv1d(x: Tensor, weights: Tensor, bias: Tensor, spec: ConvSpec) -> Tensor:
    x = as_tensor(x)
    weights = as_tensor(weights)
    bias = as_tensor(bias)
    xd, batched = _with_batch(x.data)
    b, c_in, t = xd.shape
    if weights.data.shape != (spec.out_channels, spec.in_channels, spec.kernel):
        raise DataError(
            f"weight shape {weights.data.shape} does not match spec "
            f"({spec.out_channels},{spec.in_channels},{spec.kernel})"
        )
    if c_in != spec.in_channels:
        raise DataError(f"input has {c_in} channels, spec expects {spec.in_channels}")
    if t < spec.kernel:
        raise DataError(f"time length {t} shorter than kernel {spec.kernel}")

    k, stride = spec.kernel, spec.stride
    ridx = reflect_indices(t, spec.pad_left, spec.pad_right)
    xp = xd[:, :, ridx]
    win = sliding_window_view(xp, k, axis=2)[:, :, ::stride, :]  # (B,C,T',k)
    t_out = win.shape[2]

    wmat = weights.data.reshape(spec.out_channels, c_in * k)
    win2 = np.ascontiguousarray(win.transpose(0, 2, 1, 3)).reshape(b * t_out, c_in * k)
    out = (win2 @ wmat.T).reshape(b, t_out, spec.out_channels).transpose(0, 2, 1)
    out = out + bias.data[:, None]

    def backward(g: np.ndarray) -> None:
        g3, _ = _with_batch(g)
        gmat = np.ascontiguousarray(g3.transpose(0, 2, 1)).reshape(b * t_out, spec.out_channels)
        if bias.requires_grad:
            bias.accumulate_grad(g3.sum(axis=(0, 2)))
        if weights.requires_grad:
            weights.accumulate_grad((gmat.T @ win2).reshape(weights.data.shape))
        if x.requires_grad:
            gwin = (gmat @ wmat).reshape(b, t_out, c_in, k).transpose(0, 2, 1, 3)
            gp = np.zeros_like(xp)
            for i in range(k):
                gp[:, :, i : i + stride * t_out : stride] += gwin[:, :, :, i]
            gx = gp[:, :, spec.pad_left : spec.pad_left + t].copy()
            for j in range(spec.pad_left):  # fold reflected positions back inside
                gx[:, :, spec.pad_left - j] += gp[:, :, j]
            for j in range(spec.pad_right):
                gx[:, :, t - 2 - j] += gp[:, :, spec.pad_left + t + j]
            x.accumulate_grad(_restore(gx, batched))

    return make_op(_restore(np.ascontiguousarray(out), batched), (x, weights, bias), backward)


def leaky_relu(x: Tensor, slope: float = 0.2) -> Tensor:
    x = as_tensor(x)
    positive = x.data >= 0.0
    data = np.where(positive, x.data, slope * x.data)

    def backward(g: np.ndarray) -> None:
        x.accumulate_grad(g * np.where(positive, 1.0, slope))

    return make_op(data, (x,), backward)


def relu(x: Tensor) -> Tensor:
    return leaky_relu(x, slope=0.0)


def _pool_windows(t: int, kernel: int, stride: int) -> list[tuple[int, int]]:
    # non-overlapping tail rule: a trailing shorter window is pooled as-is
    return [(s, min(s + kernel, t)) for s in range(0, t, stride)]


def pool1d(x: Tensor, kind: str, kernel: int = 2, stride: int = 2) -> Tensor:
    if kind not in ("max", "avg"):
        raise DataError(f"unknown pooling kind {kind!r}")
    x = as_tensor(x)
    xd, batched = _with_batch(x.data)
    b, c, t = xd.shape
    windows = _pool_windows(t, kernel, stride)
    out = np.empty((b, c, len(windows)), dtype=xd.dtype)
    argmaxes = []
    for i, (s0, s1) in enumerate(windows):
        seg = xd[:, :, s0:s1]
        if kind == "max":
            idx = seg.argmax(axis=2)
            argmaxes.append(idx)
            out[:, :, i] = np.take_along_axis(seg, idx[:, :, None], axis=2)[:, :, 0]
        else:
            out[:, :, i] = seg.mean(axis=2)

    def backward(g: np.ndarray) -> None:
        g3, _ = _with_batch(g)
        grad = np.zeros_like(xd)
        for i, (s0, s1) in enumerate(windows):
            if kind == "max":
                scatter = np.zeros_like(xd[:, :, s0:s1])
                np.put_along_axis(scatter, argmaxes[i][:, :, None], g3[:, :, i : i + 1], axis=2)
                grad[:, :, s0:s1] += scatter
            else:
                grad[:, :, s0:s1] += g3[:, :, i : i + 1] / (s1 - s0)
        x.accumulate_grad(_restore(grad, batched))

    return make_op(_restore(out, batched), (x,), backward)


def global_pool1d(x: Tensor, kind: str) -> Tensor:
    """Collapse the temporal axis to length 1, independent of input length."""
    x = as_tensor(x)
    t = x.data.shape[-1]
    return pool1d(x, kind, kernel=t, stride=t)


def upsample_nearest(x: Tensor, factor: int = 2) -> Tensor:
    x = as_tensor(x)
    data = np.repeat(x.data, factor, axis=-1)

    def backward(g: np.ndarray) -> None:
        shape = x.data.shape
        x.accumulate_grad(g.reshape(shape[:-1] + (shape[-1], factor)).sum(axis=-1))

    return make_op(data, (x,), backward)


def dropout(x: Tensor, p: float, training: bool, rng: np.random.Generator) -> Tensor:
    if not 0.0 <= p < 1.0:
        raise DataError(f"dropout probability must be in [0,1), got {p}")
    x = as_tensor(x)
    if not training or p == 0.0:
        return x
    keep = (rng.random(x.data.shape) >= p).astype(x.data.dtype)
    scale = 1.0 / (1.0 - p)
    data = x.data * keep * scale

    def backward(g: np.ndarray) -> None:
        x.accumulate_grad(g * keep * scale)

    return make_op(data, (x,), backward)


def tile_time(x: Tensor, reps: int) -> Tensor:
    """Replicate a length-1 temporal axis; backward sums over the copies."""
    x = as_tensor(x)
    if x.data.shape[-1] != 1:
        raise DataError("tile_time expects a collapsed (length-1) temporal axis")
    data = np.repeat(x.data, reps, axis=-1)

    def backward(g: np.ndarray) -> None:
        x.accumulate_grad(g.sum(axis=-1, keepdims=True))

    return make_op(data, (x,), backward)
