"""AmsGrad optimizer over named parameter tensors."""

from __future__ import annotations

import numpy as np

from ..errors import TrainingDiverged
from .tensor import Tensor


class AmsGrad:
    """Adam variant that tracks the elementwise running max of the second
    moment, so the effective step size never grows between iterations."""

    def __init__(
        self,
        params: dict[str, Tensor],
        lr: float = 1e-3,
        beta1: float = 0.9,
        beta2: float = 0.999,
        eps: float = 1e-8,
    ):
        self.params = params
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.step_count = 0
        self.m = {k: np.zeros_like(p.data) for k, p in params.items()}
        self.v = {k: np.zeros_like(p.data) for k, p in params.items()}
        self.vmax = {k: np.zeros_like(p.data) for k, p in params.items()}

    def zero_grad(self) -> None:
        for p in self.params.values():
            p.zero_grad()

    def step(self) -> None:
        self.step_count += 1
        t = self.step_count
        bc1 = 1.0 - self.beta1**t
        bc2 = 1.0 - self.beta2**t
        for name, p in self.params.items():
            g = p.grad
            if g is None:
                continue
            if not np.all(np.isfinite(g)):
                raise TrainingDiverged(f"non-finite gradient for parameter {name!r}")
            m = self.m[name]
            v = self.v[name]
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            np.maximum(self.vmax[name], v, out=self.vmax[name])
            denom = np.sqrt(self.vmax[name] / bc2) + self.eps
            p.data -= self.lr * (m / bc1) / denom

    def state_dict(self) -> dict:
        return {
            "step_count": self.step_count,
            "m": {k: v.copy() for k, v in self.m.items()},
            "v": {k: v.copy() for k, v in self.v.items()},
            "vmax": {k: v.copy() for k, v in self.vmax.items()},
        }

    def load_state_dict(self, state: dict) -> None:
        self.step_count = int(state["step_count"])
        for field in ("m", "v", "vmax"):
            ours = getattr(self, field)
            for k in ours:
                ours[k] = np.asarray(state[field][k], dtype=ours[k].dtype).reshape(ours[k].shape)
