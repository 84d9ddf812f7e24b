"""Sequence sample types, windowing, and 2D augmentation primitives."""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from ..errors import DataError
from .skeleton import Skeleton

WINDOW_LENGTHS = (40, 48, 56, 64)


@dataclass
class MotionClip3D:
    frames: np.ndarray  # (T, J, 3) world-unit joint positions
    motion_id: Optional[int] = None
    skeleton_id: Optional[int] = None
    fps: float = 30.0

    def __post_init__(self):
        self.frames = np.asarray(self.frames, dtype=np.float64)
        if self.frames.ndim != 3 or self.frames.shape[-1] != 3:
            raise DataError(f"3D clip frames must be (T,J,3), got {self.frames.shape}")

    @property
    def length(self) -> int:
        return self.frames.shape[0]


@dataclass
class Sample2D:
    frames: np.ndarray  # (T, J, 2) image-plane joint positions
    motion_id: Optional[int] = None
    skeleton_id: Optional[int] = None
    view_id: Optional[int] = None
    fps: float = 30.0

    def __post_init__(self):
        self.frames = np.asarray(self.frames, dtype=np.float64)
        if self.frames.ndim != 3 or self.frames.shape[-1] != 2:
            raise DataError(f"2D sample frames must be (T,J,2), got {self.frames.shape}")

    @property
    def length(self) -> int:
        return self.frames.shape[0]

    @property
    def joints(self) -> int:
        return self.frames.shape[1]

    def labels(self) -> tuple:
        return (self.motion_id, self.skeleton_id, self.view_id)


def window(sample: Sample2D, length: int = 64, stride: Optional[int] = None) -> list[Sample2D]:
    """Cut fixed-length windows; shorter tails are dropped."""
    if stride is None:
        stride = length
    t = sample.length
    if t < length:
        raise DataError(f"sequence length {t} shorter than window {length}")
    out = []
    for start in range(0, t - length + 1, stride):
        out.append(replace(sample, frames=sample.frames[start : start + length].copy()))
    return out


def crop(sample: Sample2D, start: int, length: int) -> Sample2D:
    if start < 0 or start + length > sample.length:
        raise DataError(f"crop [{start},{start + length}) outside sequence of length {sample.length}")
    return replace(sample, frames=sample.frames[start : start + length].copy())


def scale(sample: Sample2D, factor: float) -> Sample2D:
    """Uniform image scale, equivalent to changing the camera distance."""
    if factor <= 0:
        raise DataError("scale factor must be positive")
    return replace(sample, frames=sample.frames * factor)


def flip(sample: Sample2D, skeleton: Optional[Skeleton] = None, pairs=None) -> Sample2D:
    """Left-right mirror: negate x everywhere and swap paired joint roles."""
    if pairs is None:
        if skeleton is None:
            raise DataError("flip needs a skeleton or an explicit left/right pairing table")
        pairs = skeleton.mirror_pairs()
    frames = sample.frames.copy()
    frames[:, :, 0] = -frames[:, :, 0]
    for left, right in pairs:
        frames[:, [left, right]] = frames[:, [right, left]]
    return replace(sample, frames=frames)
