"""Channel-matrix normalization: root removal, per-joint statistics,
velocity appending, and the exact inverse."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..errors import DataError
from .samples import Sample2D

STD_FLOOR = 1e-6
ROOT = 0  # pelvis is always joint 0


def pose_channels(joints: int) -> int:
    return 2 * (joints - 1)


def total_channels(joints: int) -> int:
    """Root-relative pose channels plus the 2 global root-velocity channels."""
    return 2 * (joints - 1) + 2


@dataclass
class NormStats:
    mean: np.ndarray  # (J, 2) per-joint mean of root-relative coordinates
    std: np.ndarray  # (J, 2), floored at STD_FLOOR
    vel_std: np.ndarray  # (2,) root-velocity std, floored

    def __post_init__(self):
        self.mean = np.asarray(self.mean, dtype=np.float64)
        self.std = np.maximum(np.asarray(self.std, dtype=np.float64), STD_FLOOR)
        self.vel_std = np.maximum(np.asarray(self.vel_std, dtype=np.float64), STD_FLOOR)
        if np.any(self.std <= 0) or np.any(self.vel_std <= 0):
            raise DataError("normalization stds must be positive")

    @staticmethod
    def compute(samples: list[Sample2D]) -> "NormStats":
        if not samples:
            raise DataError("cannot compute statistics from an empty corpus")
        locals_ = np.concatenate(
            [s.frames - s.frames[:, ROOT : ROOT + 1, :] for s in samples], axis=0
        )
        velocities = np.concatenate(
            [np.diff(s.frames[:, ROOT, :], axis=0) for s in samples], axis=0
        )
        return NormStats(
            mean=locals_.mean(axis=0),
            std=locals_.std(axis=0),
            vel_std=velocities.std(axis=0),
        )

    def to_dict(self) -> dict:
        return {
            "mean": self.mean.tolist(),
            "std": self.std.tolist(),
            "vel_std": self.vel_std.tolist(),
        }

    @staticmethod
    def from_dict(d: dict) -> "NormStats":
        return NormStats(
            mean=np.asarray(d["mean"]),
            std=np.asarray(d["std"]),
            vel_std=np.asarray(d["vel_std"]),
        )


@dataclass
class NormalizedSample:
    channels: np.ndarray  # (2(J-1)+2, T)
    joints: int
    stats: NormStats
    fps: float = 30.0
    start_root: Optional[np.ndarray] = None  # first-frame root, for inversion

    @property
    def length(self) -> int:
        return self.channels.shape[1]


def normalize_frames(frames: np.ndarray, stats: NormStats) -> np.ndarray:
    """(T,J,2) absolute coordinates -> (2(J-1)+2, T) channel matrix."""
    t, j, _ = frames.shape
    root = frames[:, ROOT, :]
    local = frames - root[:, None, :]
    normed = (local[:, 1:, :] - stats.mean[1:]) / stats.std[1:]
    vel = np.empty((t, 2))
    vel[:-1] = np.diff(root, axis=0)
    vel[-1] = vel[-2] if t > 1 else 0.0  # duplicate the last step to keep T columns
    vel /= stats.vel_std
    pose = normed.reshape(t, 2 * (j - 1)).T
    return np.concatenate([pose, vel.T], axis=0)


def denormalize_channels(
    channels: np.ndarray, stats: NormStats, start_root: np.ndarray, joints: int
) -> np.ndarray:
    """Invert normalize_frames; the root path is re-integrated from the
    velocity channels starting at start_root."""
    c, t = channels.shape
    if c != total_channels(joints):
        raise DataError(f"expected {total_channels(joints)} channels for J={joints}, got {c}")
    pose = channels[:-2].T.reshape(t, joints - 1, 2)
    local = pose * stats.std[1:] + stats.mean[1:]
    vel = channels[-2:].T * stats.vel_std
    root = np.empty((t, 2))
    root[0] = start_root
    if t > 1:
        root[1:] = start_root + np.cumsum(vel[:-1], axis=0)
    frames = np.empty((t, joints, 2))
    frames[:, ROOT] = root
    frames[:, 1:] = local + root[:, None, :]
    return frames


def normalize(sample: Sample2D, stats: NormStats) -> NormalizedSample:
    return NormalizedSample(
        channels=normalize_frames(sample.frames, stats),
        joints=sample.joints,
        stats=stats,
        fps=sample.fps,
        start_root=sample.frames[0, ROOT].copy(),
    )


def denormalize(
    normed: NormalizedSample, stats: NormStats, start_root: np.ndarray
) -> Sample2D:
    frames = denormalize_channels(normed.channels, stats, np.asarray(start_root), normed.joints)
    return Sample2D(frames=frames, fps=normed.fps)
