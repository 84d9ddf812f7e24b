"""Weak-perspective cameras and the character coordinate frame."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..errors import DataError
from .kinematics import axis_angle
from .samples import MotionClip3D, Sample2D
from .skeleton import L_HIP, L_SHOULDER, R_HIP, R_SHOULDER

_UP = np.array([0.0, 1.0, 0.0])


@dataclass
class CameraView:
    rotation: np.ndarray  # (3,3) orthonormal, det +1
    scale: float = 1.0
    translation: np.ndarray = field(default_factory=lambda: np.zeros(2))
    view_id: Optional[int] = None

    def __post_init__(self):
        self.rotation = np.asarray(self.rotation, dtype=np.float64)
        self.translation = np.asarray(self.translation, dtype=np.float64)
        if self.rotation.shape != (3, 3):
            raise DataError("camera rotation must be 3x3")
        if np.max(np.abs(self.rotation.T @ self.rotation - np.eye(3))) > 1e-9:
            raise DataError("camera rotation is not orthonormal")
        if not np.isclose(np.linalg.det(self.rotation), 1.0, atol=1e-9):
            raise DataError("camera rotation must have determinant +1")
        if self.scale <= 0:
            raise DataError("camera scale must be positive")

    @staticmethod
    def from_yaw(yaw_deg: float, scale: float = 1.0, translation=(0.0, 0.0), view_id=None) -> "CameraView":
        rot = axis_angle(_UP, np.deg2rad(yaw_deg))
        return CameraView(rotation=rot, scale=scale, translation=np.asarray(translation), view_id=view_id)


def make_views(count: int, span_deg: tuple[float, float] = (-90.0, 90.0)) -> list[CameraView]:
    if count < 1:
        raise DataError("need at least one view")
    yaws = np.linspace(span_deg[0], span_deg[1], count) if count > 1 else [0.0]
    return [CameraView.from_yaw(float(y), view_id=i) for i, y in enumerate(yaws)]


def character_frame(clip: MotionClip3D) -> np.ndarray:
    """Temporal-average character coordinate system.

    Per frame the forward axis is up x across, where "across" averages the
    left-to-right shoulder and hip vectors; the per-frame axes are averaged
    over the clip and re-orthonormalized.  Columns are [side, up, forward].
    """
    pos = clip.frames
    if pos.shape[0] == 0:
        raise DataError("cannot compute a character frame for an empty clip")
    across = 0.5 * (
        (pos[:, L_SHOULDER] - pos[:, R_SHOULDER]) + (pos[:, L_HIP] - pos[:, R_HIP])
    )
    norms = np.linalg.norm(across, axis=1)
    if np.any(norms < 1e-12):
        raise DataError("degenerate shoulder/hip vectors; cannot orient character")
    forward = np.cross(np.broadcast_to(_UP, across.shape), across)
    fnorm = np.linalg.norm(forward, axis=1, keepdims=True)
    if np.any(fnorm < 1e-12):
        raise DataError("degenerate forward direction; character axis parallel to up")
    forward = forward / fnorm
    mean_fwd = forward.mean(axis=0)
    mean_norm = np.linalg.norm(mean_fwd)
    if mean_norm < 1e-12:
        raise DataError("forward directions cancel out over the clip")
    z_axis = mean_fwd / mean_norm
    x_axis = np.cross(_UP, z_axis)
    x_axis /= np.linalg.norm(x_axis)
    return np.stack([x_axis, _UP, z_axis], axis=1)


def project(clip: MotionClip3D, view: CameraView, frame: Optional[np.ndarray] = None) -> Sample2D:
    """Weak-perspective projection: rotate (relative to the character
    frame), drop depth, scale, translate."""
    if frame is None:
        frame = character_frame(clip)
    effective = view.rotation @ frame.T
    rotated = np.einsum("ab,tjb->tja", effective, clip.frames)
    frames2d = view.scale * rotated[:, :, :2] + view.translation
    return Sample2D(
        frames=frames2d,
        motion_id=clip.motion_id,
        skeleton_id=clip.skeleton_id,
        view_id=view.view_id,
        fps=clip.fps,
    )
