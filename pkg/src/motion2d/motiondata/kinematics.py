"""Forward kinematics and rotation helpers."""

from __future__ import annotations

import numpy as np

from ..errors import DataError
from .skeleton import Skeleton


def rot_x(angles: np.ndarray) -> np.ndarray:
    a = np.asarray(angles, dtype=np.float64)
    c, s = np.cos(a), np.sin(a)
    out = np.zeros(a.shape + (3, 3))
    out[..., 0, 0] = 1.0
    out[..., 1, 1] = c
    out[..., 1, 2] = -s
    out[..., 2, 1] = s
    out[..., 2, 2] = c
    return out


def rot_y(angles: np.ndarray) -> np.ndarray:
    a = np.asarray(angles, dtype=np.float64)
    c, s = np.cos(a), np.sin(a)
    out = np.zeros(a.shape + (3, 3))
    out[..., 0, 0] = c
    out[..., 0, 2] = s
    out[..., 1, 1] = 1.0
    out[..., 2, 0] = -s
    out[..., 2, 2] = c
    return out


def rot_z(angles: np.ndarray) -> np.ndarray:
    a = np.asarray(angles, dtype=np.float64)
    c, s = np.cos(a), np.sin(a)
    out = np.zeros(a.shape + (3, 3))
    out[..., 0, 0] = c
    out[..., 0, 1] = -s
    out[..., 1, 0] = s
    out[..., 1, 1] = c
    out[..., 2, 2] = 1.0
    return out


def axis_angle(axis, angles: np.ndarray) -> np.ndarray:
    """Rodrigues rotation matrices about a fixed axis, per angle."""
    axis = np.asarray(axis, dtype=np.float64)
    norm = np.linalg.norm(axis)
    if norm == 0:
        raise DataError("rotation axis must be nonzero")
    x, y, z = axis / norm
    k = np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])
    a = np.asarray(angles, dtype=np.float64)
    s = np.sin(a)[..., None, None]
    c = np.cos(a)[..., None, None]
    eye = np.eye(3)
    return eye + s * k + (1.0 - c) * (k @ k)


def identity_rotations(frames: int, joints: int) -> np.ndarray:
    out = np.zeros((frames, joints, 3, 3))
    out[:] = np.eye(3)
    return out


def forward_kinematics(
    skeleton: Skeleton,
    joint_rotations: np.ndarray,
    root_trajectory: np.ndarray,
) -> np.ndarray:
    """Compose local joint rotations down the tree.

    joint_rotations: (T, J, 3, 3); root_trajectory: (T, 3).
    Returns world joint positions (T, J, 3); bone lengths are preserved
    exactly because only rigid rotations are applied.
    """
    rot = np.asarray(joint_rotations, dtype=np.float64)
    root = np.asarray(root_trajectory, dtype=np.float64)
    j = skeleton.joint_count
    if rot.ndim != 4 or rot.shape[1:] != (j, 3, 3):
        raise DataError(f"joint_rotations must be (T,{j},3,3), got {rot.shape}")
    t = rot.shape[0]
    if root.shape != (t, 3):
        raise DataError(f"root_trajectory must be ({t},3), got {root.shape}")

    positions = np.zeros((t, j, 3))
    global_rot = np.zeros((t, j, 3, 3))
    positions[:, 0] = root
    global_rot[:, 0] = rot[:, 0]
    for joint in range(1, j):
        parent = skeleton.parents[joint]
        pr = global_rot[:, parent]
        positions[:, joint] = positions[:, parent] + np.einsum(
            "tab,b->ta", pr, skeleton.offsets[joint]
        )
        global_rot[:, joint] = pr @ rot[:, joint]
    return positions


def bone_length_error(skeleton: Skeleton, positions: np.ndarray) -> float:
    """Max relative deviation of per-frame bone lengths from rest lengths."""
    rest = skeleton.bone_lengths
    worst = 0.0
    for joint in range(1, skeleton.joint_count):
        parent = skeleton.parents[joint]
        d = np.linalg.norm(positions[:, joint] - positions[:, parent], axis=1)
        worst = max(worst, float(np.max(np.abs(d - rest[joint]) / rest[joint])))
    return worst
