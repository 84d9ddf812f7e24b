"""Procedural motion families and ground-truth cross-character retargeting.

Each family produces per-joint local rotation curves plus a root
trajectory at unit character height.  The curves depend only on
(family, params, T, fps), never on the skeleton, which is what makes two
characters performing the same generated motion "the same motion".
"""

from __future__ import annotations

import numpy as np

from ..errors import DataError
from .kinematics import forward_kinematics, identity_rotations, rot_x, rot_y, rot_z
from .samples import MotionClip3D
from .skeleton import (
    HEAD,
    L_ANKLE,
    L_ELBOW,
    L_HIP,
    L_KNEE,
    L_SHOULDER,
    NECK,
    PELVIS,
    R_ANKLE,
    R_ELBOW,
    R_HIP,
    R_KNEE,
    R_SHOULDER,
    Skeleton,
)

FAMILIES = ("walk", "run", "jump", "wave", "kick", "squat")


def default_params(family: str) -> dict:
    if family not in FAMILIES:
        raise DataError(f"unknown motion family {family!r}")
    # imbalance scales the left side's swing amplitudes and lean tilts the
    # whole body forward; real performers are never perfectly symmetric or
    # bolt upright, and those are the cues that distinguish mirrored views
    base = {
        "frequency": 1.2,
        "amplitude": 1.0,
        "phase": 0.0,
        "speed": 0.5,
        "imbalance": 1.0,
        "lean": 0.0,
        "side_lean": 0.0,
    }
    per_family = {
        "walk": {"frequency": 1.2, "speed": 0.55},
        "run": {"frequency": 2.4, "speed": 1.3},
        "jump": {"frequency": 0.8, "speed": 0.25},
        "wave": {"frequency": 1.6, "speed": 0.0},
        "kick": {"frequency": 1.0, "speed": 0.0},
        "squat": {"frequency": 0.7, "speed": 0.0},
    }
    base.update(per_family[family])
    return base


def sample_params(family: str, rng: np.random.Generator) -> dict:
    """Continuous parameter draw around the family defaults."""
    p = default_params(family)
    p["frequency"] *= rng.uniform(0.8, 1.25)
    p["amplitude"] = rng.uniform(0.75, 1.25)
    p["phase"] = rng.uniform(0.0, 2.0 * np.pi)
    p["speed"] *= rng.uniform(0.8, 1.25)
    p["imbalance"] = rng.uniform(0.8, 1.2)
    p["lean"] = rng.uniform(0.06, 0.22)
    p["side_lean"] = rng.uniform(-0.1, 0.1)
    return p


def generate_motion(family: str, params: dict, frames: int, fps: float) -> tuple[np.ndarray, np.ndarray]:
    """Rotation curves (T,J,3,3) and unit-height root trajectory (T,3)."""
    if frames < 40:
        raise DataError(f"motion length must be at least 40 frames, got {frames}")
    if family not in FAMILIES:
        raise DataError(f"unknown motion family {family!r}")
    p = dict(default_params(family))
    p.update(params or {})
    amp = p["amplitude"]
    lamp = amp * p.get("imbalance", 1.0)  # left-side swing amplitude
    t = np.arange(frames, dtype=np.float64) / fps
    ph = 2.0 * np.pi * p["frequency"] * t + p["phase"]

    rot = identity_rotations(frames, 15)
    root = np.zeros((frames, 3))
    root[:, 2] = p["speed"] * t

    lean = amp * p.get("lean", 0.0)
    side = amp * p.get("side_lean", 0.0)
    if lean != 0.0 or side != 0.0:
        tilt = rot_x(np.full(frames, lean)) @ rot_z(np.full(frames, side))
        rot[:, PELVIS] = tilt

    if family in ("walk", "run"):
        leg = 0.5 if family == "walk" else 0.7
        rot[:, L_HIP] = rot_x(leg * lamp * np.sin(ph))
        rot[:, R_HIP] = rot_x(-leg * amp * np.sin(ph))
        knee = 0.35 if family == "walk" else 0.6
        rot[:, L_KNEE] = rot_x(knee * lamp * (1.0 - np.cos(ph)) / 2.0)
        rot[:, R_KNEE] = rot_x(knee * amp * (1.0 - np.cos(ph + np.pi)) / 2.0)
        arm = 0.4 if family == "walk" else 0.55
        rot[:, L_SHOULDER] = rot_y(arm * lamp * np.sin(ph + np.pi))
        rot[:, R_SHOULDER] = rot_y(-arm * amp * np.sin(ph))
        rot[:, L_ELBOW] = rot_y(0.2 * lamp * (1.0 - np.cos(ph + np.pi)) / 2.0)
        rot[:, R_ELBOW] = rot_y(-0.2 * amp * (1.0 - np.cos(ph)) / 2.0)
        rot[:, NECK] = rot_x(0.05 * amp * np.sin(2.0 * ph))
        root[:, 1] = (0.015 if family == "walk" else 0.04) * amp * np.sin(2.0 * ph)
    elif family == "jump":
        lift = np.maximum(0.0, np.sin(ph)) ** 2
        crouch = (1.0 - np.cos(ph)) / 2.0
        rot[:, L_HIP] = rot_x(0.45 * amp * crouch)
        rot[:, R_HIP] = rot_x(0.45 * amp * crouch)
        rot[:, L_KNEE] = rot_x(-0.8 * amp * crouch)
        rot[:, R_KNEE] = rot_x(-0.8 * amp * crouch)
        rot[:, L_SHOULDER] = rot_z(-0.7 * lamp * lift)
        rot[:, R_SHOULDER] = rot_z(0.7 * amp * lift)
        root[:, 1] = 0.25 * amp * lift - 0.08 * amp * crouch
    elif family == "wave":
        rot[:, R_SHOULDER] = rot_z(amp * (1.1 + 0.15 * np.sin(ph)))
        rot[:, R_ELBOW] = rot_z(amp * (0.35 + 0.45 * np.sin(ph)))
        rot[:, HEAD] = rot_z(0.08 * amp * np.sin(ph))
        rot[:, NECK] = rot_z(0.05 * amp * np.sin(ph + 0.5))
    elif family == "kick":
        bump = np.maximum(0.0, np.sin(ph)) ** 3
        rot[:, R_HIP] = rot_x(-1.1 * amp * bump)
        rot[:, R_KNEE] = rot_x(0.9 * amp * bump * (1.0 - bump))
        rot[:, L_HIP] = rot_x(0.15 * amp * bump)
        rot[:, L_SHOULDER] = rot_y(-0.35 * amp * bump)
        rot[:, R_SHOULDER] = rot_y(0.35 * amp * bump)
        root[:, 1] = -0.03 * amp * bump
    elif family == "squat":
        depth = (1.0 - np.cos(ph)) / 2.0
        rot[:, L_HIP] = rot_x(0.9 * amp * depth)
        rot[:, R_HIP] = rot_x(0.9 * amp * depth)
        rot[:, L_KNEE] = rot_x(-1.4 * amp * depth)
        rot[:, R_KNEE] = rot_x(-1.4 * amp * depth)
        rot[:, L_ANKLE] = rot_x(0.5 * amp * depth)
        rot[:, R_ANKLE] = rot_x(0.5 * amp * depth)
        rot[:, L_SHOULDER] = rot_y(0.5 * amp * depth)
        rot[:, R_SHOULDER] = rot_y(-0.5 * amp * depth)
        root[:, 1] = -0.28 * amp * depth

    return rot, root


def retarget_ground_truth(
    joint_rotations: np.ndarray,
    root_trajectory: np.ndarray,
    source_skeleton: Skeleton,
    target_skeleton: Skeleton,
    fps: float = 30.0,
) -> MotionClip3D:
    """Copy per-joint rotations onto the target bones; rescale root
    velocities by the height ratio and re-integrate."""
    if tuple(source_skeleton.parents) != tuple(target_skeleton.parents):
        raise DataError("source and target skeletons must share topology")
    ratio = target_skeleton.height / source_skeleton.height
    root = np.asarray(root_trajectory, dtype=np.float64)
    velocities = np.diff(root, axis=0) * ratio
    new_root = np.empty_like(root)
    new_root[0] = root[0] * ratio
    new_root[1:] = new_root[0] + np.cumsum(velocities, axis=0)
    frames = forward_kinematics(target_skeleton, joint_rotations, new_root)
    return MotionClip3D(frames=frames, fps=fps)


def clip_for_skeleton(
    joint_rotations: np.ndarray,
    unit_root: np.ndarray,
    skeleton: Skeleton,
    motion_id: int,
    skeleton_id: int,
    fps: float,
) -> MotionClip3D:
    """Instantiate a unit-height motion on a skeleton (the dataset ground
    truth: identical rotations, root velocity scaled by the height)."""
    root = np.asarray(unit_root, dtype=np.float64) * skeleton.height
    frames = forward_kinematics(skeleton, joint_rotations, root)
    return MotionClip3D(frames=frames, motion_id=motion_id, skeleton_id=skeleton_id, fps=fps)
