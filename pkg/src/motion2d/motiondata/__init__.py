"""Synthetic motion data pipeline: skeletons, procedural motions, forward
kinematics, weak-perspective projection, normalization, and pose files."""

from .camera import CameraView, character_frame, make_views, project
from .dataset import Dataset, GenConfig, generate_dataset, load_dataset
from .kinematics import (
    axis_angle,
    bone_length_error,
    forward_kinematics,
    identity_rotations,
    rot_x,
    rot_y,
    rot_z,
)
from .motions import (
    FAMILIES,
    clip_for_skeleton,
    default_params,
    generate_motion,
    retarget_ground_truth,
    sample_params,
)
from .normalize import (
    NormStats,
    NormalizedSample,
    denormalize,
    denormalize_channels,
    normalize,
    normalize_frames,
    pose_channels,
    total_channels,
)
from .posefile import ingest_pose_file, parse_pose_payload, write_pose_file
from .samples import MotionClip3D, Sample2D, crop, flip, scale, window
from .skeleton import (
    END_EFFECTORS,
    JOINT_NAMES,
    PARENTS,
    Skeleton,
    base_skeleton,
    child_skeleton,
    make_skeletons,
    variant_skeleton,
)

__all__ = [
    "CameraView",
    "Dataset",
    "END_EFFECTORS",
    "FAMILIES",
    "GenConfig",
    "JOINT_NAMES",
    "MotionClip3D",
    "NormStats",
    "NormalizedSample",
    "PARENTS",
    "Sample2D",
    "Skeleton",
    "axis_angle",
    "base_skeleton",
    "bone_length_error",
    "character_frame",
    "child_skeleton",
    "clip_for_skeleton",
    "crop",
    "default_params",
    "denormalize",
    "denormalize_channels",
    "flip",
    "forward_kinematics",
    "generate_dataset",
    "generate_motion",
    "identity_rotations",
    "ingest_pose_file",
    "load_dataset",
    "make_skeletons",
    "make_views",
    "normalize",
    "normalize_frames",
    "parse_pose_payload",
    "pose_channels",
    "project",
    "retarget_ground_truth",
    "rot_x",
    "rot_y",
    "rot_z",
    "sample_params",
    "scale",
    "total_channels",
    "variant_skeleton",
    "window",
    "write_pose_file",
]
