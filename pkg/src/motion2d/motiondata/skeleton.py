"""Parametric skeletons: joint hierarchy, rest-pose offsets, bone lengths."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import DataError

JOINT_NAMES = (
    "pelvis",
    "neck",
    "head",
    "left_shoulder",
    "left_elbow",
    "left_wrist",
    "right_shoulder",
    "right_elbow",
    "right_wrist",
    "left_hip",
    "left_knee",
    "left_ankle",
    "right_hip",
    "right_knee",
    "right_ankle",
)

PARENTS = (-1, 0, 1, 1, 3, 4, 1, 6, 7, 0, 9, 10, 0, 12, 13)

PELVIS, NECK, HEAD = 0, 1, 2
L_SHOULDER, L_ELBOW, L_WRIST = 3, 4, 5
R_SHOULDER, R_ELBOW, R_WRIST = 6, 7, 8
L_HIP, L_KNEE, L_ANKLE = 9, 10, 11
R_HIP, R_KNEE, R_ANKLE = 12, 13, 14

END_EFFECTORS = ("left_wrist", "right_wrist", "left_ankle", "right_ankle")


@dataclass
class Skeleton:
    """Joint tree with rest-pose offsets; the character's left side sits at
    negative x and the rest pose faces +z."""

    joint_names: tuple[str, ...]
    parents: tuple[int, ...]
    offsets: np.ndarray  # (J, 3) local offset from parent; zero for the root
    name: str = "base"

    def __post_init__(self):
        self.offsets = np.asarray(self.offsets, dtype=np.float64)
        j = len(self.joint_names)
        if len(self.parents) != j or self.offsets.shape != (j, 3):
            raise DataError("skeleton joints, parents, and offsets disagree")
        if self.parents[0] != -1 or any(p < 0 for p in self.parents[1:]):
            raise DataError("skeleton must have exactly one root at index 0")
        if any(p >= i for i, p in enumerate(self.parents) if i > 0):
            raise DataError("parents must precede children (acyclic tree order)")
        if np.any(self.bone_lengths[1:] <= 0):
            raise DataError("all bone lengths must be positive")

    @property
    def joint_count(self) -> int:
        return len(self.joint_names)

    @property
    def bone_lengths(self) -> np.ndarray:
        return np.linalg.norm(self.offsets, axis=1)

    @property
    def height(self) -> float:
        """Leg + torso + neck bone lengths."""
        idx = {n: i for i, n in enumerate(self.joint_names)}
        lengths = self.bone_lengths
        return float(
            lengths[idx["left_knee"]]
            + lengths[idx["left_ankle"]]
            + lengths[idx["neck"]]
            + lengths[idx["head"]]
        )

    def mirror_pairs(self) -> list[tuple[int, int]]:
        idx = {n: i for i, n in enumerate(self.joint_names)}
        pairs = []
        for name, i in idx.items():
            if name.startswith("left_"):
                other = "right_" + name[len("left_"):]
                if other not in idx:
                    raise DataError(f"no mirror partner for joint {name!r}")
                pairs.append((i, idx[other]))
        return pairs

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "joint_names": list(self.joint_names),
            "parents": list(self.parents),
            "offsets": self.offsets.tolist(),
        }

    @staticmethod
    def from_dict(d: dict) -> "Skeleton":
        return Skeleton(
            joint_names=tuple(d["joint_names"]),
            parents=tuple(d["parents"]),
            offsets=np.asarray(d["offsets"], dtype=np.float64),
            name=d.get("name", "base"),
        )


def base_skeleton(
    thigh: float = 0.42,
    shin: float = 0.40,
    torso: float = 0.50,
    neck: float = 0.22,
    upper_arm: float = 0.28,
    forearm: float = 0.26,
    shoulder_w: float = 0.18,
    hip_w: float = 0.10,
    name: str = "base",
) -> Skeleton:
    offsets = np.zeros((15, 3))
    offsets[NECK] = (0.0, torso, 0.0)
    offsets[HEAD] = (0.0, neck, 0.0)
    offsets[L_SHOULDER] = (-shoulder_w, 0.0, 0.0)
    offsets[L_ELBOW] = (-upper_arm, 0.0, 0.0)
    offsets[L_WRIST] = (-forearm, 0.0, 0.0)
    offsets[R_SHOULDER] = (shoulder_w, 0.0, 0.0)
    offsets[R_ELBOW] = (upper_arm, 0.0, 0.0)
    offsets[R_WRIST] = (forearm, 0.0, 0.0)
    offsets[L_HIP] = (-hip_w, 0.0, 0.0)
    offsets[L_KNEE] = (0.0, -thigh, 0.0)
    offsets[L_ANKLE] = (0.0, -shin, 0.0)
    offsets[R_HIP] = (hip_w, 0.0, 0.0)
    offsets[R_KNEE] = (0.0, -thigh, 0.0)
    offsets[R_ANKLE] = (0.0, -shin, 0.0)
    return Skeleton(JOINT_NAMES, PARENTS, offsets, name=name)


def child_skeleton() -> Skeleton:
    """Short-stature preset: everything shrunk, legs shortest."""
    return base_skeleton(
        thigh=0.42 * 0.5,
        shin=0.40 * 0.5,
        torso=0.50 * 0.62,
        neck=0.22 * 0.7,
        upper_arm=0.28 * 0.55,
        forearm=0.26 * 0.55,
        shoulder_w=0.18 * 0.7,
        hip_w=0.10 * 0.7,
        name="child",
    )


def variant_skeleton(rng: np.random.Generator, name: str) -> Skeleton:
    """Random limb-length multipliers in [0.7, 1.4] per body part group."""
    m = rng.uniform(0.7, 1.4, size=6)
    return base_skeleton(
        thigh=0.42 * m[0],
        shin=0.40 * m[0],
        torso=0.50 * m[1],
        neck=0.22 * m[2],
        upper_arm=0.28 * m[3],
        forearm=0.26 * m[3],
        shoulder_w=0.18 * m[4],
        hip_w=0.10 * m[5],
        name=name,
    )


def make_skeletons(count: int, rng: np.random.Generator) -> list[Skeleton]:
    """Base + child presets followed by random variants."""
    if count < 1:
        raise DataError("need at least one skeleton")
    out = [base_skeleton()]
    if count > 1:
        out.append(child_skeleton())
    while len(out) < count:
        out.append(variant_skeleton(rng, name=f"variant{len(out)}"))
    return out[:count]
