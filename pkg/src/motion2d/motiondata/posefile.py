"""Pose JSON ingestion and export.

Format: {"fps": real, "joints": [names...], "frames": [[[x,y]|null, ...], ...]}
Missing joints (null) become zero coordinates, the same convention the
trainer uses when dropping joints.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from ..errors import DataError
from .samples import Sample2D
from .skeleton import JOINT_NAMES

MIN_FRAMES = 40


def ingest_pose_file(path, expected_joints: Sequence[str] = JOINT_NAMES) -> Sample2D:
    path = Path(path)
    try:
        payload = json.loads(path.read_text())
    except FileNotFoundError as exc:
        raise DataError(f"pose file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise DataError(f"malformed pose JSON in {path}: {exc}") from exc
    return parse_pose_payload(payload, expected_joints, source=str(path))


def parse_pose_payload(
    payload: dict, expected_joints: Sequence[str] = JOINT_NAMES, source: str = "<payload>"
) -> Sample2D:
    for key in ("fps", "joints", "frames"):
        if key not in payload:
            raise DataError(f"pose data {source} missing key {key!r}")
    names = list(payload["joints"])
    expected = list(expected_joints)
    unknown = [n for n in names if n not in expected]
    if unknown:
        raise DataError(f"pose data {source} has unknown joint names: {unknown}")
    if sorted(names) != sorted(expected):
        missing = [n for n in expected if n not in names]
        raise DataError(f"pose data {source} missing joints: {missing}")
    order = [names.index(n) for n in expected]

    raw = payload["frames"]
    if len(raw) < MIN_FRAMES:
        raise DataError(f"pose data {source} too short: {len(raw)} < {MIN_FRAMES} frames")
    j = len(expected)
    frames = np.zeros((len(raw), j, 2))
    for t, row in enumerate(raw):
        if len(row) != j:
            raise DataError(f"pose data {source} frame {t} has {len(row)} joints, expected {j}")
        for slot, src in enumerate(order):
            value = row[src]
            if value is None:
                continue  # missing joint -> zero coordinates
            if len(value) != 2:
                raise DataError(f"pose data {source} frame {t} joint {slot} is not an [x,y] pair")
            frames[t, slot] = (float(value[0]), float(value[1]))
    return Sample2D(frames=frames, fps=float(payload["fps"]))


def write_pose_file(
    path, sample: Sample2D, joint_names: Sequence[str] = JOINT_NAMES, missing: Optional[np.ndarray] = None
) -> None:
    """Inverse of ingest; `missing` is an optional (T,J) bool mask written
    as nulls."""
    t, j, _ = sample.frames.shape
    if len(joint_names) != j:
        raise DataError(f"{len(joint_names)} joint names for {j} joints")
    frames = []
    for ti in range(t):
        row = []
        for ji in range(j):
            if missing is not None and missing[ti, ji]:
                row.append(None)
            else:
                row.append([float(sample.frames[ti, ji, 0]), float(sample.frames[ti, ji, 1])])
        frames.append(row)
    payload = {"fps": sample.fps, "joints": list(joint_names), "frames": frames}
    Path(path).write_text(json.dumps(payload))
