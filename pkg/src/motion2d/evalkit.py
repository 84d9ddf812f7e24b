"""Metrics and baselines: height-normalized retargeting MSE, mean
silhouette coefficient, the 2D forward-kinematics baseline, 3D rotation-copy
baselines, latent exports, and the comparison table."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from . import losses as lo
from . import network as net
from .errors import DataError
from .motiondata import (
    Dataset,
    MotionClip3D,
    Sample2D,
    denormalize_channels,
    forward_kinematics,
    normalize_frames,
    project,
)
from .motiondata.normalize import NormStats
from .motiondata.skeleton import Skeleton
from .network import ModelParams
from .tensorkit import Tensor


@dataclass
class RetargetTask:
    motion_src: Sample2D
    static_src: Sample2D
    ground_truth: Sample2D
    source_height: float
    target_height: float

    def __post_init__(self):
        gt = self.ground_truth
        if gt.motion_id is not None and self.motion_src.motion_id is not None:
            if gt.motion_id != self.motion_src.motion_id:
                raise DataError("ground truth must carry the motion source's motion")
        if gt.skeleton_id is not None and self.static_src.skeleton_id is not None:
            if (gt.skeleton_id, gt.view_id) != (
                self.static_src.skeleton_id,
                self.static_src.view_id,
            ):
                raise DataError("ground truth must carry the static source's skeleton and view")


def retarget_mse(output, ground_truth, height: float) -> float:
    """Sum of squared coordinate errors over the sequence, normalized by
    2JT and the character height."""
    out = output.frames if isinstance(output, Sample2D) else np.asarray(output)
    gt = ground_truth.frames if isinstance(ground_truth, Sample2D) else np.asarray(ground_truth)
    if out.shape != gt.shape:
        raise DataError(f"shape mismatch {out.shape} vs {gt.shape}")
    if height <= 0:
        raise DataError("height must be positive")
    t, j, _ = out.shape
    return float(np.sum((out - gt) ** 2) / (2.0 * j * t * height))


def silhouette_values(latents: np.ndarray, labels) -> tuple[np.ndarray, np.ndarray]:
    """Per-point silhouette S = (B - A) / max(A, B); singleton-cluster
    points get S = 0 and are flagged in the returned mask."""
    x = np.asarray(latents, dtype=np.float64)
    labels = np.asarray(labels)
    n = x.shape[0]
    if n != labels.shape[0]:
        raise DataError("one label per latent point required")
    unique = np.unique(labels)
    if unique.size < 2:
        raise DataError("silhouette needs at least two labeled clusters")
    sq = np.sum(x * x, axis=1)
    dist = np.sqrt(np.maximum(sq[:, None] + sq[None, :] - 2.0 * (x @ x.T), 0.0))
    values = np.zeros(n)
    singleton = np.zeros(n, dtype=bool)
    for i in range(n):
        own = labels == labels[i]
        own_count = int(own.sum()) - 1
        if own_count == 0:
            singleton[i] = True
            continue
        a = dist[i, own].sum() / own_count
        b = np.inf
        for other in unique:
            if other == labels[i]:
                continue
            mask = labels == other
            b = min(b, dist[i, mask].mean())
        denom = max(a, b)
        values[i] = 0.0 if denom == 0.0 else (b - a) / denom
    return values, singleton


def mean_silhouette(latents: np.ndarray, labels) -> float:
    values, _ = silhouette_values(latents, labels)
    return float(values.mean())


# -- model-based retargeting -------------------------------------------


def encode_sample(params: ModelParams, stats: NormStats, sample: Sample2D) -> net.LatentCodes:
    return net.encode(normalize_frames(sample.frames, stats), params)


def retarget_with_model(
    params: ModelParams,
    stats: NormStats,
    motion_src: Sample2D,
    static_src: Sample2D,
    start_root: Optional[np.ndarray] = None,
) -> Sample2D:
    """Decode the motion source's dynamic code with the static source's
    skeleton/view codes; global translation is re-integrated from the
    output velocity channels."""
    codes_m = encode_sample(params, stats, motion_src)
    codes_s = encode_sample(params, stats, static_src)
    merged = net.LatentCodes(motion=codes_m.motion, skeleton=codes_s.skeleton, view=codes_s.view)
    channels = net.decode(merged, params)
    if start_root is None:
        start_root = static_src.frames[0, 0]
    frames = denormalize_channels(channels, stats, np.asarray(start_root), motion_src.joints)
    return Sample2D(frames=frames, fps=motion_src.fps)


def reconstruction_foot_velocity_error(
    params: ModelParams,
    stats: NormStats,
    samples: list[Sample2D],
    end_effector_joints: tuple[int, ...],
) -> float:
    """Mean end-effector global-velocity error of plain reconstructions."""
    detached = ModelParams(
        config=params.config, tensors={k: Tensor(t.data) for k, t in params.tensors.items()}
    )
    total = 0.0
    for sample in samples:
        channels = normalize_frames(sample.frames, stats)
        x = Tensor(channels[None])
        m, s, v = net.encode_batch(detached, x)
        out = net.decode_batch(detached, m, s, v, training=False)
        total += lo.foot_velocity_loss(out, channels[None], stats, end_effector_joints).item()
    return total / len(samples)


# -- 2D forward-kinematics baseline ------------------------------------


def _mean_limb_lengths(frames: np.ndarray, parents) -> np.ndarray:
    j = frames.shape[1]
    lengths = np.zeros(j)
    for joint in range(1, j):
        lengths[joint] = np.linalg.norm(frames[:, joint] - frames[:, parents[joint]], axis=1).mean()
    return lengths


def skeleton_height_2d(frames: np.ndarray, skeleton: Skeleton) -> float:
    """Average projected leg + torso + neck length (legs averaged L/R)."""
    idx = {n: i for i, n in enumerate(skeleton.joint_names)}
    lengths = _mean_limb_lengths(frames, skeleton.parents)
    leg = 0.5 * (
        lengths[idx["left_knee"]]
        + lengths[idx["left_ankle"]]
        + lengths[idx["right_knee"]]
        + lengths[idx["right_ankle"]]
    )
    return float(leg + lengths[idx["neck"]] + lengths[idx["head"]])


def fk2d_baseline(motion_src: Sample2D, static_src: Sample2D, skeleton: Skeleton) -> Sample2D:
    """Per-limb rescaling toward the target's time-averaged limb lengths,
    preserving the source's 2D limb directions; the root path is rescaled
    by the 2D height ratio."""
    parents = skeleton.parents
    src = motion_src.frames
    src_lengths = _mean_limb_lengths(src, parents)
    tgt_lengths = _mean_limb_lengths(static_src.frames, parents)
    if np.any(src_lengths[1:] <= 0):
        raise DataError("source has a zero-length limb; cannot rescale")
    scales = np.ones(len(parents))
    scales[1:] = tgt_lengths[1:] / src_lengths[1:]

    h_ratio = skeleton_height_2d(static_src.frames, skeleton) / skeleton_height_2d(src, skeleton)
    t = src.shape[0]
    out = np.zeros_like(src)
    root = np.empty((t, 2))
    root[0] = src[0, 0] * h_ratio
    if t > 1:
        root[1:] = root[0] + np.cumsum(np.diff(src[:, 0], axis=0) * h_ratio, axis=0)
    out[:, 0] = root
    for joint in range(1, len(parents)):
        bone = src[:, joint] - src[:, parents[joint]]
        out[:, joint] = out[:, parents[joint]] + scales[joint] * bone
    return Sample2D(frames=out, fps=motion_src.fps)


# -- 3D baselines --------------------------------------------------------


def baseline3d(
    dataset: Dataset,
    motion_id: int,
    source_skeleton_id: int,
    target_skeleton_id: int,
    view_id: int,
    mode: str,
) -> Sample2D:
    """Rotation copy onto the target skeleton.  `naive` keeps the source's
    global velocities; `rescaled` multiplies them by the height ratio."""
    if mode not in ("naive", "rescaled"):
        raise DataError(f"unknown 3D baseline mode {mode!r}")
    rot, unit_root = dataset.motion_curves(motion_id)
    h_src = dataset.height(source_skeleton_id)
    h_tgt = dataset.height(target_skeleton_id)
    velocity_scale = h_tgt if mode == "rescaled" else h_src
    root = np.empty_like(unit_root)
    root[0] = unit_root[0] * h_tgt  # anchor at the target's start
    root[1:] = root[0] + np.cumsum(np.diff(unit_root, axis=0) * velocity_scale, axis=0)
    frames = forward_kinematics(dataset.skeletons[target_skeleton_id], rot, root)
    clip = MotionClip3D(
        frames=frames, motion_id=motion_id, skeleton_id=target_skeleton_id, fps=dataset.fps
    )
    return project(clip, dataset.views[view_id])


# -- evaluation tasks and the comparison table ---------------------------


@dataclass
class EvalTask:
    idx_a: int
    idx_b: int
    idx_gt: int

    def to_retarget_task(self, dataset: Dataset) -> RetargetTask:
        a = dataset.sample(self.idx_a)
        b = dataset.sample(self.idx_b)
        gt = dataset.sample(self.idx_gt)
        return RetargetTask(
            motion_src=a,
            static_src=b,
            ground_truth=gt,
            source_height=dataset.height(a.skeleton_id),
            target_height=dataset.height(b.skeleton_id),
        )


def build_eval_tasks(dataset: Dataset, split: str = "val", limit: Optional[int] = None, seed: int = 0) -> list[EvalTask]:
    """All distinct-label cross pairs within a split (optionally subsampled)."""
    indices = dataset.indices(split)
    tasks = []
    for ia in indices:
        ma = dataset.samples_meta[ia]
        for ib in indices:
            mb = dataset.samples_meta[ib]
            if ma.motion == mb.motion or ma.skeleton == mb.skeleton or ma.view == mb.view:
                continue
            gt = dataset.lookup(ma.motion, mb.skeleton, mb.view, ma.window)
            tasks.append(EvalTask(idx_a=ia, idx_b=ib, idx_gt=gt))
    if not tasks:
        raise DataError(f"no valid cross pairs in split {split!r}")
    if limit is not None and len(tasks) > limit:
        rng = np.random.default_rng(seed)
        chosen = rng.choice(len(tasks), size=limit, replace=False)
        tasks = [tasks[i] for i in sorted(chosen)]
    return tasks


def model_task_mse(params: ModelParams, stats: NormStats, dataset: Dataset, task: EvalTask) -> float:
    rt = task.to_retarget_task(dataset)
    out = retarget_with_model(
        params, stats, rt.motion_src, rt.static_src, start_root=rt.ground_truth.frames[0, 0]
    )
    return retarget_mse(out, rt.ground_truth, rt.target_height)


def fk2d_task_mse(dataset: Dataset, task: EvalTask) -> float:
    rt = task.to_retarget_task(dataset)
    out = fk2d_baseline(rt.motion_src, rt.static_src, dataset.skeletons[0])
    return retarget_mse(out, rt.ground_truth, rt.target_height)


def baseline3d_task_mse(dataset: Dataset, task: EvalTask, mode: str) -> float:
    ma = dataset.samples_meta[task.idx_a]
    mb = dataset.samples_meta[task.idx_b]
    gt_meta = dataset.samples_meta[task.idx_gt]
    out = baseline3d(dataset, ma.motion, ma.skeleton, mb.skeleton, mb.view, mode)
    start = gt_meta.window * gt_meta.length
    piece = Sample2D(frames=out.frames[start : start + gt_meta.length], fps=dataset.fps)
    gt = dataset.sample(task.idx_gt)
    return retarget_mse(piece, gt, dataset.height(mb.skeleton))


TABLE_ROWS = (
    ("ours: cross reconstruction + triplet", "full"),
    ("ours: cross reconstruction only", "cross_only"),
    ("ours: reconstruction + triplet", "rec_triplet"),
    ("2D forward kinematics", "fk2d"),
    ("3D baseline (naive)", "baseline3d_naive"),
    ("3D baseline (rescaled velocity)", "baseline3d_rescaled"),
)


def evaluate_table(
    dataset: Dataset,
    models: dict[str, tuple[ModelParams, NormStats]],
    split: str = "val",
    limit: Optional[int] = 64,
) -> list[tuple[str, Optional[float]]]:
    """Mean height-normalized MSE per method over the split's cross pairs.

    `models` may provide any of the keys full/cross_only/rec_triplet; rows
    without a model report None."""
    tasks = build_eval_tasks(dataset, split=split, limit=limit)
    results: list[tuple[str, Optional[float]]] = []
    for label, key in TABLE_ROWS:
        if key == "fk2d":
            value = float(np.mean([fk2d_task_mse(dataset, t) for t in tasks]))
        elif key.startswith("baseline3d"):
            mode = key.rsplit("_", 1)[1]
            value = float(np.mean([baseline3d_task_mse(dataset, t, mode) for t in tasks]))
        elif key in models:
            params, stats = models[key]
            value = float(np.mean([model_task_mse(params, stats, dataset, t) for t in tasks]))
        else:
            value = None
        results.append((label, value))
    return results


def render_table_markdown(rows: list[tuple[str, Optional[float]]]) -> str:
    lines = ["| Method | MSE |", "| --- | --- |"]
    for label, value in rows:
        lines.append(f"| {label} | {'n/a' if value is None else f'{value:.4f}'} |")
    return "\n".join(lines) + "\n"


def write_table_csv(path, rows: list[tuple[str, Optional[float]]]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["method", "mse"])
        for label, value in rows:
            writer.writerow([label, "" if value is None else f"{value:.6f}"])


# -- latent export --------------------------------------------------------


def export_latents(dataset: Dataset, params: ModelParams, stats: NormStats, out_dir) -> dict[str, Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rows = {"motion": [], "skeleton": [], "view": []}
    for idx in range(len(dataset)):
        sample = dataset.sample(idx)
        meta = dataset.samples_meta[idx]
        codes = encode_sample(params, stats, sample)
        labels = [meta.motion, meta.skeleton, meta.view, meta.split]
        rows["motion"].append(list(codes.motion.ravel()) + labels)
        rows["skeleton"].append(list(codes.skeleton) + labels)
        rows["view"].append(list(codes.view) + labels)
    paths = {}
    for space, data in rows.items():
        path = out_dir / f"latents_{space}.csv"
        dim = len(data[0]) - 4
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow([f"d{i}" for i in range(dim)] + ["motion", "skeleton", "view", "split"])
            writer.writerows(data)
        paths[space] = path
    return paths
