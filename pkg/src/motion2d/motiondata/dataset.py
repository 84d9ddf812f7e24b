"""Synthetic labeled dataset: full (motion x skeleton x view) Cartesian
product, train/validation split with disjoint motions and skeletons,
normalization statistics, and the on-disk manifest format.

Layout of a dataset directory:
  manifest.json   labels, offsets, skeletons, views, stats, split
  samples2d.bin   per-sample (2J, T) channel-major little-endian float32
  motions.bin     per-motion rotation curves + unit root, float64
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from ..errors import DataError
from .camera import CameraView, character_frame, make_views, project
from .kinematics import bone_length_error
from .motions import FAMILIES, clip_for_skeleton, generate_motion, sample_params
from .normalize import NormStats
from .samples import MotionClip3D, Sample2D, window
from .skeleton import Skeleton, make_skeletons

MANIFEST_NAME = "manifest.json"
SAMPLES_BIN = "samples2d.bin"
MOTIONS_BIN = "motions.bin"
FORMAT_VERSION = 1


@dataclass
class GenConfig:
    motions: int
    skeletons: int
    views: int
    seed: int = 0
    families: tuple[str, ...] = FAMILIES
    seq_length: int = 64
    window_length: int = 64
    fps: float = 30.0
    val_motions: Optional[int] = None
    val_skeletons: Optional[int] = None
    view_span: tuple[float, float] = (-90.0, 90.0)

    def __post_init__(self):
        if self.motions < 2 or self.skeletons < 2 or self.views < 2:
            raise DataError("need at least 2 motions, 2 skeletons, and 2 views")
        unknown = [f for f in self.families if f not in FAMILIES]
        if unknown:
            raise DataError(f"unknown motion families: {unknown}")
        if self.seq_length < self.window_length:
            raise DataError("sequence length shorter than the window length")
        if self.val_motions is None:
            self.val_motions = max(1, self.motions // 3)
        if self.val_skeletons is None:
            self.val_skeletons = max(1, self.skeletons // 3)
        if self.val_motions >= self.motions or self.val_skeletons >= self.skeletons:
            raise DataError("validation split would leave no training data")


@dataclass
class SampleMeta:
    motion: int
    skeleton: int
    view: int
    window: int
    length: int
    offset: int  # byte offset into samples2d.bin
    split: str  # train | val | unused


class Dataset:
    def __init__(
        self,
        root: Path,
        skeletons: list[Skeleton],
        views: list[CameraView],
        motion_meta: list[dict],
        samples_meta: list[SampleMeta],
        stats: NormStats,
        fps: float,
        seed: int,
        payload: bytes,
        motions_payload: bytes,
    ):
        self.root = root
        self.skeletons = skeletons
        self.views = views
        self.motion_meta = motion_meta
        self.samples_meta = samples_meta
        self.stats = stats
        self.fps = fps
        self.seed = seed
        self._payload = payload
        self._motions_payload = motions_payload
        self._index = {
            (m.motion, m.skeleton, m.view, m.window): i for i, m in enumerate(samples_meta)
        }

    # -- samples -------------------------------------------------------

    def __len__(self) -> int:
        return len(self.samples_meta)

    @property
    def joints(self) -> int:
        return self.skeletons[0].joint_count

    def sample(self, idx: int) -> Sample2D:
        meta = self.samples_meta[idx]
        j = self.joints
        count = 2 * j * meta.length
        raw = np.frombuffer(self._payload, dtype="<f4", count=count, offset=meta.offset)
        channels = raw.reshape(2 * j, meta.length).astype(np.float64)
        frames = channels.T.reshape(meta.length, j, 2)
        return Sample2D(
            frames=frames,
            motion_id=meta.motion,
            skeleton_id=meta.skeleton,
            view_id=meta.view,
            fps=self.fps,
        )

    def lookup(self, motion: int, skeleton: int, view: int, window_idx: int = 0) -> int:
        key = (motion, skeleton, view, window_idx)
        if key not in self._index:
            raise DataError(f"no sample for (motion,skeleton,view,window)={key}")
        return self._index[key]

    def indices(self, split: str) -> list[int]:
        return [i for i, m in enumerate(self.samples_meta) if m.split == split]

    def split_ids(self, split: str) -> tuple[set[int], set[int]]:
        motions = {m.motion for m in self.samples_meta if m.split == split}
        skeletons = {m.skeleton for m in self.samples_meta if m.split == split}
        return motions, skeletons

    # -- 3D side (for baselines) ----------------------------------------

    def motion_curves(self, motion_id: int) -> tuple[np.ndarray, np.ndarray]:
        """Rotation curves (T,J,3,3) and unit-height root (T,3)."""
        meta = self.motion_meta[motion_id]
        t, j = meta["frames"], self.joints
        rot_count = t * j * 9
        base = meta["curve_offset"]
        rot = np.frombuffer(self._motions_payload, dtype="<f8", count=rot_count, offset=base)
        root = np.frombuffer(
            self._motions_payload, dtype="<f8", count=t * 3, offset=base + rot_count * 8
        )
        return rot.reshape(t, j, 3, 3).copy(), root.reshape(t, 3).copy()

    def clip3d(self, motion_id: int, skeleton_id: int) -> MotionClip3D:
        rot, root = self.motion_curves(motion_id)
        return clip_for_skeleton(rot, root, self.skeletons[skeleton_id], motion_id, skeleton_id, self.fps)

    def height(self, skeleton_id: int) -> float:
        return self.skeletons[skeleton_id].height


def _encode_sample(frames: np.ndarray) -> bytes:
    # channel-major (2J, T) little-endian float32
    t, j, _ = frames.shape
    channels = frames.reshape(t, 2 * j).T
    return np.ascontiguousarray(channels, dtype="<f4").tobytes()


def generate_dataset(cfg: GenConfig, out_dir) -> Dataset:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(cfg.seed)

    skeletons = make_skeletons(cfg.skeletons, rng)
    views = make_views(cfg.views, cfg.view_span)

    motion_meta = []
    motions_chunks = []
    curve_offset = 0
    curves = []
    for i in range(cfg.motions):
        family = cfg.families[i % len(cfg.families)]
        params = sample_params(family, rng)
        rot, root = generate_motion(family, params, cfg.seq_length, cfg.fps)
        curves.append((rot, root))
        blob = np.ascontiguousarray(rot, dtype="<f8").tobytes() + np.ascontiguousarray(
            root, dtype="<f8"
        ).tobytes()
        motion_meta.append(
            {
                "id": i,
                "family": family,
                "params": params,
                "frames": cfg.seq_length,
                "curve_offset": curve_offset,
            }
        )
        motions_chunks.append(blob)
        curve_offset += len(blob)

    train_motions = set(range(cfg.motions - cfg.val_motions))
    train_skeletons = set(range(cfg.skeletons - cfg.val_skeletons))

    samples_meta: list[SampleMeta] = []
    payload_chunks: list[bytes] = []
    offset = 0
    train_samples: list[Sample2D] = []
    all_samples: list[tuple[SampleMeta, Sample2D]] = []
    for i in range(cfg.motions):
        rot, root = curves[i]
        for k, skel in enumerate(skeletons):
            clip = clip_for_skeleton(rot, root, skel, i, k, cfg.fps)
            if bone_length_error(skel, clip.frames) > 1e-6:
                raise DataError("generated clip violates bone rigidity")
            frame = character_frame(clip)
            for v, view in enumerate(views):
                seq = project(clip, view, frame=frame)
                for w, win in enumerate(window(seq, cfg.window_length)):
                    if i in train_motions and k in train_skeletons:
                        split = "train"
                    elif i not in train_motions and k not in train_skeletons:
                        split = "val"
                    else:
                        split = "unused"
                    meta = SampleMeta(
                        motion=i,
                        skeleton=k,
                        view=v,
                        window=w,
                        length=win.length,
                        offset=offset,
                        split=split,
                    )
                    samples_meta.append(meta)
                    all_samples.append((meta, win))
                    if split == "train":
                        train_samples.append(win)
                    blob = _encode_sample(win.frames)
                    payload_chunks.append(blob)
                    offset += len(blob)

    stats = NormStats.compute(train_samples)
    payload = b"".join(payload_chunks)
    motions_payload = b"".join(motions_chunks)

    manifest = {
        "format_version": FORMAT_VERSION,
        "seed": cfg.seed,
        "fps": cfg.fps,
        "joints": list(skeletons[0].joint_names),
        "skeletons": [s.to_dict() for s in skeletons],
        "views": [
            {"id": v.view_id, "rotation": v.rotation.tolist(), "scale": v.scale, "translation": v.translation.tolist()}
            for v in views
        ],
        "motions": motion_meta,
        "samples": [
            {
                "motion": m.motion,
                "skeleton": m.skeleton,
                "view": m.view,
                "window": m.window,
                "length": m.length,
                "offset": m.offset,
                "split": m.split,
            }
            for m in samples_meta
        ],
        "norm_stats": stats.to_dict(),
        "splits": {
            "train_motions": sorted(train_motions),
            "train_skeletons": sorted(train_skeletons),
            "val_motions": sorted(set(range(cfg.motions)) - train_motions),
            "val_skeletons": sorted(set(range(cfg.skeletons)) - train_skeletons),
        },
    }

    (out / MANIFEST_NAME).write_text(json.dumps(manifest))
    (out / SAMPLES_BIN).write_bytes(payload)
    (out / MOTIONS_BIN).write_bytes(motions_payload)
    return load_dataset(out)


def load_dataset(root) -> Dataset:
    root = Path(root)
    manifest_path = root / MANIFEST_NAME
    if not manifest_path.exists():
        raise DataError(f"no dataset manifest at {manifest_path}")
    try:
        manifest = json.loads(manifest_path.read_text())
    except json.JSONDecodeError as exc:
        raise DataError(f"malformed dataset manifest: {exc}") from exc
    if manifest.get("format_version") != FORMAT_VERSION:
        raise DataError(
            f"unsupported dataset format version {manifest.get('format_version')}"
        )
    skeletons = [Skeleton.from_dict(d) for d in manifest["skeletons"]]
    views = [
        CameraView(
            rotation=np.asarray(v["rotation"]),
            scale=v["scale"],
            translation=np.asarray(v["translation"]),
            view_id=v["id"],
        )
        for v in manifest["views"]
    ]
    samples_meta = [
        SampleMeta(
            motion=s["motion"],
            skeleton=s["skeleton"],
            view=s["view"],
            window=s["window"],
            length=s["length"],
            offset=s["offset"],
            split=s["split"],
        )
        for s in manifest["samples"]
    ]
    return Dataset(
        root=root,
        skeletons=skeletons,
        views=views,
        motion_meta=manifest["motions"],
        samples_meta=samples_meta,
        stats=NormStats.from_dict(manifest["norm_stats"]),
        fps=manifest["fps"],
        seed=manifest["seed"],
        payload=(root / SAMPLES_BIN).read_bytes(),
        motions_payload=(root / MOTIONS_BIN).read_bytes(),
    )
