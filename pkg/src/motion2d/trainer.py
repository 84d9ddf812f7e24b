"""Training loop: pair sampling, attribute-consistent augmentation, joint
dropout noise, AmsGrad stepping, unlabeled-clip mixing, validation
metrics, and resumable checkpoints."""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

import numpy as np

from . import evalkit
from . import losses as lo
from . import network as net
from .checkpoint import load_checkpoint, save_checkpoint
from .errors import DataError, TrainingDiverged
from .motiondata import Dataset, Sample2D, crop, flip, normalize_frames, scale
from .motiondata.skeleton import END_EFFECTORS
from .network import ArchConfig, ModelParams
from .tensorkit import AmsGrad, Tensor


@dataclass
class TrainConfig:
    epochs: int = 40
    batch_pairs: int = 8
    clip_lengths: tuple[int, ...] = (64, 56, 48, 40)
    scale_range: tuple[float, float] = (0.5, 1.5)
    flip_prob: float = 0.5
    joint_noise_prob: float = 0.05
    lambda_triplet: float = lo.LAMBDA_TRIPLET
    lambda_foot: float = lo.LAMBDA_FOOT
    margin: float = lo.TRIPLET_MARGIN
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    seed: int = 0
    pairs_per_epoch: Optional[int] = None  # None: one pair per training sample
    unlabeled_per_epoch: Optional[int] = None  # None: every provided window
    checkpoint_every: int = 0  # epochs between resumable snapshots; 0 = off
    early_stop_patience: Optional[int] = None
    use_cross: bool = True
    single_attribute_swaps: bool = False
    end_effectors: tuple[str, ...] = END_EFFECTORS
    dtype: str = "float32"
    val_pair_limit: int = 32
    arch: ArchConfig = field(default_factory=ArchConfig)

    def __post_init__(self):
        for p in (self.flip_prob, self.joint_noise_prob):
            if not 0.0 <= p <= 1.0:
                raise DataError(f"probability {p} outside [0,1]")
        if any(t % 8 != 0 for t in self.clip_lengths):
            raise DataError("clip lengths must be multiples of 8")
        if self.dtype not in ("float32", "float64"):
            raise DataError("dtype must be float32 or float64")

    @property
    def np_dtype(self):
        return np.float32 if self.dtype == "float32" else np.float64


@dataclass
class EpochReport:
    epoch: int
    loss_total: float
    loss_rec: float
    loss_cross: float
    loss_triplet: float
    loss_foot: float
    val_cross_rec: float
    sil_motion: float
    sil_skeleton: float
    sil_view: float
    val_mse: float
    wall_s: float

    FIELDS = (
        "epoch",
        "loss_total",
        "loss_rec",
        "loss_cross",
        "loss_triplet",
        "loss_foot",
        "val_cross_rec",
        "sil_motion",
        "sil_skeleton",
        "sil_view",
        "val_mse",
        "wall_s",
    )

    def row(self) -> list:
        return [getattr(self, f) for f in self.FIELDS]

    def validate(self) -> None:
        values = [v for v in self.row() if isinstance(v, float)]
        if not np.all(np.isfinite(values)):
            raise TrainingDiverged(f"non-finite epoch report at epoch {self.epoch}")


@dataclass
class SampledPair:
    idx_a: int
    idx_b: int
    idx_gt_ab: int
    idx_gt_ba: int
    swaps: dict = field(default_factory=dict)  # single-attribute GT indices


def sample_pairs(dataset: Dataset, count: int, rng: np.random.Generator, split: str = "train", single_attribute_swaps: bool = False) -> list[SampledPair]:
    """Uniform pairs with all three labels distinct, cross GTs attached."""
    indices = dataset.indices(split)
    metas = [dataset.samples_meta[i] for i in indices]
    motions = {m.motion for m in metas}
    skeletons = {m.skeleton for m in metas}
    views = {m.view for m in metas}
    if len(motions) < 2 or len(skeletons) < 2 or len(views) < 2:
        raise DataError("split too small to draw distinct-label pairs")
    pairs = []
    while len(pairs) < count:
        ia, ib = rng.integers(0, len(indices), size=2)
        ma, mb = metas[ia], metas[ib]
        if ma.motion == mb.motion or ma.skeleton == mb.skeleton or ma.view == mb.view:
            continue
        pair = SampledPair(
            idx_a=indices[ia],
            idx_b=indices[ib],
            idx_gt_ab=dataset.lookup(ma.motion, mb.skeleton, mb.view, ma.window),
            idx_gt_ba=dataset.lookup(mb.motion, ma.skeleton, ma.view, mb.window),
        )
        if single_attribute_swaps:
            pair.swaps = {
                "skeleton_ab": dataset.lookup(ma.motion, mb.skeleton, ma.view, ma.window),
                "view_ab": dataset.lookup(ma.motion, ma.skeleton, mb.view, ma.window),
                "skeleton_ba": dataset.lookup(mb.motion, ma.skeleton, mb.view, mb.window),
                "view_ba": dataset.lookup(mb.motion, mb.skeleton, ma.view, mb.window),
            }
        pairs.append(pair)
    return pairs


def inject_noise(channels: np.ndarray, p: float, rng: np.random.Generator, joints: int) -> np.ndarray:
    """Zero both coordinate channels of random (joint, frame) cells on a
    copy; the velocity channels are never dropped."""
    out = np.array(channels, copy=True)
    if p <= 0.0:
        return out
    t = out.shape[-1]
    drop = rng.random((joints - 1, t)) < p
    pose = out[: 2 * (joints - 1)].reshape(joints - 1, 2, t)
    pose[drop[:, None, :].repeat(2, axis=1)] = 0.0
    return out


@dataclass
class _AugmentedPair:
    arrays: dict  # name -> (C, T') float arrays, normalized
    labels_a: np.ndarray
    labels_b: np.ndarray


def augment_pair(
    dataset: Dataset,
    pair: SampledPair,
    clip_length: int,
    cfg: TrainConfig,
    rng: np.random.Generator,
) -> _AugmentedPair:
    """One clip length for all four sequences; the temporal crop follows
    the motion label, the scale follows the skeleton label, and the flip
    follows the motion label."""
    a = dataset.sample(pair.idx_a)
    b = dataset.sample(pair.idx_b)
    gt_ab = dataset.sample(pair.idx_gt_ab)
    gt_ba = dataset.sample(pair.idx_gt_ba)
    swaps = {k: dataset.sample(v) for k, v in pair.swaps.items()}

    start_a = int(rng.integers(0, a.length - clip_length + 1))
    start_b = int(rng.integers(0, b.length - clip_length + 1))
    scale_a = float(rng.uniform(*cfg.scale_range))
    scale_b = float(rng.uniform(*cfg.scale_range))
    flip_a = bool(rng.random() < cfg.flip_prob)
    flip_b = bool(rng.random() < cfg.flip_prob)

    skeleton = dataset.skeletons[0]
    pairs_table = skeleton.mirror_pairs()

    def prep(sample: Sample2D, start: int, s: float, do_flip: bool) -> np.ndarray:
        out = crop(sample, start, clip_length)
        if s != 1.0:
            out = scale(out, s)
        if do_flip:
            out = flip(out, pairs=pairs_table)
        return normalize_frames(out.frames, dataset.stats).astype(cfg.np_dtype)

    arrays = {
        "a": prep(a, start_a, scale_a, flip_a),
        "b": prep(b, start_b, scale_b, flip_b),
        # gt_ab: a's motion (crop/flip of a), b's skeleton (scale of b)
        "gt_ab": prep(gt_ab, start_a, scale_b, flip_a),
        # gt_ba: b's motion, a's skeleton
        "gt_ba": prep(gt_ba, start_b, scale_a, flip_b),
    }
    for key, sample in swaps.items():
        # single-attribute swaps always carry the motion of one input; the
        # skeleton decides the scale
        motion_of_a = key.endswith("_ab")
        start = start_a if motion_of_a else start_b
        do_flip = flip_a if motion_of_a else flip_b
        carries_b_skeleton = key in ("skeleton_ab", "view_ba")
        s = scale_b if carries_b_skeleton else scale_a
        arrays[key] = prep(sample, start, s, do_flip)

    return _AugmentedPair(
        arrays=arrays,
        labels_a=np.array([a.motion_id, a.skeleton_id, a.view_id]),
        labels_b=np.array([b.motion_id, b.skeleton_id, b.view_id]),
    )


def build_pair_batch(
    dataset: Dataset,
    pairs: list[SampledPair],
    clip_length: int,
    cfg: TrainConfig,
    rng: np.random.Generator,
) -> lo.PairBatch:
    augmented = [augment_pair(dataset, p, clip_length, cfg, rng) for p in pairs]
    joints = dataset.joints

    def stack(name: str) -> np.ndarray:
        return np.stack([ap.arrays[name] for ap in augmented])

    def noisy(clean: np.ndarray) -> np.ndarray:
        return np.stack(
            [inject_noise(row, cfg.joint_noise_prob, rng, joints) for row in clean]
        )

    a, b = stack("a"), stack("b")
    gt_ab, gt_ba = stack("gt_ab"), stack("gt_ba")
    batch = lo.PairBatch(
        a=a,
        b=b,
        gt_ab=gt_ab,
        gt_ba=gt_ba,
        labels_a=np.stack([ap.labels_a for ap in augmented]),
        labels_b=np.stack([ap.labels_b for ap in augmented]),
        a_in=noisy(a),
        b_in=noisy(b),
        gt_ab_in=noisy(gt_ab),
        gt_ba_in=noisy(gt_ba),
    )
    if cfg.single_attribute_swaps:
        batch.single_swaps = {
            key: stack(key) for key in ("skeleton_ab", "view_ab", "skeleton_ba", "view_ba")
        }
    return batch


@dataclass
class TrainResult:
    params: ModelParams  # best-validation parameters
    final_params: ModelParams
    stats: object
    reports: list[EpochReport]
    init_val_cross_rec: float
    best_epoch: int
    best_val_cross_rec: float


def _end_effector_joints(dataset: Dataset, names: tuple[str, ...]) -> tuple[int, ...]:
    index = {n: i for i, n in enumerate(dataset.skeletons[0].joint_names)}
    missing = [n for n in names if n not in index]
    if missing:
        raise DataError(f"unknown end effector joints: {missing}")
    return tuple(index[n] for n in names)


def _detached(params: ModelParams) -> ModelParams:
    return ModelParams(
        config=params.config, tensors={k: Tensor(t.data) for k, t in params.tensors.items()}
    )


class Validator:
    """Fixed validation pair set and latent-clustering metrics."""

    def __init__(self, dataset: Dataset, cfg: TrainConfig):
        self.dataset = dataset
        self.cfg = cfg
        rng = np.random.default_rng(cfg.seed + 1)
        self.val_indices = dataset.indices("val")
        if not self.val_indices:
            raise DataError("dataset has no validation split")
        self.pairs = sample_pairs(dataset, cfg.val_pair_limit, rng, split="val")
        self.loss_cfg = lo.LossConfig(
            lambda_triplet=0.0, lambda_foot=0.0, use_cross=True
        )
        self.tasks = evalkit.build_eval_tasks(dataset, split="val", limit=24, seed=cfg.seed + 2)

    def cross_rec(self, params: ModelParams) -> float:
        detached = _detached(params)
        total = 0.0
        for pair in self.pairs:
            batch = lo.PairBatch(
                a=self._channels(pair.idx_a),
                b=self._channels(pair.idx_b),
                gt_ab=self._channels(pair.idx_gt_ab),
                gt_ba=self._channels(pair.idx_gt_ba),
                labels_a=np.array([list(self._labels(pair.idx_a))]),
                labels_b=np.array([list(self._labels(pair.idx_b))]),
            )
            _, parts = lo.total_loss(detached, batch, self.dataset.stats, self.loss_cfg)
            total += parts["cross_rec"]
        return total / len(self.pairs)

    def _channels(self, idx: int) -> np.ndarray:
        sample = self.dataset.sample(idx)
        return normalize_frames(sample.frames, self.dataset.stats).astype(self.cfg.np_dtype)[None]

    def _labels(self, idx: int):
        meta = self.dataset.samples_meta[idx]
        return meta.motion, meta.skeleton, meta.view

    def silhouettes(self, params: ModelParams) -> tuple[float, float, float]:
        detached = _detached(params)
        motion_codes, skel_codes, view_codes, labels = [], [], [], []
        for idx in self.val_indices:
            codes = evalkit.encode_sample(detached, self.dataset.stats, self.dataset.sample(idx))
            motion_codes.append(codes.motion.ravel())
            skel_codes.append(codes.skeleton)
            view_codes.append(codes.view)
            labels.append(self._labels(idx))
        labels = np.array(labels)
        return (
            evalkit.mean_silhouette(np.stack(motion_codes), labels[:, 0]),
            evalkit.mean_silhouette(np.stack(skel_codes), labels[:, 1]),
            evalkit.mean_silhouette(np.stack(view_codes), labels[:, 2]),
        )

    def retarget_mse(self, params: ModelParams) -> float:
        detached = _detached(params)
        return float(
            np.mean(
                [
                    evalkit.model_task_mse(detached, self.dataset.stats, self.dataset, t)
                    for t in self.tasks
                ]
            )
        )


def _prepare_unlabeled(clips: list[Sample2D], cfg: TrainConfig, joints: int):
    from .motiondata import window as window_fn

    windows = []
    for clip in clips:
        if clip.length < 40:
            raise DataError("unlabeled clips must have at least 40 frames")
        length = min(64, (clip.length // 8) * 8)
        windows.extend(window_fn(clip, length))
    return windows


def train(
    dataset: Dataset,
    cfg: TrainConfig,
    unlabeled: Optional[list[Sample2D]] = None,
    checkpoint_dir=None,
    resume_from=None,
) -> TrainResult:
    dtype = cfg.np_dtype
    rng = np.random.default_rng(cfg.seed)
    params = net.init_params(cfg.arch, rng, dtype=dtype)
    optimizer = AmsGrad(params.tensors, lr=cfg.lr, beta1=cfg.beta1, beta2=cfg.beta2, eps=cfg.eps)
    start_epoch = 0

    if resume_from is not None:
        params, _, extras = load_checkpoint(resume_from, expected_config=cfg.arch, dtype=dtype)
        state = extras.get("train_state") or {}
        optimizer = AmsGrad(params.tensors, lr=cfg.lr, beta1=cfg.beta1, beta2=cfg.beta2, eps=cfg.eps)
        if extras["optimizer_arrays"]:
            grouped: dict[str, dict[str, np.ndarray]] = {"m": {}, "v": {}, "vmax": {}}
            for key, arr in extras["optimizer_arrays"].items():
                kind, name = key.split("/", 1)
                grouped[kind][name] = arr
            optimizer.load_state_dict(
                {"step_count": state.get("step_count", 0), **grouped}
            )
        if "rng_state" in state:
            rng = np.random.default_rng()
            rng.bit_generator.state = state["rng_state"]
        start_epoch = int(state.get("epoch", 0))

    loss_cfg = lo.LossConfig(
        margin=cfg.margin,
        lambda_triplet=cfg.lambda_triplet,
        lambda_foot=cfg.lambda_foot,
        use_cross=cfg.use_cross,
        single_attribute_swaps=cfg.single_attribute_swaps,
        end_effector_joints=_end_effector_joints(dataset, cfg.end_effectors),
    )
    validator = Validator(dataset, cfg)
    init_val = validator.cross_rec(params)

    n_train = len(dataset.indices("train"))
    if n_train == 0:
        raise DataError("dataset has no training split")
    pairs_per_epoch = cfg.pairs_per_epoch or n_train

    unlabeled_windows = _prepare_unlabeled(unlabeled, cfg, dataset.joints) if unlabeled else []
    skeleton_pairs = dataset.skeletons[0].mirror_pairs()

    best_val = np.inf
    best_epoch = -1
    best_params = params.astype(dtype)
    reports: list[EpochReport] = []
    epochs_since_best = 0

    for epoch in range(start_epoch, cfg.epochs):
        t0 = time.perf_counter()
        pairs = sample_pairs(
            dataset, pairs_per_epoch, rng, split="train", single_attribute_swaps=cfg.single_attribute_swaps
        )
        part_sums = {"total": 0.0, "rec": 0.0, "cross": 0.0, "triplet": 0.0, "foot": 0.0}
        batches = 0
        for i in range(0, len(pairs), cfg.batch_pairs):
            chunk = pairs[i : i + cfg.batch_pairs]
            clip_length = int(rng.choice(cfg.clip_lengths))
            batch = build_pair_batch(dataset, chunk, clip_length, cfg, rng)
            loss, parts = lo.total_loss(
                params, batch, dataset.stats, loss_cfg, training=True, rng=rng
            )
            if not np.isfinite(loss.data):
                raise TrainingDiverged(f"non-finite training loss at epoch {epoch}")
            optimizer.zero_grad()
            loss.backward()
            optimizer.step()
            for key in part_sums:
                part_sums[key] += parts[key]
            batches += 1

        if unlabeled_windows:
            count = cfg.unlabeled_per_epoch or len(unlabeled_windows)
            chosen = rng.choice(len(unlabeled_windows), size=min(count, len(unlabeled_windows)), replace=False)
            for start in range(0, len(chosen), 2 * cfg.batch_pairs):
                group = chosen[start : start + 2 * cfg.batch_pairs]
                clip_length = int(rng.choice(cfg.clip_lengths))
                rows, rows_in = [], []
                for idx in group:
                    win = unlabeled_windows[int(idx)]
                    usable = min(clip_length, (win.length // 8) * 8)
                    offset = int(rng.integers(0, win.length - usable + 1))
                    piece = crop(win, offset, usable)
                    piece = scale(piece, float(rng.uniform(*cfg.scale_range)))
                    if rng.random() < cfg.flip_prob:
                        piece = flip(piece, pairs=skeleton_pairs)
                    clean = normalize_frames(piece.frames, dataset.stats).astype(dtype)
                    rows.append(clean)
                    rows_in.append(inject_noise(clean, cfg.joint_noise_prob, rng, dataset.joints))
                shortest = min(r.shape[-1] for r in rows)
                clean_arr = np.stack([r[..., :shortest] for r in rows])
                noisy_arr = np.stack([r[..., :shortest] for r in rows_in])
                loss = lo.reconstruction_loss(params, noisy_arr, clean_arr, training=True, rng=rng)
                if not np.isfinite(loss.data):
                    raise TrainingDiverged(f"non-finite unlabeled loss at epoch {epoch}")
                optimizer.zero_grad()
                loss.backward()
                optimizer.step()

        val_cross = validator.cross_rec(params)
        sil_m, sil_s, sil_v = validator.silhouettes(params)
        val_mse = validator.retarget_mse(params)
        report = EpochReport(
            epoch=epoch,
            loss_total=part_sums["total"] / max(batches, 1),
            loss_rec=part_sums["rec"] / max(batches, 1),
            loss_cross=part_sums["cross"] / max(batches, 1),
            loss_triplet=part_sums["triplet"] / max(batches, 1),
            loss_foot=part_sums["foot"] / max(batches, 1),
            val_cross_rec=val_cross,
            sil_motion=sil_m,
            sil_skeleton=sil_s,
            sil_view=sil_v,
            val_mse=val_mse,
            wall_s=time.perf_counter() - t0,
        )
        report.validate()
        reports.append(report)

        if val_cross < best_val:
            best_val = val_cross
            best_epoch = epoch
            best_params = params.astype(dtype)
            epochs_since_best = 0
        else:
            epochs_since_best += 1

        if checkpoint_dir and cfg.checkpoint_every and (epoch + 1) % cfg.checkpoint_every == 0:
            _save_resumable(Path(checkpoint_dir) / "latest.ckpt", params, dataset, optimizer, rng, epoch + 1)

        if cfg.early_stop_patience is not None and epochs_since_best > cfg.early_stop_patience:
            break

    if checkpoint_dir and cfg.checkpoint_every:
        _save_resumable(Path(checkpoint_dir) / "latest.ckpt", params, dataset, optimizer, rng, len(reports) + start_epoch)

    return TrainResult(
        params=best_params,
        final_params=params,
        stats=dataset.stats,
        reports=reports,
        init_val_cross_rec=init_val,
        best_epoch=best_epoch,
        best_val_cross_rec=best_val,
    )


def _save_resumable(path, params, dataset, optimizer, rng, epoch) -> None:
    state = optimizer.state_dict()
    arrays = {}
    for kind in ("m", "v", "vmax"):
        for name, arr in state[kind].items():
            arrays[f"{kind}/{name}"] = arr
    save_checkpoint(
        path,
        params,
        dataset.stats,
        train_state={
            "epoch": epoch,
            "step_count": state["step_count"],
            "rng_state": rng.bit_generator.state,
        },
        optimizer_arrays=arrays,
    )
