"""Training objectives: cross reconstruction, plain reconstruction,
triplet margins on each latent space, end-effector velocity matching, and
their weighted composition."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import network as net
from . import tensorkit as tk
from .errors import DataError
from .motiondata.normalize import NormStats
from .network import ModelParams
from .tensorkit import Tensor

TRIPLET_MARGIN = 0.3
LAMBDA_TRIPLET = 0.1
LAMBDA_FOOT = 0.5


@dataclass
class PairBatch:
    """A batch of sample pairs with their cross-composition ground truths.

    All arrays are (B, C, T) normalized channel matrices.  `*_in` variants
    are the (possibly joint-dropped) encoder inputs; the plain arrays stay
    clean and serve as loss targets.  labels_a/labels_b are (B, 3) int
    arrays of (motion, skeleton, view) ids.
    """

    a: np.ndarray
    b: np.ndarray
    gt_ab: np.ndarray  # a's motion with b's skeleton and view
    gt_ba: np.ndarray
    labels_a: np.ndarray
    labels_b: np.ndarray
    a_in: Optional[np.ndarray] = None
    b_in: Optional[np.ndarray] = None
    gt_ab_in: Optional[np.ndarray] = None
    gt_ba_in: Optional[np.ndarray] = None
    # single-attribute swaps (only when the extra cross terms are enabled):
    # keys "skeleton_ab", "view_ab", "skeleton_ba", "view_ba"
    single_swaps: dict = field(default_factory=dict)

    def __post_init__(self):
        for name in ("a_in", "b_in", "gt_ab_in", "gt_ba_in"):
            if getattr(self, name) is None:
                setattr(self, name, getattr(self, name[:-3]))

    def validate_labels(self) -> None:
        if np.any(self.labels_a == self.labels_b):
            raise DataError("pair labels collide; motion, skeleton, and view must all differ")


@dataclass
class LossConfig:
    margin: float = TRIPLET_MARGIN
    lambda_triplet: float = LAMBDA_TRIPLET
    lambda_foot: float = LAMBDA_FOOT
    use_cross: bool = True
    single_attribute_swaps: bool = False
    end_effector_joints: tuple[int, ...] = ()


def mse(pred: Tensor, target) -> Tensor:
    """Mean squared error over every element, so magnitudes are
    independent of window length and joint count."""
    return tk.square(pred - tk.as_tensor(target)).mean()


def reconstruction_loss(
    params: ModelParams,
    x_in: np.ndarray,
    x_target: Optional[np.ndarray] = None,
    training: bool = False,
    rng: Optional[np.random.Generator] = None,
) -> Tensor:
    """MSE of decode(encode(x)) against the clean target."""
    x = tk.as_tensor(x_in)
    m, s, v = net.encode_batch(params, x)
    out = net.decode_batch(params, m, s, v, training=training, rng=rng)
    return mse(out, x_target if x_target is not None else x_in)


def flatten_code(code: Tensor) -> Tensor:
    b = code.shape[0]
    return tk.reshape(code, (b, int(np.prod(code.shape[1:]))))


def _pair_distance(x: Tensor, y: Tensor) -> Tensor:
    return tk.sqrt(tk.square(x - y).sum(axis=1))


def triplet_loss(anchor: Tensor, positive: Tensor, negative: Tensor, margin: float = TRIPLET_MARGIN) -> Tensor:
    """Mean hinge [d(a,p) - d(a,n) + margin]+ over the batch; codes are
    flattened, distances Euclidean."""
    if anchor.shape != positive.shape or anchor.shape != negative.shape:
        raise DataError("triplet codes must share one shape")
    a, p, n = flatten_code(anchor), flatten_code(positive), flatten_code(negative)
    hinge = tk.relu(_pair_distance(a, p) - _pair_distance(a, n) + margin)
    return hinge.mean()


def build_triplets(batch: PairBatch, codes_a, codes_b, codes_gt_ab, codes_gt_ba):
    """Per latent space, two triplets: the cross ground truth anchors to
    the input sharing its label in that space, with the other input as the
    negative."""
    batch.validate_labels()
    m_a, s_a, v_a = codes_a
    m_b, s_b, v_b = codes_b
    m_ab, s_ab, v_ab = codes_gt_ab  # labels: (motion a, skeleton b, view b)
    m_ba, s_ba, v_ba = codes_gt_ba  # labels: (motion b, skeleton a, view a)
    return [
        ("motion", m_ab, m_a, m_b),
        ("motion", m_ba, m_b, m_a),
        ("skeleton", s_ab, s_b, s_a),
        ("skeleton", s_ba, s_a, s_b),
        ("view", v_ab, v_b, v_a),
        ("view", v_ba, v_a, v_b),
    ]


def triplet_total(triplets, margin: float = TRIPLET_MARGIN) -> Tensor:
    """Sum of per-space means (motion term plus both static-space terms)."""
    by_space: dict[str, list[Tensor]] = {}
    for space, anchor, pos, neg in triplets:
        by_space.setdefault(space, []).append(triplet_loss(anchor, pos, neg, margin))
    total = None
    for space, losses in by_space.items():
        space_loss = losses[0]
        for extra in losses[1:]:
            space_loss = space_loss + extra
        space_loss = space_loss * (1.0 / len(losses))
        total = space_loss if total is None else total + space_loss
    return total


def _joint_channel(joint: int) -> int:
    if joint < 1:
        raise DataError("end effectors must be non-root joints")
    return 2 * (joint - 1)


def foot_velocity_loss(
    pred: Tensor,
    target: np.ndarray,
    stats: NormStats,
    end_effector_joints: tuple[int, ...],
) -> Tensor:
    """Match each end effector's global velocity (network-output root
    velocity plus the joint's local finite-difference velocity, both in
    image units) against the ground truth's; squared error summed over
    joints, meaned over time and batch."""
    if not end_effector_joints:
        raise DataError("no end effectors declared")
    t = pred.shape[-1]
    joints = stats.mean.shape[0]
    if pred.shape[-2] != 2 * (joints - 1) + 2:
        raise DataError("prediction channels do not match the statistics' joint count")
    vel_std = stats.vel_std[:, None]

    vel_pred = tk.narrow(pred, -2, pred.shape[-2] - 2, 2)
    vel_pred = tk.narrow(vel_pred, -1, 0, t - 1) * vel_std

    target = np.asarray(target)
    vel_gt = target[..., -2:, : t - 1] * vel_std

    total = None
    for joint in end_effector_joints:
        c0 = _joint_channel(joint)
        std_j = stats.std[joint][:, None]
        local_pred = tk.narrow(pred, -2, c0, 2) * std_j
        dpred = tk.narrow(local_pred, -1, 1, t - 1) - tk.narrow(local_pred, -1, 0, t - 1)
        local_gt = target[..., c0 : c0 + 2, :] * std_j
        dgt = local_gt[..., 1:] - local_gt[..., : t - 1]
        err = (vel_pred + dpred) - (vel_gt + dgt)
        sq = tk.square(err).sum(axis=-2)  # both image components
        total = sq if total is None else total + sq
    return total.mean()


def _stack(arrays: list[np.ndarray]) -> Tensor:
    return Tensor(np.concatenate(arrays, axis=0))


def total_loss(
    params: ModelParams,
    batch: PairBatch,
    stats: NormStats,
    config: LossConfig,
    training: bool = False,
    rng: Optional[np.random.Generator] = None,
) -> tuple[Tensor, dict]:
    """Cross-reconstruction + reconstruction + weighted triplet and
    end-effector velocity terms, evaluated in one batched graph."""
    batch.validate_labels()
    b = batch.a.shape[0]

    inputs = _stack([batch.a_in, batch.b_in, batch.gt_ab_in, batch.gt_ba_in])
    m, s, v = net.encode_batch(params, inputs)

    def split(code: Tensor) -> list[Tensor]:
        return [tk.narrow(code, 0, i * b, b) for i in range(4)]

    m_a, m_b, m_ab, m_ba = split(m)
    s_a, s_b, s_ab, s_ba = split(s)
    v_a, v_b, v_ab, v_ba = split(v)

    decode_motion = [m_a, m_b]
    decode_skel = [s_a, s_b]
    decode_view = [v_a, v_b]
    targets = [batch.a, batch.b]
    term_names = ["rec_a", "rec_b"]
    if config.use_cross:
        decode_motion += [m_a, m_b]
        decode_skel += [s_b, s_a]
        decode_view += [v_b, v_a]
        targets += [batch.gt_ab, batch.gt_ba]
        term_names += ["cross_ab", "cross_ba"]
        if config.single_attribute_swaps:
            missing = {"skeleton_ab", "view_ab", "skeleton_ba", "view_ba"} - set(batch.single_swaps)
            if missing:
                raise DataError(f"single-attribute swap targets missing: {sorted(missing)}")
            decode_motion += [m_a, m_a, m_b, m_b]
            decode_skel += [s_b, s_a, s_a, s_b]
            decode_view += [v_a, v_b, v_b, v_a]
            targets += [
                batch.single_swaps["skeleton_ab"],
                batch.single_swaps["view_ab"],
                batch.single_swaps["skeleton_ba"],
                batch.single_swaps["view_ba"],
            ]
            term_names += ["swap_skel_ab", "swap_view_ab", "swap_skel_ba", "swap_view_ba"]

    out = net.decode_batch(
        params,
        tk.concat(decode_motion, axis=0),
        tk.concat(decode_skel, axis=0),
        tk.concat(decode_view, axis=0),
        training=training,
        rng=rng,
    )
    outputs = [tk.narrow(out, 0, i * b, b) for i in range(len(targets))]

    terms = {name: mse(o, t) for name, o, t in zip(term_names, outputs, targets)}
    l_rec = (terms["rec_a"] + terms["rec_b"]) * 0.5
    l_cross = None
    for name in term_names[2:]:
        l_cross = terms[name] if l_cross is None else l_cross + terms[name]

    total = l_rec if l_cross is None else l_rec + l_cross

    parts = {
        "rec": float(l_rec.data),
        "cross": float(l_cross.data) if l_cross is not None else 0.0,
        "triplet": 0.0,
        "foot": 0.0,
    }

    if config.lambda_triplet > 0.0:
        triplets = build_triplets(
            batch, (m_a, s_a, v_a), (m_b, s_b, v_b), (m_ab, s_ab, v_ab), (m_ba, s_ba, v_ba)
        )
        l_trip = triplet_total(triplets, config.margin)
        total = total + config.lambda_triplet * l_trip
        parts["triplet"] = float(l_trip.data)

    if config.lambda_foot > 0.0:
        if not config.end_effector_joints:
            raise DataError("foot velocity loss enabled but no end effectors declared")
        l_foot = None
        for o, t in zip(outputs, targets):
            term = foot_velocity_loss(o, t, stats, config.end_effector_joints)
            l_foot = term if l_foot is None else l_foot + term
        l_foot = l_foot * (1.0 / len(outputs))
        total = total + config.lambda_foot * l_foot
        parts["foot"] = float(l_foot.data)

    parts["cross_rec"] = parts["rec"] + parts["cross"]
    parts["total"] = float(total.data)
    return total, parts
