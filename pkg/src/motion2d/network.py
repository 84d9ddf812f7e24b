"""The three-encoder / one-decoder pose autoencoder.

The motion encoder consumes every input channel (pose + root velocity)
through strided convolutions, so its code length follows the input
duration.  The skeleton and view encoders see only the pose channels and
collapse time with global pooling (max for skeleton, average for view)
into fixed-size codes.  The decoder tiles the static codes along time,
concatenates everything on the channel axis (motion, skeleton, view), and
restores the input duration through three upsample+conv stages.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from . import tensorkit as tk
from .errors import CheckpointError, DataError
from .motiondata.normalize import pose_channels, total_channels
from .tensorkit import ConvSpec, Tensor

# One motion-code step covers this many input frames.
LATENT_FRAME_STRIDE = 8


@dataclass(frozen=True)
class ArchConfig:
    joints: int = 15
    motion_channels: tuple[int, ...] = (64, 96, 128)
    motion_kernel: int = 8
    static_channels: tuple[int, ...] = (32, 48, 64)
    skeleton_out: int = 16
    view_out: int = 8
    static_kernel: int = 7
    decoder_channels: tuple[int, ...] = (128, 64)
    decoder_kernel: int = 7
    dropout: float = 0.2
    leaky_slope: float = 0.2

    def __post_init__(self):
        if len(self.decoder_channels) + 1 != len(self.motion_channels):
            raise DataError("decoder must have one conv stage per motion-encoder stride")
        if self.joints < 3:
            raise DataError("need at least 3 joints")

    @property
    def pose_in(self) -> int:
        return pose_channels(self.joints)

    @property
    def motion_in(self) -> int:
        return total_channels(self.joints)

    @property
    def motion_out(self) -> int:
        return self.motion_channels[-1]

    @property
    def decoder_in(self) -> int:
        return self.motion_out + self.skeleton_out + self.view_out

    @property
    def downsample(self) -> int:
        return 2 ** len(self.motion_channels)

    def to_dict(self) -> dict:
        d = asdict(self)
        for key in ("motion_channels", "static_channels", "decoder_channels"):
            d[key] = list(d[key])
        return d

    @staticmethod
    def from_dict(d: dict) -> "ArchConfig":
        d = dict(d)
        for key in ("motion_channels", "static_channels", "decoder_channels"):
            d[key] = tuple(d[key])
        return ArchConfig(**d)

    def fingerprint(self) -> str:
        # concat order is part of the wire contract, so it is hashed too
        payload = {"config": self.to_dict(), "concat_order": ["motion", "skeleton", "view"]}
        return hashlib.sha256(json.dumps(payload, sort_keys=True).encode()).hexdigest()[:16]

    def layer_specs(self) -> dict[str, list[ConvSpec]]:
        motion = []
        prev = self.motion_in
        for ch in self.motion_channels:
            motion.append(ConvSpec(prev, ch, self.motion_kernel, 2))
            prev = ch
        static = []
        prev = self.pose_in
        for ch in self.static_channels:
            static.append(ConvSpec(prev, ch, self.static_kernel, 1))
            prev = ch
        decoder = []
        prev = self.decoder_in
        for ch in self.decoder_channels + (self.motion_in,):
            decoder.append(ConvSpec(prev, ch, self.decoder_kernel, 1))
            prev = ch
        return {
            "motion": motion,
            "skeleton": static + [ConvSpec(self.static_channels[-1], self.skeleton_out, 1, 1)],
            "view": static + [ConvSpec(self.static_channels[-1], self.view_out, 1, 1)],
            "decoder": decoder,
        }


@dataclass
class ModelParams:
    config: ArchConfig
    tensors: dict[str, Tensor] = field(default_factory=dict)

    def zero_grad(self) -> None:
        for t in self.tensors.values():
            t.zero_grad()

    def parameter_count(self) -> int:
        return sum(t.data.size for t in self.tensors.values())

    def astype(self, dtype) -> "ModelParams":
        return ModelParams(
            config=self.config,
            tensors={
                k: Tensor(t.data.astype(dtype), requires_grad=t.requires_grad)
                for k, t in self.tensors.items()
            },
        )


def expected_parameter_names(config: ArchConfig) -> list[str]:
    names = []
    for component, specs in config.layer_specs().items():
        for i in range(len(specs)):
            names.append(f"{component}/conv{i}/weight")
            names.append(f"{component}/conv{i}/bias")
    return names


def init_params(config: ArchConfig, rng: np.random.Generator, dtype=np.float64) -> ModelParams:
    """Fan-in-scaled uniform weights, zero biases."""
    tensors: dict[str, Tensor] = {}
    for component, specs in config.layer_specs().items():
        for i, spec in enumerate(specs):
            fan_in = spec.in_channels * spec.kernel
            bound = 1.0 / np.sqrt(fan_in)
            w = rng.uniform(-bound, bound, size=(spec.out_channels, spec.in_channels, spec.kernel))
            tensors[f"{component}/conv{i}/weight"] = Tensor(w.astype(dtype), requires_grad=True)
            tensors[f"{component}/conv{i}/bias"] = Tensor(
                np.zeros(spec.out_channels, dtype=dtype), requires_grad=True
            )
    return ModelParams(config=config, tensors=tensors)


def _layer(params: ModelParams, component: str, i: int) -> tuple[Tensor, Tensor]:
    return (
        params.tensors[f"{component}/conv{i}/weight"],
        params.tensors[f"{component}/conv{i}/bias"],
    )


def encode_batch(params: ModelParams, x: Tensor) -> tuple[Tensor, Tensor, Tensor]:
    """x: (B, 2(J-1)+2, T) with T a multiple of the downsampling factor.

    Returns (motion (B,M,T/8), skeleton (B,S,1), view (B,V,1))."""
    cfg = params.config
    t = x.shape[-1]
    if t % cfg.downsample != 0:
        raise DataError(f"time length {t} is not a multiple of {cfg.downsample}")
    if x.shape[-2] != cfg.motion_in:
        raise DataError(f"expected {cfg.motion_in} input channels, got {x.shape[-2]}")
    specs = cfg.layer_specs()

    h = x
    for i, spec in enumerate(specs["motion"]):
        w, b = _layer(params, "motion", i)
        h = tk.leaky_relu(tk.conv1d(h, w, b, spec), cfg.leaky_slope)
    motion = h

    pose = tk.narrow(x, -2, 0, cfg.pose_in)  # velocity channels are dynamic-only
    statics = []
    for component, pool in (("skeleton", "max"), ("view", "avg")):
        h = pose
        conv_specs = specs[component]
        last_conv = len(conv_specs) - 2  # final entry is the 1x1 reduction
        for i, spec in enumerate(conv_specs[:-1]):
            w, b = _layer(params, component, i)
            h = tk.leaky_relu(tk.conv1d(h, w, b, spec), cfg.leaky_slope)
            h = tk.global_pool1d(h, pool) if i == last_conv else tk.pool1d(h, pool)
        w, b = _layer(params, component, len(conv_specs) - 1)
        statics.append(tk.conv1d(h, w, b, conv_specs[-1]))
    return motion, statics[0], statics[1]


def assemble_decoder_input(motion: Tensor, skeleton: Tensor, view: Tensor) -> Tensor:
    """Tile the static codes along time and concatenate on channels."""
    length = motion.shape[-1]
    return tk.concat(
        [motion, tk.tile_time(skeleton, length), tk.tile_time(view, length)], axis=-2
    )


def decode_batch(
    params: ModelParams,
    motion: Tensor,
    skeleton: Tensor,
    view: Tensor,
    training: bool = False,
    rng: Optional[np.random.Generator] = None,
) -> Tensor:
    cfg = params.config
    if motion.shape[-2] != cfg.motion_out:
        raise DataError(f"motion code has {motion.shape[-2]} channels, expected {cfg.motion_out}")
    if skeleton.shape[-2] != cfg.skeleton_out or view.shape[-2] != cfg.view_out:
        raise DataError("static code widths do not match the architecture")
    if training and rng is None:
        raise DataError("training-mode decode needs an rng for dropout")
    specs = cfg.layer_specs()["decoder"]
    h = assemble_decoder_input(motion, skeleton, view)
    last = len(specs) - 1
    for i, spec in enumerate(specs):
        h = tk.upsample_nearest(h, 2)
        w, b = _layer(params, "decoder", i)
        h = tk.conv1d(h, w, b, spec)
        if i != last:
            if training:
                h = tk.dropout(h, cfg.dropout, training=True, rng=rng)
            h = tk.leaky_relu(h, cfg.leaky_slope)
    return h


@dataclass
class LatentCodes:
    motion: np.ndarray  # (M, ceil(T/8)), duration-dependent
    skeleton: np.ndarray  # (S,)
    view: np.ndarray  # (V,)


def encode(channels: np.ndarray, params: ModelParams) -> LatentCodes:
    x = Tensor(np.asarray(channels)[None])
    m, s, v = encode_batch(params, x)
    return LatentCodes(motion=m.data[0], skeleton=s.data[0, :, 0], view=v.data[0, :, 0])


def decode(codes: LatentCodes, params: ModelParams) -> np.ndarray:
    m = Tensor(codes.motion[None])
    s = Tensor(codes.skeleton[None, :, None])
    v = Tensor(codes.view[None, :, None])
    return decode_batch(params, m, s, v, training=False).data[0]
