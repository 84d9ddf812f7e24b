"""Minimal numerical core: tensors, the layer set the pose autoencoder
needs, reverse-mode gradients, and the AmsGrad optimizer."""

from .gradcheck import (
    check_gradients,
    numerical_gradient,
    relative_error,
    sampled_parameter_errors,
)
from .ops import (
    ConvSpec,
    conv1d,
    dropout,
    global_pool1d,
    leaky_relu,
    pool1d,
    reflect_indices,
    relu,
    tile_time,
    upsample_nearest,
)
from .optim import AmsGrad
from .tensor import Tensor, add, as_tensor, concat, mul, narrow, reshape, sqrt, square, tmean, tsum

__all__ = [
    "AmsGrad",
    "ConvSpec",
    "Tensor",
    "add",
    "as_tensor",
    "check_gradients",
    "concat",
    "conv1d",
    "dropout",
    "global_pool1d",
    "leaky_relu",
    "mul",
    "narrow",
    "numerical_gradient",
    "pool1d",
    "reflect_indices",
    "relative_error",
    "relu",
    "reshape",
    "sampled_parameter_errors",
    "sqrt",
    "square",
    "tile_time",
    "tmean",
    "tsum",
    "upsample_nearest",
]
