"""Differentiable computation substrate: tensors, dense nets, Adam, checkpoints."""

from .checkpoint import load_nets, save_nets
from .net import ACTIVATIONS, DenseNet, Layer, perturb_last_layer
from .optim import AdamState, adam_step
from .tensor import (
    Tensor,
    as_tensor,
    backward,
    clip_min,
    concat,
    div,
    exp,
    grl,
    log,
    log_softmax,
    pick,
    relu,
    rows,
    softmax,
    sqrt,
    tmean,
    transpose,
    tsum,
)

__all__ = [
    "ACTIVATIONS",
    "AdamState",
    "DenseNet",
    "Layer",
    "Tensor",
    "adam_step",
    "as_tensor",
    "backward",
    "clip_min",
    "concat",
    "div",
    "exp",
    "grl",
    "load_nets",
    "log",
    "log_softmax",
    "perturb_last_layer",
    "pick",
    "relu",
    "rows",
    "save_nets",
    "softmax",
    "sqrt",
    "tmean",
    "transpose",
    "tsum",
]
