"""
fri_forge.autodiff

A small reverse-mode differentiation engine over numpy arrays: just the
primitives the delay encoder and the joint kernel/encoder objective use.
"""

from .checkpoint import load_checkpoint, save_checkpoint
from .node import Node, Parameter, as_node, backward, zero_grads
from .ops import (
    abs_,
    add,
    conv1d,
    flatten,
    gelu,
    linear_response,
    matmul,
    multiply,
    peak_normalize,
    reduce_sum,
    reshape,
    subtract,
)
from .optim import AdamW, adamw_step, cosine_lr

__all__ = [
    "Node",
    "Parameter",
    "as_node",
    "backward",
    "zero_grads",
    "add",
    "subtract",
    "multiply",
    "matmul",
    "conv1d",
    "gelu",
    "reshape",
    "flatten",
    "reduce_sum",
    "abs_",
    "peak_normalize",
    "linear_response",
    "AdamW",
    "adamw_step",
    "cosine_lr",
    "save_checkpoint",
    "load_checkpoint",
]
