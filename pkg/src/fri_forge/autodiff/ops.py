"""
Differentiable primitives.

Only what the encoder and the training objective need: add, subtract, multiply
(with bias-style broadcasting of the second operand), matmul, conv1d, gelu,
reshape/flatten, reduce_sum, abs, plus two composite-free graph ops used by the
joint objective: peak_normalize and linear_response.
"""

from __future__ import annotations

import math
from collections.abc import Callable

import numpy as np
import numpy.typing as npt
from numpy.lib.stride_tricks import sliding_window_view
from scipy.special import erf

from ..errors import ConfigError
from ..models import FloatArray
from .node import Node, as_node

__all__ = [
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
]

_SQRT2 = math.sqrt(2.0)
_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


def _unbroadcast(g: FloatArray, shape: tuple[int, ...]) -> FloatArray:
    """Sum `g` down to `shape` (inverse of numpy broadcasting)."""
    if g.shape == shape:
        return g
    extra = g.ndim - len(shape)
    out = g.sum(axis=tuple(range(extra))) if extra > 0 else g
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and out.shape[i] != 1)
    if axes:
        out = out.sum(axis=axes, keepdims=True)
    return out.reshape(shape)


def _check_broadcast(op: str, a: Node, b: Node) -> None:
    """The second operand may broadcast onto the first, never the other way round."""
    try:
        out = np.broadcast_shapes(a.shape, b.shape)
    except ValueError:
        out = None
    if out != a.shape:
        raise ConfigError(f"{op}: shape mismatch {a.shape} vs {b.shape}")


# ----------------------------------------------------------------------------
# Elementwise
# ----------------------------------------------------------------------------


def add(a: Node | npt.ArrayLike, b: Node | npt.ArrayLike) -> Node:
    na, nb = as_node(a), as_node(b)
    _check_broadcast("add", na, nb)

    def _bw(g: FloatArray) -> tuple[FloatArray, FloatArray]:
        return g, _unbroadcast(g, nb.shape)

    return Node(na.value + nb.value, (na, nb), "add", _bw)


def subtract(a: Node | npt.ArrayLike, b: Node | npt.ArrayLike) -> Node:
    na, nb = as_node(a), as_node(b)
    _check_broadcast("subtract", na, nb)

    def _bw(g: FloatArray) -> tuple[FloatArray, FloatArray]:
        return g, -_unbroadcast(g, nb.shape)

    return Node(na.value - nb.value, (na, nb), "subtract", _bw)


def multiply(a: Node | npt.ArrayLike, b: Node | npt.ArrayLike) -> Node:
    na, nb = as_node(a), as_node(b)
    _check_broadcast("multiply", na, nb)

    def _bw(g: FloatArray) -> tuple[FloatArray, FloatArray]:
        return g * nb.value, _unbroadcast(g * na.value, nb.shape)

    return Node(na.value * nb.value, (na, nb), "multiply", _bw)


def abs_(x: Node) -> Node:
    def _bw(g: FloatArray) -> tuple[FloatArray]:
        return (g * np.sign(x.value),)

    return Node(np.abs(x.value), (x,), "abs", _bw)


def gelu(x: Node) -> Node:
    """Exact GELU, x * Phi(x)."""
    cdf = 0.5 * (1.0 + erf(x.value / _SQRT2))

    def _bw(g: FloatArray) -> tuple[FloatArray]:
        pdf = _INV_SQRT_2PI * np.exp(-0.5 * x.value**2)
        return (g * (cdf + x.value * pdf),)

    return Node(x.value * cdf, (x,), "gelu", _bw)


# ----------------------------------------------------------------------------
# Linear algebra
# ----------------------------------------------------------------------------


def matmul(a: Node, b: Node) -> Node:
    if a.value.ndim != 2 or b.value.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ConfigError(f"matmul: shape mismatch {a.shape} vs {b.shape}")

    def _bw(g: FloatArray) -> tuple[FloatArray, FloatArray]:
        return g @ b.value.T, a.value.T @ g

    return Node(a.value @ b.value, (a, b), "matmul", _bw)


def conv1d(x: Node, w: Node) -> Node:
    """
    Stride-1 cross-correlation with zero padding that preserves length.

    x: B x C x N, w: O x C x K (K odd) -> B x O x N
    """
    if x.value.ndim != 3 or w.value.ndim != 3 or x.shape[1] != w.shape[1]:
        raise ConfigError(f"conv1d: shape mismatch {x.shape} vs {w.shape}")
    K = w.shape[2]
    if K % 2 == 0:
        raise ConfigError(f"conv1d: kernel size must be odd, got {K}")
    pad = K // 2
    N = x.shape[2]
    xp = np.pad(x.value, ((0, 0), (0, 0), (pad, pad)))
    windows = sliding_window_view(xp, K, axis=2)  # B x C x N x K
    out = np.einsum("bcnk,ock->bon", windows, w.value, optimize=True)

    def _bw(g: FloatArray) -> tuple[FloatArray, FloatArray]:
        gw = np.einsum("bon,bcnk->ock", g, windows, optimize=True)
        gxp = np.zeros_like(xp)
        for k in range(K):
            gxp[:, :, k : k + N] += np.einsum("bon,oc->bcn", g, w.value[:, :, k], optimize=True)
        return gxp[:, :, pad : pad + N], gw

    return Node(out, (x, w), "conv1d", _bw)


# ----------------------------------------------------------------------------
# Shape
# ----------------------------------------------------------------------------


def reshape(x: Node, shape: tuple[int, ...]) -> Node:
    try:
        out = x.value.reshape(shape)
    except ValueError as e:
        raise ConfigError(f"reshape: cannot view {x.shape} as {shape}") from e

    def _bw(g: FloatArray) -> tuple[FloatArray]:
        return (g.reshape(x.shape),)

    return Node(out, (x,), "reshape", _bw)


def flatten(x: Node) -> Node:
    """Keep the leading (batch) axis, merge the rest."""
    return reshape(x, (x.shape[0], -1))


def reduce_sum(x: Node, axis: int | None = None) -> Node:
    out = np.sum(x.value, axis=axis)

    def _bw(g: FloatArray) -> tuple[FloatArray]:
        gg = g if axis is None else np.expand_dims(g, axis)
        return (np.broadcast_to(gg, x.shape).copy(),)

    return Node(out, (x,), "reduce_sum", _bw)


# ----------------------------------------------------------------------------
# Graph ops for the joint objective
# ----------------------------------------------------------------------------


def peak_normalize(x: Node) -> Node:
    """Divide each row of a B x N array by its max-abs entry; all-zero rows pass through."""
    if x.value.ndim != 2:
        raise ConfigError(f"peak_normalize expects B x N, got {x.shape}")
    rows = np.arange(x.shape[0])
    idx = np.argmax(np.abs(x.value), axis=1)
    peak = x.value[rows, idx]
    m = np.abs(peak)
    m = np.where(m == 0.0, 1.0, m)
    out = x.value / m[:, None]

    def _bw(g: FloatArray) -> tuple[FloatArray]:
        gx = g / m[:, None]
        corr = np.sum(g * x.value, axis=1) / m**2
        gx[rows, idx] -= corr * np.sign(peak)
        return (gx,)

    return Node(out, (x,), "peak_normalize", _bw)


def linear_response(
    value: npt.ArrayLike,
    vjp: Callable[[FloatArray], FloatArray],
    parent: Node | None = None,
) -> Node:
    """
    Node whose value was computed outside the graph and whose dependence on
    `parent` is given by a vector-Jacobian product.
    """
    if parent is None:
        return Node(value, (), "linear_response")

    def _bw(g: FloatArray) -> tuple[FloatArray]:
        return (np.asarray(vjp(g), dtype=np.float64).reshape(parent.shape),)

    return Node(value, (parent,), "linear_response", _bw)
