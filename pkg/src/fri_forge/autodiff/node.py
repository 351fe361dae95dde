"""
Graph nodes for reverse-mode differentiation.

A Node holds a float64 array, the operation that produced it, references to its
parents and a closure mapping the output cotangent to one cotangent per parent.
Nodes that cannot reach a trainable Parameter record no lineage at all.
"""

from __future__ import annotations

from collections.abc import Callable, Iterable, Sequence

import numpy as np
import numpy.typing as npt

from ..errors import ConfigError
from ..models import FloatArray

__all__ = ["Node", "Parameter", "backward", "zero_grads", "as_node"]

BackwardFn = Callable[[FloatArray], Sequence[FloatArray | None]]


class Node:
    __slots__ = ("value", "grad", "parents", "op", "_backward", "requires_grad")

    def __init__(
        self,
        value: npt.ArrayLike,
        parents: Sequence[Node] = (),
        op: str = "const",
        backward_fn: BackwardFn | None = None,
    ) -> None:
        self.value: FloatArray = np.asarray(value, dtype=np.float64)
        self.requires_grad: bool = any(p.requires_grad for p in parents)
        # constants keep no lineage
        self.parents: tuple[Node, ...] = tuple(parents) if self.requires_grad else ()
        self._backward: BackwardFn | None = backward_fn if self.requires_grad else None
        self.op = op
        self.grad: FloatArray = np.zeros_like(self.value)

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(self.value.shape)

    def __repr__(self) -> str:
        return f"Node(op={self.op!r}, shape={self.shape})"


class Parameter(Node):
    """Trainable leaf with AdamW moment accumulators of the same shape."""

    __slots__ = ("name", "m", "v")

    def __init__(self, value: npt.ArrayLike, name: str = "") -> None:
        super().__init__(value, (), "param", None)
        self.requires_grad = True
        self.name = name
        self.m: FloatArray = np.zeros_like(self.value)
        self.v: FloatArray = np.zeros_like(self.value)

    def __repr__(self) -> str:
        return f"Parameter(name={self.name!r}, shape={self.shape})"


def as_node(x: Node | npt.ArrayLike) -> Node:
    return x if isinstance(x, Node) else Node(x)


def _topological(root: Node) -> list[Node]:
    order: list[Node] = []
    seen: set[int] = set()
    stack: list[tuple[Node, bool]] = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in node.parents:
            if id(p) not in seen:
                stack.append((p, False))
    return order


def backward(root: Node) -> None:
    """
    Accumulate d(root)/d(param) into every reachable Parameter's `grad`.

    Parameter gradients accumulate across calls until `zero_grads`; intermediate
    nodes get a fresh gradient on every call.
    """
    if root.value.size != 1:
        raise ConfigError(f"backward needs a scalar root, got shape {root.shape}")
    if not root.requires_grad:
        return
    order = _topological(root)
    pending: dict[int, FloatArray] = {id(root): np.ones_like(root.value)}
    for node in reversed(order):
        g = pending.pop(id(node), None)
        if g is None:
            continue
        if isinstance(node, Parameter):
            node.grad += g
            continue
        node.grad = g
        if node._backward is None:
            continue
        for parent, pg in zip(node.parents, node._backward(g), strict=True):
            if pg is None or not parent.requires_grad:
                continue
            if pg.shape != parent.value.shape:
                raise ConfigError(
                    f"{node.op} backward produced gradient shape {pg.shape} for parent "
                    f"shape {parent.value.shape}"
                )
            key = id(parent)
            if key in pending:
                pending[key] = pending[key] + pg
            else:
                pending[key] = pg


def zero_grads(params: Iterable[Parameter]) -> None:
    for p in params:
        p.grad = np.zeros_like(p.value)
