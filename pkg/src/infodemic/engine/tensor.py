"""Minimal dense-tensor reverse-mode differentiation.

A ``Tensor`` wraps a NumPy array plus a gradient slot and a link to the
operation that produced it.  Layers build the graph by calling ``node``
with a closure that routes the output gradient to the parents; ``backward``
replays those closures in reverse topological order.

Finite guards: with ``finite_checks`` enabled (the default) every forward
value and every accumulated gradient is checked, and NaN/Inf raises
``EngineError`` naming the offending operation.
"""

from __future__ import annotations

import numpy as np

finite_checks = True


class EngineError(Exception):
    pass


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward_fn", "name")

    def __init__(self, data, requires_grad: bool = False, name: str | None = None):
        self.data = data if isinstance(data, np.ndarray) else np.asarray(data)
        self.grad = None
        self.requires_grad = requires_grad
        self._parents: tuple[Tensor, ...] = ()
        self._backward_fn = None
        self.name = name

    @property
    def shape(self):
        return self.data.shape

    @property
    def dtype(self):
        return self.data.dtype

    def zero_grad(self) -> None:
        self.grad = None

    def __repr__(self):
        tag = f" {self.name!r}" if self.name else ""
        return f"<Tensor{tag} shape={self.data.shape} grad={'yes' if self.requires_grad else 'no'}>"


def node(data: np.ndarray, parents, backward_fn, what: str) -> Tensor:
    """Graph node for an op output; ``backward_fn(dY)`` must route gradients."""
    if finite_checks and not np.all(np.isfinite(data)):
        raise EngineError(f"non-finite values in forward output of {what}")
    out = Tensor(data, requires_grad=any(p.requires_grad for p in parents), name=what)
    if out.requires_grad:
        out._parents = tuple(parents)
        out._backward_fn = backward_fn
    return out


def accumulate(t: Tensor, g: np.ndarray, what: str = "gradient") -> None:
    """Add a gradient contribution to ``t`` (no-op for non-grad tensors)."""
    if not t.requires_grad:
        return
    if finite_checks and not np.all(np.isfinite(g)):
        raise EngineError(f"non-finite {what} flowing into {t.name or 'tensor'}")
    if t.grad is None:
        t.grad = np.array(g, dtype=t.data.dtype, copy=True)
    else:
        t.grad += g


def backward(loss: Tensor) -> None:
    """Reverse-accumulate gradients of a scalar loss into every parameter."""
    if loss.data.size != 1:
        raise EngineError("backward expects a scalar loss tensor")
    order: list[Tensor] = []
    seen: set[int] = set()
    stack: list[tuple[Tensor, bool]] = [(loss, False)]
    while stack:
        t, expanded = stack.pop()
        if expanded:
            order.append(t)
            continue
        if id(t) in seen or not t.requires_grad:
            continue
        seen.add(id(t))
        stack.append((t, True))
        for p in t._parents:
            stack.append((p, False))

    loss.grad = np.ones_like(loss.data)
    for t in reversed(order):
        if t._backward_fn is not None and t.grad is not None:
            t._backward_fn(t.grad)
