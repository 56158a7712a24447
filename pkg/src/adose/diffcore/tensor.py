"""Reverse-mode automatic differentiation over numpy arrays.

Only the operations needed by feed-forward dense networks and the training
losses are implemented. Reductions accumulate in float64 regardless of the
tensor dtype, so float32 parameter stacks keep stable loss sums.
"""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

__all__ = [
    "Tensor",
    "as_tensor",
    "add",
    "sub",
    "mul",
    "div",
    "neg",
    "matmul",
    "transpose",
    "relu",
    "exp",
    "log",
    "sqrt",
    "clip_min",
    "tsum",
    "tmean",
    "concat",
    "rows",
    "pick",
    "log_softmax",
    "softmax",
    "grl",
    "backward",
]


class Tensor:
    """An ndarray with an optional gradient and a backward closure."""

    __slots__ = ("data", "grad", "requires_grad", "_parents", "_bw")

    def __init__(
        self,
        data: np.ndarray,
        requires_grad: bool = False,
        parents: tuple["Tensor", ...] = (),
        bw: Callable[[np.ndarray], None] | None = None,
    ):
        self.data = np.asarray(data)
        self.grad: np.ndarray | None = None
        self.requires_grad = requires_grad or any(p.requires_grad for p in parents)
        self._parents = parents
        self._bw = bw

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def dtype(self):
        return self.data.dtype

    def item(self) -> float:
        return float(self.data)

    def zero_grad(self) -> None:
        self.grad = None

    def _accumulate(self, g: np.ndarray) -> None:
        if self.grad is None:
            self.grad = np.zeros_like(self.data)
        self.grad += g.astype(self.data.dtype, copy=False)

    def backward(self) -> None:
        backward(self)

    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        return div(self, other)

    def __matmul__(self, other):
        return matmul(self, other)

    def __neg__(self):
        return neg(self)

    def __repr__(self) -> str:
        return f"Tensor(shape={self.data.shape}, requires_grad={self.requires_grad})"


def as_tensor(x, dtype=None) -> Tensor:
    if isinstance(x, Tensor):
        return x
    arr = np.asarray(x, dtype=dtype)
    return Tensor(arr)


def _unbroadcast(g: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Reduce a broadcast gradient back to the original operand shape."""
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for axis, dim in enumerate(shape):
        if dim == 1 and g.shape[axis] != 1:
            g = g.sum(axis=axis, keepdims=True)
    return g.reshape(shape)


def add(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    out = Tensor(a.data + b.data, parents=(a, b))

    def bw(g):
        if a.requires_grad:
            a._accumulate(_unbroadcast(g, a.data.shape))
        if b.requires_grad:
            b._accumulate(_unbroadcast(g, b.data.shape))

    out._bw = bw
    return out


def sub(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    out = Tensor(a.data - b.data, parents=(a, b))

    def bw(g):
        if a.requires_grad:
            a._accumulate(_unbroadcast(g, a.data.shape))
        if b.requires_grad:
            b._accumulate(_unbroadcast(-g, b.data.shape))

    out._bw = bw
    return out


def mul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    out = Tensor(a.data * b.data, parents=(a, b))

    def bw(g):
        if a.requires_grad:
            a._accumulate(_unbroadcast(g * b.data, a.data.shape))
        if b.requires_grad:
            b._accumulate(_unbroadcast(g * a.data, b.data.shape))

    out._bw = bw
    return out


def div(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    out = Tensor(a.data / b.data, parents=(a, b))

    def bw(g):
        if a.requires_grad:
            a._accumulate(_unbroadcast(g / b.data, a.data.shape))
        if b.requires_grad:
            b._accumulate(_unbroadcast(-g * a.data / (b.data * b.data), b.data.shape))

    out._bw = bw
    return out


def neg(a) -> Tensor:
    a = as_tensor(a)
    out = Tensor(-a.data, parents=(a,))

    def bw(g):
        if a.requires_grad:
            a._accumulate(-g)

    out._bw = bw
    return out


def matmul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    out = Tensor(a.data @ b.data, parents=(a, b))

    def bw(g):
        if a.requires_grad:
            a._accumulate(g @ b.data.T)
        if b.requires_grad:
            b._accumulate(a.data.T @ g)

    out._bw = bw
    return out


def transpose(a) -> Tensor:
    a = as_tensor(a)
    out = Tensor(a.data.T, parents=(a,))

    def bw(g):
        if a.requires_grad:
            a._accumulate(g.T)

    out._bw = bw
    return out


def relu(a) -> Tensor:
    a = as_tensor(a)
    out = Tensor(np.maximum(a.data, 0), parents=(a,))

    def bw(g):
        if a.requires_grad:
            a._accumulate(g * (a.data > 0))

    out._bw = bw
    return out


def exp(a) -> Tensor:
    a = as_tensor(a)
    val = np.exp(a.data)
    out = Tensor(val, parents=(a,))

    def bw(g):
        if a.requires_grad:
            a._accumulate(g * val)

    out._bw = bw
    return out


def log(a) -> Tensor:
    a = as_tensor(a)
    out = Tensor(np.log(a.data), parents=(a,))

    def bw(g):
        if a.requires_grad:
            a._accumulate(g / a.data)

    out._bw = bw
    return out


def sqrt(a) -> Tensor:
    a = as_tensor(a)
    val = np.sqrt(a.data)
    out = Tensor(val, parents=(a,))

    def bw(g):
        if a.requires_grad:
            a._accumulate(g * 0.5 / val)

    out._bw = bw
    return out


def clip_min(a, lo: float) -> Tensor:
    """Elementwise max(a, lo); gradient passes only where a > lo."""
    a = as_tensor(a)
    out = Tensor(np.maximum(a.data, lo), parents=(a,))

    def bw(g):
        if a.requires_grad:
            a._accumulate(g * (a.data > lo))

    out._bw = bw
    return out


def tsum(a, axis: int | None = None, keepdims: bool = False) -> Tensor:
    """Sum with float64 accumulation, cast back to the input dtype."""
    a = as_tensor(a)
    val = a.data.sum(axis=axis, keepdims=keepdims, dtype=np.float64)
    out = Tensor(np.asarray(val, dtype=a.data.dtype), parents=(a,))

    def bw(g):
        if not a.requires_grad:
            return
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        a._accumulate(np.broadcast_to(g, a.data.shape).copy())

    out._bw = bw
    return out


def tmean(a, axis: int | None = None, keepdims: bool = False) -> Tensor:
    a = as_tensor(a)
    n = a.data.size if axis is None else a.data.shape[axis]
    return mul(tsum(a, axis=axis, keepdims=keepdims), 1.0 / n)


def concat(parts: Sequence[Tensor], axis: int = 1) -> Tensor:
    parts = [as_tensor(p) for p in parts]
    out = Tensor(np.concatenate([p.data for p in parts], axis=axis), parents=tuple(parts))
    offsets = np.cumsum([0] + [p.data.shape[axis] for p in parts])

    def bw(g):
        for p, lo, hi in zip(parts, offsets[:-1], offsets[1:]):
            if p.requires_grad:
                idx = [slice(None)] * g.ndim
                idx[axis] = slice(lo, hi)
                p._accumulate(g[tuple(idx)])

    out._bw = bw
    return out


def rows(a, index: np.ndarray) -> Tensor:
    """Gather a subset of rows; the gradient scatter-adds back."""
    a = as_tensor(a)
    index = np.asarray(index)
    out = Tensor(a.data[index], parents=(a,))

    def bw(g):
        if a.requires_grad:
            full = np.zeros_like(a.data)
            np.add.at(full, index, g)
            a._accumulate(full)

    out._bw = bw
    return out


def pick(a, cols: np.ndarray) -> Tensor:
    """Per-row column gather: out[i] = a[i, cols[i]]."""
    a = as_tensor(a)
    cols = np.asarray(cols)
    ar = np.arange(a.data.shape[0])
    out = Tensor(a.data[ar, cols], parents=(a,))

    def bw(g):
        if a.requires_grad:
            full = np.zeros_like(a.data)
            np.add.at(full, (ar, cols), g)
            a._accumulate(full)

    out._bw = bw
    return out


def log_softmax(a, axis: int = -1) -> Tensor:
    a = as_tensor(a)
    shifted = a.data - a.data.max(axis=axis, keepdims=True)
    lse = np.log(np.exp(shifted).sum(axis=axis, keepdims=True, dtype=np.float64))
    val = (shifted - lse).astype(a.data.dtype)
    out = Tensor(val, parents=(a,))

    def bw(g):
        if a.requires_grad:
            soft = np.exp(val)
            a._accumulate(g - soft * g.sum(axis=axis, keepdims=True))

    out._bw = bw
    return out


def softmax(a, axis: int = -1) -> Tensor:
    return exp(log_softmax(a, axis=axis))


def grl(a, coeff: float) -> Tensor:
    """Gradient reversal: identity on values, -coeff scaling on gradients."""
    a = as_tensor(a)
    if coeff < 0:
        raise ValueError(f"gradient reversal coefficient must be >= 0, got {coeff}")
    out = Tensor(a.data, parents=(a,))

    def bw(g):
        if a.requires_grad:
            a._accumulate(-coeff * g)

    out._bw = bw
    return out


def backward(loss: Tensor) -> None:
    """Backpropagate from a scalar loss, accumulating into ``.grad`` fields."""
    if loss.data.ndim != 0:
        raise ValueError(f"backward requires a scalar loss, got shape {loss.data.shape}")

    topo: list[Tensor] = []
    seen: set[int] = set()
    stack: list[tuple[Tensor, bool]] = [(loss, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            topo.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in node._parents:
            if id(p) not in seen and p.requires_grad:
                stack.append((p, False))

    loss._accumulate(np.ones_like(loss.data))
    for node in reversed(topo):
        if node._bw is not None and node.grad is not None:
            node._bw(node.grad)
