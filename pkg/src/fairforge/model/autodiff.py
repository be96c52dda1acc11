"""
Minimal reverse-mode automatic differentiation over numpy arrays.

A `Tensor` wraps a float64 array and, when it depends on a trainable input,
remembers its parents and a closure that pushes its gradient back to them.
`backward()` walks the recorded graph in reverse topological order. Besides
elementwise arithmetic and (batched) matrix products, the module provides the
fused operators the transformer needs: masked softmax, layer normalization,
GELU, ReLU, sigmoid and a clamped binary cross-entropy.
"""
from typing import Callable, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.special import expit

from .. import config
from ..errors import DimensionError

Operand = Union["Tensor", np.ndarray, float, int]
_GELU_C = float(np.sqrt(2.0 / np.pi))


def _unbroadcast(grad: np.ndarray, shape: Tuple[int, ...]) -> np.ndarray:
    """Sum `grad` down to `shape`, undoing numpy broadcasting."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


class Tensor:
    """
    A node of the differentiation graph.

    Attributes:
        data: The value, a float64 array.
        grad: Accumulated gradient of the final output, or None.
        requires_grad: Whether gradients flow into this node.
        op: Name of the operator that produced the node.
    """

    __array_priority__ = 100.0

    def __init__(self, data: Union[np.ndarray, float], parents: Sequence["Tensor"] = (),
                 op: str = "", requires_grad: bool = False):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad: Optional[np.ndarray] = None
        self.requires_grad = requires_grad or any(p.requires_grad for p in parents)
        self._parents: Tuple["Tensor", ...] = tuple(parents) if self.requires_grad else ()
        self._backward: Optional[Callable[[np.ndarray], None]] = None
        self.op = op

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    def __repr__(self) -> str:
        return f"Tensor(shape={self.shape}, op={self.op!r}, requires_grad={self.requires_grad})"

    def zero_grad(self) -> None:
        self.grad = None

    def _accumulate(self, grad: np.ndarray) -> None:
        if not self.requires_grad:
            return
        grad = _unbroadcast(grad, self.shape)
        self.grad = grad if self.grad is None else self.grad + grad

    def _attach(self, backward: Callable[[np.ndarray], None]) -> "Tensor":
        if self.requires_grad:
            self._backward = backward
        return self

    def backward(self, grad: Optional[np.ndarray] = None) -> None:
        """Propagate gradients from this node to every trainable ancestor."""
        order: List[Tensor] = []
        seen = set()
        stack: List[Tuple[Tensor, bool]] = [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                order.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            stack.extend((p, False) for p in node._parents if id(p) not in seen)

        self.grad = np.ones_like(self.data) if grad is None else np.asarray(grad, dtype=np.float64)
        for node in reversed(order):
            if node._backward is not None and node.grad is not None:
                node._backward(node.grad)

    # Arithmetic

    def __add__(self, other: Operand) -> "Tensor":
        other = as_tensor(other)
        out = Tensor(self.data + other.data, (self, other), "add")

        def backward(g: np.ndarray) -> None:
            self._accumulate(g)
            other._accumulate(g)
        return out._attach(backward)

    __radd__ = __add__

    def __mul__(self, other: Operand) -> "Tensor":
        other = as_tensor(other)
        out = Tensor(self.data * other.data, (self, other), "mul")

        def backward(g: np.ndarray) -> None:
            self._accumulate(g * other.data)
            other._accumulate(g * self.data)
        return out._attach(backward)

    __rmul__ = __mul__

    def __neg__(self) -> "Tensor":
        return self * -1.0

    def __sub__(self, other: Operand) -> "Tensor":
        return self + (-as_tensor(other))

    def __rsub__(self, other: Operand) -> "Tensor":
        return as_tensor(other) + (-self)

    def __matmul__(self, other: Operand) -> "Tensor":
        other = as_tensor(other)
        out = Tensor(self.data @ other.data, (self, other), "matmul")

        def backward(g: np.ndarray) -> None:
            self._accumulate(g @ np.swapaxes(other.data, -1, -2))
            other._accumulate(np.swapaxes(self.data, -1, -2) @ g)
        return out._attach(backward)

    # Shape

    def reshape(self, *shape: int) -> "Tensor":
        original = self.shape
        out = Tensor(self.data.reshape(*shape), (self,), "reshape")
        return out._attach(lambda g: self._accumulate(g.reshape(original)))

    def transpose(self, *axes: int) -> "Tensor":
        inverse = tuple(np.argsort(axes))
        out = Tensor(np.transpose(self.data, axes), (self,), "transpose")
        return out._attach(lambda g: self._accumulate(np.transpose(g, inverse)))

    def sum(self, axis: Optional[int] = None, keepdims: bool = False) -> "Tensor":
        original = self.shape
        out = Tensor(self.data.sum(axis=axis, keepdims=keepdims), (self,), "sum")

        def backward(g: np.ndarray) -> None:
            if axis is not None and not keepdims:
                g = np.expand_dims(g, axis)
            self._accumulate(np.broadcast_to(g, original))
        return out._attach(backward)

    def mean(self, axis: Optional[int] = None, keepdims: bool = False) -> "Tensor":
        count = self.data.size if axis is None else self.shape[axis]
        return self.sum(axis=axis, keepdims=keepdims) * (1.0 / count)


def as_tensor(value: Operand) -> Tensor:
    return value if isinstance(value, Tensor) else Tensor(value)


def parameter(data: np.ndarray) -> Tensor:
    """A trainable leaf."""
    return Tensor(np.array(data, dtype=np.float64), requires_grad=True, op="param")


def take_rows(x: Tensor, rows: np.ndarray) -> Tensor:
    """Select rows along the first axis."""
    rows = np.asarray(rows, dtype=np.int64)
    out = Tensor(x.data[rows], (x,), "take_rows")

    def backward(g: np.ndarray) -> None:
        full = np.zeros_like(x.data)
        np.add.at(full, rows, g)
        x._accumulate(full)
    return out._attach(backward)


def masked_softmax(x: Tensor, allowed: np.ndarray) -> Tensor:
    """
    Softmax over the last axis restricted to `allowed` positions.

    Every row must allow at least one position; disallowed positions get
    probability 0 and no gradient.
    """
    allowed = np.broadcast_to(np.asarray(allowed, dtype=bool), x.shape)
    logits = np.where(allowed, x.data, -np.inf)
    logits = logits - logits.max(axis=-1, keepdims=True)
    e = np.where(allowed, np.exp(logits), 0.0)
    s = e / e.sum(axis=-1, keepdims=True)
    out = Tensor(s, (x,), "masked_softmax")

    def backward(g: np.ndarray) -> None:
        x._accumulate(s * (g - (g * s).sum(axis=-1, keepdims=True)))
    return out._attach(backward)


def layer_norm(x: Tensor, eps: float = 1e-5) -> Tensor:
    """Normalize the last axis to zero mean and unit variance (no affine part)."""
    mu = x.data.mean(axis=-1, keepdims=True)
    centered = x.data - mu
    inv_std = 1.0 / np.sqrt((centered ** 2).mean(axis=-1, keepdims=True) + eps)
    xhat = centered * inv_std
    out = Tensor(xhat, (x,), "layer_norm")

    def backward(g: np.ndarray) -> None:
        gm = g.mean(axis=-1, keepdims=True)
        gx = (g * xhat).mean(axis=-1, keepdims=True)
        x._accumulate(inv_std * (g - gm - xhat * gx))
    return out._attach(backward)


def gelu(x: Tensor) -> Tensor:
    """GELU, tanh approximation."""
    v = x.data
    t = np.tanh(_GELU_C * (v + 0.044715 * v ** 3))
    out = Tensor(0.5 * v * (1.0 + t), (x,), "gelu")

    def backward(g: np.ndarray) -> None:
        dt = (1.0 - t ** 2) * _GELU_C * (1.0 + 3 * 0.044715 * v ** 2)
        x._accumulate(g * (0.5 * (1.0 + t) + 0.5 * v * dt))
    return out._attach(backward)


def relu(x: Tensor) -> Tensor:
    active = x.data > 0
    out = Tensor(np.where(active, x.data, 0.0), (x,), "relu")
    return out._attach(lambda g: x._accumulate(g * active))


def sigmoid(x: Tensor) -> Tensor:
    s = expit(x.data)
    out = Tensor(s, (x,), "sigmoid")
    return out._attach(lambda g: x._accumulate(g * s * (1.0 - s)))


def binary_cross_entropy(probs: Tensor, targets: np.ndarray,
                         clamp: float = config.BCE_CLAMP) -> Tensor:
    """
    Mean binary cross-entropy with probabilities clamped to [clamp, 1 - clamp].

    Clamped entries pass no gradient.
    """
    y = np.asarray(targets, dtype=np.float64)
    if y.shape != probs.shape:
        raise DimensionError(f"targets {y.shape} do not match predictions {probs.shape}")
    p = np.clip(probs.data, clamp, 1.0 - clamp)
    n = max(p.size, 1)
    value = -np.mean(y * np.log(p) + (1.0 - y) * np.log(1.0 - p))
    inside = (probs.data >= clamp) & (probs.data <= 1.0 - clamp)
    out = Tensor(value, (probs,), "bce")

    def backward(g: np.ndarray) -> None:
        dp = -(y / p - (1.0 - y) / (1.0 - p)) / n
        probs._accumulate(g * dp * inside)
    return out._attach(backward)


def total(tensors: Iterable[Tensor]) -> Tensor:
    """Sum of scalar tensors."""
    result: Optional[Tensor] = None
    for t in tensors:
        result = t if result is None else result + t
    if result is None:
        raise ValueError("nothing to sum")
    return result
