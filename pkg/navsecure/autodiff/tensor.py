"""
Reverse-mode automatic differentiation over small dense float64 tensors.

A :class:`Tape` records every operation applied to tensors that descend from one of its watched leaves.
Because operations are appended as they are evaluated, the recording order is already a topological
order, so :func:`backward` only has to walk it in reverse. Tensors that carry no tape are constants.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from navsecure.exceptions.numerics import DomainError, GradientError, ShapeError

BackwardFn = Callable[[np.ndarray], Sequence[Optional[np.ndarray]]]

# np.exp overflows float64 just above this.
_EXP_LIMIT = 709.0


class Tensor:
    """
    A float64 array, optionally bound to the tape that records how it was produced.
    """
    __slots__ = ("value", "tape", "name")

    # Make numpy hand binary operators back to us instead of broadcasting over the object.
    __array_ufunc__ = None

    def __init__(self, value: Union[np.ndarray, float, Sequence], tape: Optional["Tape"] = None,
                 name: Optional[str] = None):
        self.value: np.ndarray = np.asarray(value, dtype=np.float64)
        self.tape = tape
        self.name = name

    @property
    def shape(self) -> Tuple[int, ...]:
        return tuple(self.value.shape)

    @property
    def ndim(self) -> int:
        return self.value.ndim

    @property
    def size(self) -> int:
        return int(self.value.size)

    @property
    def requires_grad(self) -> bool:
        return self.tape is not None

    def item(self) -> float:
        if self.size != 1:
            raise ShapeError(f"Only single-valued tensors can be converted to a float, got shape {self.shape}.")
        return float(self.value.reshape(()))

    def numpy(self) -> np.ndarray:
        return self.value.copy()

    def __repr__(self) -> str:
        label = f", name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.shape}{label}, tracked={self.requires_grad})"

    def __add__(self, other) -> "Tensor":
        return add(self, other)

    def __radd__(self, other) -> "Tensor":
        return add(other, self)

    def __sub__(self, other) -> "Tensor":
        return sub(self, other)

    def __rsub__(self, other) -> "Tensor":
        return sub(other, self)

    def __mul__(self, other) -> "Tensor":
        return mul(self, other)

    def __rmul__(self, other) -> "Tensor":
        return mul(other, self)

    def __truediv__(self, other) -> "Tensor":
        return div(self, other)

    def __rtruediv__(self, other) -> "Tensor":
        return div(other, self)

    def __neg__(self) -> "Tensor":
        return neg(self)

    def __matmul__(self, other) -> "Tensor":
        return matmul(self, other)

    def __getitem__(self, index) -> "Tensor":
        return take(self, index)

    def sum(self, axis: Optional[int] = None, keepdims: bool = False) -> "Tensor":
        return reduce_sum(self, axis, keepdims)

    def mean(self, axis: Optional[int] = None, keepdims: bool = False) -> "Tensor":
        return reduce_mean(self, axis, keepdims)

    def reshape(self, *shape: int) -> "Tensor":
        return reshape(self, shape)

    def tanh(self) -> "Tensor":
        return tanh(self)

    def sigmoid(self) -> "Tensor":
        return sigmoid(self)

    def exp(self) -> "Tensor":
        return exp(self)

    def log(self) -> "Tensor":
        return log(self)

    def square(self) -> "Tensor":
        return square(self)


@dataclass
class Node:
    """
    One recorded operation: the tensor it produced, the tensors it consumed and its local derivative.
    """
    output: Tensor
    parents: Tuple[Tensor, ...]
    backward: BackwardFn


class Tape:
    """
    Records operations for a single forward pass. A tape is owned by one thread at a time; independent
    tapes can be used concurrently.
    """

    def __init__(self):
        self.nodes: List[Node] = []
        self.leaves: Dict[str, Tensor] = {}

    def __len__(self) -> int:
        return len(self.nodes)

    def variable(self, name: str, value) -> Tensor:
        """
        Registers a named leaf whose gradient :func:`backward` will report.

        :param name: Unique name of the leaf on this tape.
        :param value: Initial value, copied so later parameter updates don't leak into the recording.
        :return: The tracked leaf tensor.
        """
        if name in self.leaves:
            raise GradientError(f"'{name}' is already watched by this tape.")
        leaf = Tensor(np.array(value, dtype=np.float64, copy=True), tape=self, name=name)
        self.leaves[name] = leaf
        return leaf

    def watch(self, values: Mapping[str, np.ndarray], prefix: str = "") -> Dict[str, Tensor]:
        """
        Registers every entry of a name -> array mapping (usually a ParameterSet) as a leaf.

        :param values: Arrays to watch.
        :param prefix: Prepended to every leaf name, so several parameter sets can share one tape.
        :return: Leaves keyed by their un-prefixed names.
        """
        return {name: self.variable(prefix + name, value) for name, value in values.items()}

    def record(self, output: Tensor, parents: Tuple[Tensor, ...], backward_fn: BackwardFn) -> None:
        self.nodes.append(Node(output, parents, backward_fn))


def as_tensor(value) -> Tensor:
    return value if isinstance(value, Tensor) else Tensor(value)


def _apply(value: np.ndarray, parents: Tuple[Tensor, ...], backward_fn: BackwardFn) -> Tensor:
    tape = None
    for parent in parents:
        if parent.tape is None:
            continue
        if tape is None:
            tape = parent.tape
        elif parent.tape is not tape:
            raise GradientError("Tensors recorded on different tapes cannot be combined.")
    output = Tensor(value, tape)
    if tape is not None:
        tape.record(output, parents, backward_fn)
    return output


def _unbroadcast(grad: np.ndarray, shape: Tuple[int, ...]) -> np.ndarray:
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad.reshape(shape)


def _check_broadcast(a: Tensor, b: Tensor, operation: str) -> None:
    try:
        np.broadcast_shapes(a.shape, b.shape)
    except ValueError:
        raise ShapeError(f"Cannot {operation} tensors of shapes {a.shape} and {b.shape}.") from None


def add(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _check_broadcast(a, b, "add")
    return _apply(a.value + b.value, (a, b),
                  lambda g: (_unbroadcast(g, a.shape), _unbroadcast(g, b.shape)))


def sub(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _check_broadcast(a, b, "subtract")
    return _apply(a.value - b.value, (a, b),
                  lambda g: (_unbroadcast(g, a.shape), _unbroadcast(-g, b.shape)))


def mul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _check_broadcast(a, b, "multiply")
    return _apply(a.value * b.value, (a, b),
                  lambda g: (_unbroadcast(g * b.value, a.shape), _unbroadcast(g * a.value, b.shape)))


def div(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _check_broadcast(a, b, "divide")
    if np.any(b.value == 0.0):
        raise DomainError(f"Division by zero in a tensor of shape {b.shape}.")
    return _apply(a.value / b.value, (a, b),
                  lambda g: (_unbroadcast(g / b.value, a.shape),
                             _unbroadcast(-g * a.value / np.square(b.value), b.shape)))


def neg(a) -> Tensor:
    a = as_tensor(a)
    return _apply(-a.value, (a,), lambda g: (-g,))


def matmul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ShapeError(f"Cannot matrix-multiply tensors of shapes {a.shape} and {b.shape}.")
    return _apply(a.value @ b.value, (a, b), lambda g: (g @ b.value.T, a.value.T @ g))


def concat(tensors: Sequence, axis: int = -1) -> Tensor:
    parts = tuple(as_tensor(t) for t in tensors)
    if not parts:
        raise ShapeError("Cannot concatenate an empty list of tensors.")
    try:
        value = np.concatenate([p.value for p in parts], axis=axis)
    except ValueError:
        raise ShapeError(f"Cannot concatenate tensors of shapes {[p.shape for p in parts]} "
                         f"along axis {axis}.") from None
    boundaries = np.cumsum([p.value.shape[axis] for p in parts])[:-1]
    return _apply(value, parts, lambda g: tuple(np.split(g, boundaries, axis=axis)))


def stack(tensors: Sequence, axis: int = 0) -> Tensor:
    parts = tuple(as_tensor(t) for t in tensors)
    if not parts or len({p.shape for p in parts}) != 1:
        raise ShapeError(f"Cannot stack tensors of shapes {[p.shape for p in parts]}.")
    value = np.stack([p.value for p in parts], axis=axis)
    return _apply(value, parts,
                  lambda g: tuple(np.take(g, i, axis=axis) for i in range(len(parts))))


def take(a, index) -> Tensor:
    """
    Basic and advanced indexing; the gradient is scattered back with accumulation for repeated indices.
    """
    a = as_tensor(a)
    try:
        value = a.value[index]
    except IndexError as e:
        raise ShapeError(f"Index {index!r} is invalid for a tensor of shape {a.shape}: {e}") from None

    def backward_fn(g):
        full = np.zeros_like(a.value)
        np.add.at(full, index, g)
        return (full,)

    return _apply(np.array(value, dtype=np.float64), (a,), backward_fn)


def reshape(a, shape: Sequence[int]) -> Tensor:
    a = as_tensor(a)
    try:
        value = a.value.reshape(tuple(shape))
    except ValueError:
        raise ShapeError(f"Cannot reshape a tensor of shape {a.shape} into {tuple(shape)}.") from None
    return _apply(value, (a,), lambda g: (g.reshape(a.shape),))


def tanh(a) -> Tensor:
    a = as_tensor(a)
    y = np.tanh(a.value)
    return _apply(y, (a,), lambda g: (g * (1.0 - y * y),))


def _sigmoid(x: np.ndarray) -> np.ndarray:
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def sigmoid(a) -> Tensor:
    a = as_tensor(a)
    y = _sigmoid(a.value)
    return _apply(y, (a,), lambda g: (g * y * (1.0 - y),))


def exp(a) -> Tensor:
    a = as_tensor(a)
    if np.any(a.value > _EXP_LIMIT):
        raise DomainError(f"exp overflows for inputs above {_EXP_LIMIT}, got max {a.value.max()}.")
    y = np.exp(a.value)
    return _apply(y, (a,), lambda g: (g * y,))


def log(a) -> Tensor:
    a = as_tensor(a)
    if np.any(a.value <= 0.0):
        raise DomainError(f"log is undefined for non-positive inputs, got min {a.value.min()}.")
    return _apply(np.log(a.value), (a,), lambda g: (g / a.value,))


def softplus(a) -> Tensor:
    a = as_tensor(a)
    return _apply(np.logaddexp(0.0, a.value), (a,), lambda g: (g * _sigmoid(a.value),))


def square(a) -> Tensor:
    a = as_tensor(a)
    return _apply(a.value * a.value, (a,), lambda g: (2.0 * g * a.value,))


def maximum(a, floor: float) -> Tensor:
    """
    Elementwise max against a constant. Entries at or below the floor receive no gradient.
    """
    a = as_tensor(a)
    above = a.value > floor
    return _apply(np.where(above, a.value, floor), (a,), lambda g: (g * above,))


def softmax(a, axis: int = -1) -> Tensor:
    a = as_tensor(a)
    shifted = a.value - a.value.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    y = e / e.sum(axis=axis, keepdims=True)
    return _apply(y, (a,), lambda g: (y * (g - (g * y).sum(axis=axis, keepdims=True)),))


def reduce_sum(a, axis: Optional[int] = None, keepdims: bool = False) -> Tensor:
    a = as_tensor(a)

    def backward_fn(g):
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g, a.shape).copy(),)

    return _apply(a.value.sum(axis=axis, keepdims=keepdims), (a,), backward_fn)


def reduce_mean(a, axis: Optional[int] = None, keepdims: bool = False) -> Tensor:
    a = as_tensor(a)
    count = a.size if axis is None else a.shape[axis]
    return reduce_sum(a, axis, keepdims) * (1.0 / count)


def add_n(tensors: Iterable) -> Tensor:
    total = None
    for tensor in tensors:
        total = as_tensor(tensor) if total is None else total + tensor
    if total is None:
        raise ShapeError("Cannot sum an empty list of tensors.")
    return total


def stop_gradient(a) -> Tensor:
    """
    Forward identity that blocks every gradient: the result is an untracked copy of the value.
    """
    a = as_tensor(a)
    return Tensor(a.value.copy())


def backward(tape: Tape, loss: Tensor) -> Dict[str, np.ndarray]:
    """
    Back-propagates a scalar loss through the tape.

    :param tape: Tape the loss was recorded on.
    :param loss: Single-valued tensor.
    :return: Gradient for every leaf watched by the tape. Leaves the loss doesn't depend on get exact zeros.
    """
    if loss.size != 1:
        raise ShapeError(f"Gradients can only be taken of a scalar loss, got shape {loss.shape}.")
    if loss.tape is not tape:
        raise GradientError("The loss was not recorded on this tape.")

    grads: Dict[int, np.ndarray] = {id(loss): np.ones_like(loss.value)}
    for node in reversed(tape.nodes):
        grad = grads.pop(id(node.output), None)
        if grad is None:
            continue
        for parent, parent_grad in zip(node.parents, node.backward(grad)):
            if parent.tape is not tape or parent_grad is None:
                continue
            key = id(parent)
            if key in grads:
                grads[key] = grads[key] + parent_grad
            else:
                grads[key] = np.asarray(parent_grad, dtype=np.float64).reshape(parent.shape)

    return {name: grads.get(id(leaf), np.zeros_like(leaf.value)).copy()
            for name, leaf in tape.leaves.items()}
