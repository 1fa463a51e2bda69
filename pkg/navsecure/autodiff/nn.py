"""
Parameter storage and the small set of layers the world model and the agent are built from.

Layers hold no arrays themselves: they know their parameter names and shapes, fill a :class:`ParameterSet`
when initialised, and are evaluated against a name -> Tensor mapping (the leaves a tape is watching, or
plain constants).
"""
from __future__ import annotations

import copy
from dataclasses import dataclass, field
from typing import Dict, Iterator, List, Mapping, Sequence

import numpy as np

from navsecure.autodiff.tensor import Tensor, as_tensor, sigmoid, tanh
from navsecure.exceptions.numerics import GradientError, ShapeError

Params = Mapping[str, Tensor]


@dataclass
class ParameterSet:
    """
    Named trainable arrays plus the Adam state that belongs to them.
    """
    values: Dict[str, np.ndarray] = field(default_factory=dict)
    """Current parameter values, keyed by unique name."""
    first_moments: Dict[str, np.ndarray] = field(default_factory=dict)
    """Adam first moment estimate per parameter."""
    second_moments: Dict[str, np.ndarray] = field(default_factory=dict)
    """Adam second moment estimate per parameter."""
    step: int = 0
    """Number of optimiser steps applied so far."""

    def add(self, name: str, value: np.ndarray) -> None:
        if name in self.values:
            raise GradientError(f"Parameter '{name}' is already registered.")
        value = np.array(value, dtype=np.float64, copy=True)
        self.values[name] = value
        self.first_moments[name] = np.zeros_like(value)
        self.second_moments[name] = np.zeros_like(value)

    def __getitem__(self, name: str) -> np.ndarray:
        return self.values[name]

    def __contains__(self, name: str) -> bool:
        return name in self.values

    def __iter__(self) -> Iterator[str]:
        return iter(self.values)

    def __len__(self) -> int:
        return len(self.values)

    def names(self) -> List[str]:
        return list(self.values)

    def shapes(self) -> Dict[str, tuple]:
        return {name: value.shape for name, value in self.values.items()}

    def count(self) -> int:
        return int(sum(value.size for value in self.values.values()))

    def copy(self) -> "ParameterSet":
        return copy.deepcopy(self)

    def constants(self) -> Dict[str, Tensor]:
        """
        Untracked tensors for inference outside of a tape.
        """
        return {name: Tensor(value) for name, value in self.values.items()}


class Module:
    """
    Base for parameter-free layer descriptions.
    """

    def __init__(self, name: str):
        self.name = name

    def initialise(self, params: ParameterSet, rng: np.random.Generator) -> None:
        raise NotImplementedError


class Linear(Module):
    def __init__(self, name: str, in_features: int, out_features: int):
        super().__init__(name)
        self.in_features = in_features
        self.out_features = out_features

    @property
    def weight(self) -> str:
        return f"{self.name}.weight"

    @property
    def bias(self) -> str:
        return f"{self.name}.bias"

    def initialise(self, params: ParameterSet, rng: np.random.Generator) -> None:
        bound = 1.0 / np.sqrt(self.in_features)
        params.add(self.weight, rng.uniform(-bound, bound, size=(self.in_features, self.out_features)))
        params.add(self.bias, np.zeros(self.out_features))

    def __call__(self, params: Params, x) -> Tensor:
        x = as_tensor(x)
        if x.ndim != 2 or x.shape[1] != self.in_features:
            raise ShapeError(f"{self.name} expects inputs of shape (batch, {self.in_features}), got {x.shape}.")
        return x @ params[self.weight] + params[self.bias]


class MLP(Module):
    """
    Fully connected network with tanh hidden activations and a linear output layer.
    """

    def __init__(self, name: str, in_features: int, hidden: Sequence[int], out_features: int):
        super().__init__(name)
        sizes = [in_features, *hidden, out_features]
        self.layers = [Linear(f"{name}.{i}", sizes[i], sizes[i + 1]) for i in range(len(sizes) - 1)]

    @property
    def out_features(self) -> int:
        return self.layers[-1].out_features

    def initialise(self, params: ParameterSet, rng: np.random.Generator) -> None:
        for layer in self.layers:
            layer.initialise(params, rng)

    def __call__(self, params: Params, x) -> Tensor:
        for layer in self.layers[:-1]:
            x = tanh(layer(params, x))
        return self.layers[-1](params, x)


class GRUCell(Module):
    """
    Gated recurrent cell with fused input-to-hidden and hidden-to-hidden projections:

        r = sigmoid(Wr x + Ur h), u = sigmoid(Wu x + Uu h)
        n = tanh(Wn x + r * (Un h))
        h' = (1 - u) * n + u * h
    """

    def __init__(self, name: str, input_size: int, hidden_size: int):
        super().__init__(name)
        self.input_size = input_size
        self.hidden_size = hidden_size
        self.x2h = Linear(f"{name}.x2h", input_size, 3 * hidden_size)
        self.h2h = Linear(f"{name}.h2h", hidden_size, 3 * hidden_size)

    def initialise(self, params: ParameterSet, rng: np.random.Generator) -> None:
        bound = 1.0 / np.sqrt(self.hidden_size)
        for layer in (self.x2h, self.h2h):
            params.add(layer.weight, rng.uniform(-bound, bound, size=(layer.in_features, layer.out_features)))
            params.add(layer.bias, rng.uniform(-bound, bound, size=layer.out_features))

    def __call__(self, params: Params, x, h) -> Tensor:
        size = self.hidden_size
        gx = self.x2h(params, x)
        gh = self.h2h(params, h)
        reset = sigmoid(gx[:, :size] + gh[:, :size])
        update = sigmoid(gx[:, size:2 * size] + gh[:, size:2 * size])
        candidate = tanh(gx[:, 2 * size:] + reset * gh[:, 2 * size:])
        return (1.0 - update) * candidate + update * h
