"""
Distributions used by the world model and the policy, written against the autodiff ops so every density,
divergence and entropy is differentiable.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Tuple, Union

import numpy as np

from navsecure.autodiff.tensor import Tensor, as_tensor, log, softplus, square, stop_gradient
from navsecure.exceptions.numerics import DistributionError, ShapeError

STD_FLOOR = 1e-4
_HALF_LOG_TWO_PI = 0.5 * math.log(2.0 * math.pi)
_HALF_LOG_TWO_PI_E = 0.5 * math.log(2.0 * math.pi * math.e)


@dataclass(frozen=True)
class DiagonalGaussian:
    """
    Axis-aligned Gaussian. Every standard deviation must be strictly positive.
    """
    mean: Tensor
    std: Tensor

    def __post_init__(self):
        if self.mean.shape != self.std.shape:
            raise ShapeError(f"Gaussian mean {self.mean.shape} and std {self.std.shape} shapes differ.")
        if not np.all(self.std.value > 0.0):
            raise DistributionError(f"Standard deviations must be positive, got min {self.std.value.min()}.")

    @classmethod
    def from_raw(cls, mean: Tensor, raw_std: Tensor, floor: float = STD_FLOOR) -> "DiagonalGaussian":
        """
        Builds the distribution from an unconstrained network output: std = softplus(raw) + floor.
        """
        return cls(mean, softplus(raw_std) + floor)

    @classmethod
    def standard(cls, shape: Tuple[int, ...]) -> "DiagonalGaussian":
        return cls(Tensor(np.zeros(shape)), Tensor(np.ones(shape)))

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.mean.shape

    def detach(self) -> "DiagonalGaussian":
        return DiagonalGaussian(stop_gradient(self.mean), stop_gradient(self.std))


@dataclass(frozen=True)
class Categorical:
    """
    Discrete distribution given by explicit probabilities along the last axis.
    """
    probs: Tensor

    def __post_init__(self):
        p = self.probs.value
        if np.any(p < 0.0) or not np.allclose(p.sum(axis=-1), 1.0, atol=1e-9):
            raise DistributionError("Categorical probabilities must be non-negative and sum to 1.")


def _reduce(values: Tensor, axis: Optional[int]) -> Tensor:
    return values.sum() if axis is None else values.sum(axis=axis)


def kl_diag_gaussian(p: DiagonalGaussian, q: DiagonalGaussian, axis: Optional[int] = None) -> Tensor:
    """
    KL(p || q) = sum of log(sq/sp) + (sp^2 + (mp - mq)^2) / (2 sq^2) - 1/2.

    :param axis: Reduce only along this axis (e.g. -1 for one divergence per batch row); None sums everything.
    """
    if p.shape != q.shape:
        raise ShapeError(f"Cannot compare Gaussians of shapes {p.shape} and {q.shape}.")
    terms = (log(q.std) - log(p.std)
             + (square(p.std) + square(p.mean - q.mean)) / (2.0 * square(q.std))
             - 0.5)
    return _reduce(terms, axis)


def gaussian_log_prob(d: DiagonalGaussian, x, axis: Optional[int] = None) -> Tensor:
    x = as_tensor(x)
    if x.shape != d.shape:
        raise ShapeError(f"Sample of shape {x.shape} doesn't match a Gaussian of shape {d.shape}.")
    terms = -0.5 * square((x - d.mean) / d.std) - log(d.std) - _HALF_LOG_TWO_PI
    return _reduce(terms, axis)


def gaussian_sample_logprob(d: DiagonalGaussian, noise,
                            axis: Optional[int] = None) -> Tuple[Tensor, Tensor]:
    """
    Reparameterised sample mean + std * noise and its log-density. Noise comes from the caller.

    :return: (sample, log-probability), both differentiable through the mean and std.
    """
    noise = as_tensor(noise)
    if noise.shape != d.shape:
        raise ShapeError(f"Noise of shape {noise.shape} doesn't match a Gaussian of shape {d.shape}.")
    sample = d.mean + d.std * noise
    return sample, gaussian_log_prob(d, sample, axis)


def unit_gaussian_log_prob(mean: Tensor, target, axis: Optional[int] = None) -> Tensor:
    """
    Log-density of a unit-variance Gaussian; equivalent to a scaled squared error.
    """
    target = as_tensor(target)
    if target.shape != mean.shape:
        raise ShapeError(f"Target of shape {target.shape} doesn't match prediction {mean.shape}.")
    return _reduce(-0.5 * square(target - mean) - _HALF_LOG_TWO_PI, axis)


def bernoulli_log_prob(logits: Tensor, target, axis: Optional[int] = None) -> Tensor:
    """
    log p(target) for a Bernoulli parameterised by logits, evaluated as
    -(t * softplus(-l) + (1 - t) * softplus(l)) so saturated logits stay finite.
    """
    target = as_tensor(target)
    if target.shape != logits.shape:
        raise ShapeError(f"Target of shape {target.shape} doesn't match logits {logits.shape}.")
    if np.any((target.value < 0.0) | (target.value > 1.0)):
        raise DistributionError("Bernoulli targets must lie in [0, 1].")
    return _reduce(-(target * softplus(-logits) + (1.0 - target) * softplus(logits)), axis)


def gaussian_entropy(d: DiagonalGaussian, axis: Optional[int] = None) -> Tensor:
    return _reduce(log(d.std) + _HALF_LOG_TWO_PI_E, axis)


def categorical_entropy(d: Categorical, axis: Optional[int] = None) -> Tensor:
    # 0 log 0 is taken as 0.
    safe = Tensor(np.where(d.probs.value > 0.0, 0.0, 1.0)) + d.probs
    return _reduce(-(d.probs * log(safe)), axis)


def entropy(distribution: Union[DiagonalGaussian, Categorical], axis: Optional[int] = None) -> Tensor:
    """
    Differential entropy for Gaussians, Shannon entropy for categoricals.
    """
    if isinstance(distribution, DiagonalGaussian):
        return gaussian_entropy(distribution, axis)
    if isinstance(distribution, Categorical):
        return categorical_entropy(distribution, axis)
    raise DistributionError(f"Entropy isn't defined for {type(distribution).__name__}.")
