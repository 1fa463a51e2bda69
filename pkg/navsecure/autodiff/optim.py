"""
Adam with global gradient-norm clipping.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Dict, List, Mapping, Tuple

import numpy as np

from navsecure.autodiff.nn import ParameterSet
from navsecure.exceptions.numerics import ShapeError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class AdamHyper:
    lr: float = 3e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8


def global_norm(grads: Mapping[str, np.ndarray]) -> float:
    return float(np.sqrt(sum(float(np.sum(np.square(g))) for g in grads.values())))


def clip_by_global_norm(grads: Mapping[str, np.ndarray],
                        max_norm: float) -> Tuple[Dict[str, np.ndarray], float]:
    """
    Rescales all gradients together so their joint L2 norm is at most max_norm.

    :return: The (possibly rescaled) gradients and the norm before clipping.
    """
    norm = global_norm(grads)
    if not np.isfinite(norm) or norm <= max_norm:
        return dict(grads), norm
    scale = max_norm / norm
    return {name: g * scale for name, g in grads.items()}, norm


def adam_step(params: ParameterSet, grads: Mapping[str, np.ndarray],
              hyper: AdamHyper = AdamHyper()) -> ParameterSet:
    """
    One bias-corrected Adam update. The input set is left untouched.

    :param params: Parameters and their moment estimates.
    :param grads: Gradient per parameter name. Missing names are treated as zero and reported.
    :param hyper: Learning rate, moment decay rates and epsilon.
    :return: A new ParameterSet with the step counter incremented.
    """
    missing: List[str] = [name for name in params.names() if name not in grads]
    if missing:
        logger.warning("No gradient for %d parameter(s), treating as zero: %s", len(missing), ", ".join(missing))

    updated = params.copy()
    updated.step = params.step + 1
    first_correction = 1.0 - hyper.beta1 ** updated.step
    second_correction = 1.0 - hyper.beta2 ** updated.step
    for name, value in params.values.items():
        grad = grads.get(name)
        if grad is None:
            grad = np.zeros_like(value)
        elif np.shape(grad) != value.shape:
            raise ShapeError(f"Gradient for '{name}' has shape {np.shape(grad)}, parameter has {value.shape}.")
        m = hyper.beta1 * params.first_moments[name] + (1.0 - hyper.beta1) * grad
        v = hyper.beta2 * params.second_moments[name] + (1.0 - hyper.beta2) * np.square(grad)
        updated.first_moments[name] = m
        updated.second_moments[name] = v
        m_hat = m / first_correction
        v_hat = v / second_correction
        updated.values[name] = value - hyper.lr * m_hat / (np.sqrt(v_hat) + hyper.eps)
    return updated
