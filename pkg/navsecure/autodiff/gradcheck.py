"""
Central finite-difference oracle for the analytic gradients produced by :func:`backward`.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Dict, Iterable, Mapping, Optional

import numpy as np

from navsecure.autodiff.tensor import Tape, Tensor, backward

LossFn = Callable[[Mapping[str, Tensor]], Tensor]

DEFAULT_FLOOR = 1e-6


@dataclass
class GradientCheckResult:
    max_relative_error: float
    """Worst relative error over every checked entry."""
    per_parameter: Dict[str, float] = field(default_factory=dict)
    """Worst relative error per parameter name."""
    analytic: Dict[str, np.ndarray] = field(default_factory=dict)
    """The analytic gradients that were checked."""


def relative_error(analytic: np.ndarray, numeric: np.ndarray, floor: float = DEFAULT_FLOOR) -> np.ndarray:
    """
    |a - n| / max(|a|, |n|, floor). Below the floor the error is effectively absolute, so the floor must stay
    well under the gradients being checked but above the round-off of the central differences.
    """
    denominator = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), floor)
    return np.abs(analytic - numeric) / denominator


def _evaluate(function: LossFn, values: Mapping[str, np.ndarray]) -> float:
    return function({name: Tensor(value) for name, value in values.items()}).item()


def check_gradients(function: LossFn, params: Mapping[str, np.ndarray], eps: float = 1e-5,
                    names: Optional[Iterable[str]] = None, max_entries: Optional[int] = None,
                    seed: int = 0, floor: float = DEFAULT_FLOOR,
                    reference: Optional[LossFn] = None) -> GradientCheckResult:
    """
    Compares the analytic gradient of a scalar function against central differences.

    :param function: Maps a name -> Tensor mapping to a scalar Tensor. Must be deterministic, so any noise it
                     needs has to be fixed before the call.
    :param params: Point at which gradients are checked (a ParameterSet works, it's a mapping of arrays).
    :param eps: Finite-difference step.
    :param names: Restrict the check to these parameters. Every parameter is still watched.
    :param max_entries: Check at most this many randomly chosen entries per parameter.
    :param seed: Chooses the entries when max_entries is set.
    :param floor: Denominator floor of the relative error. With eps=1e-5, central differences of an O(1) loss
                  carry an absolute error around 1e-10, so 1e-6 keeps a 1e-4 relative check meaningful.
    :param reference: Function whose central differences are compared against, `function` by default. A loss
                      built with stop_gradient has the analytic gradient of a different function; pass that
                      one here.
    :return: Worst relative error overall and per parameter.
    """
    base = {name: np.array(params[name], dtype=np.float64, copy=True) for name in params}
    tape = Tape()
    loss = function(tape.watch(base))
    analytic = backward(tape, loss)

    numeric_function = reference or function
    rng = np.random.default_rng(seed)
    per_parameter: Dict[str, float] = {}
    for name in (list(names) if names is not None else list(base)):
        flat_count = base[name].size
        entries = np.arange(flat_count)
        if max_entries is not None and flat_count > max_entries:
            entries = np.sort(rng.choice(flat_count, size=max_entries, replace=False))
        worst = 0.0
        for entry in entries:
            index = np.unravel_index(entry, base[name].shape)
            perturbed = dict(base)
            plus = base[name].copy()
            plus[index] += eps
            perturbed[name] = plus
            upper = _evaluate(numeric_function, perturbed)
            minus = base[name].copy()
            minus[index] -= eps
            perturbed[name] = minus
            lower = _evaluate(numeric_function, perturbed)
            numeric = (upper - lower) / (2.0 * eps)
            worst = max(worst, float(relative_error(analytic[name][index], np.float64(numeric), floor)))
        per_parameter[name] = worst

    return GradientCheckResult(max(per_parameter.values(), default=0.0), per_parameter, analytic)
