"""
Decoder-based checks of how well the model predicts observations it hasn't been shown.
"""
from __future__ import annotations

from typing import List

import numpy as np

from navsecure.autodiff.nn import Params
from navsecure.autodiff.tensor import Tensor
from navsecure.exceptions.data import InsufficientDataError
from navsecure.replay.buffer import SequenceBatch
from navsecure.world_model.rssm import WorldModel


def open_loop_prediction_error(model: WorldModel, params: Params, batch: SequenceBatch, context: int,
                               seed: int = 0) -> List[float]:
    """
    Filters the first `context` observations of every sequence, then predicts the rest with the prior only,
    feeding the recorded actions.

    :return: Mean squared error of the decoded mean per predicted step.
    :raises InsufficientDataError: If the sequences are not longer than the context.
    """
    if not 0 < context < batch.length:
        raise InsufficientDataError(f"Context of {context} steps leaves nothing to predict in sequences "
                                    f"of length {batch.length}.")
    rng = np.random.default_rng(seed)
    size = batch.batch_size
    observed = model.observe(params, batch.observations[:, :context], batch.actions[:, :context],
                             rng.standard_normal((size, context, model.stoch_size)))
    state = observed.posteriors[-1]
    errors = []
    for t in range(context, batch.length):
        state = model.prior_step(params, state, Tensor(batch.actions[:, t]), np.zeros((size, model.stoch_size)))
        predicted = model.decode(params, state).mean.value
        errors.append(float(np.mean(np.square(predicted - batch.observations[:, t]))))
    return errors


def one_step_prediction_mse(model: WorldModel, params: Params, batch: SequenceBatch, seed: int = 0) -> float:
    """
    Mean squared error of predicting every observation from the posterior one step earlier and the
    action in between.
    """
    if batch.length < 2:
        raise InsufficientDataError("One-step prediction needs sequences of at least 2 steps.")
    rng = np.random.default_rng(seed)
    size = batch.batch_size
    observed = model.observe(params, batch.observations, batch.actions,
                             rng.standard_normal((size, batch.length, model.stoch_size)))
    errors = []
    for t in range(1, batch.length):
        state = model.prior_step(params, observed.posteriors[t - 1], Tensor(batch.actions[:, t]),
                                 np.zeros((size, model.stoch_size)))
        predicted = model.decode(params, state).mean.value
        errors.append(np.mean(np.square(predicted - batch.observations[:, t])))
    return float(np.mean(errors))
