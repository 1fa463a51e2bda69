import numpy as np
import pytest

from navsecure.autodiff.tensor import Tape, backward
from navsecure.exceptions.numerics import ShapeError
from navsecure.world_model.loss import LossWeights, world_model_loss
from navsecure.world_model.rssm import WorldModel, stack_states


def observed(model, params, batch, seed=0):
    noise = np.random.default_rng(seed).normal(size=(batch.batch_size, batch.length, model.stoch_size))
    return model.observe(params.constants(), batch.observations, batch.actions, noise)


def test_dimensions(tiny_model_config):
    model = WorldModel(3, tiny_model_config)
    assert model.dimensions == [3, 2, 4, 3]
    assert model.feature_size == 7


def test_observe_shapes(tiny_model_config, make_batch):
    model = WorldModel(3, tiny_model_config)
    params = model.initialise(0)
    batch = make_batch(batch_size=2, length=5)
    sequence = observed(model, params, batch)
    assert sequence.length == 5
    assert len(sequence.priors) == 5
    for posterior, prior in zip(sequence.posteriors, sequence.priors):
        assert posterior.h.shape == (2, 4)
        assert posterior.z.shape == (2, 3)
        np.testing.assert_array_equal(posterior.h.value, prior.h.value)
    flat = sequence.flatten_posteriors()
    assert flat.batch_size == 10
    assert flat.features.shape == (10, 7)


def test_heads(tiny_model_config, make_batch):
    model = WorldModel(3, tiny_model_config)
    params = model.initialise(1)
    state = observed(model, params, make_batch(batch_size=4, length=2))
    last = state.posteriors[-1]
    constants = params.constants()
    assert model.decode(constants, last).mean.shape == (4, 3)
    assert model.predict_reward(constants, last).mean.shape == (4,)
    cost = model.predict_cost(constants, last).value
    continuation = model.predict_continuation(constants, last).value
    assert cost.shape == continuation.shape == (4,)
    assert np.all((cost > 0.0) & (cost < 1.0))
    assert np.all((continuation > 0.0) & (continuation < 1.0))


def test_initialisation_is_seeded(tiny_model_config):
    model = WorldModel(3, tiny_model_config)
    first, second, other = model.initialise(5), model.initialise(5), model.initialise(6)
    for name in first.names():
        np.testing.assert_array_equal(first[name], second[name])
    assert any(not np.array_equal(first[name], other[name]) for name in first.names())


def test_observe_is_deterministic_given_noise(tiny_model_config, make_batch):
    model = WorldModel(3, tiny_model_config)
    params = model.initialise(2)
    batch = make_batch(batch_size=2, length=3, seed=4)
    first, second = observed(model, params, batch, seed=9), observed(model, params, batch, seed=9)
    for a, b in zip(first.posteriors, second.posteriors):
        np.testing.assert_array_equal(a.z.value, b.z.value)


def test_prior_step_shape_checks(tiny_model_config):
    model = WorldModel(3, tiny_model_config)
    params = model.initialise(0).constants()
    start = model.initial_state(2)
    with pytest.raises(ShapeError):
        model.prior_step(params, start, np.zeros((2, 3)), np.zeros((2, 3)))
    with pytest.raises(ShapeError):
        model.prior_step(params, start, np.zeros((2, 2)), np.zeros((2, 4)))
    with pytest.raises(ShapeError):
        model.posterior_step(params, start, np.zeros((2, 2)), np.zeros((2, 5)), np.zeros((2, 3)))
    with pytest.raises(ShapeError):
        model.observe(params, np.zeros((2, 3, 3)), np.zeros((2, 2, 2)), np.zeros((2, 3, 3)))


def test_stack_states(tiny_model_config, make_batch):
    model = WorldModel(3, tiny_model_config)
    sequence = observed(model, model.initialise(0), make_batch(batch_size=2, length=2))
    stacked = stack_states(sequence.posteriors)
    np.testing.assert_array_equal(stacked.h.value[2:], sequence.posteriors[1].h.value)
    assert stacked.z_dist.mean.shape == (4, 3)


@pytest.mark.parametrize("seed", range(3))
def test_kl_sides_train_different_networks(seed, tiny_model_config, make_batch):
    model = WorldModel(3, tiny_model_config)
    params = model.initialise(seed)
    batch = make_batch(batch_size=2, length=1, seed=seed)
    noise = np.random.default_rng(seed).normal(size=(2, 1, model.stoch_size))

    def gradients(**scales):
        weights = LossWeights(observation=0.0, reward=0.0, cost=0.0, free_nats=0.0, **scales)
        tape = Tape()
        loss = world_model_loss(model, tape.watch(params.values), batch, noise, weights).loss
        return backward(tape, loss)

    # The continuation term is always present, its share is removed by differencing against a KL-free loss.
    baseline = gradients(kl_prior=0.0, kl_posterior=0.0)
    prior_only = gradients(kl_prior=1.0, kl_posterior=0.0)
    posterior_only = gradients(kl_prior=0.0, kl_posterior=1.0)
    for name in params.names():
        prior_delta = prior_only[name] - baseline[name]
        posterior_delta = posterior_only[name] - baseline[name]
        if name.startswith(("posterior.", "encoder.")):
            assert not prior_delta.any(), name
        if name.startswith("prior."):
            assert not posterior_delta.any(), name
    assert any(posterior_only[name].any() for name in params.names() if name.startswith("posterior."))
    assert any(prior_only[name].any() for name in params.names() if name.startswith("prior."))
