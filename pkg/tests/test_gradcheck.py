"""
Analytic gradients of every network and loss against central finite differences.
"""
import numpy as np
import pytest

from navsecure.agent.actor_critic import ActMode, Actor, Critic, actor_loss, critic_loss, policy_entropy, \
    trajectory_targets
from navsecure.autodiff.distributions import DiagonalGaussian
from navsecure.autodiff.gradcheck import check_gradients, relative_error
from navsecure.autodiff.nn import GRUCell, Linear, MLP, ParameterSet
from navsecure.autodiff.tensor import Tensor, reduce_sum, stack, stop_gradient
from navsecure.world_model.imagination import NoiseStream, imagine
from navsecure.world_model.loss import LossWeights, world_model_loss
from navsecure.world_model.rssm import LatentState, WorldModel

SEEDS = range(10)
TOLERANCE = 1e-4
# The composite losses sum many terms, so their central differences carry more round-off than a single layer's.
LOSS_FLOOR = 1e-5


def random_starts(model: WorldModel, batch_size: int, seed: int) -> LatentState:
    rng = np.random.default_rng(seed)
    stoch = (batch_size, model.stoch_size)
    return LatentState(Tensor(rng.normal(size=(batch_size, model.deter_size))), Tensor(rng.normal(size=stoch)),
                       DiagonalGaussian(Tensor(rng.normal(size=stoch)), Tensor(rng.uniform(0.5, 1.5, size=stoch))))


@pytest.mark.parametrize("seed", SEEDS)
def test_layers(seed):
    rng = np.random.default_rng(seed)
    params = ParameterSet()
    linear, mlp, cell = Linear("linear", 3, 4), MLP("mlp", 3, [5], 2), GRUCell("cell", 3, 4)
    for module in (linear, mlp, cell):
        module.initialise(params, rng)
    x, h = Tensor(rng.normal(size=(2, 3))), Tensor(rng.normal(size=(2, 4)))
    weights = [Tensor(rng.normal(size=shape)) for shape in ((2, 4), (2, 2), (2, 4))]

    def function(p):
        return reduce_sum(linear(p, x) * weights[0]) + reduce_sum(mlp(p, x) * weights[1]) \
            + reduce_sum(cell(p, x, h) * weights[2])

    assert check_gradients(function, params.values).max_relative_error <= TOLERANCE


@pytest.mark.parametrize("seed", SEEDS)
def test_world_model_loss(seed, tiny_model_config, make_batch):
    model = WorldModel(3, tiny_model_config)
    params = model.initialise(seed)
    batch = make_batch(batch_size=2, length=2, observation_size=3, seed=seed)
    noise = np.random.default_rng(seed + 100).normal(size=(2, 2, model.stoch_size))

    def loss_with(kl_scale):
        weights = LossWeights(kl_prior=kl_scale, kl_posterior=kl_scale, free_nats=0.0)
        return lambda p: world_model_loss(model, p, batch, noise, weights).loss

    # Each balanced KL side back-propagates into one distribution only, so with equal weights w the analytic
    # gradient equals the finite differences of the loss whose KL sides are each weighted w / 2.
    result = check_gradients(loss_with(0.5), params.values, reference=loss_with(0.25), max_entries=4, seed=seed,
                             floor=LOSS_FLOOR)
    assert result.max_relative_error <= TOLERANCE


@pytest.mark.parametrize("seed", SEEDS)
def test_world_model_loss_without_kl(seed, tiny_model_config, make_batch):
    model = WorldModel(3, tiny_model_config)
    params = model.initialise(seed)
    batch = make_batch(batch_size=2, length=2, observation_size=3, seed=seed)
    noise = np.random.default_rng(seed).normal(size=(2, 2, model.stoch_size))
    weights = LossWeights(kl_prior=0.0, kl_posterior=0.0, observation=1.0, reward=0.7, cost=1.3, free_nats=0.0)
    result = check_gradients(lambda p: world_model_loss(model, p, batch, noise, weights).loss, params.values,
                             max_entries=4, seed=seed, floor=LOSS_FLOOR)
    assert result.max_relative_error <= TOLERANCE


@pytest.mark.parametrize("seed", SEEDS)
def test_actor_loss(seed, tiny_model_config, tiny_agent_config):
    model = WorldModel(3, tiny_model_config)
    actor, critic = Actor(model.feature_size, tiny_agent_config), Critic(model.feature_size, tiny_agent_config)
    model_params = model.initialise(seed).constants()
    critic_params = critic.initialise(seed + 1).constants()
    starts = random_starts(model, 2, seed)
    agent = tiny_agent_config

    def rollout(p):
        trajectory = imagine(model, model_params, starts, actor.bind(p), agent.horizon, NoiseStream(seed))
        return trajectory, trajectory_targets(trajectory, critic, critic_params, agent.discount,
                                              agent.return_lambda)

    def loss(p):
        trajectory, targets = rollout(p)
        return actor_loss(trajectory, targets.returns, targets.values, targets.cost_returns, agent.entropy_scale,
                          multiplier=0.7)

    def without_baseline(p):
        # The baseline is stop-gradiented, so it contributes nothing to the analytic gradient.
        trajectory, targets = rollout(p)
        return -stack(targets.returns).mean() + 0.7 * stack(targets.cost_returns).mean() \
            - agent.entropy_scale * policy_entropy(trajectory)

    result = check_gradients(loss, actor.initialise(seed).values, reference=without_baseline, max_entries=6,
                             seed=seed, floor=LOSS_FLOOR)
    assert result.max_relative_error <= TOLERANCE


@pytest.mark.parametrize("seed", SEEDS)
def test_critic_loss(seed, tiny_model_config, tiny_agent_config):
    model = WorldModel(3, tiny_model_config)
    actor, critic = Actor(model.feature_size, tiny_agent_config), Critic(model.feature_size, tiny_agent_config)
    critic_params = critic.initialise(seed)
    trajectory = imagine(model, model.initialise(seed).constants(), random_starts(model, 2, seed),
                         actor.bind(actor.initialise(seed).constants()), tiny_agent_config.horizon, NoiseStream(seed))
    targets = trajectory_targets(trajectory, critic, critic_params.constants(), 0.9, 0.95)
    result = check_gradients(lambda p: critic_loss(critic, p, trajectory, targets.returns, targets.cost_returns),
                             critic_params.values, max_entries=6, seed=seed, floor=LOSS_FLOOR)
    assert result.max_relative_error <= TOLERANCE


@pytest.mark.parametrize("seed", SEEDS)
def test_exploration_sample(seed, tiny_model_config, tiny_agent_config):
    model = WorldModel(3, tiny_model_config)
    actor = Actor(model.feature_size, tiny_agent_config)
    starts = random_starts(model, 3, seed)
    rng = np.random.default_rng(seed)
    noise, weights = rng.normal(size=(3, 2)), Tensor(rng.normal(size=(3, 2)))
    result = check_gradients(lambda p: reduce_sum(actor.act(p, starts, ActMode.EXPLORE, noise) * weights),
                             actor.initialise(seed).values)
    assert result.max_relative_error <= TOLERANCE


def test_gradient_check_detects_wrong_gradient():
    # x * stop_gradient(x) has analytic gradient x, the finite differences of x^2 give 2x.
    result = check_gradients(lambda p: reduce_sum(p["x"] * stop_gradient(p["x"])), {"x": np.array([1.0, 2.0])})
    assert result.max_relative_error == pytest.approx(0.5)


def test_small_wrong_gradients_are_not_hidden_by_the_floor():
    # Analytic 1e-8, central differences 2e-8: off by half, which the default floor still reports as 1e-2.
    def function(p):
        return reduce_sum(p["x"] * stop_gradient(p["x"])) * 1e-8

    params = {"x": np.array([1.0])}
    assert check_gradients(function, params).max_relative_error == pytest.approx(1e-2, rel=1e-3)
    assert check_gradients(function, params, floor=1e-3).max_relative_error < TOLERANCE


@pytest.mark.parametrize("analytic, numeric, floor, expected", [
    (1e-4, 1.1e-4, 1e-6, 1e-5 / 1.1e-4),
    (1e-4, 1.1e-4, 1e-3, 1e-2),
    (0.0, 0.0, 1e-6, 0.0),
    (0.0, 1e-12, 1e-6, 1e-6),
])
def test_relative_error(analytic, numeric, floor, expected):
    assert relative_error(np.float64(analytic), np.float64(numeric), floor) == pytest.approx(expected, rel=1e-9)
