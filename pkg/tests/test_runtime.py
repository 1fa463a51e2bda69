import json
import os

import numpy as np
import pytest

from navsecure.agent.actor_critic import ActMode
from navsecure.autodiff.checkpoint import load_checkpoint
from navsecure.config import SimConfig
from navsecure.exceptions.configuration import IncompatibleCheckpointError
from navsecure.replay.buffer import ReplayBuffer
from navsecure.runtime.collector import EVALUATION_STREAM, TRAINING_STREAM, Collector, episode_seed, \
    frozen_parameters
from navsecure.runtime.diagnostics import DiagnosticsWriter
from navsecure.runtime.evaluation import load_trained_policy, rollout_greedy
from navsecure.runtime.learner import Learner
from navsecure.runtime.trainer import CHECKPOINT_FILE, CURVE_CSV_FILE, CURVE_FIGURE_FILE, DIAGNOSTICS_FILE, \
    EPISODES_FILE, Trainer, build_networks
from navsecure.sim.curriculum import corridor, curriculum, shortcut
from navsecure.sim.env import DrivingEnv
from navsecure.world_model.imagination import NoiseStream


def same_values(first, second) -> bool:
    return first.keys() == second.keys() and all(np.array_equal(first[name], second[name]) for name in first)


def test_updates_only_move_their_own_networks(small_run_config, make_batch):
    model, actor, critic = build_networks(small_run_config)
    learner = Learner.create(model, actor, critic, small_run_config)
    batch = make_batch(batch_size=2, length=4, observation_size=small_run_config.sim.observation_size)

    world_model = learner.state.world_model.copy()
    actor_values = learner.state.actor.copy()
    critic_values = learner.state.critic.copy()
    _, starts = learner.world_model_update(batch, NoiseStream(0))
    assert not same_values(learner.state.world_model.values, world_model.values)
    assert same_values(learner.state.actor.values, actor_values.values)
    assert same_values(learner.state.critic.values, critic_values.values)
    assert starts.h.shape == (8, model.deter_size)

    world_model = learner.state.world_model.copy()
    terms = learner.actor_critic_update(starts, 0.5, NoiseStream(1))
    assert same_values(learner.state.world_model.values, world_model.values)
    assert not same_values(learner.state.actor.values, actor_values.values)
    assert not same_values(learner.state.critic.values, critic_values.values)
    assert terms["multiplier"] == 0.5


def test_episode_seeds_use_separate_streams():
    training = {episode_seed(0, k, TRAINING_STREAM) for k in range(50)}
    evaluation = {episode_seed(0, k, EVALUATION_STREAM) for k in range(50)}
    assert len(training) == 50
    assert not training & evaluation
    assert episode_seed(3, 7) == episode_seed(3, 7)


def collect(config, steps: int):
    model, actor, _ = build_networks(config)
    replay = ReplayBuffer(1000, seed=0)
    collector = Collector(DrivingEnv(config.sim), model, actor, [shortcut()], seed=config.seed, replay=replay,
                          warmup_steps=10)
    parameters = frozen_parameters(model.initialise(0), actor.initialise(1))
    logs = [collector.step(parameters) for _ in range(steps)]
    return collector, replay, [log for log in logs if log is not None]


def test_collection_fills_the_replay_buffer(small_run_config):
    collector, replay, _ = collect(small_run_config, 30)
    assert collector.steps == 30
    episodes = replay.episodes()
    # Every replay episode opens with its reset observation and a zero action.
    assert all(np.array_equal(episode.transitions[0].action, np.zeros(2)) for episode in episodes)
    assert len(replay) == 30 + len(episodes)


def test_collection_is_deterministic(small_run_config):
    _, first, _ = collect(small_run_config, 40)
    _, second, _ = collect(small_run_config, 40)
    first_observations = [t.observation for e in first.episodes() for t in e.transitions]
    second_observations = [t.observation for e in second.episodes() for t in e.transitions]
    np.testing.assert_array_equal(first_observations, second_observations)


def test_diagnostics_start_with_a_header(tmp_path):
    path = tmp_path / "diagnostics.jsonl"
    writer = DiagnosticsWriter(str(path), "abc")
    writer.write("failure", 12, loss=float("nan"), consecutive=1)
    header, record = [json.loads(line) for line in path.read_text().splitlines()]
    assert header == {"kind": "header", "fingerprint": "abc"}
    assert record == {"kind": "failure", "step": 12, "loss": "nan", "consecutive": 1}


def test_training_without_steps_writes_an_initial_checkpoint(small_run_config):
    small_run_config.training.steps = 0
    out = small_run_config.out
    result = Trainer(small_run_config, curriculum(1), out).run()
    assert (result.steps, result.updates, result.episodes, result.curve) == (0, 0, [], [])
    for name in (CHECKPOINT_FILE, DIAGNOSTICS_FILE, EPISODES_FILE):
        assert os.path.isfile(os.path.join(out, name))
    # No episode finished, so there is no reward curve to write or plot.
    for name in (CURVE_CSV_FILE, CURVE_FIGURE_FILE):
        assert not os.path.exists(os.path.join(out, name))
    checkpoint = load_checkpoint(result.checkpoint)
    assert checkpoint.fingerprint == small_run_config.fingerprint()
    assert checkpoint.metadata["env_steps"] == 0
    assert sorted(checkpoint.parameter_sets) == ["actor", "critic", "world_model"]


def test_short_training_is_reproducible(small_run_config, tmp_path):
    first = Trainer(small_run_config, curriculum(1), str(tmp_path / "first")).run()
    second = Trainer(small_run_config, curriculum(1), str(tmp_path / "second")).run()
    assert first.updates >= 1
    assert first.updates == second.updates
    loaded = [load_checkpoint(result.checkpoint) for result in (first, second)]
    for name in ("world_model", "actor", "critic"):
        assert same_values(loaded[0].parameter_sets[name].values, loaded[1].parameter_sets[name].values)


def test_greedy_rollouts(small_run_config):
    small_run_config.training.steps = 0
    result = Trainer(small_run_config, curriculum(1), small_run_config.out).run()
    policy = load_trained_policy(result.checkpoint, small_run_config.sim)
    first = rollout_greedy(policy, [corridor()], episodes=2, seed=5)
    second = rollout_greedy(policy, [corridor()], episodes=2, seed=5)
    assert first == second
    assert len(first) == 2

    with pytest.raises(IncompatibleCheckpointError):
        load_trained_policy(result.checkpoint, SimConfig(ray_count=8))
    with pytest.raises(IncompatibleCheckpointError):
        load_trained_policy(result.checkpoint, small_run_config.sim, expected_fingerprint="0" * 16)


def test_evaluation_uses_the_simulator_of_the_checkpoint(small_run_config):
    small_run_config.training.steps = 0
    small_run_config.sim.dt = 0.05
    result = Trainer(small_run_config, curriculum(1), small_run_config.out).run()

    policy = load_trained_policy(result.checkpoint)
    assert policy.sim.dt == 0.05
    (log,) = rollout_greedy(policy, [corridor()], episodes=1, seed=0)
    assert log.dt == 0.05
    assert load_trained_policy(result.checkpoint, SimConfig(ray_count=4, dt=0.05)).sim == policy.sim

    with pytest.raises(IncompatibleCheckpointError, match=r"dt 0\.05 vs 0\.1"):
        load_trained_policy(result.checkpoint, SimConfig(ray_count=4))


def test_greedy_collector_needs_no_noise(small_run_config):
    model, actor, _ = build_networks(small_run_config)
    collector = Collector(DrivingEnv(small_run_config.sim), model, actor, [corridor()], seed=0,
                          mode=ActMode.GREEDY)
    parameters = frozen_parameters(model.initialise(0), actor.initialise(1))
    for _ in range(5):
        collector.step(parameters)
    assert collector.filter.noise is None
