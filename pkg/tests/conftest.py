from typing import Callable, List

import numpy as np
import pytest

from navsecure.config import AgentConfig, RunConfig, SimConfig, TrainingConfig, WorldModelConfig
from navsecure.eval.logs import EpisodeLog, EpisodeStep
from navsecure.replay.buffer import SequenceBatch


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False,
                     help="Also run the long learning runs marked as slow.")


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long learning runs, skipped unless --runslow is given")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="long learning run, use --runslow to include it")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture
def tiny_model_config() -> WorldModelConfig:
    # No free-nats floor, so every KL entry carries gradient.
    return WorldModelConfig(deter_size=4, stoch_size=3, model_units=5, embed_size=4, sequence_length=2,
                            batch_size=2, free_nats=0.0)


@pytest.fixture
def tiny_agent_config() -> AgentConfig:
    return AgentConfig(horizon=3, agent_units=5, entropy_scale=0.01)


@pytest.fixture
def make_batch() -> Callable[..., SequenceBatch]:
    """
    Random replay batches with valid flags: costs in {0, 1}, the last step of every sequence sometimes terminal.
    """

    def factory(batch_size: int = 2, length: int = 2, observation_size: int = 3, seed: int = 0) -> SequenceBatch:
        rng = np.random.default_rng(seed)
        continuations = np.ones((batch_size, length))
        continuations[:, -1] = rng.integers(0, 2, size=batch_size)
        return SequenceBatch(observations=rng.normal(size=(batch_size, length, observation_size)),
                             actions=rng.uniform(-1.0, 1.0, size=(batch_size, length, 2)),
                             rewards=rng.normal(size=(batch_size, length)),
                             costs=rng.integers(0, 2, size=(batch_size, length)).astype(np.float64),
                             continuations=continuations,
                             episode_indices=np.arange(batch_size),
                             offsets=np.zeros(batch_size, dtype=np.int64))

    return factory


@pytest.fixture
def make_logs() -> Callable[..., List[EpisodeLog]]:
    """
    Synthetic episode logs with random speeds, distances, interventions and completions.
    """

    def factory(count: int = 20, seed: int = 0, intervention_rate: float = 0.05,
                dt: float = 0.1) -> List[EpisodeLog]:
        rng = np.random.default_rng(seed)
        logs = []
        for _ in range(count):
            log = EpisodeLog(dt=dt, completed=bool(rng.uniform() < 0.7), collisions=int(rng.integers(0, 2)))
            for k in range(int(rng.integers(5, 40))):
                speed = float(rng.uniform(0.0, 8.0))
                log.steps.append(EpisodeStep(time=(k + 1) * dt, x=float(k), y=0.0, speed=speed,
                                             reward=float(rng.normal()), cost=float(rng.integers(0, 2)),
                                             intervened=bool(rng.uniform() < intervention_rate),
                                             distance=speed * dt))
            logs.append(log)
        return logs

    return factory


@pytest.fixture
def small_run_config(tmp_path) -> RunConfig:
    """
    A run small enough to train for a few dozen steps in a test.
    """
    return RunConfig(
        seed=3, out=str(tmp_path / "run"),
        world_model=WorldModelConfig(deter_size=8, stoch_size=4, model_units=16, embed_size=8, sequence_length=4,
                                     batch_size=2),
        agent=AgentConfig(horizon=3, agent_units=16),
        sim=SimConfig(ray_count=4),
        training=TrainingConfig(steps=60, warmup_steps=20, train_every=10, checkpoint_every=1000,
                                replay_capacity=1000, curve_window=2),
    )
