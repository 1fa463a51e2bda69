"""
Loading trained checkpoints and rolling out their greedy policy.
"""
from __future__ import annotations

import logging
from dataclasses import asdict, dataclass
from typing import List, Optional, Sequence

from navsecure.agent.actor_critic import ActMode, Actor
from navsecure.autodiff.checkpoint import load_checkpoint
from navsecure.autodiff.nn import ParameterSet
from navsecure.config import RunConfig, SimConfig, fingerprint_of
from navsecure.eval.logs import EpisodeLog
from navsecure.exceptions.configuration import IncompatibleCheckpointError
from navsecure.runtime.collector import EVALUATION_STREAM, Collector, frozen_parameters
from navsecure.runtime.trainer import build_networks
from navsecure.sim.env import DrivingEnv
from navsecure.sim.scenario import ScenarioSpec
from navsecure.world_model.rssm import ACTION_SIZE, WorldModel

logger = logging.getLogger(__name__)


@dataclass
class TrainedPolicy:
    config: RunConfig
    """Configuration the checkpoint was trained under."""
    fingerprint: str
    model: WorldModel
    actor: Actor
    world_model_params: ParameterSet
    actor_params: ParameterSet
    multiplier: float = 0.0

    @property
    def sim(self) -> SimConfig:
        return self.config.sim


def _check_shapes(name: str, loaded: ParameterSet, expected: ParameterSet) -> None:
    if loaded.shapes() != expected.shapes():
        raise IncompatibleCheckpointError(f"The '{name}' parameters of the checkpoint don't match the network "
                                          f"layout of its own configuration.")


def _check_simulator(stored: SimConfig, requested: SimConfig) -> None:
    stored_values, requested_values = asdict(stored), asdict(requested)
    differing = [f"{name} {stored_values[name]!r} vs {requested_values[name]!r}" for name in stored_values
                 if stored_values[name] != requested_values[name]]
    if differing:
        raise IncompatibleCheckpointError(
            f"The checkpoint was trained under different simulator settings than requested (checkpoint vs "
            f"evaluation): {', '.join(differing)}.")


def load_trained_policy(path: str, sim: Optional[SimConfig] = None,
                        expected_fingerprint: str = "") -> TrainedPolicy:
    """
    Loads a checkpoint for evaluation. The policy is evaluated under the simulator settings it was trained with.

    :param path: Checkpoint file.
    :param sim: Simulator settings asked for by the caller, if any. They must equal the stored ones.
    :param expected_fingerprint: When given, the checkpoint must carry exactly this fingerprint.
    :raises CheckpointFormatError: If the file can't be read.
    :raises IncompatibleCheckpointError: On any fingerprint, dimension or simulator mismatch, naming both sides.
    """
    checkpoint = load_checkpoint(path)
    if "config" not in checkpoint.metadata:
        raise IncompatibleCheckpointError(f"Checkpoint '{path}' carries no run configuration.")
    stored_config = checkpoint.metadata["config"]
    if fingerprint_of(stored_config) != checkpoint.fingerprint:
        raise IncompatibleCheckpointError(
            f"Checkpoint '{path}' claims fingerprint {checkpoint.fingerprint} but its configuration hashes to "
            f"{fingerprint_of(stored_config)}.")
    if expected_fingerprint and expected_fingerprint != checkpoint.fingerprint:
        raise IncompatibleCheckpointError(f"Checkpoint '{path}' has fingerprint {checkpoint.fingerprint}, "
                                          f"expected {expected_fingerprint}.")

    config = RunConfig.from_dict(stored_config)
    model, actor, _ = build_networks(config)
    sim = config.sim if sim is None else sim
    stored_dimensions = list(checkpoint.metadata.get("dimensions", model.dimensions))
    requested = [sim.observation_size, ACTION_SIZE, model.deter_size, model.stoch_size]
    if stored_dimensions != requested:
        raise IncompatibleCheckpointError(
            f"Checkpoint dimensions (observation, action, deter, stoch) {stored_dimensions} don't match the "
            f"evaluation's {requested}.")
    _check_simulator(config.sim, sim)

    for name in ("world_model", "actor"):
        if name not in checkpoint.parameter_sets:
            raise IncompatibleCheckpointError(f"Checkpoint '{path}' holds no '{name}' parameters.")
    _check_shapes("world_model", checkpoint.parameter_sets["world_model"], model.initialise(0))
    _check_shapes("actor", checkpoint.parameter_sets["actor"], actor.initialise(0))
    logger.debug("Loaded checkpoint '%s' trained for %s environment steps.", path,
                 checkpoint.metadata.get("env_steps", "?"))
    return TrainedPolicy(config, checkpoint.fingerprint, model, actor, checkpoint.parameter_sets["world_model"],
                         checkpoint.parameter_sets["actor"], float(checkpoint.metadata.get("multiplier", 0.0)))


def rollout_greedy(policy: TrainedPolicy, scenarios: Sequence[ScenarioSpec], episodes: int,
                   seed: int) -> List[EpisodeLog]:
    """
    Drives `episodes` episodes with the mean action, intervention oracle active, cycling through the scenarios.
    The simulator runs with the policy's training settings. The result depends only on the arguments.
    """
    collector = Collector(DrivingEnv(policy.sim), policy.model, policy.actor, scenarios, seed, mode=ActMode.GREEDY,
                          stream=EVALUATION_STREAM)
    return collector.run_episodes(episodes, frozen_parameters(policy.world_model_params, policy.actor_params))
