"""
The training loop: collection, replay, world-model and actor-critic updates, multiplier updates and the
artifacts of a run.
"""
from __future__ import annotations

import logging
import os
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from navsecure.agent.actor_critic import ActMode, Actor, Critic
from navsecure.agent.safety import MultiplierSchedule, SafetyBudget
from navsecure.autodiff.checkpoint import Checkpoint, save_checkpoint
from navsecure.config import RunConfig
from navsecure.eval.curve import plot_reward_curve, reward_curve, write_curve_csv
from navsecure.eval.logs import EpisodeLog, write_episode_logs
from navsecure.exceptions.data import InsufficientDataError
from navsecure.exceptions.numerics import NumericFailureError
from navsecure.orm.controllers.run_controller import RunController
from navsecure.replay.buffer import ReplayBuffer
from navsecure.runtime.collector import Collector
from navsecure.runtime.diagnostics import DiagnosticsWriter
from navsecure.runtime.learner import NUMERIC_ERRORS, Learner
from navsecure.sim.env import DrivingEnv
from navsecure.sim.scenario import ScenarioSpec
from navsecure.world_model.imagination import NoiseStream
from navsecure.world_model.rssm import WorldModel

logger = logging.getLogger(__name__)

CHECKPOINT_FILE = "checkpoint.bin"
DIAGNOSTICS_FILE = "diagnostics.jsonl"
EPISODES_FILE = "training_episodes.jsonl"
REPLAY_FILE = "replay.bin"
CURVE_CSV_FILE = "reward_curve.csv"
CURVE_FIGURE_FILE = "reward_curve.png"


@dataclass
class TrainingResult:
    checkpoint: str
    """Location of the final checkpoint."""
    steps: int
    updates: int
    multiplier: float
    episodes: List[EpisodeLog] = field(default_factory=list)
    curve: List[Tuple[int, float]] = field(default_factory=list)


def build_networks(config: RunConfig) -> Tuple[WorldModel, Actor, Critic]:
    model = WorldModel(config.sim.observation_size, config.world_model)
    return model, Actor(model.feature_size, config.agent), Critic(model.feature_size, config.agent)


class Trainer:
    """
    Runs one training job into an output directory. Collection and learning alternate on the calling thread,
    which keeps a run bit-reproducible for a given configuration.
    """

    def __init__(self, config: RunConfig, scenarios: Sequence[ScenarioSpec], out: str,
                 controller: Optional[RunController] = None):
        """
        :param config: Validated configuration of the run.
        :param scenarios: Scenarios to train on, in rotation.
        :param out: Output directory.
        :param controller: Registry entry of the run; artifacts are recorded against it when given.
        """
        self.config = config
        self.fingerprint = config.fingerprint()
        self.out = out
        self.controller = controller
        self.model, self.actor, self.critic = build_networks(config)
        self.learner = Learner.create(self.model, self.actor, self.critic, config)
        seeds = np.random.SeedSequence([config.seed, 7]).generate_state(2)
        self.replay = ReplayBuffer(config.training.replay_capacity, seed=int(seeds[0]),
                                   log_path=os.path.join(out, REPLAY_FILE))
        self.noise = NoiseStream(int(seeds[1]))
        self.collector = Collector(DrivingEnv(config.sim), self.model, self.actor, scenarios, config.seed,
                                   replay=self.replay, mode=ActMode.EXPLORE,
                                   warmup_steps=config.training.warmup_steps)
        self.schedule = MultiplierSchedule(SafetyBudget.from_config(config.agent), config.agent.multiplier_window,
                                           frozen=config.agent.freeze_multiplier)
        self.diagnostics = DiagnosticsWriter(os.path.join(out, DIAGNOSTICS_FILE), self.fingerprint)
        self.updates = 0
        self._failures = 0
        self._constants = None

    def _parameters(self):
        if self._constants is None:
            state = self.learner.state
            self._constants = (state.world_model.constants(), state.actor.constants())
        return self._constants

    def _record(self, kind: str, path: str) -> None:
        if self.controller is not None:
            self.controller.add_artifact(kind, path, self.fingerprint)

    def save(self) -> str:
        path = os.path.join(self.out, CHECKPOINT_FILE)
        metadata: Dict = {
            "config": self.config.to_dict(),
            "dimensions": self.model.dimensions,
            "env_steps": self.collector.steps,
            "updates": self.updates,
            "multiplier": self.schedule.multiplier,
        }
        save_checkpoint(path, Checkpoint(self.config.seed, self.fingerprint, self.learner.state.as_sets(),
                                         metadata))
        self.diagnostics.write("checkpoint", self.collector.steps, path=path, updates=self.updates)
        self._record("checkpoint", path)
        return path

    def _train_step(self) -> None:
        world_model = self.config.world_model
        try:
            batch = self.replay.sample_sequences(world_model.batch_size, world_model.sequence_length)
        except InsufficientDataError:
            logger.debug("No episode holds %d transitions yet, skipping the update.", world_model.sequence_length)
            return
        try:
            terms = self.learner.update(batch, self.schedule.multiplier, self.noise)
        except NUMERIC_ERRORS as e:
            self._failures += 1
            self._constants = None
            self.diagnostics.write("failure", self.collector.steps, error=type(e).__name__, message=str(e),
                                   consecutive=self._failures)
            logger.warning("Update skipped at step %d: %s", self.collector.steps, e)
            if self._failures > self.config.training.nonfinite_limit:
                raise NumericFailureError(
                    f"Training aborted after {self._failures} consecutive non-finite losses at environment step "
                    f"{self.collector.steps}. See '{self.diagnostics.file_location}' for details.") from e
            return
        self._failures = 0
        self._constants = None
        self.updates += 1
        self.diagnostics.write("world_model", self.collector.steps, **terms["world_model"])
        self.diagnostics.write("agent", self.collector.steps, **terms["agent"])

    def run(self) -> TrainingResult:
        """
        Trains for the configured number of environment steps and writes every artifact of the run.

        :raises NumericFailureError: After more consecutive non-finite losses than the configured limit.
        """
        training = self.config.training
        discount = self.config.agent.discount
        if os.path.exists(self.replay.log_path):
            os.remove(self.replay.log_path)
        logger.info("Training for %d environment steps (fingerprint %s).", training.steps, self.fingerprint)

        episodes: List[EpisodeLog] = []
        ends: List[Tuple[int, float]] = []
        while self.collector.steps < training.steps:
            log = self.collector.step(self._parameters)
            steps = self.collector.steps
            if log is not None:
                episodes.append(log)
                ends.append((steps, log.total_return))
                cost = log.discounted_cost(discount)
                self.schedule.episode_finished(cost)
                self.diagnostics.write("episode", steps, scenario=log.scenario, length=len(log.steps),
                                       episode_return=log.total_return, discounted_cost=cost,
                                       interventions=log.interventions, collisions=log.collisions,
                                       completed=log.completed, multiplier=self.schedule.multiplier)
                if len(episodes) % training.curve_window == 0:
                    recent = ends[-training.curve_window:]
                    logger.info("Step %d: average return %.2f over the last %d episodes, multiplier %.3f.",
                                steps, float(np.mean([ret for _, ret in recent])), len(recent),
                                self.schedule.multiplier)
            if steps >= training.warmup_steps and steps % training.train_every == 0:
                self._train_step()
            if steps % training.checkpoint_every == 0 and steps < training.steps:
                self.save()

        checkpoint = self.save()
        curve = reward_curve(ends, training.curve_window)
        self._write_outputs(episodes, curve)
        logger.info("Finished after %d environment steps, %d episodes and %d updates.", self.collector.steps,
                    len(episodes), self.updates)
        return TrainingResult(checkpoint, self.collector.steps, self.updates, self.schedule.multiplier,
                              episodes, curve)

    def _write_outputs(self, episodes: List[EpisodeLog], curve: List[Tuple[int, float]]) -> None:
        episodes_path = os.path.join(self.out, EPISODES_FILE)
        if os.path.exists(episodes_path):
            os.remove(episodes_path)
        write_episode_logs(episodes_path, episodes, self.fingerprint)
        self._record("diagnostics", self.diagnostics.file_location)
        self._record("episodes", episodes_path)
        curve_path = os.path.join(self.out, CURVE_CSV_FILE)
        figure_path = os.path.join(self.out, CURVE_FIGURE_FILE)
        if not curve:
            # Files left by an earlier run in the same directory would describe that run.
            for path in (curve_path, figure_path):
                if os.path.exists(path):
                    os.remove(path)
            logger.info("No episode finished, so no reward curve was written.")
        else:
            write_curve_csv(curve_path, curve)
            plot_reward_curve(curve, figure_path)
            self._record("curve", curve_path)
            self._record("figure", figure_path)
        if os.path.exists(self.replay.log_path):
            self._record("replay", self.replay.log_path)
