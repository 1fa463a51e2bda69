"""
Drives the simulator with the current policy, filtering observations through the world model.
"""
from __future__ import annotations

import logging
from typing import Callable, List, Optional, Sequence

import numpy as np

from navsecure.agent.actor_critic import ActMode, Actor
from navsecure.autodiff.nn import ParameterSet
from navsecure.eval.logs import EpisodeLog, EpisodeStep
from navsecure.replay.buffer import ACTION_SIZE, ReplayBuffer, Transition
from navsecure.sim.env import DrivingEnv
from navsecure.sim.scenario import ScenarioSpec
from navsecure.world_model.imagination import NoiseStream
from navsecure.world_model.rssm import LatentState, WorldModel

logger = logging.getLogger(__name__)

TRAINING_STREAM = 0
EVALUATION_STREAM = 1


def episode_seed(seed: int, index: int, stream: int = TRAINING_STREAM) -> int:
    """
    Seed of the index-th episode of a run; training and evaluation episodes come from separate streams.
    """
    return int(np.random.SeedSequence([seed, stream, index]).generate_state(1)[0])


class LatentFilter:
    """
    Tracks the posterior latent state of a single vehicle from its observations and actions.
    Without a noise stream the posterior mean is used, which makes greedy driving deterministic.
    """

    def __init__(self, model: WorldModel, noise: Optional[NoiseStream] = None):
        self.model = model
        self.noise = noise
        self.state: LatentState = model.initial_state(1)

    def reset(self) -> None:
        self.state = self.model.initial_state(1)

    def update(self, params, action: np.ndarray, observation: np.ndarray) -> LatentState:
        noise = self.noise.normal(1, self.model.stoch_size) if self.noise else np.zeros((1, self.model.stoch_size))
        self.state = self.model.posterior_step(params, self.state, action[None, :], observation[None, :],
                                               noise).detach()
        return self.state


class Collector:
    """
    Steps one environment, cycling through the given scenarios episode by episode. Each call to :meth:`step`
    advances the simulation by one timestep; finished episodes come back as EpisodeLogs.

    Replay episodes close on interventions as well, so the vehicle keeps driving from its reset position
    while a fresh replay episode (and a fresh filter state) begins there.
    """

    def __init__(self, env: DrivingEnv, model: WorldModel, actor: Actor, scenarios: Sequence[ScenarioSpec],
                 seed: int, replay: Optional[ReplayBuffer] = None, mode: ActMode = ActMode.EXPLORE,
                 warmup_steps: int = 0, stream: int = TRAINING_STREAM):
        """
        :param scenarios: Scenarios to drive, in rotation.
        :param seed: Run seed; every episode and noise stream is derived from it.
        :param replay: Buffer that receives every transition, if any.
        :param mode: EXPLORE samples actions, GREEDY drives the mean action.
        :param warmup_steps: Number of leading steps driven with uniformly random actions.
        :param stream: Which family of episode seeds to use.
        """
        self.env = env
        self.model = model
        self.actor = actor
        self.scenarios = list(scenarios)
        self.seed = seed
        self.replay = replay
        self.mode = mode
        self.warmup_steps = warmup_steps
        self.stream = stream
        noise_seed = np.random.SeedSequence([seed, stream, 2 ** 31]).generate_state(2)
        self._actions = np.random.default_rng(int(noise_seed[0]))
        exploring = mode is ActMode.EXPLORE
        self._action_noise = NoiseStream(int(noise_seed[1])) if exploring else None
        self.filter = LatentFilter(model, NoiseStream(int(noise_seed[1]) + 1) if exploring else None)
        self.steps = 0
        self.episodes = 0
        self._log: Optional[EpisodeLog] = None

    def _begin_replay_episode(self, observation: np.ndarray, model_params) -> None:
        zero = np.zeros(ACTION_SIZE)
        if self.replay is not None:
            self.replay.append(Transition(observation, zero, 0.0, 0.0))
        self.filter.reset()
        self.filter.update(model_params, zero, observation)

    def _begin_episode(self, model_params) -> None:
        spec = self.scenarios[self.episodes % len(self.scenarios)]
        seed = episode_seed(self.seed, self.episodes, self.stream)
        _, observation = self.env.reset(spec, seed)
        self._log = EpisodeLog(dt=self.env.config.dt, scenario=spec.name, seed=seed)
        self._begin_replay_episode(self.env.normalize(observation), model_params)

    def _choose_action(self, actor_params) -> np.ndarray:
        if self.steps < self.warmup_steps:
            return self._actions.uniform(-1.0, 1.0, size=ACTION_SIZE)
        noise = self._action_noise.normal(1, ACTION_SIZE) if self._action_noise else None
        action = self.actor.act(actor_params, self.filter.state, self.mode, noise).value[0]
        return np.clip(action, -1.0, 1.0)

    def step(self, parameters: Callable[[], tuple]) -> Optional[EpisodeLog]:
        """
        :param parameters: Returns the current (world model, actor) parameter constants. Called once per step,
                           so a concurrent learner's newest parameters are picked up.
        :return: The log of the episode this step finished, if any.
        """
        model_params, actor_params = parameters()
        if self._log is None:
            self._begin_episode(model_params)
        action = self._choose_action(actor_params)
        result = self.env.step(action)
        self.steps += 1
        observation = self.env.normalize(result.observation)
        intervened = bool(result.info["intervened"])
        if self.replay is not None:
            self.replay.append(Transition(observation, action, result.reward, result.cost, result.terminated,
                                          intervened, result.truncated))
        x, y = result.info["position"]
        self._log.steps.append(EpisodeStep(time=self.env.time, x=x, y=y, speed=result.info["speed"],
                                           reward=result.reward, cost=result.cost, intervened=intervened,
                                           distance=result.info["distance"]))
        self._log.collisions += int(result.info["collision"])

        if result.terminated or result.truncated:
            log, self._log = self._log, None
            log.completed = bool(result.info["goal"])
            self.episodes += 1
            logger.debug("Episode %d on %s finished after %d steps: return %.2f, %d intervention(s).",
                         self.episodes, log.scenario, len(log.steps), log.total_return, log.interventions)
            return log
        if intervened:
            self._begin_replay_episode(observation, model_params)
        else:
            self.filter.update(model_params, action, observation)
        return None

    def run_episodes(self, count: int, parameters: Callable[[], tuple]) -> List[EpisodeLog]:
        """
        Drives until `count` more episodes have finished.
        """
        logs: List[EpisodeLog] = []
        while len(logs) < count:
            log = self.step(parameters)
            if log is not None:
                logs.append(log)
        return logs


def frozen_parameters(world_model: ParameterSet, actor: ParameterSet) -> Callable[[], tuple]:
    """
    A parameter source for driving with fixed networks, e.g. during evaluation.
    """
    constants = (world_model.constants(), actor.constants())
    return lambda: constants
