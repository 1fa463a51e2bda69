"""
Episode-structured experience store.

Every transition holds the observation reached, the action that led there and the reward/cost received on
the way, so the first transition of an episode is the reset observation with a zero action. Episodes close
on termination, intervention or truncation; sequences are only ever sampled from inside one episode.
"""
from __future__ import annotations

import logging
import os
import threading
from collections import deque
from dataclasses import dataclass, field
from typing import Deque, Iterator, List, Optional, Tuple

import numpy as np

from navsecure.autodiff.checkpoint import read_record, write_record
from navsecure.exceptions.data import InsufficientDataError, InvalidTransitionError

logger = logging.getLogger(__name__)

ACTION_SIZE = 2


@dataclass(frozen=True)
class Transition:
    observation: np.ndarray
    action: np.ndarray
    """Action taken before reaching the observation; zeros for the first transition of an episode."""
    reward: float
    cost: float
    terminated: bool = False
    """Collision or goal; the continuation target of the world model is 1 - terminated."""
    intervened: bool = False
    truncated: bool = False
    """Horizon reached. Closes the episode without marking it terminal."""

    @property
    def closes_episode(self) -> bool:
        return self.terminated or self.intervened or self.truncated

    def validate(self, observation_size: Optional[int] = None) -> None:
        """
        :raises InvalidTransitionError: If the transition breaks any invariant.
        """
        observation = np.asarray(self.observation, dtype=np.float64)
        action = np.asarray(self.action, dtype=np.float64)
        if observation.ndim != 1:
            raise InvalidTransitionError(f"Observations must be vectors, got shape {observation.shape}.")
        if observation_size is not None and observation.shape[0] != observation_size:
            raise InvalidTransitionError(f"Observation has {observation.shape[0]} entries, "
                                         f"the buffer stores {observation_size}.")
        if action.shape != (ACTION_SIZE,):
            raise InvalidTransitionError(f"Actions must have shape ({ACTION_SIZE},), got {action.shape}.")
        if np.any(np.abs(action) > 1.0):
            raise InvalidTransitionError(f"Action {action.tolist()} is outside [-1, 1].")
        if self.cost not in (0.0, 1.0):
            raise InvalidTransitionError(f"Cost must be 0 or 1, got {self.cost}.")
        if not (np.all(np.isfinite(observation)) and np.all(np.isfinite(action)) and np.isfinite(self.reward)):
            raise InvalidTransitionError("Transitions must only hold finite values.")


@dataclass
class Episode:
    """
    Contiguous transitions of one episode, identified by a number that survives eviction of older episodes.
    """
    index: int
    transitions: List[Transition] = field(default_factory=list)
    closed: bool = False

    def __len__(self) -> int:
        return len(self.transitions)


@dataclass(frozen=True)
class SequenceBatch:
    """
    B contiguous segments of length T. Arrays are indexed [batch, time, ...].
    """
    observations: np.ndarray
    actions: np.ndarray
    rewards: np.ndarray
    costs: np.ndarray
    continuations: np.ndarray
    episode_indices: np.ndarray
    offsets: np.ndarray

    @property
    def batch_size(self) -> int:
        return int(self.observations.shape[0])

    @property
    def length(self) -> int:
        return int(self.observations.shape[1])

    @classmethod
    def from_segments(cls, segments: List[Tuple[int, int, List[Transition]]]) -> "SequenceBatch":
        def gather(getter) -> np.ndarray:
            return np.array([[getter(t) for t in transitions] for _, _, transitions in segments], dtype=np.float64)

        return cls(observations=gather(lambda t: t.observation),
                   actions=gather(lambda t: t.action),
                   rewards=gather(lambda t: t.reward),
                   costs=gather(lambda t: t.cost),
                   continuations=gather(lambda t: 0.0 if t.terminated else 1.0),
                   episode_indices=np.array([index for index, _, _ in segments], dtype=np.int64),
                   offsets=np.array([offset for _, offset, _ in segments], dtype=np.int64))


class ReplayBuffer:
    """
    Stores whole episodes up to a capacity counted in transitions, evicting the oldest episodes first.
    One writer and any number of samplers may use the buffer concurrently.
    """

    def __init__(self, capacity: int, seed: int = 0, log_path: Optional[str] = None):
        """
        :param capacity: Maximum number of stored transitions.
        :param seed: Seed of the sampler used when sample_sequences isn't given one.
        :param log_path: When set, every closed episode is appended to this file.
        """
        if capacity <= 0:
            raise InvalidTransitionError(f"Replay capacity must be positive, got {capacity}.")
        self.capacity = capacity
        self.log_path = log_path
        self._episodes: Deque[Episode] = deque()
        self._open: Optional[Episode] = None
        self._count = 0
        self._next_index = 0
        self._observation_size: Optional[int] = None
        self._rng = np.random.default_rng(seed)
        self._lock = threading.Lock()

    def __len__(self) -> int:
        return self._count

    @property
    def episode_count(self) -> int:
        with self._lock:
            return len(self._episodes) + (1 if self._open is not None else 0)

    def episodes(self) -> List[Episode]:
        """
        A snapshot of every stored episode, oldest first, the open one last.
        """
        with self._lock:
            return self._snapshot()

    def _snapshot(self) -> List[Episode]:
        episodes = [Episode(e.index, list(e.transitions), e.closed) for e in self._episodes]
        if self._open is not None:
            episodes.append(Episode(self._open.index, list(self._open.transitions), False))
        return episodes

    def append(self, transition: Transition) -> "ReplayBuffer":
        transition.validate(self._observation_size)
        with self._lock:
            if self._observation_size is None:
                self._observation_size = int(np.asarray(transition.observation).shape[0])
            if self._open is None:
                self._open = Episode(self._next_index)
                self._next_index += 1
            self._open.transitions.append(transition)
            self._count += 1
            closed = None
            if transition.closes_episode:
                self._open.closed = True
                closed = self._open
                self._episodes.append(self._open)
                self._open = None
            self._evict()
        if closed is not None and self.log_path:
            append_episode_to_log(self.log_path, closed)
        return self

    def _evict(self) -> None:
        while self._count > self.capacity and self._episodes:
            evicted = self._episodes.popleft()
            self._count -= len(evicted)
            logger.debug("Evicted episode %d (%d transitions).", evicted.index, len(evicted))
        if self._count > self.capacity and self._open is not None:
            logger.warning("Open episode %d alone exceeds the replay capacity of %d transitions, discarding it.",
                           self._open.index, self.capacity)
            self._count -= len(self._open)
            self._open = None

    def sample_sequences(self, batch_size: int, length: int, seed: Optional[int] = None) -> SequenceBatch:
        """
        Draws segments uniformly over every valid (episode, offset) pair. Segments never cross episodes.

        :param batch_size: Number of segments.
        :param length: Length of every segment.
        :param seed: Makes the draw a pure function of the buffer contents; the buffer's own stream is used otherwise.
        :raises InsufficientDataError: If no stored episode holds at least `length` transitions.
        """
        if batch_size <= 0 or length <= 0:
            raise InsufficientDataError(f"Batch size and length must be positive, got {batch_size} and {length}.")
        with self._lock:
            episodes = self._snapshot()
            rng = np.random.default_rng(seed) if seed is not None else self._rng
            eligible = [e for e in episodes if len(e) >= length]
            if not eligible:
                raise InsufficientDataError(f"No stored episode holds the required {length} transitions.")
            starts = np.array([len(e) - length + 1 for e in eligible])
            picks = rng.integers(0, int(starts.sum()), size=batch_size)
        bounds = np.cumsum(starts)
        segments = []
        for pick in picks:
            which = int(np.searchsorted(bounds, pick, side="right"))
            offset = int(pick - (bounds[which - 1] if which else 0))
            episode = eligible[which]
            segments.append((episode.index, offset, episode.transitions[offset:offset + length]))
        return SequenceBatch.from_segments(segments)


def append_episode_to_log(path: str, episode: Episode) -> None:
    """
    Appends one episode as five records: observations, actions, rewards, costs and flags
    (terminated, intervened, truncated).
    """
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    transitions = episode.transitions
    prefix = f"episode-{episode.index}"
    with open(path, "ab") as handle:
        write_record(handle, f"{prefix}/observations", np.array([t.observation for t in transitions]))
        write_record(handle, f"{prefix}/actions", np.array([t.action for t in transitions]))
        write_record(handle, f"{prefix}/rewards", np.array([t.reward for t in transitions]))
        write_record(handle, f"{prefix}/costs", np.array([t.cost for t in transitions]))
        write_record(handle, f"{prefix}/flags",
                     np.array([[t.terminated, t.intervened, t.truncated] for t in transitions], dtype=np.float64))


def read_episode_log(path: str) -> Iterator[List[Transition]]:
    """
    Yields the episodes of a replay log in the order they were written.
    """
    with open(path, "rb") as handle:
        while True:
            records = {}
            try:
                for _ in range(5):
                    key, array = read_record(handle)
                    records[key.split("/", 1)[1]] = array
            except EOFError:
                if records:
                    logger.warning("Replay log '%s' ends inside an episode, ignoring the partial episode.", path)
                return
            flags = records["flags"].astype(bool)
            yield [Transition(observation=records["observations"][i], action=records["actions"][i],
                              reward=float(records["rewards"][i]), cost=float(records["costs"][i]),
                              terminated=bool(flags[i, 0]), intervened=bool(flags[i, 1]), truncated=bool(flags[i, 2]))
                   for i in range(len(records["rewards"]))]


def load_replay_log(path: str, capacity: int, seed: int = 0) -> ReplayBuffer:
    """
    Rebuilds a buffer from a replay log, keeping the newest episodes that fit the capacity.
    """
    buffer = ReplayBuffer(capacity, seed)
    for transitions in read_episode_log(path):
        for transition in transitions:
            buffer.append(transition)
    buffer.log_path = path
    return buffer
