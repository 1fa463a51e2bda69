import dataclasses
import hashlib
import json
import logging
import os
from dataclasses import dataclass, field
from typing import AbstractSet, Any, Dict, Optional

from navsecure.exceptions.configuration import ConfigError

logger = logging.getLogger(__name__)

# Fields that describe where things go rather than what is computed; they never enter the fingerprint.
_BOOKKEEPING_FIELDS = ("out", "verbose", "merge_with_config_file", "config_file_location")


@dataclass
class WorldModelConfig:
    """
    Sizes and loss weights of the recurrent state-space world model.
    """
    deter_size: int = 64
    """Size of the deterministic recurrent state."""
    stoch_size: int = 16
    """Size of the stochastic latent."""
    model_units: int = 64
    """Hidden width of every world-model network."""
    embed_size: int = 32
    """Size of the encoded observation."""
    sequence_length: int = 16
    """Length of replayed training sequences."""
    batch_size: int = 16
    """Number of replayed sequences per world-model update."""
    free_nats: float = 1.0
    """Per-step floor applied to each KL term."""
    kl_prior_scale: float = 0.8
    """Weight of KL(sg(posterior) || prior), the side that trains the prior."""
    kl_posterior_scale: float = 0.2
    """Weight of KL(posterior || sg(prior)), the side that regularises the posterior."""
    observation_scale: float = 1.0
    """Weight of the observation log-likelihood."""
    reward_scale: float = 1.0
    """Weight of the reward log-likelihood."""
    cost_scale: float = 1.0
    """Weight of the cost log-likelihood."""
    model_lr: float = 3e-4
    """Adam learning rate of the world model."""
    grad_clip: float = 100.0
    """Global gradient-norm clipping threshold, shared by every optimiser."""


@dataclass
class AgentConfig:
    """
    Actor-critic learning in imagination and the safety constraint.
    """
    horizon: int = 15
    """Number of imagined steps per actor-critic update."""
    discount: float = 0.99
    """Discount factor of rewards and costs."""
    return_lambda: float = 0.95
    """Mixing parameter of the TD(lambda) return targets."""
    entropy_scale: float = 3e-4
    """Weight of the policy entropy bonus."""
    agent_units: int = 64
    """Hidden width of the actor and both critics."""
    actor_lr: float = 3e-4
    """Adam learning rate of the actor."""
    critic_lr: float = 3e-4
    """Adam learning rate of the reward and cost critics."""
    budget: float = 0.1
    """Maximum allowed expected discounted episode cost."""
    multiplier_lr: float = 0.05
    """Step size of the Lagrange multiplier dual ascent."""
    multiplier_init: float = 0.0
    """Initial value of the Lagrange multiplier."""
    multiplier_window: int = 5
    """Number of recent episodes whose discounted cost drives each multiplier update."""
    freeze_multiplier: bool = False
    """Keep the multiplier at zero (unconstrained ablation)."""


@dataclass
class SimConfig:
    """
    Vehicle dynamics, sensing and reward shaping of the driving simulator.
    """
    dt: float = 0.1
    """Simulation timestep in seconds."""
    wheelbase: float = 2.5
    """Wheelbase of the kinematic bicycle, in meters."""
    max_steer: float = 0.5
    """Steering angle at full steer command, in radians."""
    max_accel: float = 2.0
    """Acceleration at full throttle, in m/s^2."""
    max_speed: float = 8.0
    """Speed limit, in m/s."""
    ray_count: int = 16
    """Number of range-finder rays."""
    ray_range: float = 20.0
    """Sensor range of each ray, in meters."""
    ray_fov: float = 3.141592653589793
    """Angular spread of the rays around the heading, in radians."""
    unsafe_margin: float = 1.0
    """Distance added to an obstacle's radius to obtain its unsafe radius, in meters."""
    lateral_weight: float = 0.05
    """Reward penalty per meter of lateral offset."""
    action_weight: float = 0.01
    """Reward penalty on the squared action norm."""
    ttc_min: float = 0.5
    """Intervene when the time to collision drops below this many seconds."""
    intervention_offset_factor: float = 1.5
    """Intervene when the lateral offset reaches this multiple of the lane half-width."""

    @property
    def observation_size(self) -> int:
        return self.ray_count + 4


@dataclass
class TrainingConfig:
    """
    Schedule of data collection and gradient updates.
    """
    steps: int = 200_000
    """Total environment steps to collect."""
    warmup_steps: int = 1_000
    """Steps of uniformly random actions before learning starts."""
    train_every: int = 4
    """Environment steps per gradient update after warm-up."""
    checkpoint_every: int = 10_000
    """Environment steps between checkpoints."""
    replay_capacity: int = 100_000
    """Replay buffer capacity, in transitions."""
    curve_window: int = 10
    """Episodes averaged per point of the reward curve."""
    nonfinite_limit: int = 10
    """Abort after more than this many consecutive non-finite losses."""


@dataclass
class RunConfig:
    """
    Global configuration of a training run. Everything except the output location is captured in the fingerprint.
    """
    seed: int = 0
    """Seed for every random stream of the run."""
    stage: int = 1
    """Curriculum stage (1-3) to train on when no spec file or scenario is given."""
    spec: str = ""
    """Path to a scenario specification file; overrides the stage."""
    scenario: str = ""
    """Name of a catalogue scenario (see 'scenario list'); overrides the stage."""
    out: str = os.path.join("runs", "latest")
    """Directory every artifact of the run is written to."""
    verbose: bool = False
    """Log at debug level."""

    merge_with_config_file: bool = False
    """Whether the command line arguments should be merged on top of the configuration file."""
    config_file_location: str = os.path.join(os.path.dirname(os.path.abspath(__file__)), "config.json")
    """Path to the optional config file to merge the command line arguments into."""

    world_model: WorldModelConfig = field(default_factory=WorldModelConfig)
    agent: AgentConfig = field(default_factory=AgentConfig)
    sim: SimConfig = field(default_factory=SimConfig)
    training: TrainingConfig = field(default_factory=TrainingConfig)

    def validate(self) -> None:
        """
        Validates that this config can be used for a run.

        :raises ConfigError: If anything is invalid, providing a useful message.
        """
        if self.spec and not os.path.isfile(self.spec):
            raise ConfigError(f"Scenario spec file doesn't exist at the provided path '{self.spec}'."
                              f" Use '--help' for more information.")
        if not self.spec and not self.scenario and self.stage not in (1, 2, 3):
            raise ConfigError(f"Stage must be 1, 2 or 3, got {self.stage}. Use '--help' for more information.")

        positive = {
            "deter_size": self.world_model.deter_size, "stoch_size": self.world_model.stoch_size,
            "model_units": self.world_model.model_units, "embed_size": self.world_model.embed_size,
            "sequence_length": self.world_model.sequence_length, "batch_size": self.world_model.batch_size,
            "horizon": self.agent.horizon, "agent_units": self.agent.agent_units,
            "multiplier_window": self.agent.multiplier_window, "ray_count": self.sim.ray_count,
            "train_every": self.training.train_every, "checkpoint_every": self.training.checkpoint_every,
            "replay_capacity": self.training.replay_capacity, "curve_window": self.training.curve_window,
        }
        for name, value in positive.items():
            if value <= 0:
                raise ConfigError(f"'{name}' must be positive, got {value}. Use '--help' for more information.")
        if self.training.steps < 0 or self.training.warmup_steps < 0:
            raise ConfigError("'steps' and 'warmup_steps' can't be negative. Use '--help' for more information.")
        if self.agent.budget < 0 or self.agent.multiplier_lr < 0 or self.agent.multiplier_init < 0:
            raise ConfigError("The budget and multiplier settings can't be negative."
                              " Use '--help' for more information.")
        weights = (self.world_model.free_nats, self.world_model.kl_prior_scale, self.world_model.kl_posterior_scale,
                   self.world_model.observation_scale, self.world_model.reward_scale, self.world_model.cost_scale,
                   self.agent.entropy_scale)
        if any(weight < 0 for weight in weights):
            raise ConfigError("Loss weights and the free-nats floor can't be negative."
                              " Use '--help' for more information.")
        if not 0.0 < self.agent.discount <= 1.0 or not 0.0 <= self.agent.return_lambda <= 1.0:
            raise ConfigError("'discount' must lie in (0, 1] and 'return_lambda' in [0, 1]."
                              " Use '--help' for more information.")

    def fingerprint(self) -> str:
        return fingerprint_of(self.to_dict())

    def to_dict(self) -> Dict[str, Any]:
        """
        The configuration as plain data, without the bookkeeping fields.
        """
        data = dataclasses.asdict(self)
        for name in _BOOKKEEPING_FIELDS:
            data.pop(name, None)
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "RunConfig":
        data = dict(data)
        nested = {"world_model": WorldModelConfig, "agent": AgentConfig, "sim": SimConfig,
                  "training": TrainingConfig}
        try:
            for name, config_type in nested.items():
                if name in data:
                    data[name] = config_type(**data[name])
            return cls(**data)
        except TypeError as e:
            raise ConfigError(f"Unknown or malformed configuration entry: {e}") from None


def fingerprint_of(data: Dict[str, Any]) -> str:
    canonical = json.dumps(data, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]


def source_and_merge_base_config(latest_config: RunConfig,
                                 explicit: Optional[AbstractSet[str]] = None) -> RunConfig:
    """
    Attempts to source the config file specified, and merge the command line config on top of it.

    :param latest_config: config to use as a source of truth.
    :param explicit: Names of the options written out on the command line. When known, exactly these override
                     the file, even when set to their default value.
    :return: A RunConfig that has been merged into the base config defined within the config file.
    :raises ConfigError: if config file cannot be found or parsed.
    """
    if not os.path.isfile(latest_config.config_file_location):
        raise ConfigError(
            f"'{latest_config.config_file_location}' could not found, but we have been told to source it."
            f" Run won't start to prevent unwanted behaviour.")
    with open(latest_config.config_file_location) as file:
        try:
            file_data = json.load(file)
        except json.JSONDecodeError as e:
            raise ConfigError(f"'{latest_config.config_file_location}' is not valid JSON: {e}") from None
    return _merge_config_with_base(RunConfig.from_dict(file_data), latest_config, explicit)


def _merge_config_with_base(base_config: RunConfig, new_config: RunConfig,
                            explicit: Optional[AbstractSet[str]] = None) -> RunConfig:
    """
    Merges the command line config into the file config. Any value given on the command line wins; when that
    overrides a different value from the file, a warning is logged. Without `explicit`, a value counts as given
    when it differs from the default.

    :param base_config: Config loaded from the file.
    :param new_config: Config parsed from the command line.
    :param explicit: Names of the options supplied on the command line, e.g. {"seed", "horizon"}.
    :return: A new merged config.
    """
    defaults = dataclasses.asdict(RunConfig())
    merged = dataclasses.asdict(base_config)
    flags = dataclasses.asdict(new_config)

    def merge(merged_level: Dict[str, Any], flag_level: Dict[str, Any], default_level: Dict[str, Any],
              path: str) -> None:
        for key, flag_value in flag_level.items():
            if isinstance(flag_value, dict):
                merge(merged_level[key], flag_value, default_level[key], f"{path}{key}.")
                continue
            given = key in explicit if explicit is not None else flag_value != default_level[key]
            if not given:
                continue
            if merged_level[key] != default_level[key] and merged_level[key] != flag_value:
                logger.warning("Flag --%s=%r overrides the config file value %r.", f"{path}{key}", flag_value,
                               merged_level[key])
            merged_level[key] = flag_value

    merge(merged, flags, defaults, "")
    return RunConfig.from_dict(merged)
