import logging
import os
from argparse import Namespace
from dataclasses import dataclass, field, fields
from typing import Dict, List, Optional

from navsecure.commands import PARSER_OPTIONS, explicit_options
from navsecure.config import SimConfig
from navsecure.eval.logs import write_episode_logs
from navsecure.eval.report import MetricsReport, build_report, reality_gap, write_reports_csv
from navsecure.exceptions.base import NavSecureError
from navsecure.exceptions.configuration import ConfigError
from navsecure.orm.controllers.run_controller import RunController, open_registry
from navsecure.runtime.evaluation import TrainedPolicy, load_trained_policy, rollout_greedy
from navsecure.sim.curriculum import select_scenarios
from navsecure.sim.scenario import ScenarioSpec, deploy_spec

logger = logging.getLogger(__name__)

REPORT_FILE = "report.csv"


@dataclass
class EvaluateConfig:
    """
    Greedy evaluation of a trained checkpoint with the intervention oracle active.
    """
    checkpoint: str = os.path.join("runs", "latest", "checkpoint.bin")
    """Checkpoint to evaluate."""
    episodes: int = 20
    """Number of evaluation episodes per variant."""
    seed: int = 0
    """Seed of the evaluation episodes."""
    stage: int = 1
    """Curriculum stage (1-3) to evaluate on when no spec file or scenario is given."""
    spec: str = ""
    """Path to a scenario specification file; overrides the stage."""
    scenario: str = ""
    """Name of a catalogue scenario; overrides the stage."""
    deploy: bool = False
    """Evaluate under the held-out deploy variant instead of the randomised training variant."""
    gap: bool = False
    """Evaluate both variants and add the reality-gap columns (deploy - train) to the deploy row."""
    fingerprint: str = ""
    """Refuse the checkpoint unless it carries exactly this config fingerprint."""
    out: str = os.path.join("runs", "evaluation")
    """Directory the report and episode logs are written to."""
    verbose: bool = False
    """Log at debug level."""
    sim: SimConfig = field(default_factory=SimConfig)
    """Simulator settings. The checkpoint's own are used unless given; given ones must match them."""

    def validate(self) -> None:
        """
        :raises ConfigError: If anything is invalid, providing a useful message.
        """
        if not os.path.isfile(self.checkpoint):
            raise ConfigError(f"Checkpoint doesn't exist at the provided path '{self.checkpoint}'."
                              f" Use '--help' for more information.")
        if self.episodes < 1:
            raise ConfigError(f"At least one episode is required, got {self.episodes}."
                              f" Use '--help' for more information.")
        if self.spec and not os.path.isfile(self.spec):
            raise ConfigError(f"Scenario spec file doesn't exist at the provided path '{self.spec}'."
                              f" Use '--help' for more information.")


def requested_simulator(args: Namespace) -> Optional[SimConfig]:
    """
    The simulator settings asked for on the command line, or None when no simulator flag was given.
    """
    config: EvaluateConfig = args.config
    explicit = explicit_options(args)
    if explicit is None:
        return None if config.sim == SimConfig() else config.sim
    return config.sim if explicit & {option.name for option in fields(SimConfig)} else None


def evaluate(args: Namespace) -> Dict[str, MetricsReport]:
    """
    Rolls out the greedy policy of a checkpoint and writes a metrics report plus the episode logs.

    :param args: Parsed arguments holding the EvaluateConfig as `config`.
    :return: The reports by row name, 'train' and/or 'deploy'.
    :raises IncompatibleCheckpointError: If the checkpoint doesn't fit the requested simulator, dimensions or
        fingerprint.
    """
    config: EvaluateConfig = args.config
    config.validate()
    policy = load_trained_policy(config.checkpoint, requested_simulator(args), config.fingerprint)
    scenarios = select_scenarios(config.stage, config.spec, config.scenario)
    variants = {}
    if config.gap or not config.deploy:
        variants["train"] = scenarios
    if config.gap or config.deploy:
        variants["deploy"] = [deploy_spec(spec) for spec in scenarios]

    os.makedirs(config.out, exist_ok=True)
    database = open_registry(config.out)
    try:
        controller = RunController.start(config.out, "evaluate", policy.fingerprint, config.seed,
                                         config.spec or config.scenario or f"stage {config.stage}",
                                         policy.model.dimensions)
        try:
            reports = _evaluate_variants(config, policy, variants, controller)
        except NavSecureError as e:
            controller.finish(status=f"failed: {e.message}")
            raise
        controller.finish()
    finally:
        database.close()
    return reports


def _evaluate_variants(config: EvaluateConfig, policy: TrainedPolicy, variants: Dict[str, List[ScenarioSpec]],
                       controller: RunController) -> Dict[str, MetricsReport]:
    reports: Dict[str, MetricsReport] = {}
    for name, scenarios in variants.items():
        logs = rollout_greedy(policy, scenarios, config.episodes, config.seed)
        logs_path = os.path.join(config.out, f"episodes_{name}.jsonl")
        if os.path.exists(logs_path):
            os.remove(logs_path)
        write_episode_logs(logs_path, logs, policy.fingerprint)
        controller.add_artifact("episodes", logs_path)
        report = build_report(logs, policy.fingerprint, policy.config.agent.discount)
        reports[name] = report
        controller.record_metrics(name, report.mpi, report.tt, report.sr, report.std_v, report.episodes)
        logger.info("%s: MPI %.2f m%s, TT %s, SR %.1f %%, Std[V] %.3f m/s, %d collision(s).", name, report.mpi,
                    " (no interventions, lower bound)" if report.mpi_lower_bound else "",
                    "n/a" if report.tt is None else f"{report.tt:.2f} s", report.sr, report.std_v,
                    report.collisions)

    extra = None
    if "train" in reports and "deploy" in reports:
        gap = reality_gap(reports["train"], reports["deploy"])
        extra = {"deploy": {f"gap_{metric}": value for metric, value in gap.items()}}
        logger.info("Reality gap (deploy - train): %s", ", ".join(
            f"{metric} {'n/a' if value is None else format(value, '+.3f')}" for metric, value in gap.items()))
    report_path = os.path.join(config.out, REPORT_FILE)
    write_reports_csv(report_path, reports, extra)
    controller.add_artifact("report", report_path)
    return reports


def setup(subparsers) -> None:
    """
    Registers the 'evaluate' command.
    """
    parser = subparsers.add_parser("evaluate", help="Evaluate a checkpoint's greedy policy.", **PARSER_OPTIONS)
    parser.add_arguments(EvaluateConfig, dest="config")
    parser.set_defaults(handler=evaluate)
