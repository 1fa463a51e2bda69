import json
import logging
import os
from argparse import Namespace

from navsecure.commands import PARSER_OPTIONS, explicit_options
from navsecure.config import RunConfig, source_and_merge_base_config
from navsecure.exceptions.base import NavSecureError
from navsecure.orm.controllers.run_controller import RunController, open_registry
from navsecure.runtime.trainer import Trainer
from navsecure.sim.curriculum import select_scenarios

logger = logging.getLogger(__name__)

RUN_CONFIG_FILE = "run_config.json"


def scenario_label(config: RunConfig) -> str:
    return config.spec or config.scenario or f"stage {config.stage}"


def train(args: Namespace) -> None:
    """
    Trains a world model and a safe policy, writing the checkpoint, diagnostics, episode logs and reward curve
    into the output directory.

    :param args: Parsed arguments holding the RunConfig as `config`.
    :raises ConfigError: If the configuration is unusable.
    :raises NumericFailureError: If training produced too many consecutive non-finite losses.
    """
    config: RunConfig = args.config
    if config.merge_with_config_file:
        config = source_and_merge_base_config(config, explicit_options(args))
    config.validate()
    scenarios = select_scenarios(config.stage, config.spec, config.scenario)

    os.makedirs(config.out, exist_ok=True)
    fingerprint = config.fingerprint()
    config_path = os.path.join(config.out, RUN_CONFIG_FILE)
    with open(config_path, "w") as file:
        json.dump({"fingerprint": fingerprint, "config": config.to_dict()}, file, indent=2, sort_keys=True)

    database = open_registry(config.out)
    try:
        controller = RunController.start(config.out, "train", fingerprint, config.seed, scenario_label(config))
        controller.add_artifact("config", config_path)
        trainer = Trainer(config, scenarios, config.out, controller)
        controller.set_dimensions(trainer.model.dimensions)
        try:
            result = trainer.run()
        except NavSecureError as e:
            controller.finish(status=f"failed: {e.message}")
            raise
        controller.finish()
    finally:
        database.close()
    logger.info("Checkpoint written to %s (fingerprint %s, final multiplier %.4f).", result.checkpoint,
                fingerprint, result.multiplier)


def setup(subparsers) -> None:
    """
    Registers the 'train' command.
    """
    parser = subparsers.add_parser("train", help="Train the world model and the safe driving policy.",
                                   **PARSER_OPTIONS)
    parser.add_arguments(RunConfig, dest="config")
    parser.set_defaults(handler=train)
