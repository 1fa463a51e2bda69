import importlib
import logging
import os
import sys
from argparse import Namespace
from typing import List, Optional

import simple_parsing

from navsecure.commands import PARSER_OPTIONS, supplied_options
from navsecure.exceptions.configuration import CheckpointFormatError, ConfigError, IncompatibleCheckpointError, \
    ReportParseError
from navsecure.exceptions.data import EmptyLogsError, InvalidScenarioError
from navsecure.exceptions.numerics import DistributionError, DomainError, NonFiniteLossError, NumericFailureError

logger = logging.getLogger("navsecure")

EXIT_SUCCESS = 0
EXIT_CONFIG_ERROR = 2
EXIT_NUMERIC_FAILURE = 3

CONFIG_ERRORS = (ConfigError, IncompatibleCheckpointError, CheckpointFormatError, ReportParseError,
                 InvalidScenarioError, EmptyLogsError, DomainError, DistributionError)
NUMERIC_FAILURES = (NumericFailureError, NonFiniteLossError)


def build_parser() -> simple_parsing.ArgumentParser:
    """
    Builds the command line parser, loading every command module found in the commands folder.
    """
    parser = simple_parsing.ArgumentParser(
        prog="navsecure", description="Safe world-model driving: train, evaluate and compare policies.",
        **PARSER_OPTIONS)
    subparsers = parser.add_subparsers(dest="command", required=True)

    # This finds any files in the commands folder adjacent to where this file is located, and sources them.
    for command_file in sorted(os.listdir(os.path.join(os.path.dirname(os.path.abspath(__file__)), 'commands'))):
        # Load in any python files that aren't metadata files.
        if command_file.endswith('.py') and not command_file.startswith('__'):
            command_file = command_file[:-3]
            try:
                # This needs to be the location of the module as if you were to import it.
                importlib.import_module(f'navsecure.commands.{command_file}').setup(subparsers)
            except Exception as e:
                exception = f"{type(e).__name__}: {e}"
                print(f'Failed to load commands from "{command_file}"\n{exception}', file=sys.stderr)
    return parser


def configure_logging(verbose: bool) -> None:
    handler = logging.StreamHandler()
    handler.setFormatter(logging.Formatter("%(asctime)s %(levelname)-7s %(name)s: %(message)s"))
    logger.handlers[:] = [handler]
    logger.setLevel(logging.DEBUG if verbose else logging.INFO)


def main(args: Namespace) -> int:
    """
    Runs the chosen command, translating failures into exit codes.

    :param args: Parsed command line; holds the command's handler and its config.
    :return: 0 on success, 2 for configuration, checkpoint, scenario, report or invalid input problems, 3 for
        numeric failure.
    """
    config = getattr(args, "config", None)
    configure_logging(bool(getattr(config, "verbose", False)))
    try:
        args.handler(args)
    except CONFIG_ERRORS as e:
        logger.error(e.message)
        return EXIT_CONFIG_ERROR
    except NUMERIC_FAILURES as e:
        logger.error(e.message)
        return EXIT_NUMERIC_FAILURE
    return EXIT_SUCCESS


def run(argv: Optional[List[str]] = None) -> int:
    """
    Parses `argv` (the process arguments by default) and runs the command.
    """
    argv = sys.argv[1:] if argv is None else list(argv)
    args = build_parser().parse_args(argv)
    args.explicit = supplied_options(argv)
    return main(args)
