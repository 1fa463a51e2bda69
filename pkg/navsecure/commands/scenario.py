import logging
from argparse import Namespace
from dataclasses import dataclass

from navsecure.commands import PARSER_OPTIONS
from navsecure.exceptions.configuration import ConfigError
from navsecure.sim.curriculum import describe_stages, scenario_by_name
from navsecure.sim.scenario import ScenarioSpec, deploy_spec, save_spec

logger = logging.getLogger(__name__)


@dataclass
class ListConfig:
    verbose: bool = False
    """Log at debug level."""


@dataclass
class ExportConfig:
    """
    Writes a catalogue scenario to a specification file that 'train --spec' and 'evaluate --spec' accept.
    """
    name: str = "corridor"
    """Catalogue scenario to export."""
    path: str = ""
    """File to write the specification to."""
    deploy: bool = False
    """Export the held-out deploy variant instead."""
    verbose: bool = False
    """Log at debug level."""

    def validate(self) -> None:
        if not self.path:
            raise ConfigError("A destination is required for the export. Use '--help' for more information.")


def list_scenarios(args: Namespace) -> str:
    listing = describe_stages()
    print(listing)
    return listing


def export_scenario(args: Namespace) -> ScenarioSpec:
    config: ExportConfig = args.config
    config.validate()
    spec = scenario_by_name(config.name)
    if config.deploy:
        spec = deploy_spec(spec)
    save_spec(spec, config.path)
    logger.info("Wrote scenario '%s' to %s.", spec.name, config.path)
    return spec


def setup(subparsers) -> None:
    """
    Registers 'scenario list' and 'scenario export'.
    """
    parser = subparsers.add_parser("scenario", help="List or export the built-in scenarios.", **PARSER_OPTIONS)
    actions = parser.add_subparsers(dest="scenario_command", required=True)
    listing = actions.add_parser("list", help="List the scenario catalogue by curriculum stage.", **PARSER_OPTIONS)
    listing.add_arguments(ListConfig, dest="config")
    listing.set_defaults(handler=list_scenarios)
    export = actions.add_parser("export", help="Write a catalogue scenario to a specification file.", **PARSER_OPTIONS)
    export.add_arguments(ExportConfig, dest="config")
    export.set_defaults(handler=export_scenario)
