import logging
import os
from argparse import Namespace
from dataclasses import dataclass, field
from typing import Dict, List

from navsecure.commands import PARSER_OPTIONS
from navsecure.config import fingerprint_of
from navsecure.eval.report import Comparison, MetricsReport, comparison_report, read_reports_csv, \
    write_reports_csv
from navsecure.exceptions.configuration import ConfigError
from navsecure.orm.controllers.run_controller import RunController, open_registry

logger = logging.getLogger(__name__)

COMPARISON_CSV_FILE = "comparison.csv"
COMPARISON_TABLE_FILE = "comparison.txt"


@dataclass
class CompareConfig:
    """
    Side-by-side comparison of metric reports.
    """
    reports: List[str] = field(default_factory=list)
    """Two or more report CSV files to compare. Every row of every file is one method."""
    out: str = os.path.join("runs", "comparison")
    """Directory the comparison CSV and text table are written to."""
    verbose: bool = False
    """Log at debug level."""

    def validate(self) -> None:
        if len(self.reports) < 2:
            raise ConfigError(f"At least two report files are required, got {len(self.reports)}."
                              f" Use '--help' for more information.")


def gather_rows(paths: List[str]) -> Dict[str, MetricsReport]:
    """
    Reads every report file. Row names that occur in more than one file are prefixed with the file's name.

    :raises ReportParseError: If any file is malformed.
    """
    tables = [(os.path.splitext(os.path.basename(path))[0], read_reports_csv(path)) for path in paths]
    counts: Dict[str, int] = {}
    for _, rows in tables:
        for name in rows:
            counts[name] = counts.get(name, 0) + 1
    gathered: Dict[str, MetricsReport] = {}
    for stem, rows in tables:
        for name, report in rows.items():
            key = f"{stem}:{name}" if counts[name] > 1 else name
            if key in gathered:
                raise ConfigError(f"Row '{key}' appears twice; rename one of the report files.")
            gathered[key] = report
    return gathered


def compare(args: Namespace) -> Comparison:
    """
    Ranks the rows of the given reports, then writes the comparison CSV and the rendered table.

    :param args: Parsed arguments holding the CompareConfig as `config`.
    :raises ReportParseError: If a report file is malformed.
    :raises ConfigError: If fewer than two report files are given.
    """
    config: CompareConfig = args.config
    config.validate()
    rows = gather_rows(config.reports)
    comparison = comparison_report(rows)
    print(comparison.table)

    os.makedirs(config.out, exist_ok=True)
    fingerprint = fingerprint_of({name: report.fingerprint for name, report in rows.items()})
    database = open_registry(config.out)
    try:
        controller = RunController.start(config.out, "compare", fingerprint, 0, ", ".join(config.reports))
        csv_path = os.path.join(config.out, COMPARISON_CSV_FILE)
        extra = {name: {"rank": comparison.ranking.index(name) + 1, "wins": comparison.wins[name]}
                 for name in rows}
        write_reports_csv(csv_path, rows, extra)
        controller.add_artifact("table", csv_path)
        table_path = os.path.join(config.out, COMPARISON_TABLE_FILE)
        with open(table_path, "w") as file:
            file.write(comparison.table + "\n")
        controller.add_artifact("table", table_path)
        controller.finish()
    finally:
        database.close()
    logger.info("Ranking: %s", ", ".join(comparison.ranking))
    return comparison


def setup(subparsers) -> None:
    """
    Registers the 'compare' command.
    """
    parser = subparsers.add_parser("compare", help="Compare metric reports and mark the best method per metric.",
                                   **PARSER_OPTIONS)
    parser.add_arguments(CompareConfig, dest="config")
    parser.set_defaults(handler=compare)
