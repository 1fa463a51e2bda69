"""
Metric reports, their CSV files and side-by-side comparison tables.
"""
from __future__ import annotations

import csv
import dataclasses
import logging
import math
import os
from dataclasses import dataclass
from typing import Dict, List, Mapping, Optional, Sequence

import numpy as np

from navsecure.eval.logs import EpisodeLog
from navsecure.eval.metrics import compute_mpi, compute_sr, compute_sr_distance, compute_std_v, compute_tt
from navsecure.exceptions.configuration import ConfigError, ReportParseError

logger = logging.getLogger(__name__)

CORE_COLUMNS = ("name", "mpi", "tt", "sr", "std_v")


@dataclass(frozen=True)
class MetricsReport:
    mpi: float
    """Meters per intervention."""
    tt: Optional[float]
    """Mean travel time of completed episodes in seconds; None when none completed."""
    sr: float
    """Success rate in percent."""
    std_v: float
    """Population standard deviation of speed in m/s."""
    episodes: int = 0
    fingerprint: str = ""
    mpi_lower_bound: bool = False
    sr_distance: float = 0.0
    dnf: int = 0
    mean_return: float = 0.0
    mean_discounted_cost: float = 0.0
    collisions: int = 0
    interventions: int = 0
    total_distance: float = 0.0

    def __post_init__(self):
        # Zero meters per intervention only makes sense as the lower bound of an intervention-free evaluation.
        mpi_valid = self.mpi > 0 or (self.mpi == 0 and self.mpi_lower_bound)
        if not mpi_valid or not 0.0 <= self.sr <= 100.0 or self.std_v < 0:
            raise ConfigError(f"Report values out of range: MPI {self.mpi}, SR {self.sr}, Std[V] {self.std_v}.")


def build_report(logs: Sequence[EpisodeLog], fingerprint: str = "", discount: float = 0.99) -> MetricsReport:
    mpi = compute_mpi(logs)
    tt = compute_tt(logs)
    return MetricsReport(
        mpi=mpi.meters, tt=tt.seconds, sr=compute_sr(logs), std_v=compute_std_v(logs), episodes=len(logs),
        fingerprint=fingerprint, mpi_lower_bound=mpi.lower_bound, sr_distance=compute_sr_distance(logs),
        dnf=tt.dnf, mean_return=math.fsum(log.total_return for log in logs) / len(logs),
        mean_discounted_cost=math.fsum(log.discounted_cost(discount) for log in logs) / len(logs),
        collisions=sum(log.collisions for log in logs), interventions=sum(log.interventions for log in logs),
        total_distance=math.fsum(log.total_distance for log in logs))


def _format(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_reports_csv(path: str, rows: Mapping[str, MetricsReport], extra: Optional[Mapping[str, Dict]] = None):
    """
    One row per named report. Floats are written with repr so they read back bit-identical.

    :param extra: Additional columns per row name, e.g. rank and wins of a comparison.
    """
    fields = [f.name for f in dataclasses.fields(MetricsReport)]
    extra_columns = sorted({key for values in (extra or {}).values() for key in values})
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", newline="") as file:
        writer = csv.writer(file)
        writer.writerow(["name", *fields, *extra_columns])
        for name, report in rows.items():
            values = [_format(getattr(report, f)) for f in fields]
            additional = [_format((extra or {}).get(name, {}).get(column)) for column in extra_columns]
            writer.writerow([name, *values, *additional])


def _parse_field(field_type, text: str):
    if field_type in ("Optional[float]",):
        return float(text) if text else None
    if field_type == "float":
        return float(text)
    if field_type == "int":
        return int(text)
    if field_type == "bool":
        if text not in ("true", "false"):
            raise ValueError(f"expected true or false, got {text!r}")
        return text == "true"
    return text


def read_reports_csv(path: str) -> Dict[str, MetricsReport]:
    """
    :raises ReportParseError: With the path and line/column of the first problem.
    """
    if not os.path.isfile(path):
        raise ReportParseError(path, "file", "the file doesn't exist")
    types = {f.name: f.type for f in dataclasses.fields(MetricsReport)}
    rows: Dict[str, MetricsReport] = {}
    with open(path, newline="") as file:
        reader = csv.reader(file)
        header = next(reader, None)
        if header is None:
            raise ReportParseError(path, "line 1", "the file is empty")
        missing = [column for column in CORE_COLUMNS if column not in header]
        if missing:
            raise ReportParseError(path, "line 1", f"missing columns {', '.join(missing)}")
        for line_number, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise ReportParseError(path, f"line {line_number}",
                                       f"expected {len(header)} values, found {len(row)}")
            values = {}
            for column, text in zip(header, row):
                if column not in types:
                    continue
                try:
                    values[column] = _parse_field(str(types[column]), text)
                except ValueError as e:
                    raise ReportParseError(path, f"line {line_number}, column '{column}'", str(e)) from None
            try:
                rows[row[header.index("name")]] = MetricsReport(**values)
            except ConfigError as e:
                raise ReportParseError(path, f"line {line_number}", e.message) from None
    if not rows:
        raise ReportParseError(path, "line 2", "the file holds no report rows")
    return rows


# Metric -> True when higher is better.
RANKED_METRICS = {"mpi": True, "tt": False, "sr": True, "std_v": False}
METRIC_TITLES = {"mpi": "MPI", "tt": "TT", "sr": "SR", "std_v": "Std[V]"}


@dataclass(frozen=True)
class Comparison:
    winners: Dict[str, List[str]]
    """Per metric, every row sharing the best value."""
    ranking: List[str]
    """Rows by descending number of metric wins, ties broken by name."""
    wins: Dict[str, int]
    table: str


def comparison_report(rows: Mapping[str, MetricsReport]) -> Comparison:
    """
    Marks the per-metric winners (higher MPI and SR, lower TT and Std[V] are better) and ranks the rows.

    :raises ConfigError: With fewer than two rows.
    """
    if len(rows) < 2:
        raise ConfigError(f"A comparison needs at least two reports, got {len(rows)}.")
    winners: Dict[str, List[str]] = {}
    for metric, higher_is_better in RANKED_METRICS.items():
        candidates = {name: getattr(report, metric) for name, report in rows.items()
                      if getattr(report, metric) is not None}
        if not candidates:
            winners[metric] = []
            continue
        best = max(candidates.values()) if higher_is_better else min(candidates.values())
        winners[metric] = sorted(name for name, value in candidates.items() if value == best)

    wins = {name: sum(name in names for names in winners.values()) for name in rows}
    ranking = sorted(rows, key=lambda name: (-wins[name], name))
    return Comparison(winners, ranking, wins, _render(rows, winners, ranking))


def _render(rows: Mapping[str, MetricsReport], winners: Mapping[str, List[str]], ranking: List[str]) -> str:
    header = ["Method", *METRIC_TITLES.values()]
    body = []
    for name in ranking:
        cells = [name]
        for metric in RANKED_METRICS:
            value = getattr(rows[name], metric)
            text = "n/a" if value is None else f"{value:g}"
            cells.append(f"{text}*" if name in winners[metric] else text)
        body.append(cells)
    widths = [max(len(row[i]) for row in [header, *body]) for i in range(len(header))]
    lines = [" | ".join(cell.ljust(width) for cell, width in zip(row, widths)) for row in [header, *body]]
    lines.insert(1, "-+-".join("-" * width for width in widths))
    lines.append("* best value for the metric")
    return "\n".join(lines)


def reality_gap(train: MetricsReport, deploy: MetricsReport) -> Dict[str, Optional[float]]:
    """
    Signed change of each metric when moving from the training variant to the deploy variant.
    """
    gap: Dict[str, Optional[float]] = {}
    for metric in ("mpi", "tt", "sr", "std_v", "sr_distance", "mean_return", "mean_discounted_cost"):
        before, after = getattr(train, metric), getattr(deploy, metric)
        gap[metric] = None if before is None or after is None else float(np.float64(after) - np.float64(before))
    return gap
