import json
import logging
import os
from typing import List, Optional

from peewee import SqliteDatabase

from navsecure.orm.database import navsecure_database_proxy
from navsecure.orm.models.artifact import Artifact
from navsecure.orm.models.metrics_record import MetricsRecord
from navsecure.orm.models.run import Run

logger = logging.getLogger(__name__)

REGISTRY_FILE = "registry.db"
MANIFEST_FILE = "manifest.json"


def open_registry(directory: str) -> SqliteDatabase:
    """
    Points the database proxy at the registry inside the output directory, creating it if required.

    :param directory: Output directory of the run.
    :return: The connected database. Close it once the command is done.
    """
    os.makedirs(directory, exist_ok=True)
    database = SqliteDatabase(os.path.join(directory, REGISTRY_FILE), pragmas={'foreign_keys': 1})
    navsecure_database_proxy.initialize(database)
    database.connect(reuse_if_open=True)
    database.create_tables([Run, Artifact, MetricsRecord])
    return database


class RunController:
    """
    Controller for one Run, recording what it wrote and keeping the manifest of the output directory current.
    """
    run: Run

    def __init__(self, run: Run, directory: str):
        """
        :param run: Run this controller will be focused on.
        :param directory: Output directory the run writes into; artifact paths are stored relative to it.
        """
        self.run = run
        self.directory = directory

    @classmethod
    def start(cls, directory: str, command: str, fingerprint: str, seed: int, scenario: str = "",
              dimensions: Optional[List[int]] = None) -> "RunController":
        """
        Creates a new Run in the registry. The registry must already be open.
        """
        run = Run.create(command=command, fingerprint=fingerprint, seed=seed, scenario=scenario,
                         dimensions=dimensions or [])
        logger.debug("Registered %s run %d with fingerprint %s.", command, run.id, fingerprint)
        return cls(run, directory)

    def add_artifact(self, kind: str, path: str, fingerprint: Optional[str] = None) -> Artifact:
        """
        Records a file written by this run. Writing the same path again replaces the earlier record.

        :param kind: What sort of file it is, e.g. checkpoint or report.
        :param path: Location of the file, absolute or relative to the output directory.
        :param fingerprint: Fingerprint embedded in the file; the run's own when not given.
        """
        relative = os.path.relpath(os.path.abspath(path), os.path.abspath(self.directory))
        Artifact.delete().where((Artifact.run == self.run) & (Artifact.path == relative)).execute()
        return Artifact.create(run=self.run, kind=kind, path=relative,
                               fingerprint=fingerprint or self.run.fingerprint)

    def record_metrics(self, name: str, mpi: float, tt: Optional[float], sr: float, std_v: float,
                       episodes: int) -> MetricsRecord:
        return MetricsRecord.create(run=self.run, name=name, mpi=mpi, tt=tt, sr=sr, std_v=std_v,
                                    episodes=episodes)

    def set_dimensions(self, dimensions: List[int]) -> None:
        self.run.dimensions = list(dimensions)
        self.run.save()

    def finish(self, status: str = "finished") -> None:
        """
        Marks the run as done, saves it and rewrites the manifest.

        :param status: 'finished', or a description of the error that stopped the run.
        """
        self.run.finished = status == "finished"
        self.run.status = status
        self.run.save()
        self.write_manifest()

    def write_manifest(self) -> str:
        """
        Writes manifest.json listing every run in the directory and every artifact with its fingerprint.

        :return: Location of the manifest.
        """
        runs = []
        for run in Run.select().order_by(Run.id):
            runs.append({
                "id": run.id,
                "command": run.command,
                "fingerprint": run.fingerprint,
                "seed": run.seed,
                "scenario": run.scenario,
                "dimensions": run.dimensions,
                "status": run.status,
                "artifacts": [{"kind": artifact.kind, "path": artifact.path, "fingerprint": artifact.fingerprint}
                              for artifact in run.artifacts.order_by(Artifact.id)],
                "metrics": [{"name": record.name, "mpi": record.mpi, "tt": record.tt, "sr": record.sr,
                             "std_v": record.std_v, "episodes": record.episodes}
                            for record in run.metrics.order_by(MetricsRecord.id)],
            })
        location = os.path.join(self.directory, MANIFEST_FILE)
        with open(location, "w") as file:
            json.dump({"runs": runs}, file, indent=2)
        return location
