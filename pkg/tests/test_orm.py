import json

import pytest

from navsecure.orm.controllers.run_controller import MANIFEST_FILE, RunController, open_registry
from navsecure.orm.fields.integer_list_field import IntegerListField
from navsecure.orm.models.run import Run


@pytest.mark.parametrize("stored, expected", [(None, []), ("", []), (64, [64]), ("12,2,8,4", [12, 2, 8, 4])])
def test_integer_list_field_reads(stored, expected):
    assert IntegerListField().python_value(stored) == expected


def test_integer_list_field_writes():
    assert IntegerListField().db_value([12, 2, 8, 4]) == "12,2,8,4"
    assert IntegerListField().db_value([]) == ""


@pytest.fixture
def registry(tmp_path):
    database = open_registry(str(tmp_path))
    yield tmp_path
    database.close()


def test_run_lifecycle(registry):
    controller = RunController.start(str(registry), "train", "abc", 3, "stage 1")
    controller.set_dimensions([8, 2, 4, 3])
    controller.add_artifact("checkpoint", str(registry / "checkpoint.bin"))
    controller.add_artifact("checkpoint", str(registry / "checkpoint.bin"), fingerprint="def")
    controller.record_metrics("train", 12.5, None, 50.0, 0.3, 4)
    controller.finish()

    run = Run.get_by_id(controller.run.id)
    assert run.finished and run.status == "finished"
    assert run.dimensions == [8, 2, 4, 3]

    manifest = json.loads((registry / MANIFEST_FILE).read_text())
    (entry,) = manifest["runs"]
    assert entry["command"] == "train"
    assert entry["artifacts"] == [{"kind": "checkpoint", "path": "checkpoint.bin", "fingerprint": "def"}]
    assert entry["metrics"] == [{"name": "train", "mpi": 12.5, "tt": None, "sr": 50.0, "std_v": 0.3,
                                 "episodes": 4}]


def test_failed_runs_keep_their_reason(registry):
    first = RunController.start(str(registry), "train", "abc", 0)
    first.finish(status="failed: too many non-finite losses")
    second = RunController.start(str(registry), "evaluate", "abc", 1)
    second.finish()

    manifest = json.loads((registry / MANIFEST_FILE).read_text())
    assert [run["status"] for run in manifest["runs"]] == ["failed: too many non-finite losses", "finished"]
    assert not Run.get_by_id(first.run.id).finished
