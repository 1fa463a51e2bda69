"""
Structured training diagnostics, one JSON object per line.
"""
import math
import os
from typing import Any, Dict

from navsecure.helpers.json_lines import append_json_lines


def _clean(value: Any) -> Any:
    # JSON has no NaN or infinity.
    if isinstance(value, float) and not math.isfinite(value):
        return str(value)
    return value


class DiagnosticsWriter:
    """
    Appends records tagged with a `kind` (world_model, agent, episode, checkpoint, failure) to a JSON-lines
    file. The first record of every file is a header carrying the config fingerprint.
    """

    def __init__(self, file_location: str, fingerprint: str):
        self.file_location = file_location
        self.fingerprint = fingerprint
        if os.path.exists(file_location):
            os.remove(file_location)
        append_json_lines(file_location, [{"kind": "header", "fingerprint": fingerprint}])

    def write(self, kind: str, step: int, **values: Any) -> None:
        """
        :param kind: What the record describes.
        :param step: Environment step the record belongs to.
        :param values: Scalars to store.
        """
        record: Dict[str, Any] = {"kind": kind, "step": step}
        record.update({name: _clean(value) for name, value in values.items()})
        append_json_lines(self.file_location, [record])
