import json
import os
from typing import Any, Dict, Iterable, Iterator


def append_json_lines(file_location: str, records: Iterable[Dict[str, Any]]) -> None:
    """
    Appends each record as one line of JSON, creating the file and its directory if needed.

    :param file_location: Where to find the JSON-lines file.
    :param records: Objects to append, in order.
    """
    os.makedirs(os.path.dirname(os.path.abspath(file_location)), exist_ok=True)
    with open(file_location, "a") as file:
        for record in records:
            file.write(json.dumps(record, sort_keys=True) + "\n")


def read_json_lines(file_location: str) -> Iterator[Dict[str, Any]]:
    """
    Reads every non-empty line of a JSON-lines file.

    :param file_location: Where to find the JSON-lines file.
    :return: The decoded objects, in file order.
    :raises json.JSONDecodeError: If a line isn't valid JSON.
    """
    with open(file_location, "r") as file:
        for line in file:
            if line.strip():
                yield json.loads(line)
