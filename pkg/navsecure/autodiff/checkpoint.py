"""
Versioned flat checkpoint files.

Layout::

    NAVSECURE-CHECKPOINT
    format_version: 1
    seed: <creation seed>
    fingerprint: <config fingerprint>
    metadata: <single-line JSON>
    entries: <count>
    <blank line>
    then per entry a text line "<key> <shape>" followed by the little-endian float64 values, row-major.

Keys are "<set>/<kind>/<parameter>" with kind one of param, m (first moment) or v (second moment).
The same record encoding is used by the replay log.
"""
from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from typing import IO, Any, Dict, Tuple

import numpy as np

from navsecure.autodiff.nn import ParameterSet
from navsecure.exceptions.configuration import CheckpointFormatError

MAGIC = "NAVSECURE-CHECKPOINT"
FORMAT_VERSION = 1
_DTYPE = np.dtype("<f8")
_KINDS = {"param": "values", "m": "first_moments", "v": "second_moments"}


@dataclass
class Checkpoint:
    seed: int
    """Seed the run that produced this checkpoint was created with."""
    fingerprint: str
    """Fingerprint of the configuration the parameters were trained under."""
    parameter_sets: Dict[str, ParameterSet] = field(default_factory=dict)
    """Named parameter sets, e.g. world_model, actor, critic."""
    metadata: Dict[str, Any] = field(default_factory=dict)
    """JSON-serialisable extras: the run config, optimiser step counts, the Lagrange multiplier."""
    format_version: int = FORMAT_VERSION


def _format_shape(shape: Tuple[int, ...]) -> str:
    return "x".join(str(size) for size in shape) if shape else "-"


def _parse_shape(text: str) -> Tuple[int, ...]:
    if text == "-":
        return ()
    return tuple(int(size) for size in text.split("x"))


def write_record(handle: IO[bytes], key: str, array: np.ndarray) -> None:
    if any(ch.isspace() for ch in key):
        raise CheckpointFormatError(f"Record key '{key}' may not contain whitespace.")
    array = np.ascontiguousarray(array, dtype=_DTYPE)
    handle.write(f"{key} {_format_shape(array.shape)}\n".encode("ascii"))
    handle.write(array.tobytes(order="C"))


def read_record(handle: IO[bytes]) -> Tuple[str, np.ndarray]:
    """
    :return: The next (key, array) record. Raises EOFError at a clean end of file.
    """
    line = handle.readline()
    if not line:
        raise EOFError
    try:
        key, shape_text = line.decode("ascii").rstrip("\n").split(" ")
        shape = _parse_shape(shape_text)
    except ValueError:
        raise CheckpointFormatError(f"Malformed record header {line!r}.") from None
    count = int(np.prod(shape)) if shape else 1
    payload = handle.read(count * _DTYPE.itemsize)
    if len(payload) != count * _DTYPE.itemsize:
        raise CheckpointFormatError(f"Record '{key}' is truncated.")
    return key, np.frombuffer(payload, dtype=_DTYPE).reshape(shape).astype(np.float64)


def save_checkpoint(path: str, checkpoint: Checkpoint) -> None:
    """
    Writes every parameter and its optimiser state. Step counters are stored in the metadata.
    """
    metadata = dict(checkpoint.metadata)
    metadata["steps"] = {name: params.step for name, params in checkpoint.parameter_sets.items()}
    entry_count = sum(3 * len(params) for params in checkpoint.parameter_sets.values())

    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "wb") as handle:
        header = (f"{MAGIC}\n"
                  f"format_version: {checkpoint.format_version}\n"
                  f"seed: {checkpoint.seed}\n"
                  f"fingerprint: {checkpoint.fingerprint}\n"
                  f"metadata: {json.dumps(metadata, sort_keys=True)}\n"
                  f"entries: {entry_count}\n\n")
        handle.write(header.encode("utf-8"))
        for set_name, params in checkpoint.parameter_sets.items():
            for name in params.names():
                for kind, attribute in _KINDS.items():
                    write_record(handle, f"{set_name}/{kind}/{name}", getattr(params, attribute)[name])


def _read_header_field(handle: IO[bytes], key: str) -> str:
    line = handle.readline().decode("utf-8").rstrip("\n")
    prefix = f"{key}: "
    if not line.startswith(prefix):
        raise CheckpointFormatError(f"Expected header field '{key}', found {line!r}.")
    return line[len(prefix):]


def load_checkpoint(path: str) -> Checkpoint:
    if not os.path.isfile(path):
        raise CheckpointFormatError(f"Checkpoint '{path}' doesn't exist.")
    with open(path, "rb") as handle:
        if handle.readline().decode("utf-8", errors="replace").rstrip("\n") != MAGIC:
            raise CheckpointFormatError(f"'{path}' is not a navsecure checkpoint.")
        version = int(_read_header_field(handle, "format_version"))
        if version != FORMAT_VERSION:
            raise CheckpointFormatError(f"Unsupported checkpoint format version {version}.")
        seed = int(_read_header_field(handle, "seed"))
        fingerprint = _read_header_field(handle, "fingerprint")
        metadata = json.loads(_read_header_field(handle, "metadata"))
        entry_count = int(_read_header_field(handle, "entries"))
        if handle.readline().strip():
            raise CheckpointFormatError("Checkpoint header is not terminated by a blank line.")

        sets: Dict[str, ParameterSet] = {}
        for _ in range(entry_count):
            try:
                key, array = read_record(handle)
            except EOFError:
                raise CheckpointFormatError(f"'{path}' ends before all {entry_count} entries were read.") from None
            try:
                set_name, kind, name = key.split("/", 2)
                attribute = _KINDS[kind]
            except (ValueError, KeyError):
                raise CheckpointFormatError(f"Unknown checkpoint entry '{key}'.") from None
            params = sets.setdefault(set_name, ParameterSet())
            getattr(params, attribute)[name] = array

    for set_name, params in sets.items():
        params.step = int(metadata.get("steps", {}).get(set_name, 0))
        for name in params.values:
            if name not in params.first_moments or name not in params.second_moments:
                raise CheckpointFormatError(f"Optimiser state missing for '{set_name}/{name}'.")
    return Checkpoint(seed=seed, fingerprint=fingerprint, parameter_sets=sets, metadata=metadata,
                      format_version=version)
