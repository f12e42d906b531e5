"""
``.pssm`` checkpoint container.

Layout (all integers little-endian):

    8 bytes   magic b"PSSMCKPT"
    4 bytes   uint32 format version
    8 bytes   uint64 header length H
    H bytes   UTF-8 JSON header
    ...       raw array bytes, concatenated in header order

The header holds the model config, free-form metadata (normalization
statistics, channel names, training summary) and an array table of
{name, dtype, shape, offset, nbytes}; offsets are relative to the end of the
header. JSON is written with sorted keys so identical models produce
identical files.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
from pydantic import ValidationError

from library.errors import CheckpointError
from library.model.config import ModelConfig
from library.model.forecaster import ForecastModel

MAGIC = b"PSSMCKPT"
FORMAT_VERSION = 1
_PREAMBLE = struct.Struct("<8sIQ")
_DTYPES = {"float32": "<f4", "float64": "<f8"}


@dataclass
class Checkpoint:
    """A loaded checkpoint: rebuilt model plus its metadata."""

    model: ForecastModel
    metadata: dict[str, Any] = field(default_factory=dict)
    version: int = FORMAT_VERSION


def save_checkpoint(
    path: str | Path, model: ForecastModel, metadata: dict[str, Any] | None = None
) -> Path:
    """
    Write ``model`` and ``metadata`` to ``path``.

    Args:
        path: Destination file (parent directories are created)
        model: Model to persist
        metadata: JSON-serializable extras

    Returns:
        The written path
    """
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)

    table = []
    payload = bytearray()
    for param in model.parameters():
        dtype_name = str(param.dtype)
        raw = param.data.astype(_DTYPES[dtype_name], copy=False).tobytes(order="C")
        table.append(
            {
                "name": param.name,
                "dtype": dtype_name,
                "shape": list(param.shape),
                "offset": len(payload),
                "nbytes": len(raw),
            }
        )
        payload.extend(raw)

    header = {
        "config": model.config.model_dump(mode="json"),
        "metadata": metadata or {},
        "arrays": table,
    }
    header_bytes = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    with target.open("wb") as handle:
        handle.write(_PREAMBLE.pack(MAGIC, FORMAT_VERSION, len(header_bytes)))
        handle.write(header_bytes)
        handle.write(bytes(payload))
    return target


def read_header(path: str | Path) -> tuple[dict[str, Any], bytes, int]:
    """Parse the preamble and JSON header; returns (header, array bytes, version)."""
    source = Path(path)
    if not source.exists():
        raise FileNotFoundError(f"checkpoint not found: {source}")
    blob = source.read_bytes()
    if len(blob) < _PREAMBLE.size:
        raise CheckpointError(f"{source}: file too short to be a checkpoint")
    magic, version, header_len = _PREAMBLE.unpack_from(blob)
    if magic != MAGIC:
        raise CheckpointError(f"{source}: bad magic {magic!r}, not a .pssm checkpoint")
    if version > FORMAT_VERSION:
        raise CheckpointError(
            f"{source}: format version {version} is newer than supported {FORMAT_VERSION}"
        )
    start = _PREAMBLE.size
    try:
        header = json.loads(blob[start : start + header_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CheckpointError(f"{source}: corrupt header ({exc})") from exc
    return header, blob[start + header_len :], version


def load_checkpoint(path: str | Path) -> Checkpoint:
    """
    Rebuild the model stored at ``path``.

    Raises:
        FileNotFoundError: Path does not exist
        CheckpointError: Bad magic, unsupported version, corrupt header or array table
    """
    header, payload, version = read_header(path)
    try:
        config = ModelConfig.model_validate(header["config"])
    except (KeyError, ValidationError) as exc:
        raise CheckpointError(f"{path}: invalid model config in header ({exc})") from exc

    arrays: dict[str, np.ndarray] = {}
    dtypes = set()
    for entry in header.get("arrays", []):
        try:
            little = _DTYPES[entry["dtype"]]
            start, nbytes = int(entry["offset"]), int(entry["nbytes"])
            shape = tuple(int(s) for s in entry["shape"])
        except (KeyError, TypeError, ValueError) as exc:
            raise CheckpointError(f"{path}: malformed array entry {entry!r}") from exc
        if start + nbytes > len(payload):
            raise CheckpointError(f"{path}: array {entry['name']} runs past end of file")
        values = np.frombuffer(payload[start : start + nbytes], dtype=little)
        if values.size != int(np.prod(shape, dtype=np.int64)):
            raise CheckpointError(f"{path}: array {entry['name']} has wrong byte count")
        arrays[entry["name"]] = values.reshape(shape).astype(entry["dtype"])
        dtypes.add(entry["dtype"])

    if len(dtypes) > 1:
        raise CheckpointError(f"{path}: mixed parameter dtypes {sorted(dtypes)}")
    dtype = dtypes.pop() if dtypes else "float64"
    model = ForecastModel.init(config, seed=0, dtype=dtype)
    model.load_state_dict(arrays)
    return Checkpoint(model=model, metadata=dict(header.get("metadata", {})), version=version)
