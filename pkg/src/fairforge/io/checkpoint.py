"""
Checkpoint container.

Layout of a checkpoint file:

    magic      6 bytes   b"FFCKPT"
    version    uint32    little endian
    length     uint64    byte length of the JSON header
    header     JSON      config, provenance, optimizer counters, tensor table
    payload    raw little-endian float64 tensors in header order

Tensors are stored as float64 so a save/load cycle is bitwise exact.
"""
import json
import logging
import struct
from pathlib import Path
from typing import Any, Dict, List, Tuple, Union

import numpy as np

from .. import config
from ..errors import ConfigurationError, DimensionError, FormatError, TruncatedFileError
from ..model.transformer import ModelCheckpoint, ModelConfig, OptimizerState, TrainingProvenance

logger = logging.getLogger(__name__)

_PREAMBLE = struct.Struct("<6sIQ")
_DTYPE = "<f8"


def _tensor_table(checkpoint: ModelCheckpoint) -> List[Tuple[str, np.ndarray]]:
    table = [(f"param/{name}", value) for name, value in checkpoint.params.items()]
    state = checkpoint.optimizer
    if state is not None:
        table += [(f"adam_m/{name}", value) for name, value in state.m.items()]
        table += [(f"adam_v/{name}", value) for name, value in state.v.items()]
    return table


def save_checkpoint(checkpoint: ModelCheckpoint, path: Union[str, Path]) -> Path:
    """Write `checkpoint` to `path`, creating parent directories."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    entries: List[Dict[str, Any]] = []
    blobs: List[bytes] = []
    offset = 0
    for name, value in _tensor_table(checkpoint):
        blob = np.ascontiguousarray(value, dtype=_DTYPE).tobytes()
        entries.append({"name": name, "shape": list(value.shape), "offset": offset,
                        "nbytes": len(blob)})
        blobs.append(blob)
        offset += len(blob)
    state = checkpoint.optimizer
    header = {
        "config": checkpoint.config.to_dict(),
        "provenance": checkpoint.provenance.to_dict(),
        "optimizer": None if state is None else {"step": state.step, "skipped": state.skipped},
        "dtype": _DTYPE,
        "tensors": entries,
    }
    header_bytes = json.dumps(header, sort_keys=True).encode("utf-8")
    with path.open("wb") as handle:
        handle.write(_PREAMBLE.pack(config.CHECKPOINT_MAGIC, config.CHECKPOINT_VERSION,
                                    len(header_bytes)))
        handle.write(header_bytes)
        for blob in blobs:
            handle.write(blob)
    logger.info("Checkpoint saved to %s (%d tensors)", path, len(entries))
    return path


def load_checkpoint(path: Union[str, Path]) -> ModelCheckpoint:
    """
    Read a checkpoint written by `save_checkpoint`.

    Raises:
        FormatError: Wrong magic bytes, unknown version, unreadable header or
            tensors that do not match the stored architecture.
        TruncatedFileError: The file ends before the declared header or payload.
    """
    data = Path(path).read_bytes()
    if len(data) < _PREAMBLE.size:
        raise TruncatedFileError(f"{path}: {len(data)} bytes is shorter than the preamble")
    magic, version, header_length = _PREAMBLE.unpack_from(data)
    if magic != config.CHECKPOINT_MAGIC:
        raise FormatError(f"{path}: not a checkpoint (magic {magic!r})")
    if version != config.CHECKPOINT_VERSION:
        raise FormatError(f"{path}: unsupported checkpoint version {version}")
    start = _PREAMBLE.size
    if len(data) < start + header_length:
        raise TruncatedFileError(f"{path}: header declares {header_length} bytes, file ends early")
    try:
        header = json.loads(data[start:start + header_length].decode("utf-8"))
        entries = header["tensors"]
        cfg = ModelConfig.from_dict(header["config"])
        provenance = TrainingProvenance.from_dict(header["provenance"])
    except (UnicodeDecodeError, json.JSONDecodeError, KeyError, TypeError,
            ConfigurationError) as exc:
        raise FormatError(f"{path}: corrupted checkpoint header ({exc})") from exc

    payload = memoryview(data)[start + header_length:]
    tensors: Dict[str, np.ndarray] = {}
    for entry in entries:
        end = entry["offset"] + entry["nbytes"]
        if end > len(payload):
            raise TruncatedFileError(
                f"{path}: tensor {entry['name']} needs {end} payload bytes, found {len(payload)}"
            )
        values = np.frombuffer(payload[entry["offset"]:end], dtype=_DTYPE)
        try:
            tensors[entry["name"]] = values.reshape(entry["shape"]).astype(np.float64)
        except ValueError as exc:
            raise FormatError(f"{path}: tensor {entry['name']} has a bad shape") from exc

    def group(prefix: str) -> Dict[str, np.ndarray]:
        return {name[len(prefix):]: value for name, value in tensors.items()
                if name.startswith(prefix)}

    optimizer = None
    if header.get("optimizer") is not None:
        optimizer = OptimizerState(step=int(header["optimizer"]["step"]),
                                   m=group("adam_m/"), v=group("adam_v/"),
                                   skipped=int(header["optimizer"]["skipped"]))
    try:
        checkpoint = ModelCheckpoint(params=group("param/"), config=cfg,
                                     provenance=provenance, optimizer=optimizer)
    except DimensionError as exc:
        raise FormatError(f"{path}: {exc}") from exc
    logger.info("Checkpoint loaded from %s (%d steps)", path, provenance.steps_completed)
    return checkpoint
