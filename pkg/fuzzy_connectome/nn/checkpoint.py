"""
Network checkpoint files.

Layout (all integers little-endian):

    magic        4 bytes   b"FCNN"
    version      uint32    CHECKPOINT_VERSION
    header_len   uint32    byte length of the JSON header
    header       UTF-8 JSON {"layers": [LayerSpec...], "trainable": [bool...],
                             "params": [{"layer", "name", "shape"}...],
                             "metadata": {...}}
    blob         float64 '<f8' values of every parameter, in header order, C order
"""

from __future__ import annotations

import json
import struct
from pathlib import Path
from typing import Any, Dict, Optional, Tuple, Union

import numpy as np

from ..errors import FuzzyConnectomeError
from .layers import LayerSpec, build_layer
from .network import Sequential

MAGIC = b"FCNN"
CHECKPOINT_VERSION = 1
_PREFIX = struct.Struct("<4sII")


class CheckpointError(FuzzyConnectomeError, ValueError):
    pass


def checkpoint_bytes(network: Sequential, metadata: Optional[Dict[str, Any]] = None) -> bytes:
    entries = []
    blobs = []
    for i, layer in enumerate(network.layers):
        for name, p in layer.params.items():
            entries.append({"layer": i, "name": name, "shape": list(p.shape)})
            blobs.append(np.ascontiguousarray(p, dtype="<f8").tobytes())
    header = json.dumps(
        {
            "layers": [s.model_dump(mode="json") for s in network.specs()],
            "trainable": [layer.trainable for layer in network.layers],
            "params": entries,
            "metadata": metadata or {},
        },
        sort_keys=True,
    ).encode("utf-8")
    return _PREFIX.pack(MAGIC, CHECKPOINT_VERSION, len(header)) + header + b"".join(blobs)


def save_checkpoint(
    network: Sequential,
    path: Union[str, Path],
    metadata: Optional[Dict[str, Any]] = None,
) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(checkpoint_bytes(network, metadata))
    return path


def load_checkpoint(path: Union[str, Path]) -> Tuple[Sequential, Dict[str, Any]]:
    raw = Path(path).read_bytes()
    if len(raw) < _PREFIX.size:
        raise CheckpointError(f"{path}: truncated checkpoint")
    magic, version, header_len = _PREFIX.unpack_from(raw)
    if magic != MAGIC:
        raise CheckpointError(f"{path}: not a network checkpoint")
    if version != CHECKPOINT_VERSION:
        raise CheckpointError(f"{path}: unsupported checkpoint version {version}")
    start = _PREFIX.size
    header = json.loads(raw[start:start + header_len].decode("utf-8"))
    offset = start + header_len

    layers = [build_layer(LayerSpec.model_validate(s)) for s in header["layers"]]
    for layer, flag in zip(layers, header["trainable"]):
        layer.trainable = bool(flag)
    for entry in header["params"]:
        shape = tuple(entry["shape"])
        count = int(np.prod(shape, dtype=np.int64))
        end = offset + 8 * count
        if end > len(raw):
            raise CheckpointError(f"{path}: parameter blob shorter than header declares")
        values = np.frombuffer(raw[offset:end], dtype="<f8").astype(float).reshape(shape)
        layers[entry["layer"]].params[entry["name"]] = values
        offset = end
    if offset != len(raw):
        raise CheckpointError(f"{path}: {len(raw) - offset} trailing bytes")

    network = Sequential(layers)
    network.zero_grad()
    return network, header["metadata"]
