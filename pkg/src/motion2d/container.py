"""Binary container framing shared by checkpoints and retrieval indexes:
magic bytes, 32-bit version, JSON manifest, little-endian float32 payload."""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .errors import CheckpointError

MAGIC = b"MR2D"
CONTAINER_VERSION = 1
_HEADER = struct.Struct("<4sII")  # magic, version, manifest byte length


def write_container(path, kind: str, manifest: dict, arrays: dict[str, np.ndarray]) -> None:
    tensors = []
    chunks = []
    offset = 0
    for name, arr in arrays.items():
        blob = np.ascontiguousarray(arr, dtype="<f4").tobytes()
        tensors.append({"name": name, "shape": list(np.asarray(arr).shape), "offset": offset})
        chunks.append(blob)
        offset += len(blob)
    full = dict(manifest)
    full["kind"] = kind
    full["tensors"] = tensors
    full["payload_bytes"] = offset
    body = json.dumps(full).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, CONTAINER_VERSION, len(body)))
        fh.write(body)
        for blob in chunks:
            fh.write(blob)


def read_container(path, kind: str) -> tuple[dict, dict[str, np.ndarray]]:
    path = Path(path)
    try:
        raw = path.read_bytes()
    except FileNotFoundError as exc:
        raise CheckpointError(f"container not found: {path}") from exc
    if len(raw) < _HEADER.size:
        raise CheckpointError(f"truncated container: {path}")
    magic, version, manifest_len = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise CheckpointError(f"bad magic bytes in {path}")
    if version != CONTAINER_VERSION:
        raise CheckpointError(f"unsupported container version {version} in {path}")
    body_end = _HEADER.size + manifest_len
    if len(raw) < body_end:
        raise CheckpointError(f"truncated manifest in {path}")
    try:
        manifest = json.loads(raw[_HEADER.size : body_end].decode("utf-8"))
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise CheckpointError(f"malformed manifest in {path}: {exc}") from exc
    if manifest.get("kind") != kind:
        raise CheckpointError(
            f"container {path} holds {manifest.get('kind')!r}, expected {kind!r}"
        )
    payload = raw[body_end:]
    if len(payload) < manifest.get("payload_bytes", 0):
        raise CheckpointError(f"truncated payload in {path}")
    arrays = {}
    for entry in manifest["tensors"]:
        shape = tuple(entry["shape"])
        count = int(np.prod(shape)) if shape else 1
        start = entry["offset"]
        arr = np.frombuffer(payload, dtype="<f4", count=count, offset=start)
        arrays[entry["name"]] = arr.reshape(shape).copy()
    return manifest, arrays
