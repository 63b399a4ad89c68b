"""Single-file parameter container shared by training and sampling.

Layout:

    GONC1 <manifest_bytes>\n
    <manifest JSON, UTF-8>
    <blob: little-endian float64, parameters concatenated in manifest order>

The manifest lists every parameter's name, shape, and byte offset into the
blob, plus an optional metadata object. Round trips are bit-exact and the
bytes are a pure function of (params, meta): no timestamps, sorted JSON keys.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

__all__ = ["MAGIC", "flatten", "unflatten", "save_checkpoint", "load_checkpoint"]

MAGIC = "GONC1"


def flatten(params: dict) -> tuple[list[tuple[str, tuple[int, ...]]], np.ndarray]:
    """Concatenate parameters into one vector; layout is insertion order."""
    layout = []
    chunks = []
    for name, arr in params.items():
        a = np.asarray(arr, dtype=np.float64)
        layout.append((name, a.shape))
        chunks.append(a.ravel())
    return layout, (np.concatenate(chunks) if chunks else np.zeros(0))


def unflatten(layout, vector: np.ndarray) -> dict[str, np.ndarray]:
    out = {}
    pos = 0
    for name, shape in layout:
        n = int(np.prod(shape, dtype=np.int64))
        out[name] = np.asarray(vector[pos : pos + n], dtype=np.float64).reshape(shape).copy()
        pos += n
    if pos != vector.size:
        raise ValueError(f"layout covers {pos} values but vector has {vector.size}")
    return out


def save_checkpoint(path, params: dict, meta: dict | None = None) -> None:
    entries = []
    offset = 0
    blobs = []
    for name, arr in params.items():
        a = np.ascontiguousarray(np.asarray(arr, dtype=np.float64))
        entries.append({"name": name, "shape": list(a.shape), "offset": offset})
        raw = a.astype("<f8", copy=False).tobytes()
        blobs.append(raw)
        offset += len(raw)
    manifest = {"params": entries, "meta": meta or {}}
    mbytes = json.dumps(manifest, sort_keys=True, separators=(",", ":")).encode()
    with open(path, "wb") as f:
        f.write(f"{MAGIC} {len(mbytes)}\n".encode())
        f.write(mbytes)
        for raw in blobs:
            f.write(raw)


def load_checkpoint(path) -> tuple[dict[str, np.ndarray], dict]:
    raw = Path(path).read_bytes()
    nl = raw.index(b"\n")
    magic, mlen = raw[:nl].decode().split()
    if magic != MAGIC:
        raise ValueError(f"not a checkpoint file: bad magic {magic!r}")
    mlen = int(mlen)
    manifest = json.loads(raw[nl + 1 : nl + 1 + mlen].decode())
    blob = raw[nl + 1 + mlen :]
    params = {}
    for e in manifest["params"]:
        shape = tuple(e["shape"])
        n = int(np.prod(shape, dtype=np.int64))
        a = np.frombuffer(blob, dtype="<f8", count=n, offset=e["offset"])
        params[e["name"]] = a.astype(np.float64).reshape(shape)
    return params, manifest.get("meta", {})
