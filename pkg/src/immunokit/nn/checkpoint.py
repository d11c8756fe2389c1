"""Checkpoint serialization: JSON manifest plus raw float64 blobs.

Layout inside a checkpoint directory:
    manifest.json  -- format tag, step_count, optimizer config, free-form
                      model metadata, and per-parameter (name, shape, offset)
    params.bin     -- little-endian float64 values, concatenated in manifest
                      order

Moment buffers are not persisted; a loaded store starts with fresh moments.
"""

from __future__ import annotations

import json
from dataclasses import asdict
from pathlib import Path

import numpy as np

from .params import AdamConfig, ParamStore

FORMAT_TAG = "immunokit-checkpoint-v1"


def save_checkpoint(store: ParamStore, path, adam: AdamConfig | None = None,
                    meta: dict | None = None):
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    entries = []
    blobs = []
    offset = 0
    for name in store.names():
        value = np.ascontiguousarray(store[name].value, dtype="<f8")
        raw = value.tobytes()
        entries.append({
            "name": name,
            "shape": list(value.shape),
            "offset": offset,
            "nbytes": len(raw),
        })
        blobs.append(raw)
        offset += len(raw)
    manifest = {
        "format": FORMAT_TAG,
        "step_count": store.step_count,
        "adam": asdict(adam) if adam is not None else None,
        "meta": meta or {},
        "params": entries,
    }
    (path / "params.bin").write_bytes(b"".join(blobs))
    with open(path / "manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_checkpoint(path) -> tuple[ParamStore, AdamConfig | None, dict]:
    path = Path(path)
    with open(path / "manifest.json", encoding="utf-8") as fh:
        manifest = json.load(fh)
    if manifest.get("format") != FORMAT_TAG:
        raise ValueError(f"unsupported checkpoint format {manifest.get('format')!r}")
    raw = (path / "params.bin").read_bytes()
    store = ParamStore()
    for entry in manifest["params"]:
        start, nbytes = entry["offset"], entry["nbytes"]
        flat = np.frombuffer(raw[start:start + nbytes], dtype="<f8")
        store.add(entry["name"], flat.reshape(entry["shape"]).copy())
    store.step_count = manifest["step_count"]
    adam = AdamConfig(**manifest["adam"]) if manifest["adam"] else None
    return store, adam, manifest.get("meta", {})
