"""Weights on disk: ``<stem>.bin`` (float64 little-endian, concatenated) plus ``<stem>.json`` manifest."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .tensor import Tensor


def _paths(stem) -> tuple[Path, Path]:
    stem = Path(stem)
    if stem.suffix in (".bin", ".json"):
        stem = stem.with_suffix("")
    return stem.with_suffix(".bin"), stem.with_suffix(".json")


def save_checkpoint(params: dict[str, Tensor], stem, extra: dict | None = None) -> tuple[Path, Path]:
    bin_path, manifest_path = _paths(stem)
    entries = []
    offset = 0
    with open(bin_path, "wb") as fh:
        for name in sorted(params):
            arr = np.asarray(params[name].data, dtype="<f8", order="C")
            fh.write(arr.tobytes())
            entries.append({"name": name, "shape": list(arr.shape), "offset": offset})
            offset += arr.nbytes
    manifest = {"dtype": "float64-le", "tensors": entries}
    if extra:
        manifest["extra"] = extra
    manifest_path.write_text(json.dumps(manifest, indent=1, sort_keys=True) + "\n")
    return bin_path, manifest_path


def load_checkpoint(stem) -> tuple[dict[str, Tensor], dict]:
    bin_path, manifest_path = _paths(stem)
    manifest = json.loads(manifest_path.read_text())
    raw = bin_path.read_bytes()
    params = {}
    for entry in manifest["tensors"]:
        n = int(np.prod(entry["shape"])) if entry["shape"] else 1
        arr = np.frombuffer(raw, dtype="<f8", count=n, offset=entry["offset"]).reshape(tuple(entry["shape"]))
        params[entry["name"]] = Tensor(arr.astype(np.float64), requires_grad=True, name=entry["name"])
    return params, manifest.get("extra", {})
