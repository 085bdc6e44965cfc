"""Checkpoint files: one named float64 array per parameter plus JSON metadata.

The container is numpy's .npz; every array carries its own shape header and
float64 values round-trip bit-exactly.
"""

import json
from pathlib import Path
from typing import Any

import numpy as np

from app.exceptions import IntegrityError

_META_KEY = "__meta__"


def save_checkpoint(path: str | Path, params: dict[str, np.ndarray], meta: dict[str, Any]) -> Path:
    """Write params and metadata to path (.npz appended if missing)."""
    path = Path(path)
    if path.suffix != ".npz":
        path = path.with_suffix(".npz")
    path.parent.mkdir(parents=True, exist_ok=True)
    arrays = {name: np.asarray(value, dtype=np.float64) for name, value in params.items()}
    arrays[_META_KEY] = np.frombuffer(json.dumps(meta, sort_keys=True).encode("utf-8"), dtype=np.uint8)
    with path.open("wb") as f:
        np.savez(f, **arrays)
    return path


def load_checkpoint(path: str | Path) -> tuple[dict[str, np.ndarray], dict[str, Any]]:
    """Read (params, metadata) written by save_checkpoint."""
    path = Path(path)
    with np.load(path, allow_pickle=False) as data:
        if _META_KEY not in data.files:
            raise IntegrityError(f"{path} is not a checkpoint (no metadata)")
        meta = json.loads(data[_META_KEY].tobytes().decode("utf-8"))
        params = {name: data[name].copy() for name in data.files if name != _META_KEY}
    return params, meta
