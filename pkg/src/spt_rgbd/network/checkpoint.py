"""Versioned parameter container: one ``.npz`` holding named arrays plus JSON metadata."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import torch

from spt_rgbd.network.config import NetConfig
from spt_rgbd.network.model import SPT

FORMAT = "spt-rgbd-checkpoint"
VERSION = 1
_META_KEY = "__meta__"


class CheckpointError(ValueError):
    pass


def save_checkpoint(model: SPT, path: str | Path, extra: dict | None = None):
    state = model.state_dict()
    arrays = {name: t.detach().cpu().numpy() for name, t in state.items()}
    meta = {
        "format": FORMAT,
        "version": VERSION,
        "config": model.cfg.to_dict(),
        "shapes": {name: list(a.shape) for name, a in arrays.items()},
        "dtypes": {name: str(a.dtype) for name, a in arrays.items()},
        "extra": extra or {},
    }
    arrays[_META_KEY] = np.frombuffer(json.dumps(meta).encode(), dtype=np.uint8)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as f:
        np.savez(f, **arrays)


def read_meta(path: str | Path) -> dict:
    with np.load(path) as data:
        if _META_KEY not in data:
            raise CheckpointError(f"{path}: no metadata record")
        meta = json.loads(bytes(data[_META_KEY]).decode())
    if meta.get("format") != FORMAT:
        raise CheckpointError(f"{path}: not an {FORMAT} file")
    if meta.get("version") != VERSION:
        raise CheckpointError(f"{path}: unsupported checkpoint version {meta.get('version')}")
    return meta


def load_checkpoint(path: str | Path, model: SPT | None = None) -> SPT:
    """Rebuild the model from the stored config (or fill ``model``); any shape mismatch is an error."""
    meta = read_meta(path)
    if model is None:
        model = SPT(NetConfig.from_dict(meta["config"]))
    state = model.state_dict()
    with np.load(path) as data:
        names = set(data.files) - {_META_KEY}
        missing = set(state) - names
        unexpected = names - set(state)
        if missing or unexpected:
            raise CheckpointError(
                f"{path}: parameter names differ (missing {sorted(missing)[:5]}, unexpected {sorted(unexpected)[:5]})"
            )
        new_state = {}
        for name, ref in state.items():
            arr = data[name]
            if list(arr.shape) != list(ref.shape) or list(arr.shape) != meta["shapes"][name]:
                raise CheckpointError(
                    f"{path}: {name} has shape {list(arr.shape)}, model expects {list(ref.shape)}"
                )
            new_state[name] = torch.from_numpy(arr.copy()).to(ref.dtype)
    model.load_state_dict(new_state)
    return model
