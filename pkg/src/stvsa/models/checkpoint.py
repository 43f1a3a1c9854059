"""Self-describing model checkpoints (.npz with an embedded JSON header)."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .layers import Module
from .networks import ModelConfig, SequenceClassifier, build_model

FORMAT_VERSION = 1


def _set_buffer(model: Module, dotted: str, value: np.ndarray) -> None:
    obj = model
    *path, leaf = dotted.split(".")
    for part in path:
        obj = obj[int(part)] if isinstance(obj, (list, tuple)) else getattr(obj, part)
    current = getattr(obj, leaf)
    if np.shape(current) != value.shape:
        raise ValueError(f"buffer {dotted}: shape {value.shape} != {np.shape(current)}")
    setattr(obj, leaf, value.copy())


def save_checkpoint(model: SequenceClassifier, path, extra: dict | None = None) -> Path:
    path = Path(path)
    meta = {
        "format_version": FORMAT_VERSION,
        "variant": model.config.variant,
        "config": model.config.to_dict(),
        "extra": extra or {},
    }
    arrays = {f"param/{k}": v for k, v in model.state_dict().items()}
    arrays.update({f"buffer/{k}": np.asarray(v) for k, v in model.named_buffers()})
    arrays["__meta__"] = np.frombuffer(json.dumps(meta, sort_keys=True).encode(), dtype=np.uint8)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as fh:
        np.savez(fh, **arrays)
    return path


def read_meta(path) -> dict:
    with np.load(path) as z:
        if "__meta__" not in z:
            raise ValueError(f"{path}: not a model checkpoint (no header)")
        return json.loads(z["__meta__"].tobytes().decode())


def load_checkpoint(path) -> SequenceClassifier:
    meta = read_meta(path)
    if meta.get("format_version") != FORMAT_VERSION:
        raise ValueError(f"{path}: unsupported checkpoint format {meta.get('format_version')!r}")
    model = build_model(ModelConfig(**meta["config"]), 0)
    with np.load(path) as z:
        state = {k[6:]: z[k] for k in z.files if k.startswith("param/")}
        buffers = {k[7:]: z[k] for k in z.files if k.startswith("buffer/")}
    model.load_state_dict(state)
    for name, value in buffers.items():
        _set_buffer(model, name, value)
    return model
