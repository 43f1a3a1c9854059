"""Experiment configuration: one YAML file with a section per pipeline stage.

Schema (``version: 1``)::

    version: 1
    seed: 0
    output_dir: runs/default
    data:      DatasetConfig fields, plus nested sfcm / gan / generator / grid
    model:     ModelConfig fields
    training:  TrainConfig fields
    attack:    methods, threats, epsilons, samples, cw_epsilon, surrogate_epochs, surrogate_queries, export
    defense:   mix_ratio, epochs, epsilon, attacks
    compare:   variants, seeds
    sweep:     qubits, layers, windows_s, seeds, epochs, workers
    ablation:  AblationConfig fields, plus seeds

Every key is optional; omitted keys take the defaults below. Unknown keys are
rejected with their dotted name. Overrides use ``section.key=value`` where the
value is parsed as YAML (``training.epochs=1``, ``attack.epsilons=[0.01,0.05]``).
"""

from __future__ import annotations

import copy
import hashlib
import json
from dataclasses import asdict, fields
from pathlib import Path

import yaml

from .data.lsgan import LsganConfig
from .data.sfcm import SfcmConfig
from .data.simulate import GeneratorConfig, ScenarioGrid
from .harness.experiments import AblationConfig, DatasetConfig
from .harness.training import TrainConfig
from .models.networks import ModelConfig

CONFIG_VERSION = 1


class ConfigError(ValueError):
    """Schema violation; the message names the offending dotted key."""


def _plain(obj):
    if isinstance(obj, dict):
        return {k: _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    return obj


def default_config() -> dict:
    data = asdict(DatasetConfig())
    return _plain({
        "version": CONFIG_VERSION,
        "seed": 0,
        "output_dir": "runs/default",
        "data": data,
        "model": asdict(ModelConfig()),
        "training": asdict(TrainConfig()),
        "attack": {
            "methods": ["mifgsm", "pgd", "cw"],
            "threats": ["white_box", "gray_box"],
            "epsilons": [0.01, 0.03, 0.05],
            "samples": 200,
            "cw_epsilon": None,
            "surrogate_epochs": 20,
            "surrogate_queries": 2000,
            "export": False,
        },
        "defense": {"mix_ratio": 0.5, "epochs": 5, "epsilon": 0.03, "attacks": ["pgd", "mifgsm"]},
        "compare": {"variants": ["qstaformer", "transformer", "lstm"], "seeds": [0, 1, 2]},
        "sweep": {"qubits": [4, 6, 8, 10], "layers": [2, 3, 4, 5, 6],
                  "windows_s": [0.03, 0.05, 0.07, 0.09, 0.11, 0.15, 0.2], "seeds": [0],
                  "epochs": 15, "workers": 1},
        "ablation": {**asdict(AblationConfig()), "seeds": [0, 1, 2]},
    })


# keys whose value may legitimately be null or change type
_LOOSE = {"attack.cw_epsilon", "ablation.eval_samples"}


def _check(value, default, key: str):
    if key in _LOOSE or default is None:
        return value
    if isinstance(default, dict):
        if not isinstance(value, dict):
            raise ConfigError(f"{key}: expected a mapping, got {type(value).__name__}")
        return value
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ConfigError(f"{key}: expected true/false, got {value!r}")
    elif isinstance(default, (int, float)):
        if isinstance(default, float) and isinstance(value, str):
            try:  # YAML 1.1 reads "1e-4" as a string
                value = float(value)
            except ValueError:
                pass
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{key}: expected a number, got {value!r}")
        if isinstance(default, int) and not isinstance(value, int):
            raise ConfigError(f"{key}: expected an integer, got {value!r}")
    elif isinstance(default, str):
        if not isinstance(value, str):
            raise ConfigError(f"{key}: expected a string, got {value!r}")
    elif isinstance(default, list):
        if not isinstance(value, list):
            raise ConfigError(f"{key}: expected a list, got {value!r}")
    return value


def merge(base: dict, update: dict, prefix: str = "") -> dict:
    """Deep-merge ``update`` into a copy of ``base``; unknown keys raise ``ConfigError``."""
    out = copy.deepcopy(base)
    for k, v in update.items():
        key = f"{prefix}{k}"
        if k not in base:
            raise ConfigError(f"unknown config key {key!r}")
        v = _check(v, base[k], key)
        if isinstance(base[k], dict) and key not in _LOOSE:
            out[k] = merge(base[k], v, key + ".")
        else:
            out[k] = copy.deepcopy(v)
    return out


def parse_override(text: str) -> dict:
    if "=" not in text:
        raise ConfigError(f"override {text!r} is not of the form section.key=value")
    path, raw = text.split("=", 1)
    value = yaml.safe_load(raw) if raw.strip() else ""
    out = value
    for part in reversed(path.strip().split(".")):
        if not part:
            raise ConfigError(f"override {text!r} has an empty key")
        out = {part: out}
    return out


def load_config(path=None, overrides=(), seed: int | None = None) -> dict:
    """Defaults <- file <- overrides <- seed, validated and built once to catch bad values."""
    cfg = default_config()
    if path is not None:
        p = Path(path)
        if not p.is_file():
            raise FileNotFoundError(f"config file not found: {p}")
        loaded = yaml.safe_load(p.read_text(encoding="utf-8")) or {}
        if not isinstance(loaded, dict):
            raise ConfigError("config file must hold a mapping at top level")
        if loaded.get("version", CONFIG_VERSION) != CONFIG_VERSION:
            raise ConfigError(f"version: unsupported config version {loaded.get('version')!r} "
                              f"(expected {CONFIG_VERSION})")
        cfg = merge(cfg, loaded)
    for text in overrides:
        cfg = merge(cfg, parse_override(text))
    if seed is not None:
        cfg["seed"] = int(seed)
    build_sections(cfg)
    return cfg


def config_hash(cfg: dict) -> str:
    return hashlib.sha256(canonical_bytes(cfg)).hexdigest()[:16]


def canonical_bytes(cfg: dict) -> bytes:
    return json.dumps(cfg, sort_keys=True, separators=(",", ":")).encode()


def dump_config(cfg: dict) -> str:
    return yaml.safe_dump(cfg, sort_keys=True, default_flow_style=None)


def _build(cls, section: dict, key: str):
    try:
        names = {f.name for f in fields(cls)}
        kwargs = {k: tuple(v) if isinstance(v, list) else v for k, v in section.items() if k in names}
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{key}: {exc}") from exc


def build_sections(cfg: dict) -> dict:
    """Typed objects for each stage: ``data``, ``model``, ``training``, ``ablation``."""
    d = dict(cfg["data"])
    nested = {
        "sfcm": _build(SfcmConfig, d.pop("sfcm"), "data.sfcm"),
        "gan": _build(LsganConfig, d.pop("gan"), "data.gan"),
        "generator": _build(GeneratorConfig, d.pop("generator"), "data.generator"),
        "grid": _build(ScenarioGrid, d.pop("grid"), "data.grid"),
    }
    data = _build(DatasetConfig, d, "data")
    for k, v in nested.items():
        setattr(data, k, v)
    out = {
        "data": data,
        "model": _build(ModelConfig, cfg["model"], "model"),
        "training": _build(TrainConfig, cfg["training"], "training"),
        "ablation": _build(AblationConfig, cfg["ablation"], "ablation"),
    }
    if not isinstance(cfg["seed"], int) or cfg["seed"] < 0:
        raise ConfigError("seed: expected a non-negative integer")
    return out
