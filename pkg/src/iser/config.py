"""Flat ``key = value`` run configuration with documented defaults."""

from __future__ import annotations

from dataclasses import fields
from pathlib import Path

from .model import ModelConfig
from .training import TrainConfig


class ConfigError(ValueError):
    pass


# key -> (default, description); model and training keys are appended below
RUN_KEYS: dict[str, tuple[object, str]] = {
    "dialect": ("span_json", "dataset format: span_json or chddi"),
    "train_path": ("", "training dataset file"),
    "eval_path": ("", "evaluation dataset file"),
    "predict_path": ("", "dataset to run predictions or attention dumps on (defaults to eval_path)"),
    "output_dir": ("runs/default", "directory every artifact is written under"),
    "checkpoint": ("", "checkpoint to load (defaults to <output_dir>/checkpoint.npz)"),
    "pretrained_embeddings": ("", "optional token embedding text file"),
    "relation_mode": ("re_boundaries", "re_boundaries or re_boundaries_and_types"),
    "save_every_epoch": (False, "also write checkpoint_epochNNN.npz after every epoch"),
    "log_level": ("WARNING", "python logging level"),
}

_MODEL_DOCS = {
    "d": "model width",
    "n_layers": "self-attention blocks in the encoder",
    "n_heads": "encoder attention heads",
    "sea_heads": "heads of the span context attention",
    "d_w": "width-embedding size",
    "k": "maximum span width",
    "dropout": "dropout rate (encoder only)",
    "fusion_cell": "recurrent cell fusing the two views: lstm or gru",
    "sea_pool": "context summary: final (last states) or max (max-pool of outputs)",
    "dtype": "float64 or float32",
}
_TRAIN_DOCS = {
    "epochs": "training epochs",
    "batch_size": "sentences per optimizer step",
    "base_lr": "peak learning rate, decayed linearly to 0",
    "threshold": "relation probability threshold",
    "neg_entities": "negative spans sampled per sentence",
    "neg_relations": "negative entity pairs sampled per sentence",
    "seed": "seed for initialization, sampling, shuffling and dropout",
}
for _f in fields(ModelConfig):
    RUN_KEYS[_f.name] = (_f.default, _MODEL_DOCS[_f.name])
for _f in fields(TrainConfig):
    RUN_KEYS[_f.name] = (_f.default, _TRAIN_DOCS[_f.name])


def _coerce(key: str, raw):
    default = RUN_KEYS[key][0]
    if not isinstance(raw, str):
        return raw
    raw = raw.strip()
    if len(raw) >= 2 and raw[0] == raw[-1] and raw[0] in "\"'":
        raw = raw[1:-1]
    try:
        if isinstance(default, bool):
            low = raw.lower()
            if low in ("true", "yes", "1", "on"):
                return True
            if low in ("false", "no", "0", "off"):
                return False
            raise ValueError(raw)
        if isinstance(default, int):
            return int(raw)
        if isinstance(default, float):
            return float(raw)
    except ValueError:
        raise ConfigError(f"bad value for {key}: {raw!r}") from None
    return raw


def parse_text(text: str) -> dict:
    out = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in RUN_KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        out[key] = _coerce(key, value)
    return out


def load_config(path=None, overrides=None) -> dict:
    """Defaults, then the file, then ``overrides`` (``{key: value}`` or ``["key=value"]``)."""
    cfg = {key: default for key, (default, _) in RUN_KEYS.items()}
    if path:
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
        cfg.update(parse_text(text))
    if overrides:
        if not isinstance(overrides, dict):
            pairs = {}
            for item in overrides:
                if "=" not in item:
                    raise ConfigError(f"override {item!r} is not key=value")
                k, v = item.split("=", 1)
                pairs[k.strip()] = v
            overrides = pairs
        for key, value in overrides.items():
            if key not in RUN_KEYS:
                raise ConfigError(f"unknown key {key!r}")
            cfg[key] = _coerce(key, value)
    return cfg


def model_config(cfg: dict) -> ModelConfig:
    try:
        return ModelConfig(**{f.name: cfg[f.name] for f in fields(ModelConfig)})
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def train_config(cfg: dict) -> TrainConfig:
    try:
        return TrainConfig(**{f.name: cfg[f.name] for f in fields(TrainConfig)})
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def format_config(cfg: dict) -> str:
    return "".join(f"{key} = {cfg[key]}\n" for key in RUN_KEYS)
