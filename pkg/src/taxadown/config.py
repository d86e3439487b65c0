"""Flat key-value config files for stage and training settings.

Format: one ``key = value`` per line, ``#`` comments, blank lines ignored.
Keys mirror the StageConfig and TrainConfig field names; unknown keys are
rejected so typos fail loudly. All defaults are the deployed thresholds
(0.8, 3, 0.3, 5, 95, tau 0.85, margin 1.0).
"""

from __future__ import annotations

from dataclasses import fields
from pathlib import Path

from .errors import SchemaError
from .pipeline import StageConfig
from .projection import TrainConfig

_STAGE_KEYS = {f.name: f.type for f in fields(StageConfig) if f.name != "train"}
_TRAIN_KEYS = {f.name: f.type for f in fields(TrainConfig)}
_INT_KEYS = {"bird_min_species", "min_cluster_size", "epochs", "batch_size", "seed", "triplets_per_epoch"}


def parse_config_text(text: str, source: str = "<config>") -> dict[str, float | int]:
    values: dict[str, float | int] = {}
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise SchemaError(f"{source}:{line_no}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if key not in _STAGE_KEYS and key not in _TRAIN_KEYS:
            raise SchemaError(f"{source}:{line_no}: unknown config key {key!r}")
        try:
            values[key] = int(value) if key in _INT_KEYS else float(value)
        except ValueError as exc:
            raise SchemaError(f"{source}:{line_no}: bad value for {key}: {value!r}") from exc
    return values


def load_stage_config(path: str | Path | None = None, seed: int | None = None) -> StageConfig:
    """StageConfig from an optional config file plus an optional seed override."""
    values = {}
    if path is not None:
        values = parse_config_text(Path(path).read_text(encoding="utf-8"), source=str(path))
    if seed is not None:
        values["seed"] = seed
    train_kwargs = {k: v for k, v in values.items() if k in _TRAIN_KEYS}
    stage_kwargs = {k: v for k, v in values.items() if k in _STAGE_KEYS}
    try:
        return StageConfig(train=TrainConfig(**train_kwargs), **stage_kwargs)
    except ValueError as exc:
        raise SchemaError(f"invalid config: {exc}") from exc
