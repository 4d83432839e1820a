"""YAML configuration loading and the canonical config hash."""

import hashlib
import json
from pathlib import Path
from typing import Any, Optional

import yaml
from pydantic import ValidationError

from lob_bench.errors import ExperimentError
from lob_bench.pydantic_models import ExperimentConfig, SynthConfig


def _read_yaml(path: str | Path) -> dict[str, Any]:
    path = Path(path)
    if not path.exists():
        raise ExperimentError(f"Config file not found: {path}")
    with open(path, encoding="utf-8") as f:
        data = yaml.safe_load(f) or {}
    if not isinstance(data, dict):
        raise ExperimentError(f"Config file {path} must contain a mapping")
    return data


def _resolve_paths(data: dict[str, Any], base: Path) -> dict[str, Any]:
    """Quote paths in a config are relative to the config file's folder."""
    for source in data.get("symbols", []) or []:
        if isinstance(source, dict) and source.get("paths"):
            source["paths"] = [
                str(p if Path(p).is_absolute() else (base / p)) for p in source["paths"]
            ]
    return data


def load_experiment_config(
    path: str | Path, overrides: Optional[dict[str, Any]] = None
) -> ExperimentConfig:
    """
    Raises:
        ExperimentError: If the file is missing or not a mapping.
        ValidationError: If the content does not validate.
    """
    path = Path(path)
    data = _resolve_paths(_read_yaml(path), path.parent)
    for key, value in (overrides or {}).items():
        if value is not None:
            data[key] = value
    return ExperimentConfig.model_validate(data)


def load_synth_config(path: str | Path, overrides: Optional[dict[str, Any]] = None) -> SynthConfig:
    data = _read_yaml(path)
    for key, value in (overrides or {}).items():
        if value is not None:
            data[key] = value
    return SynthConfig.model_validate(data)


def config_hash(config: ExperimentConfig) -> str:
    """SHA-256 of the sorted-key JSON dump of the validated config."""
    canonical = json.dumps(config.model_dump(mode="json"), sort_keys=True)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


__all__ = [
    "ValidationError",
    "config_hash",
    "load_experiment_config",
    "load_synth_config",
]
