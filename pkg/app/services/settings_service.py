"""
app/services/settings_service.py

Settings Service - builds the PipelineConfig for a run.
Precedence: CLI flag > config file > environment > built-in default.
"""
import json
import logging
import os
from typing import Any, Dict, Optional, Tuple

from pydantic import ValidationError

from config.settings import env_defaults
from models.errors import ConfigError
from models.settings import PipelineConfig

logger = logging.getLogger(__name__)


def _describe(exc: ValidationError) -> str:
    parts = []
    for err in exc.errors():
        where = ".".join(str(p) for p in err.get("loc", ())) or "config"
        parts.append(f"{where}: {err.get('msg')}")
    return "; ".join(parts)


class SettingsService:
    """Central place to read, merge and validate pipeline settings"""

    @staticmethod
    def read_config_file(path: str) -> Dict[str, Any]:
        if not os.path.isfile(path):
            raise ConfigError(f"Config file not found: {path}")
        try:
            with open(path, "r", encoding="utf-8") as f:
                data = json.load(f)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"Config file {path} is not valid JSON: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError(f"Config file {path} must hold a JSON object")
        return data

    @classmethod
    def load_config(cls, path: Optional[str] = None,
                    overrides: Optional[Dict[str, Any]] = None) -> PipelineConfig:
        """Merge environment defaults, the JSON file and CLI overrides, then validate"""
        merged: Dict[str, Any] = dict(env_defaults())
        if path:
            merged.update(cls.read_config_file(path))
        for key, value in (overrides or {}).items():
            if value is not None:
                merged[key] = value
        try:
            config = PipelineConfig.model_validate(merged)
        except ValidationError as exc:
            raise ConfigError(f"Invalid configuration: {_describe(exc)}") from exc
        logger.debug("[load_config] %s", config.echo())
        return config

    @staticmethod
    def validate_config(data: Dict[str, Any]) -> Tuple[bool, str]:
        """Check a raw config mapping without raising"""
        try:
            PipelineConfig.model_validate(data)
        except ValidationError as exc:
            return False, _describe(exc)
        return True, "Configuration is valid"

    @staticmethod
    def from_manifest(manifest: Dict[str, Any]) -> PipelineConfig:
        """Rebuild the config echoed into a previous run's manifest"""
        try:
            return PipelineConfig.model_validate(manifest["config"])
        except (KeyError, ValidationError) as exc:
            raise ConfigError(f"Manifest does not hold a valid config: {exc}") from exc
