"""
Configuration manager for Fortress QD runs.

Merges run settings in increasing precedence: environment defaults (via
`constants`), a YAML config file, then explicit overrides such as CLI flags.
"""

from pathlib import Path
from typing import Any, Optional, Union

import yaml
from pydantic import ValidationError

from fortress_qd.exceptions import ConfigError
from fortress_qd.models.config import MutationConfig, RunConfig
from fortress_qd.utils.logger import get_logger

logger = get_logger(__name__)

# Global config manager instance
_config_manager: Optional["ConfigManager"] = None

MUTATION_FIELDS = frozenset(MutationConfig.model_fields)


def _violations(error: ValidationError) -> list[str]:
    lines = []
    for item in error.errors():
        where = ".".join(str(part) for part in item["loc"]) or "config"
        lines.append(f"{where}: {item['msg']}")
    return lines


class ConfigManager:
    """Builds validated `RunConfig`s from file and override layers."""

    def __init__(self, config_file: Optional[Union[str, Path]] = None) -> None:
        self._file_values: dict[str, Any] = {}
        self._overrides: dict[str, Any] = {}
        if config_file is not None:
            self.load_file(config_file)

    def load_file(self, path: Union[str, Path]) -> None:
        """Read a YAML mapping of run settings."""
        path = Path(path)
        try:
            data = yaml.safe_load(path.read_text(encoding="utf-8"))
        except yaml.YAMLError as e:
            raise ConfigError([f"{path}: {e}"])
        if data is None:
            data = {}
        if not isinstance(data, dict):
            raise ConfigError([f"{path}: top level must be a mapping"])
        self.load_values(data)
        logger.debug("Config file loaded", path=str(path), keys=sorted(data))

    def load_values(self, values: dict[str, Any]) -> None:
        """Layer a mapping (file contents or a stored run config) under the overrides."""
        self._file_values = self._merge(self._file_values, self._nest(values))

    def set_overrides(self, **values: Any) -> None:
        """Apply overrides; None values mean "not given" and are skipped."""
        given = {k: v for k, v in values.items() if v is not None}
        self._overrides = self._merge(self._overrides, self._nest(given))

    @staticmethod
    def _nest(values: dict[str, Any]) -> dict[str, Any]:
        # Mutation settings may be given flat (as CLI flags are)
        nested = {k: v for k, v in values.items() if k not in MUTATION_FIELDS}
        flat_mutation = {k: v for k, v in values.items() if k in MUTATION_FIELDS}
        if flat_mutation:
            mutation = dict(nested.get("mutation") or {})
            mutation.update(flat_mutation)
            nested["mutation"] = mutation
        return nested

    @staticmethod
    def _merge(base: dict[str, Any], top: dict[str, Any]) -> dict[str, Any]:
        merged = dict(base)
        for key, value in top.items():
            if key == "mutation" and isinstance(merged.get(key), dict):
                merged[key] = {**merged[key], **value}
            else:
                merged[key] = value
        return merged

    def effective_values(self) -> dict[str, Any]:
        return self._merge(self._file_values, self._overrides)

    def build(self) -> RunConfig:
        """Validated run configuration, or ConfigError listing every bad field."""
        try:
            return RunConfig.model_validate(self.effective_values())
        except ValidationError as e:
            raise ConfigError(_violations(e))


def get_config_manager() -> ConfigManager:
    """Get the global config manager instance."""
    global _config_manager
    if _config_manager is None:
        _config_manager = ConfigManager()
    return _config_manager


def set_config_manager(manager: Optional[ConfigManager]) -> None:
    """Set the global config manager instance (for testing)."""
    global _config_manager
    _config_manager = manager
