"""Layered toolkit settings with YAML files and environment variable overrides."""

import logging
import os
from collections.abc import Mapping
from pathlib import Path
from typing import Any

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator
from stage_data import ConfigurationError

logger = logging.getLogger(__name__)

ENV_PREFIX = "PDWOLS_"
# Variables that choose where settings come from rather than what they are.
LOCATION_KEYS = frozenset({"env", "config_dir"})
# Short variable names for frequently overridden settings.
ENV_ALIASES = {"jobs": "default_jobs"}
LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL")


class EstimatorDefaults(BaseModel):
    """Estimator tuning used when a command does not override it."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    alpha: float = Field(default=0.5, gt=0.0, lt=1.0)
    n_folds: int = Field(default=4, ge=2)
    n_lambda: int = Field(default=100, ge=2)
    standardize: bool = Field(default=True)
    penalize_psi0: bool = Field(default=False)
    tol: float = Field(default=1e-7, gt=0.0)
    max_iter: int = Field(default=10_000, ge=1)


class ToolkitSettings(BaseModel):
    """Validated settings of the command-line toolkit."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    log_level: str = Field(default="INFO")
    default_jobs: int = Field(default=1, ge=1)
    seed: int = Field(default=0, ge=0)
    estimator: EstimatorDefaults = Field(default_factory=EstimatorDefaults)

    @field_validator("log_level")
    @classmethod
    def check_log_level(cls, value: str) -> str:
        """Accept level names in any case."""
        level = value.upper()
        if level not in LOG_LEVELS:
            raise ValueError(f"log_level must be one of {', '.join(LOG_LEVELS)}")
        return level


def load_yaml_file(file_path: Path) -> dict[str, Any]:
    """Load a YAML mapping; a missing file is an empty mapping.

    Raises:
        ConfigurationError: If the file is not valid YAML or not a mapping.
    """
    if not file_path.exists():
        logger.debug("No settings file at %s", file_path)
        return {}
    try:
        with open(file_path, encoding="utf-8") as f:
            content = yaml.safe_load(f)
    except yaml.YAMLError as e:
        raise ConfigurationError(f"Invalid YAML in {file_path}: {e}") from e
    if content is None:
        return {}
    if not isinstance(content, dict):
        raise ConfigurationError(f"{file_path} must contain a mapping")
    return content


def merge_configs(
    base_config: dict[str, Any], override_config: dict[str, Any]
) -> dict[str, Any]:
    """Recursively overlay ``override_config`` on ``base_config``."""
    merged = base_config.copy()
    for key, value in override_config.items():
        if key in merged and isinstance(merged[key], dict) and isinstance(value, dict):
            merged[key] = merge_configs(merged[key], value)
        else:
            merged[key] = value
    return merged


def _coerce(value: str) -> Any:
    lowered = value.lower()
    if lowered in ("true", "false"):
        return lowered == "true"
    for kind in (int, float):
        try:
            return kind(value)
        except ValueError:
            continue
    return value


def apply_env_overrides(
    config: dict[str, Any],
    prefix: str = ENV_PREFIX,
    environ: Mapping[str, str] | None = None,
) -> dict[str, Any]:
    """Apply ``PDWOLS_*`` variables on top of ``config``.

    ``PDWOLS_LOG_LEVEL`` sets ``log_level`` and a double underscore reaches into
    nested sections, so ``PDWOLS_ESTIMATOR__ALPHA`` sets ``estimator.alpha``.
    """
    environ = os.environ if environ is None else environ
    result = config.copy()
    for env_key, env_value in sorted(environ.items()):
        if not env_key.startswith(prefix):
            continue
        key = env_key[len(prefix) :].lower()
        if key in LOCATION_KEYS:
            continue
        path = ENV_ALIASES.get(key, key).split("__")
        override: dict[str, Any] = {path[-1]: _coerce(env_value)}
        for part in reversed(path[:-1]):
            override = {part: override}
        result = merge_configs(result, override)
    return result


def settings_location(
    environment: str | None = None, config_dir: Path | None = None
) -> tuple[str, Path]:
    """Environment name and settings directory, falling back to ``PDWOLS_*``."""
    return (
        environment or os.environ.get(f"{ENV_PREFIX}ENV", "development"),
        config_dir or Path(os.environ.get(f"{ENV_PREFIX}CONFIG_DIR", "config")),
    )


def load_settings(
    environment: str | None = None,
    config_dir: Path | None = None,
    apply_env_vars: bool = True,
) -> ToolkitSettings:
    """Merge ``defaults.yaml``, ``<environment>.yaml`` and environment variables.

    Args:
        environment: Overlay name, ``PDWOLS_ENV`` or ``development`` by default.
        config_dir: Settings directory, ``PDWOLS_CONFIG_DIR`` or ``config``.
        apply_env_vars: Whether ``PDWOLS_*`` variables override the files.

    Returns:
        ToolkitSettings: Validated settings.

    Raises:
        ConfigurationError: If a file is malformed or a value is invalid.
    """
    environment, config_dir = settings_location(environment, config_dir)
    merged = merge_configs(
        load_yaml_file(config_dir / "defaults.yaml"),
        load_yaml_file(config_dir / f"{environment}.yaml"),
    )
    if apply_env_vars:
        merged = apply_env_overrides(merged)
    try:
        return ToolkitSettings.model_validate(merged)
    except ValidationError as e:
        raise ConfigurationError(f"Invalid settings ({environment}): {e}") from e
