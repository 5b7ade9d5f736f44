"""Run manifests recording what produced an output directory."""

import hashlib
import json
from collections.abc import Mapping
from datetime import datetime, timezone
from pathlib import Path
from typing import Any

import dtr_engine
import heredity_solver
import model_selection
import numpy as np
import propensity_model
import sim_harness
import stage_data
from pydantic import BaseModel, ConfigDict, Field, ValidationError
from stage_data import DataValidationError

from . import __version__

MANIFEST_NAME = "manifest.json"
_CHUNK = 1 << 16
UTC = timezone.utc  # datetime.UTC alias (Python 3.11+)


class InputDigest(BaseModel):
    """Content hash of one input file."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    path: str
    sha256: str
    size: int = Field(ge=0)


class RunManifest(BaseModel):
    """Provenance of one command run.

    ``params`` holds every command option after defaults were resolved, so the
    run can be repeated with ``pdwols rerun``.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    command: str
    params: dict[str, Any]
    settings: dict[str, Any]
    seeds: dict[str, int] = Field(default_factory=dict)
    versions: dict[str, str]
    inputs: list[InputDigest] = Field(default_factory=list)
    outputs: list[str] = Field(default_factory=list)
    started_at: datetime
    finished_at: datetime
    elapsed_seconds: float = Field(ge=0.0)


def file_digest(path: Path) -> InputDigest:
    """SHA-256 digest and size of ``path``."""
    digest = hashlib.sha256()
    with Path(path).open("rb") as f:
        for chunk in iter(lambda: f.read(_CHUNK), b""):
            digest.update(chunk)
    return InputDigest(
        path=str(path), sha256=digest.hexdigest(), size=Path(path).stat().st_size
    )


def package_versions() -> dict[str, str]:
    """Versions of the toolkit packages and numpy."""
    return {
        "pdwols-cli": __version__,
        "stage-data": stage_data.__version__,
        "propensity-model": propensity_model.__version__,
        "heredity-solver": heredity_solver.__version__,
        "model-selection": model_selection.__version__,
        "dtr-engine": dtr_engine.__version__,
        "sim-harness": sim_harness.__version__,
        "numpy": np.__version__,
    }


def _plain(value: Any) -> Any:
    if isinstance(value, Path):
        return str(value)
    if isinstance(value, tuple | list):
        return [_plain(item) for item in value]
    if isinstance(value, Mapping):
        return {str(key): _plain(item) for key, item in value.items()}
    return value


class ManifestRecorder:
    """Collects inputs and outputs while a command runs."""

    def __init__(
        self, command: str, params: Mapping[str, Any], settings: Mapping[str, Any]
    ) -> None:
        self.command = command
        self.params = _plain(params)
        self.settings = _plain(settings)
        self.started_at = datetime.now(UTC)
        self.inputs: list[InputDigest] = []
        self.outputs: list[str] = []

    def add_inputs(self, *paths: Path) -> None:
        """Hash input files in the order given."""
        self.inputs.extend(file_digest(path) for path in paths)

    def add_outputs(self, *paths: Path) -> None:
        """Record written files by name."""
        self.outputs.extend(Path(path).name for path in paths)

    def finish(self, seeds: Mapping[str, int] | None = None) -> RunManifest:
        """Close the run and build its manifest."""
        finished_at = datetime.now(UTC)
        return RunManifest(
            command=self.command,
            params=self.params,
            settings=self.settings,
            seeds=dict(seeds or {}),
            versions=package_versions(),
            inputs=self.inputs,
            outputs=self.outputs,
            started_at=self.started_at,
            finished_at=finished_at,
            elapsed_seconds=(finished_at - self.started_at).total_seconds(),
        )


def write_manifest(manifest: RunManifest, out_dir: Path) -> Path:
    """Write ``manifest.json`` into ``out_dir``, replacing any earlier one."""
    path = Path(out_dir) / MANIFEST_NAME
    path.write_text(manifest.model_dump_json(indent=2), encoding="utf-8")
    return path


def load_manifest(path: Path) -> RunManifest:
    """Read a manifest file or the manifest inside a directory.

    Raises:
        DataValidationError: If the file is missing or not a manifest.
    """
    path = Path(path)
    if path.is_dir():
        path = path / MANIFEST_NAME
    try:
        return RunManifest.model_validate(json.loads(path.read_text(encoding="utf-8")))
    except (OSError, ValueError, ValidationError) as e:
        raise DataValidationError(f"cannot read manifest {path}: {e}") from e
