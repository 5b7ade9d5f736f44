"""Experiment configuration and result containers."""

import json
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any

import numpy as np
import yaml
from dtr_engine import EstimatorMethod, EstimatorSettings
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator
from stage_data import DataValidationError


class GeneratorKind(str, Enum):
    """Data-generating designs available to experiments."""

    ONE_STAGE = "one_stage"
    HIGH_DIM = "high_dim"
    TWO_STAGE = "two_stage_s1"


GENERATOR_DEFAULTS: dict[GeneratorKind, dict[str, Any]] = {
    GeneratorKind.ONE_STAGE: {"n": 500, "p": 10, "scenario": 4},
    GeneratorKind.HIGH_DIM: {"n": 200, "p": 400},
    GeneratorKind.TWO_STAGE: {"n": 1000, "p": 10},
}


class MethodSpec(BaseModel):
    """An estimator and whether its refitted or penalized regime is scored."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    method: EstimatorMethod
    refit: bool = False

    @classmethod
    def parse(cls, text: str) -> "MethodSpec":
        """Parse ``pdwols``, ``pdwols-refit``, ``qlasso`` or ``qlasso-refit``."""
        name, _, suffix = text.strip().lower().partition("-")
        if suffix not in ("", "refit"):
            raise ValueError(f"unknown method variant '{text}'")
        return cls(method=EstimatorMethod(name), refit=suffix == "refit")

    @property
    def label(self) -> str:
        """Column label used in reports."""
        return f"{self.method.value}-refit" if self.refit else self.method.value


DEFAULT_METHODS = tuple(
    MethodSpec.parse(text)
    for text in ("pdwols", "pdwols-refit", "qlasso", "qlasso-refit")
)


class ScenarioConfig(BaseModel):
    """One simulation experiment.

    ``n``, ``p`` and ``scenario`` default per generator: 500/10/4 for
    ``one_stage``, 200/400 for ``high_dim`` and 1000/10 for ``two_stage_s1``.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    generator: GeneratorKind = GeneratorKind.ONE_STAGE
    scenario: int | None = Field(default=None, ge=1, le=4)
    n: int = Field(default=500, ge=10)
    p: int = Field(default=10, ge=2)
    reps: int = Field(default=100, ge=1)
    n_test: int = Field(default=10_000, ge=1)
    base_seed: int = Field(default=0, ge=0)
    methods: tuple[MethodSpec, ...] = Field(default=DEFAULT_METHODS, min_length=1)
    alpha: float = Field(default=0.5, gt=0.0, lt=1.0)
    n_folds: int = Field(default=4, ge=2)
    n_lambda: int = Field(default=100, ge=2)
    adaptive: bool = False
    noise_covariates: int = Field(default=0, ge=0)
    n_jobs: int = Field(default=1, ge=1)

    @model_validator(mode="before")
    @classmethod
    def apply_generator_defaults(cls, data: Any) -> Any:
        """Fill sample size, dimension and scenario from the generator."""
        if not isinstance(data, dict):
            return data
        kind = GeneratorKind(data.get("generator", GeneratorKind.ONE_STAGE))
        return {**GENERATOR_DEFAULTS[kind], **data}

    @field_validator("methods", mode="before")
    @classmethod
    def parse_method_strings(cls, value: Any) -> Any:
        """Allow methods written as ``pdwols-refit`` strings."""
        if isinstance(value, list | tuple):
            return tuple(
                MethodSpec.parse(item) if isinstance(item, str) else item
                for item in value
            )
        return value

    @model_validator(mode="after")
    def check_scenario(self) -> "ScenarioConfig":
        """Scenarios only exist for the one-stage design."""
        if self.generator is not GeneratorKind.ONE_STAGE and self.scenario is not None:
            raise ValueError(f"scenario does not apply to {self.generator.value}")
        labels = [method.label for method in self.methods]
        if len(set(labels)) != len(labels):
            raise ValueError(f"duplicate methods: {labels}")
        return self

    @property
    def n_stages(self) -> int:
        """Decision stages of the generated trials."""
        return 2 if self.generator is GeneratorKind.TWO_STAGE else 1

    def estimator_settings(self, method: EstimatorMethod) -> EstimatorSettings:
        """Stage estimator tuning for ``method``; refits whenever any variant asks."""
        return EstimatorSettings(
            method=method,
            alpha=self.alpha,
            n_folds=self.n_folds,
            n_lambda=self.n_lambda,
            adaptive=self.adaptive,
            refit=any(m.refit for m in self.methods if m.method is method),
        )

    def seeds(self, replicate: int) -> tuple[np.random.SeedSequence, ...]:
        """Training and test seeds of ``replicate``."""
        return tuple(np.random.SeedSequence(self.base_seed + replicate).spawn(2))


def load_scenario(path: Path) -> ScenarioConfig:
    """Read a scenario from TOML, YAML or JSON, chosen by file suffix.

    Raises:
        DataValidationError: If the file is missing or cannot be parsed.
        pydantic.ValidationError: If the document is not a valid scenario.
    """
    path = Path(path)
    suffix = path.suffix.lower()
    if suffix not in (".toml", ".yaml", ".yml", ".json"):
        raise DataValidationError(f"unsupported scenario format '{suffix}'")
    try:
        text = path.read_text(encoding="utf-8")
        if suffix == ".toml":
            document = tomllib.loads(text)
        elif suffix == ".json":
            document = json.loads(text)
        else:
            document = yaml.safe_load(text) or {}
    except (OSError, tomllib.TOMLDecodeError, yaml.YAMLError, ValueError) as e:
        raise DataValidationError(f"cannot read scenario {path}: {e}") from e
    return ScenarioConfig.model_validate(document)


@dataclass(frozen=True)
class RegimeEvaluation:
    """Test-set quality of one regime."""

    error_rates: tuple[float, ...]
    total_error_rate: float
    value: float
    value_se: float


@dataclass(frozen=True)
class ReplicateResult:
    """One method on one replicate.

    ``error`` is set, and every metric left empty, when the fit failed.
    """

    replicate: int
    method: str
    supports: tuple[tuple[str, ...], ...] = ()
    coefficients: tuple[dict[str, float], ...] = ()
    lambdas: tuple[float, ...] = ()
    evaluation: RegimeEvaluation | None = None
    false_negatives: int = 0
    false_positives: int = 0
    error: str | None = None

    @property
    def ok(self) -> bool:
        """Whether the replicate produced a regime."""
        return self.error is None


@dataclass(frozen=True)
class CoefficientSummary:
    """Bias and spread of one blip coefficient over replicates."""

    truth: float
    mean: float
    bias: float
    sd: float
    rmse: float


@dataclass(frozen=True)
class MethodSummary:
    """Replicate-averaged metrics of one method."""

    method: str
    n_ok: int
    n_failed: int
    selection_rates: tuple[dict[str, float], ...] = ()
    fn_rate: float | None = None
    fp_rate: float | None = None
    error_rates: tuple[float, ...] = ()
    total_error_rate: float | None = None
    value: float | None = None
    value_sd: float | None = None
    coefficients: tuple[dict[str, CoefficientSummary], ...] = ()


@dataclass(frozen=True)
class MetricsReport:
    """Aggregated experiment output with the per-replicate records."""

    config: ScenarioConfig
    oracle_value: float
    methods: tuple[MethodSummary, ...]
    replicates: tuple[ReplicateResult, ...] = field(default=())

    def summary(self, method: str) -> MethodSummary:
        """Summary of the method labelled ``method``."""
        for summary in self.methods:
            if summary.method == method:
                return summary
        raise KeyError(method)

    @property
    def n_failed(self) -> int:
        """Failed replicate fits over all methods."""
        return sum(summary.n_failed for summary in self.methods)
