"""Data models for stage-wise trial data and model specifications."""

import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Any

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from .errors import DataValidationError

_FUNCTION_TERM = re.compile(r"^\s*(exp|log_abs|square)\(\s*([A-Za-z_]\w*)\s*\)\s*$")
_LOG_ABS_TERM = re.compile(r"^\s*log\|\s*([A-Za-z_]\w*)\s*\|\s*$")
_IDENTIFIER = re.compile(r"^[A-Za-z_]\w*$")


class TransformKind(str, Enum):
    """Column transforms understood by the term grammar."""

    IDENTITY = "identity"
    EXP = "exp"
    LOG_ABS = "log_abs"
    SQUARE = "square"
    EXPRESSION = "expression"


class Term(BaseModel):
    """A single design column built from named covariates.

    Attributes:
        column: Source column for the elementwise transforms.
        transform: Transform applied to the column.
        expression: pandas expression over named columns (expression terms only).
        name: Optional display label overriding the derived one.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    column: str | None = None
    transform: TransformKind = TransformKind.IDENTITY
    expression: str | None = None
    name: str | None = None

    @model_validator(mode="after")
    def check_source(self) -> "Term":
        """Expression terms need an expression, all others a column."""
        if self.transform is TransformKind.EXPRESSION:
            if not self.expression:
                raise ValueError("expression terms require 'expression'")
        elif not self.column:
            raise ValueError(f"{self.transform.value} terms require 'column'")
        return self

    @classmethod
    def parse(cls, text: str) -> "Term":
        """Parse the compact string form, e.g. ``x1``, ``exp(x1)``, ``log|x2|``."""
        stripped = text.strip()
        if _IDENTIFIER.match(stripped):
            return cls(column=stripped)
        match = _FUNCTION_TERM.match(stripped)
        if match:
            return cls(column=match.group(2), transform=TransformKind(match.group(1)))
        match = _LOG_ABS_TERM.match(stripped)
        if match:
            return cls(column=match.group(1), transform=TransformKind.LOG_ABS)
        return cls(transform=TransformKind.EXPRESSION, expression=stripped)

    @property
    def label(self) -> str:
        """Display label used for design columns and coefficient tables."""
        if self.name:
            return self.name
        if self.transform is TransformKind.IDENTITY:
            return str(self.column)
        if self.transform is TransformKind.LOG_ABS:
            return f"log|{self.column}|"
        if self.transform is TransformKind.EXPRESSION:
            return str(self.expression)
        return f"{self.transform.value}({self.column})"

    def evaluate(self, frame: pd.DataFrame) -> np.ndarray:
        """Evaluate the term on every row of ``frame``.

        Raises:
            DataValidationError: If a column is unknown or the output is not finite.
        """
        if self.transform is TransformKind.EXPRESSION:
            try:
                raw = frame.eval(str(self.expression))
            except (KeyError, NameError, SyntaxError, TypeError, ValueError) as e:
                raise DataValidationError(
                    f"cannot evaluate term '{self.label}': {e}"
                ) from e
            values = np.broadcast_to(
                np.asarray(raw, dtype=float), (len(frame),)
            ).copy()
        else:
            if self.column not in frame.columns:
                raise DataValidationError(
                    f"unknown column '{self.column}' in term '{self.label}'"
                )
            source = frame[self.column].to_numpy(dtype=float)
            with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
                if self.transform is TransformKind.EXP:
                    values = np.exp(source)
                elif self.transform is TransformKind.LOG_ABS:
                    values = np.log(np.abs(source))
                elif self.transform is TransformKind.SQUARE:
                    values = source**2
                else:
                    values = source.copy()

        if not np.all(np.isfinite(values)):
            raise DataValidationError(
                f"term '{self.label}' produced non-finite values on the data range"
            )
        return values


def _coerce_terms(value: Any) -> Any:
    if isinstance(value, list):
        return [Term.parse(item) if isinstance(item, str) else item for item in value]
    return value


class ModelSpec(BaseModel):
    """Treatment-free and blip term lists for one decision stage."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    treatment_free_terms: list[Term] = Field(default_factory=list)
    blip_terms: list[Term] = Field(default_factory=list)
    propensity_terms: list[Term] = Field(default_factory=list)
    penalize_psi0: bool = False

    @field_validator(
        "treatment_free_terms", "blip_terms", "propensity_terms", mode="before"
    )
    @classmethod
    def parse_term_strings(cls, value: Any) -> Any:
        """Allow terms to be written in their compact string form."""
        return _coerce_terms(value)

    @model_validator(mode="after")
    def check_unique_labels(self) -> "ModelSpec":
        """Term labels must be unique within each list."""
        for field_name in ("treatment_free_terms", "blip_terms", "propensity_terms"):
            labels = [term.label for term in getattr(self, field_name)]
            duplicates = sorted({lab for lab in labels if labels.count(lab) > 1})
            if duplicates:
                raise ValueError(f"{field_name} has duplicate terms: {duplicates}")
        return self


def _as_vector(values: Any, name: str) -> np.ndarray:
    array = np.asarray(values, dtype=float)
    if array.ndim != 1:
        raise DataValidationError(f"{name} must be one-dimensional")
    return array


def _check_treatment(a: np.ndarray, name: str = "a") -> None:
    if not np.all(np.isin(a, (0.0, 1.0))):
        raise DataValidationError(f"{name} must contain only 0/1 values")


@dataclass(frozen=True)
class StageDataset:
    """One decision stage: outcome, binary treatment and available covariates."""

    y: np.ndarray
    a: np.ndarray
    covariates: pd.DataFrame

    def __post_init__(self) -> None:
        y = _as_vector(self.y, "y")
        a = _as_vector(self.a, "a")
        _check_treatment(a)
        if not (len(y) == len(a) == len(self.covariates)):
            raise DataValidationError(
                f"row counts differ: y={len(y)}, a={len(a)}, "
                f"covariates={len(self.covariates)}"
            )
        names = [str(c) for c in self.covariates.columns]
        if len(set(names)) != len(names):
            raise DataValidationError("column_names must be unique")
        if not np.all(np.isfinite(y)):
            raise DataValidationError("y contains missing or non-finite values")
        if self.covariates.isna().to_numpy().any():
            raise DataValidationError("covariates contain missing values")
        covariates = self.covariates.reset_index(drop=True)
        covariates.columns = names
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "covariates", covariates)

    @classmethod
    def from_arrays(
        cls, y: Any, a: Any, x: Any, column_names: list[str]
    ) -> "StageDataset":
        """Build a dataset from plain arrays and column labels."""
        matrix = np.asarray(x, dtype=float).reshape(len(np.asarray(a)), -1)
        return cls(y=y, a=a, covariates=pd.DataFrame(matrix, columns=column_names))

    @property
    def n(self) -> int:
        """Number of rows."""
        return len(self.y)

    @property
    def X(self) -> np.ndarray:  # noqa: N802
        """Covariate matrix."""
        return self.covariates.to_numpy(dtype=float)

    @property
    def column_names(self) -> list[str]:
        """Covariate labels in column order."""
        return list(self.covariates.columns)

    def with_outcome(self, y: np.ndarray) -> "StageDataset":
        """Copy of this stage with a replacement outcome (e.g. a pseudo-outcome)."""
        return StageDataset(y=y, a=self.a, covariates=self.covariates)

    def subset(self, rows: np.ndarray) -> "StageDataset":
        """Rows selected by an index or boolean mask."""
        return StageDataset(
            y=self.y[rows], a=self.a[rows], covariates=self.covariates.iloc[rows]
        )


@dataclass(frozen=True)
class StageRecord:
    """Treatment and covariates observed at one stage of a multi-stage trial."""

    a: np.ndarray
    covariates: pd.DataFrame

    def __post_init__(self) -> None:
        a = _as_vector(self.a, "a")
        _check_treatment(a)
        if len(a) != len(self.covariates):
            raise DataValidationError("stage treatment and covariate rows differ")
        if self.covariates.isna().to_numpy().any():
            raise DataValidationError("stage covariates contain missing values")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "covariates", self.covariates.reset_index(drop=True))


@dataclass(frozen=True)
class MultiStageTrial:
    """Stages 1..K of a sequential trial with the final outcome."""

    stages: tuple[StageRecord, ...]
    y: np.ndarray
    ids: tuple[str, ...] = field(default=())

    def __post_init__(self) -> None:
        if not self.stages:
            raise DataValidationError("a trial needs at least one stage")
        y = _as_vector(self.y, "y")
        if not np.all(np.isfinite(y)):
            raise DataValidationError("final outcome contains missing values")
        for index, stage in enumerate(self.stages, start=1):
            if len(stage.a) != len(y):
                raise DataValidationError(
                    f"stage {index} has {len(stage.a)} rows, outcome has {len(y)}"
                )
        object.__setattr__(self, "y", y)

    @property
    def n_stages(self) -> int:
        """Number of decision stages K."""
        return len(self.stages)

    @property
    def n(self) -> int:
        """Number of patients."""
        return len(self.y)

    def history(self, stage: int) -> pd.DataFrame:
        """Covariates available before the decision at ``stage`` (1-based).

        Current-stage covariates keep their names; earlier treatments appear as
        ``a_s<j>`` and earlier covariates as ``<name>_s<j>``.
        """
        if not 1 <= stage <= self.n_stages:
            raise DataValidationError(f"stage must be in 1..{self.n_stages}")
        frames = []
        for earlier in range(1, stage):
            record = self.stages[earlier - 1]
            previous = record.covariates.add_suffix(f"_s{earlier}")
            previous.insert(0, f"a_s{earlier}", record.a)
            frames.append(previous)
        frames.append(self.stages[stage - 1].covariates)
        return pd.concat(frames, axis=1)

    def stage_dataset(self, stage: int, y: np.ndarray | None = None) -> StageDataset:
        """StageDataset for ``stage`` with ``y`` (defaults to the final outcome)."""
        outcome = self.y if y is None else y
        return StageDataset(
            y=outcome, a=self.stages[stage - 1].a, covariates=self.history(stage)
        )

    @classmethod
    def single_stage(cls, data: StageDataset) -> "MultiStageTrial":
        """Wrap a one-stage dataset as a K=1 trial."""
        record = StageRecord(a=data.a, covariates=data.covariates)
        return cls(stages=(record,), y=data.y)


@dataclass(frozen=True)
class BlockStats:
    """Per-column statistics for the main, treatment and interaction blocks."""

    main: np.ndarray
    treatment: float
    interaction: np.ndarray

    @classmethod
    def filled(cls, p: int, q: int, value: float) -> "BlockStats":
        """Statistics with every entry equal to ``value``."""
        return cls(
            main=np.full(p, value), treatment=value, interaction=np.full(q, value)
        )


@dataclass(frozen=True)
class ScaleRecord:
    """Centering and scaling applied to a design, without the column data."""

    centering: BlockStats
    scaling: BlockStats
    response_mean: float
    main_names: tuple[str, ...]
    blip_names: tuple[str, ...]
    blip_main_index: np.ndarray


@dataclass(frozen=True)
class DesignBlocks:
    """Main-effect, treatment and interaction columns of a stage design.

    Interaction column ``j`` is ``a * xmain[:, blip_main_index[j]]`` formed on the
    raw scale; ``centering`` and ``scaling`` record the transformations applied
    since so coefficients can be mapped back to the original scale.
    """

    xmain: np.ndarray
    avec: np.ndarray
    xa: np.ndarray
    main_names: tuple[str, ...]
    blip_names: tuple[str, ...]
    blip_main_index: np.ndarray
    centering: BlockStats
    scaling: BlockStats
    response_mean: float = 0.0
    centered: bool = False
    standardized: bool = False
    weighted: bool = False
    degenerate: tuple[str, ...] = ()

    @property
    def n(self) -> int:
        """Number of rows."""
        return int(self.avec.shape[0])

    @property
    def p(self) -> int:
        """Number of main-effect columns."""
        return int(self.xmain.shape[1])

    @property
    def q(self) -> int:
        """Number of interaction (blip) columns."""
        return int(self.xa.shape[1])

    @property
    def scale_record(self) -> ScaleRecord:
        """Metadata needed to map coefficients back to the original scale."""
        return ScaleRecord(
            centering=self.centering,
            scaling=self.scaling,
            response_mean=self.response_mean,
            main_names=self.main_names,
            blip_names=self.blip_names,
            blip_main_index=self.blip_main_index,
        )

    def take(self, rows: np.ndarray) -> "DesignBlocks":
        """Rows of a raw (untransformed) design."""
        return DesignBlocks(
            xmain=self.xmain[rows],
            avec=self.avec[rows],
            xa=self.xa[rows],
            main_names=self.main_names,
            blip_names=self.blip_names,
            blip_main_index=self.blip_main_index,
            centering=self.centering,
            scaling=self.scaling,
            response_mean=self.response_mean,
            centered=self.centered,
            standardized=self.standardized,
            weighted=self.weighted,
            degenerate=self.degenerate,
        )


@dataclass(frozen=True)
class Coefficients:
    """Fitted coefficients on the original covariate scale."""

    intercept: float
    psi0: float
    beta: np.ndarray
    psi: np.ndarray
    main_names: tuple[str, ...]
    blip_names: tuple[str, ...]

    def predict(self, blocks: DesignBlocks) -> np.ndarray:
        """Fitted values on a raw design."""
        return (
            self.intercept
            + self.psi0 * blocks.avec
            + blocks.xmain @ self.beta
            + blocks.xa @ self.psi
        )

    def treatment_free(self, blocks: DesignBlocks) -> np.ndarray:
        """Treatment-free part of the fit, ``intercept + X beta``."""
        return self.intercept + blocks.xmain @ self.beta

    def blip_support(self, threshold: float = 1e-10) -> tuple[str, ...]:
        """Blip terms whose coefficient magnitude exceeds ``threshold``."""
        return tuple(
            name
            for name, value in zip(self.blip_names, self.psi, strict=True)
            if abs(value) > threshold
        )

    def as_rows(self) -> list[dict[str, Any]]:
        """Flat coefficient table, one row per coefficient."""
        rows: list[dict[str, Any]] = [
            {"block": "intercept", "term": "(intercept)", "estimate": self.intercept},
            {"block": "treatment", "term": "a", "estimate": self.psi0},
        ]
        rows.extend(
            {"block": "main", "term": name, "estimate": float(value)}
            for name, value in zip(self.main_names, self.beta, strict=True)
        )
        rows.extend(
            {"block": "blip", "term": f"a:{name}", "estimate": float(value)}
            for name, value in zip(self.blip_names, self.psi, strict=True)
        )
        return rows
