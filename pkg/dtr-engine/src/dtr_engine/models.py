"""Blip models, regimes, estimator settings and stage fit results."""

from collections.abc import Mapping
from dataclasses import dataclass
from enum import Enum
from typing import Any

import numpy as np
import pandas as pd
from heredity_solver import HeredityFit
from model_selection import CvResult, PilotKind, SelectionRule
from propensity_model import PropensityModel, WeightVector
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator
from stage_data import Coefficients, Term

Covariates = pd.DataFrame | Mapping[str, Any]


class EstimatorMethod(str, Enum):
    """Stage estimator used inside the backward recursion."""

    PDWOLS = "pdwols"
    QLASSO = "qlasso"


class WeightScheme(str, Enum):
    """Origin of the stage regression weights."""

    ESTIMATE = "estimate"
    ONES = "ones"
    USER = "user"


class EstimatorSettings(BaseModel):
    """Tuning of one penalized stage estimator.

    ``lambda_`` fixes the penalty level and skips cross-validation. ``weights``
    left unset means estimated propensity weights for ``pdwols`` and all-ones
    weights for ``qlasso``.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    method: EstimatorMethod = EstimatorMethod.PDWOLS
    alpha: float = Field(default=0.5, gt=0.0, lt=1.0)
    lambda_: float | None = Field(default=None, ge=0.0)
    n_folds: int = Field(default=4, ge=2)
    n_lambda: int = Field(default=100, ge=2)
    min_ratio: float | None = Field(default=None, gt=0.0, lt=1.0)
    rule: SelectionRule = SelectionRule.MIN
    adaptive: bool = False
    pilot: PilotKind = PilotKind.AUTO
    per_fold_factors: bool = False
    refit: bool = False
    standardize: bool = True
    penalize_psi0: bool = False
    weights: WeightScheme | None = None
    tol: float = Field(default=1e-7, gt=0.0)
    max_iter: int = Field(default=10_000, ge=1)
    seed: int = 0
    n_jobs: int = Field(default=1, ge=1)

    @property
    def weight_scheme(self) -> WeightScheme:
        """Weight origin after applying the method default."""
        if self.weights is not None:
            return self.weights
        if self.method is EstimatorMethod.PDWOLS:
            return WeightScheme.ESTIMATE
        return WeightScheme.ONES


class BlipModel(BaseModel):
    """Linear blip ``a * (psi0 + sum_j psi_j * term_j(h))`` of one stage."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    psi0: float
    psi: tuple[float, ...] = ()
    terms: tuple[Term, ...] = ()

    @field_validator("terms", mode="before")
    @classmethod
    def parse_term_strings(cls, value: Any) -> Any:
        """Allow terms in their compact string form."""
        if isinstance(value, list | tuple):
            return tuple(
                Term.parse(item) if isinstance(item, str) else item for item in value
            )
        return value

    @model_validator(mode="after")
    def check_lengths(self) -> "BlipModel":
        """One coefficient per term, all finite."""
        if len(self.psi) != len(self.terms):
            raise ValueError(
                f"psi has {len(self.psi)} entries for {len(self.terms)} terms"
            )
        if not np.all(np.isfinite([self.psi0, *self.psi])):
            raise ValueError("blip coefficients must be finite")
        return self

    @property
    def term_labels(self) -> tuple[str, ...]:
        """Labels of the tailoring terms."""
        return tuple(term.label for term in self.terms)

    def coefficient_map(self) -> dict[str, float]:
        """Coefficients keyed by term label, treatment first."""
        return {
            "a": self.psi0,
            **{
                f"a:{label}": value
                for label, value in zip(self.term_labels, self.psi, strict=True)
            },
        }

    def support(self, threshold: float = 1e-10) -> tuple[str, ...]:
        """Tailoring terms whose coefficient magnitude exceeds ``threshold``."""
        return tuple(
            label
            for label, value in zip(self.term_labels, self.psi, strict=True)
            if abs(value) > threshold
        )

    def scaled(self, factor: float) -> "BlipModel":
        """Every coefficient multiplied by ``factor``."""
        return BlipModel(
            psi0=self.psi0 * factor,
            psi=tuple(value * factor for value in self.psi),
            terms=self.terms,
        )


class EstimatorTag(BaseModel):
    """Provenance of an estimated regime."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    method: EstimatorMethod
    refit: bool = False
    adaptive: bool = False
    alpha: float = 0.5
    lambdas: tuple[float, ...] = ()


class Regime(BaseModel):
    """Decision rules for stages 1..K with their provenance."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    stages: tuple[BlipModel, ...] = Field(min_length=1)
    tag: EstimatorTag

    @property
    def n_stages(self) -> int:
        """Number of decision stages K."""
        return len(self.stages)

    def stage(self, index: int) -> BlipModel:
        """Blip model of stage ``index`` (1-based)."""
        if not 1 <= index <= self.n_stages:
            raise IndexError(f"stage must be in 1..{self.n_stages}, got {index}")
        return self.stages[index - 1]

    def to_dict(self) -> dict[str, Any]:
        """JSON-compatible document."""
        return self.model_dump(mode="json", exclude_none=True)

    @classmethod
    def from_dict(cls, document: Mapping[str, Any]) -> "Regime":
        """Rebuild a regime from :meth:`to_dict` output."""
        return cls.model_validate(document)


@dataclass(frozen=True)
class PseudoOutcome:
    """Response handed to the next-earlier stage."""

    values: np.ndarray
    stage: int

    @property
    def n(self) -> int:
        """Number of patients."""
        return len(self.values)


@dataclass(frozen=True)
class StageFit:
    """Everything estimated at one stage.

    Attributes:
        stage: 1-based stage index.
        model: Blip used for decisions (refitted when refitting is on).
        penalized: Original-scale penalized coefficients.
        refitted: Original-scale refit on the penalized support, if requested.
        fit: Working-scale penalized solution.
        main_terms: Main-effect terms of the design, blip-only terms included.
        weights: Regression weights.
        propensity: Treatment model behind estimated weights.
        propensities: Fitted treatment probabilities of the stage rows, when a
            treatment model was fitted.
        cv: Cross-validation curve when the penalty was tuned.
    """

    stage: int
    model: BlipModel
    penalized: Coefficients
    refitted: Coefficients | None
    fit: HeredityFit
    main_terms: tuple[Term, ...]
    weights: WeightVector
    propensity: PropensityModel | None = None
    cv: CvResult | None = None
    propensities: np.ndarray | None = None

    @property
    def coefficients(self) -> Coefficients:
        """Coefficients behind ``model``."""
        return self.refitted if self.refitted is not None else self.penalized

    @property
    def lambda_(self) -> float:
        """Penalty level of the penalized fit."""
        return self.fit.lambda_

    def treatment_free(self, frame: pd.DataFrame) -> np.ndarray:
        """Fitted treatment-free part ``intercept + sum_j beta_j * main_j(h)``."""
        coefficients = self.coefficients
        values = np.full(len(frame), coefficients.intercept)
        for term, beta in zip(self.main_terms, coefficients.beta, strict=True):
            if beta != 0.0:
                values = values + beta * term.evaluate(frame)
        return values


@dataclass(frozen=True)
class RegimeFit:
    """A regime with the per-stage fits and pseudo-outcomes that produced it."""

    regime: Regime
    stage_fits: tuple[StageFit, ...]
    pseudo_outcomes: tuple[PseudoOutcome, ...]

    def stage_fit(self, index: int) -> StageFit:
        """Fit of stage ``index`` (1-based)."""
        return self.stage_fits[index - 1]
