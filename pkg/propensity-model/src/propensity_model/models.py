"""Data models for propensity fits and dWOLS weight vectors."""

from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from stage_data import DataValidationError, Term


class WeightSource(str, Enum):
    """Where a weight vector came from."""

    ESTIMATED = "estimated"
    NULL_MODEL = "null_model"
    USER_SUPPLIED = "user_supplied"
    ALL_ONES = "all_ones"


@dataclass(frozen=True)
class PropensityModel:
    """Fitted logistic treatment model.

    ``coefficients[0]`` is the intercept; the rest follow ``terms``.
    """

    coefficients: np.ndarray
    terms: tuple[Term, ...]
    converged: bool
    iterations: int
    separated: bool = False
    log_likelihood: tuple[float, ...] = field(default=())

    @property
    def term_labels(self) -> list[str]:
        """Labels of the non-intercept coefficients."""
        return [term.label for term in self.terms]

    def as_dict(self) -> dict[str, float]:
        """Coefficients keyed by term label."""
        labels = ["(intercept)", *self.term_labels]
        return {
            label: float(value)
            for label, value in zip(labels, self.coefficients, strict=True)
        }


@dataclass(frozen=True)
class WeightVector:
    """Nonnegative observation weights with positive total."""

    w: np.ndarray
    source: WeightSource

    def __post_init__(self) -> None:
        w = np.asarray(self.w, dtype=float)
        if w.ndim != 1:
            raise DataValidationError("weights must be one-dimensional")
        if not np.all(np.isfinite(w)) or np.any(w < 0):
            raise DataValidationError("weights must be finite and nonnegative")
        if w.sum() <= 0:
            raise DataValidationError("weights are all zero")
        object.__setattr__(self, "w", w)

    @property
    def n(self) -> int:
        """Number of weights."""
        return len(self.w)

    @property
    def n_positive(self) -> int:
        """Rows with positive weight."""
        return int(np.count_nonzero(self.w > 0))
