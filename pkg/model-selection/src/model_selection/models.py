"""Result types for cross-validation, adaptive factors and refit supports."""

from dataclasses import dataclass
from enum import Enum

import numpy as np
from heredity_solver import HeredityFit, PenaltyMode, PenaltySpec


class SelectionRule(str, Enum):
    """How a penalty level is picked from a cross-validation curve."""

    MIN = "min"
    ONE_SE = "one_se"


class PilotKind(str, Enum):
    """Unpenalized pilot fit behind adaptive penalty factors."""

    WLS = "wls"
    RIDGE = "ridge"
    AUTO = "auto"


@dataclass(frozen=True)
class CvResult:
    """Per-lambda held-out error over K folds.

    Attributes:
        lambdas: Strictly decreasing penalty grid, fixed from the full data.
        cv_mean: Mean held-out weighted squared error per lambda.
        cv_se: Standard error of the fold errors per lambda.
        fold_errors: ``(k, len(lambdas))`` held-out errors.
        fold_assignments: Fold id of every row.
        lambda_min: Penalty with the smallest mean error (largest on ties).
        lambda_1se: Largest penalty within one standard error of the minimum.
        lambda_max: Entry penalty of the full data.
        alpha: Interaction share of the penalty.
        mode: Penalty mode used for every fold.
        rule: Which of ``lambda_min`` and ``lambda_1se`` is selected.
    """

    lambdas: np.ndarray
    cv_mean: np.ndarray
    cv_se: np.ndarray
    fold_errors: np.ndarray
    fold_assignments: np.ndarray
    lambda_min: float
    lambda_1se: float
    lambda_max: float
    alpha: float
    mode: PenaltyMode
    rule: SelectionRule = SelectionRule.MIN

    @property
    def k(self) -> int:
        """Number of folds."""
        return int(self.fold_errors.shape[0])

    @property
    def selected_lambda(self) -> float:
        """Penalty picked by ``rule``."""
        return self.lambda_1se if self.rule is SelectionRule.ONE_SE else self.lambda_min

    @property
    def selected_index(self) -> int:
        """Grid position of ``selected_lambda``."""
        return int(np.flatnonzero(self.lambdas == self.selected_lambda)[0])


@dataclass(frozen=True)
class AdaptiveFactors:
    """Inverse-magnitude penalty factors from an unpenalized pilot fit.

    Attributes:
        psi0: Factor of the treatment main effect.
        main: One factor per main effect.
        tau: Heredity-mode interaction factors ``|beta psi0 / psi|``.
        psi: Plain-mode interaction factors ``1 / |psi|``.
        pilot: Pilot actually used (never ``auto``).
        pilot_penalty: Ridge penalty of the pilot, 0 for WLS.
    """

    psi0: float
    main: np.ndarray
    tau: np.ndarray
    psi: np.ndarray
    pilot: PilotKind
    pilot_penalty: float = 0.0

    def main_factors(self, penalize_psi0: bool = False) -> np.ndarray:
        """``p + 1`` main factors with psi0 first (0 unless penalized)."""
        return np.r_[self.psi0 if penalize_psi0 else 0.0, self.main]

    def interaction_factors(self, mode: PenaltyMode) -> np.ndarray:
        """Interaction factors matching the parametrization of ``mode``."""
        return self.tau if PenaltyMode(mode) is PenaltyMode.HEREDITY else self.psi

    def penalty(
        self,
        lambda_: float,
        alpha: float,
        mode: PenaltyMode = PenaltyMode.HEREDITY,
        penalize_psi0: bool = False,
    ) -> PenaltySpec:
        """Penalty specification carrying these factors."""
        return PenaltySpec(
            lambda_=lambda_,
            alpha=alpha,
            main_factors=self.main_factors(penalize_psi0),
            interaction_factors=self.interaction_factors(mode),
            mode=PenaltyMode(mode),
        )


@dataclass(frozen=True)
class Support:
    """Columns kept for an unpenalized refit."""

    treatment: bool
    main: tuple[int, ...]
    blip: tuple[int, ...]

    @classmethod
    def of(cls, fit: HeredityFit, threshold: float = 0.0) -> "Support":
        """Nonzero coefficients of a penalized fit.

        The treatment column stays whenever psi0 is nonzero or unpenalized.
        """
        unpenalized = fit.penalty.main_factors[0] == 0
        return cls(
            treatment=bool(unpenalized or abs(fit.psi0) > threshold),
            main=tuple(int(k) for k in fit.main_support(threshold)),
            blip=tuple(int(j) for j in fit.blip_support(threshold)),
        )

    @property
    def size(self) -> int:
        """Number of selected columns."""
        return int(self.treatment) + len(self.main) + len(self.blip)
