"""Penalty specifications, fits and regularization paths."""

from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np
from stage_data import Coefficients, ConfigurationError, ScaleRecord, to_original_scale


class PenaltyMode(str, Enum):
    """How interactions are parametrized and penalized."""

    HEREDITY = "heredity"
    PLAIN = "plain"


@dataclass(frozen=True)
class PenaltySpec:
    """Elastic split of the penalty between main effects and interactions.

    Attributes:
        lambda_: Overall penalty level.
        alpha: Share of the penalty on interactions; main effects get 1 - alpha.
        main_factors: p + 1 factors; index 0 is the treatment main effect psi0.
        interaction_factors: One factor per blip term (tau in heredity mode,
            psi directly in plain mode).
        mode: Heredity reparametrization or plain lasso.
    """

    lambda_: float
    alpha: float
    main_factors: np.ndarray
    interaction_factors: np.ndarray
    mode: PenaltyMode = PenaltyMode.HEREDITY

    def __post_init__(self) -> None:
        main = np.asarray(self.main_factors, dtype=float)
        interaction = np.asarray(self.interaction_factors, dtype=float)
        if not np.isfinite(self.lambda_) or self.lambda_ < 0:
            raise ConfigurationError(f"lambda must be nonnegative, got {self.lambda_}")
        if not 0.0 < self.alpha < 1.0:
            raise ConfigurationError(f"alpha must lie in (0, 1), got {self.alpha}")
        if main.ndim != 1 or main.size < 1:
            raise ConfigurationError("main_factors needs an entry for psi0")
        for name, factors in (("main", main), ("interaction", interaction)):
            if not np.all(np.isfinite(factors)) or np.any(factors < 0):
                raise ConfigurationError(
                    f"{name} factors must be finite and nonnegative"
                )
        object.__setattr__(self, "main_factors", main)
        object.__setattr__(self, "interaction_factors", interaction)
        object.__setattr__(self, "mode", PenaltyMode(self.mode))

    @classmethod
    def uniform(
        cls,
        p: int,
        q: int,
        lambda_: float = 0.0,
        alpha: float = 0.5,
        mode: PenaltyMode = PenaltyMode.HEREDITY,
        penalize_psi0: bool = False,
    ) -> "PenaltySpec":
        """Unit factors everywhere, with psi0 unpenalized unless requested."""
        main = np.ones(p + 1)
        main[0] = 1.0 if penalize_psi0 else 0.0
        return cls(
            lambda_=lambda_,
            alpha=alpha,
            main_factors=main,
            interaction_factors=np.ones(q),
            mode=mode,
        )

    @property
    def p(self) -> int:
        """Number of main-effect covariates."""
        return int(self.main_factors.size - 1)

    @property
    def q(self) -> int:
        """Number of interaction terms."""
        return int(self.interaction_factors.size)

    def with_lambda(self, lambda_: float) -> "PenaltySpec":
        """Same factors at a different penalty level."""
        return replace(self, lambda_=float(lambda_))


@dataclass(frozen=True)
class SolverControl:
    """Stopping rule and restart options for coordinate descent."""

    tol: float = 1e-7
    max_iter: int = 10_000
    n_starts: int = 1
    seed: int = 0
    record_trace: bool = False

    def __post_init__(self) -> None:
        if self.tol <= 0:
            raise ConfigurationError("tol must be positive")
        if self.max_iter < 1:
            raise ConfigurationError("max_iter must be at least 1")
        if self.n_starts < 1:
            raise ConfigurationError("n_starts must be at least 1")


@dataclass(frozen=True)
class HeredityFit:
    """Working-scale solution of one penalized problem.

    In heredity mode ``psi[j] = psi0 * tau[j] * beta[parent(j)]``. In plain mode
    ``tau`` is all zero and ``psi`` is estimated directly.
    """

    psi0: float
    beta: np.ndarray
    tau: np.ndarray
    psi: np.ndarray
    penalty: PenaltySpec
    objective: float
    iterations: int
    converged: bool
    kkt_violation: float
    n_effective: int
    scale: ScaleRecord
    trace: tuple[float, ...] = field(default=())

    @property
    def lambda_(self) -> float:
        """Penalty level of this fit."""
        return self.penalty.lambda_

    @property
    def mode(self) -> PenaltyMode:
        """Penalty mode of this fit."""
        return self.penalty.mode

    def blip_support(self, threshold: float = 0.0) -> np.ndarray:
        """Indices of nonzero interaction coefficients."""
        return np.flatnonzero(np.abs(self.psi) > threshold)

    def main_support(self, threshold: float = 0.0) -> np.ndarray:
        """Indices of nonzero main-effect coefficients (excluding psi0)."""
        return np.flatnonzero(np.abs(self.beta) > threshold)

    def penalized_zero(self) -> bool:
        """True when every penalized coefficient is exactly zero."""
        factors = self.penalty.main_factors
        penalized_psi0 = factors[0] > 0 and self.psi0 != 0.0
        penalized_beta = np.any((factors[1:] > 0) & (self.beta != 0.0))
        return not (penalized_psi0 or penalized_beta or np.any(self.psi != 0.0))

    def original_scale(self) -> Coefficients:
        """Coefficients on the original covariate scale with an intercept."""
        return to_original_scale(self.scale, self.psi0, self.beta, self.psi)


@dataclass(frozen=True)
class LambdaPath:
    """Fits over a strictly decreasing penalty sequence."""

    lambdas: np.ndarray
    fits: tuple[HeredityFit, ...]
    lambda_max: float

    def __post_init__(self) -> None:
        if len(self.lambdas) != len(self.fits):
            raise ConfigurationError("one fit per lambda is required")
        if np.any(np.diff(self.lambdas) >= 0):
            raise ConfigurationError("lambdas must be strictly decreasing")

    def __len__(self) -> int:
        return len(self.fits)

    def support_sizes(self) -> np.ndarray:
        """Number of nonzero interaction coefficients along the path."""
        return np.array([fit.blip_support().size for fit in self.fits])

    def fit_at(self, lambda_: float) -> HeredityFit:
        """Fit whose penalty level is closest to ``lambda_``."""
        index = int(np.argmin(np.abs(self.lambdas - lambda_)))
        return self.fits[index]
