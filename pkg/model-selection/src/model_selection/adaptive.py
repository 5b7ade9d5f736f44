"""Adaptive penalty factors from an unpenalized pilot fit."""

import logging
from collections.abc import Callable

import numpy as np
from heredity_solver import PenaltyMode
from stage_data import (
    ConfigurationError,
    DesignBlocks,
    NumericalError,
    check_weights,
    stack_columns,
)

from .models import AdaptiveFactors, PilotKind

logger = logging.getLogger(__name__)

# zero pilot coefficients map here instead of infinity
FACTOR_CAP = 1e8
RIDGE_PENALTY_RATIO = 1e-2

FactorRule = Callable[
    [DesignBlocks, np.ndarray, np.ndarray], tuple[np.ndarray, np.ndarray]
]


def _inverse_magnitude(numerator: np.ndarray, denominator: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.abs(numerator) / np.abs(denominator)
    ratio = np.nan_to_num(ratio, nan=FACTOR_CAP, posinf=FACTOR_CAP)
    return np.minimum(ratio, FACTOR_CAP)


def factors_from_pilot(
    psi0: float,
    beta: np.ndarray,
    psi: np.ndarray,
    parent: np.ndarray,
    pilot: PilotKind = PilotKind.WLS,
    pilot_penalty: float = 0.0,
) -> AdaptiveFactors:
    """Turn pilot estimates into capped inverse-magnitude factors.

    ``psi0 -> 1/|psi0|``, ``beta_k -> 1/|beta_k|``,
    ``tau_j -> |beta_parent(j) * psi0 / psi_j|`` and, for plain mode,
    ``psi_j -> 1/|psi_j|``.

    Args:
        psi0: Pilot treatment coefficient.
        beta: Pilot main effects.
        psi: Pilot interactions.
        parent: Parent main-effect index of each interaction.
        pilot: Kind of pilot that produced the estimates.
        pilot_penalty: Ridge penalty of the pilot, zero for least squares.

    Returns:
        The factors; zero pilot magnitudes map to the cap.
    """
    beta = np.asarray(beta, dtype=float)
    psi = np.asarray(psi, dtype=float)
    ones_main = np.ones_like(beta)
    ones_blip = np.ones_like(psi)
    return AdaptiveFactors(
        psi0=float(_inverse_magnitude(np.array(1.0), np.array(psi0))),
        main=_inverse_magnitude(ones_main, beta),
        tau=_inverse_magnitude(beta[parent] * psi0, psi),
        psi=_inverse_magnitude(ones_blip, psi),
        pilot=pilot,
        pilot_penalty=pilot_penalty,
    )


def _weighted_design(
    blocks: DesignBlocks, y: np.ndarray, w: np.ndarray
) -> tuple[np.ndarray, np.ndarray, int]:
    weights = check_weights(w, blocks.n)
    keep = weights > 0
    root = np.sqrt(weights[keep])
    design = stack_columns(blocks)[keep] * root[:, None]
    return design, np.asarray(y, dtype=float)[keep] * root, int(keep.sum())


def pilot_fit(
    blocks: DesignBlocks,
    y: np.ndarray,
    w: np.ndarray,
    pilot: PilotKind = PilotKind.AUTO,
    ridge_penalty: float | None = None,
) -> tuple[np.ndarray, PilotKind, float]:
    """Saturated unpenalized fit ordered as treatment, mains, interactions.

    Returns:
        Coefficients, the pilot used and its ridge penalty (0 for WLS).

    Raises:
        NumericalError: If a WLS pilot is requested on a rank-deficient design.
    """
    if not blocks.centered:
        raise ConfigurationError("the pilot fit expects weighted-centered blocks")
    design, target, n = _weighted_design(blocks, y, w)
    kind = PilotKind(pilot)
    full_rank = np.linalg.matrix_rank(design) == design.shape[1]

    if kind is PilotKind.AUTO:
        kind = PilotKind.WLS if full_rank else PilotKind.RIDGE
        if not full_rank:
            logger.info("Design is rank deficient; using a ridge pilot")
    if kind is PilotKind.WLS:
        if not full_rank:
            raise NumericalError(
                "design is rank deficient; the WLS pilot is undefined, use ridge"
            )
        coef, *_ = np.linalg.lstsq(design, target, rcond=None)
        return coef, kind, 0.0

    if ridge_penalty is None:
        scale = float(np.max(np.abs(design.T @ target))) / n
        ridge_penalty = max(RIDGE_PENALTY_RATIO * scale, 1e-8)
    if ridge_penalty <= 0:
        raise ConfigurationError("ridge_penalty must be positive")
    gram = design.T @ design / n + ridge_penalty * np.eye(design.shape[1])
    coef = np.linalg.solve(gram, design.T @ target / n)
    return coef, kind, float(ridge_penalty)


def adaptive_factors(
    blocks: DesignBlocks,
    y: np.ndarray,
    w: np.ndarray,
    pilot: PilotKind = PilotKind.AUTO,
    ridge_penalty: float | None = None,
) -> AdaptiveFactors:
    """Adaptive factors for the treatment, main-effect and interaction blocks.

    Args:
        blocks: Centered (optionally standardized) design.
        y: Centered response.
        w: Observation weights.
        pilot: ``wls``, ``ridge`` or ``auto`` (WLS when the design has full rank).
        ridge_penalty: Ridge penalty; defaults to 1e-2 of the ridge entry scale.
    """
    coef, kind, penalty = pilot_fit(blocks, y, w, pilot, ridge_penalty)
    p = blocks.p
    return factors_from_pilot(
        psi0=float(coef[0]),
        beta=coef[1 : 1 + p],
        psi=coef[1 + p :],
        parent=blocks.blip_main_index,
        pilot=kind,
        pilot_penalty=penalty,
    )


def adaptive_factor_rule(
    mode: PenaltyMode = PenaltyMode.HEREDITY,
    pilot: PilotKind = PilotKind.AUTO,
    penalize_psi0: bool = False,
) -> FactorRule:
    """Factor recomputation hook for cross-validation folds.

    Args:
        mode: Penalty mode the interaction factors are built for.
        pilot: Pilot estimator run on each training fold.
        penalize_psi0: Keep the pilot factor on psi0 instead of zero.

    Returns:
        A callable mapping prepared fold blocks, response and weights to main
        and interaction factors.
    """

    def rule(
        blocks: DesignBlocks, y: np.ndarray, w: np.ndarray
    ) -> tuple[np.ndarray, np.ndarray]:
        factors = adaptive_factors(blocks, y, w, pilot)
        return factors.main_factors(penalize_psi0), factors.interaction_factors(mode)

    return rule
