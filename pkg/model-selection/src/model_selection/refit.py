"""Unpenalized weighted least squares on a selected support."""

import logging

import numpy as np
from stage_data import (
    Coefficients,
    ConfigurationError,
    DataValidationError,
    DesignBlocks,
    check_weights,
    to_original_scale,
)

from .models import Support

logger = logging.getLogger(__name__)


def _candidate_columns(
    blocks: DesignBlocks, support: Support
) -> list[tuple[str, int, str, np.ndarray]]:
    columns: list[tuple[str, int, str, np.ndarray]] = []
    if support.treatment:
        columns.append(("psi0", 0, "a", blocks.avec))
    for k in sorted(support.main):
        columns.append(("beta", k, blocks.main_names[k], blocks.xmain[:, k]))
    for j in sorted(support.blip):
        columns.append(("psi", j, f"a:{blocks.blip_names[j]}", blocks.xa[:, j]))
    return columns


def refit(
    blocks: DesignBlocks, y: np.ndarray, w: np.ndarray, support: Support
) -> Coefficients:
    """Refit the selected columns without penalty.

    Columns enter in the order treatment, main effects, interactions; a column
    that adds no rank to those already kept is dropped with a warning.
    Heredity is not re-imposed.

    Args:
        blocks: Centered (optionally standardized) design.
        y: Centered response.
        w: Observation weights.
        support: Columns to keep.

    Returns:
        Original-scale coefficients with zeros outside the support.
    """
    if not blocks.centered:
        raise ConfigurationError("refit expects weighted-centered blocks")
    weights = check_weights(w, blocks.n)
    response = np.asarray(y, dtype=float)
    if response.shape != (blocks.n,):
        raise DataValidationError("response length does not match the design")
    if any(k < 0 or k >= blocks.p for k in support.main) or any(
        j < 0 or j >= blocks.q for j in support.blip
    ):
        raise ConfigurationError("support indices fall outside the design")

    root = np.sqrt(weights)
    kept: list[tuple[str, int]] = []
    kept_columns: list[np.ndarray] = []
    dropped: list[str] = []
    for block, index, name, column in _candidate_columns(blocks, support):
        trial = np.column_stack(kept_columns + [column * root])
        if np.linalg.matrix_rank(trial) < trial.shape[1]:
            dropped.append(name)
            continue
        kept.append((block, index))
        kept_columns.append(column * root)
    if dropped:
        logger.warning("Dropping collinear refit columns: %s", ", ".join(dropped))

    psi0 = 0.0
    beta = np.zeros(blocks.p)
    psi = np.zeros(blocks.q)
    if kept_columns:
        solution, *_ = np.linalg.lstsq(
            np.column_stack(kept_columns), response * root, rcond=None
        )
        for (block, index), value in zip(kept, solution, strict=True):
            if block == "psi0":
                psi0 = float(value)
            elif block == "beta":
                beta[index] = value
            else:
                psi[index] = value
    return to_original_scale(blocks, psi0, beta, psi)
