"""Design-matrix construction, weighted centering and column standardization."""

import logging
from dataclasses import replace
from typing import Literal

import numpy as np

from .errors import ConfigurationError, DataValidationError
from .models import (
    BlockStats,
    Coefficients,
    DesignBlocks,
    ModelSpec,
    ScaleRecord,
    StageDataset,
    Term,
)

logger = logging.getLogger(__name__)

DEGENERATE_SCALE = 1e-12

CenteringDivisor = Literal["weights", "n"]


def design_terms(spec: ModelSpec) -> tuple[list[Term], np.ndarray]:
    """Main-effect terms and the parent main index of every blip term.

    Blip terms that are not listed among the treatment-free terms are appended
    as main effects, so every interaction has a parent main effect.

    Args:
        spec: Treatment-free and blip term lists.

    Returns:
        The main-effect terms in column order and, for each blip term, the
        index of its parent main-effect column.
    """
    main_terms = list(spec.treatment_free_terms)
    main_labels = [term.label for term in main_terms]
    for term in spec.blip_terms:
        if term.label not in main_labels:
            logger.info("Adding blip term '%s' as a main effect", term.label)
            main_terms.append(term)
            main_labels.append(term.label)
    blip_index = np.array(
        [main_labels.index(term.label) for term in spec.blip_terms], dtype=int
    )
    return main_terms, blip_index


def build_design(data: StageDataset, spec: ModelSpec) -> DesignBlocks:
    """Evaluate the model terms on a stage dataset.

    The main-effect block follows :func:`design_terms`.

    Args:
        data: Stage dataset.
        spec: Treatment-free and blip term lists.

    Returns:
        Raw (uncentered, unscaled) design blocks.

    Raises:
        DataValidationError: If a term names an unknown column or produces
            non-finite values.
    """
    main_terms, blip_index = design_terms(spec)
    n = data.n
    xmain = (
        np.column_stack([term.evaluate(data.covariates) for term in main_terms])
        if main_terms
        else np.empty((n, 0))
    )
    avec = data.a.astype(float)
    xa = avec[:, None] * xmain[:, blip_index] if blip_index.size else np.empty((n, 0))

    p, q = len(main_terms), len(blip_index)
    return DesignBlocks(
        xmain=xmain,
        avec=avec,
        xa=xa,
        main_names=tuple(term.label for term in main_terms),
        blip_names=tuple(term.label for term in spec.blip_terms),
        blip_main_index=blip_index,
        centering=BlockStats.filled(p, q, 0.0),
        scaling=BlockStats.filled(p, q, 1.0),
    )


def check_weights(w: np.ndarray, n: int) -> np.ndarray:
    """Validate a weight vector against ``n`` rows.

    Args:
        w: Candidate weights.
        n: Expected number of rows.

    Returns:
        The weights as a float array.

    Raises:
        DataValidationError: On a length mismatch, negative or non-finite
            entries, or an all-zero vector.
    """
    weights = np.asarray(w, dtype=float)
    if weights.shape != (n,):
        raise DataValidationError(f"weights must have length {n}, got {weights.shape}")
    if not np.all(np.isfinite(weights)) or np.any(weights < 0):
        raise DataValidationError("weights must be finite and nonnegative")
    if weights.sum() <= 0:
        raise DataValidationError("weights are all zero")
    return weights


def _weighted_means(
    matrix: np.ndarray, w: np.ndarray, denominator: float
) -> np.ndarray:
    return (w @ matrix) / denominator


def weighted_center(
    blocks: DesignBlocks,
    y: np.ndarray,
    w: np.ndarray,
    divisor: CenteringDivisor = "weights",
) -> tuple[DesignBlocks, np.ndarray]:
    """Subtract weighted column means from every design column and the response.

    Args:
        blocks: Unscaled design blocks.
        y: Response vector.
        w: Nonnegative weights with positive sum.
        divisor: ``"weights"`` divides by the weight total; ``"n"`` divides by
            the row count instead.

    Returns:
        The centered blocks and centered response. Means accumulate into
        ``blocks.centering`` and ``blocks.response_mean``.
    """
    weights = check_weights(w, blocks.n)
    if blocks.standardized:
        raise ConfigurationError("center blocks before standardizing them")
    response = np.asarray(y, dtype=float)
    if response.shape != (blocks.n,):
        raise DataValidationError("response length does not match the design")

    denominator = float(weights.sum()) if divisor == "weights" else float(blocks.n)
    main_means = _weighted_means(blocks.xmain, weights, denominator)
    a_mean = float(weights @ blocks.avec) / denominator
    xa_means = _weighted_means(blocks.xa, weights, denominator)
    y_mean = float(weights @ response) / denominator

    centered = replace(
        blocks,
        xmain=blocks.xmain - main_means,
        avec=blocks.avec - a_mean,
        xa=blocks.xa - xa_means,
        centering=BlockStats(
            main=blocks.centering.main + main_means,
            treatment=blocks.centering.treatment + a_mean,
            interaction=blocks.centering.interaction + xa_means,
        ),
        response_mean=blocks.response_mean + y_mean,
        centered=True,
        weighted=True,
    )
    return centered, response - y_mean


def _column_scales(
    matrix: np.ndarray, w: np.ndarray, names: tuple[str, ...], degenerate: list[str]
) -> np.ndarray:
    scales = np.sqrt((w @ matrix**2) / w.sum()) if matrix.size else np.empty(0)
    for index in np.flatnonzero(scales < DEGENERATE_SCALE):
        degenerate.append(names[index])
        scales[index] = 1.0
    return scales


def standardize(
    blocks: DesignBlocks, w: np.ndarray, enable: bool = True
) -> DesignBlocks:
    """Scale each centered column to unit weighted second moment.

    Columns with zero weighted variance keep scale 1 and are listed in
    ``degenerate``.

    Args:
        blocks: Centered design blocks.
        w: Nonnegative weights with positive sum.
        enable: When false the blocks are returned unchanged.

    Returns:
        Standardized blocks; scales accumulate into ``blocks.scaling``.

    Raises:
        ConfigurationError: If the blocks have not been centered.
    """
    if not enable:
        return blocks
    if not blocks.centered:
        raise ConfigurationError("standardize expects centered blocks")
    weights = check_weights(w, blocks.n)

    degenerate: list[str] = []
    main_scale = _column_scales(blocks.xmain, weights, blocks.main_names, degenerate)
    a_scale = _column_scales(blocks.avec[:, None], weights, ("a",), degenerate)
    xa_scale = _column_scales(
        blocks.xa, weights, tuple(f"a:{name}" for name in blocks.blip_names), degenerate
    )
    if degenerate:
        logger.warning("Degenerate (zero-variance) columns: %s", ", ".join(degenerate))

    return replace(
        blocks,
        xmain=blocks.xmain / main_scale,
        avec=blocks.avec / a_scale[0],
        xa=blocks.xa / xa_scale,
        scaling=BlockStats(
            main=blocks.scaling.main * main_scale,
            treatment=blocks.scaling.treatment * float(a_scale[0]),
            interaction=blocks.scaling.interaction * xa_scale,
        ),
        standardized=True,
        degenerate=tuple(dict.fromkeys(blocks.degenerate + tuple(degenerate))),
    )


def prepare_blocks(
    raw: DesignBlocks,
    y: np.ndarray,
    w: np.ndarray,
    scale: bool = True,
    divisor: CenteringDivisor = "weights",
) -> tuple[DesignBlocks, np.ndarray]:
    """Center and (optionally) standardize raw blocks.

    Args:
        raw: Unscaled design blocks.
        y: Response vector.
        w: Nonnegative weights with positive sum.
        scale: Standardize the centered columns.
        divisor: Centering divisor, see :func:`weighted_center`.

    Returns:
        The prepared blocks and the centered response.
    """
    centered, yc = weighted_center(raw, y, w, divisor=divisor)
    return standardize(centered, w, enable=scale), yc


def prepare_design(
    data: StageDataset,
    spec: ModelSpec,
    w: np.ndarray,
    scale: bool = True,
    divisor: CenteringDivisor = "weights",
) -> tuple[DesignBlocks, np.ndarray]:
    """Build, center and (optionally) standardize the design for one stage.

    Args:
        data: Stage dataset.
        spec: Treatment-free and blip term lists.
        w: Nonnegative weights with positive sum.
        scale: Standardize the centered columns.
        divisor: Centering divisor, see :func:`weighted_center`.

    Returns:
        The prepared blocks and the centered response.
    """
    return prepare_blocks(build_design(data, spec), data.y, w, scale, divisor)


def to_original_scale(
    blocks: DesignBlocks | ScaleRecord,
    psi0: float,
    beta: np.ndarray,
    psi: np.ndarray,
) -> Coefficients:
    """Map working-scale coefficients back to raw covariates with an intercept.

    Args:
        blocks: Prepared blocks, or the scale record taken from them.
        psi0: Working-scale treatment coefficient.
        beta: Working-scale main effects.
        psi: Working-scale interactions.

    Returns:
        Coefficients that apply to the raw, unshifted design columns.
    """
    psi0_raw = float(psi0) / blocks.scaling.treatment
    beta_raw = np.asarray(beta, dtype=float) / blocks.scaling.main
    psi_raw = np.asarray(psi, dtype=float) / blocks.scaling.interaction
    intercept = (
        blocks.response_mean
        - blocks.centering.treatment * psi0_raw
        - float(blocks.centering.main @ beta_raw)
        - float(blocks.centering.interaction @ psi_raw)
    )
    return Coefficients(
        intercept=intercept,
        psi0=psi0_raw,
        beta=beta_raw,
        psi=psi_raw,
        main_names=blocks.main_names,
        blip_names=blocks.blip_names,
    )


def stack_columns(blocks: DesignBlocks) -> np.ndarray:
    """Design matrix with columns ordered as treatment, main effects, interactions."""
    return np.column_stack([blocks.avec, blocks.xmain, blocks.xa])


def predict(coefficients: Coefficients, blocks: DesignBlocks) -> np.ndarray:
    """Fitted values of original-scale coefficients on a raw design.

    Raises:
        ConfigurationError: If the blocks are centered or standardized.
    """
    if blocks.centered or blocks.standardized:
        raise ConfigurationError("predict expects raw (untransformed) blocks")
    return coefficients.predict(blocks)
