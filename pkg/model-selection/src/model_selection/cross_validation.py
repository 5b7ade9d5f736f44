"""K-fold cross-validation over a fixed penalty grid."""

import logging
from concurrent.futures import ThreadPoolExecutor, as_completed

import numpy as np
from heredity_solver import (
    PenaltyMode,
    SolverControl,
    default_min_ratio,
    fit_path,
    lambda_grid,
    lambda_max,
)
from stage_data import (
    CenteringDivisor,
    ConfigurationError,
    DataValidationError,
    DesignBlocks,
    check_weights,
    prepare_blocks,
)

from .adaptive import FactorRule
from .models import CvResult, SelectionRule

logger = logging.getLogger(__name__)

LAMBDA_FLOOR = 1e-10
MIN_WORKERS = 1


def assign_folds(n: int, k: int, rng: np.random.Generator) -> np.ndarray:
    """Balanced fold ids from a random permutation of the rows.

    Args:
        n: Number of rows.
        k: Number of folds.
        rng: Source of the permutation.

    Returns:
        Fold id in ``0..k-1`` per row; fold sizes differ by at most one.
    """
    folds = np.empty(n, dtype=int)
    folds[rng.permutation(n)] = np.arange(n) % k
    return folds


def _constant_training_fold(
    avec: np.ndarray, w: np.ndarray, folds: np.ndarray, k: int
) -> int | None:
    for fold in range(k):
        train = (folds != fold) & (w > 0)
        if np.unique(avec[train]).size < 2:
            return fold
    return None


def _fold_errors(
    raw: DesignBlocks,
    y: np.ndarray,
    w: np.ndarray,
    train: np.ndarray,
    grid: np.ndarray,
    alpha: float,
    factors: tuple[np.ndarray, np.ndarray],
    factor_rule: FactorRule | None,
    mode: PenaltyMode,
    control: SolverControl | None,
    scale: bool,
    divisor: CenteringDivisor,
) -> np.ndarray:
    test = ~train
    blocks, yc = prepare_blocks(raw.take(train), y[train], w[train], scale, divisor)
    main_factors, interaction_factors = (
        factor_rule(blocks, yc, w[train]) if factor_rule is not None else factors
    )
    path = fit_path(
        blocks,
        yc,
        w[train],
        alpha,
        main_factors,
        interaction_factors,
        mode,
        lambdas=grid,
        control=control,
    )
    held_out = raw.take(test)
    w_test = w[test]
    total = float(w_test.sum())
    if total <= 0:
        raise DataValidationError("a held-out fold has zero total weight")
    errors = np.empty(len(grid))
    for index, fit in enumerate(path.fits):
        r = y[test] - fit.original_scale().predict(held_out)
        errors[index] = float(w_test @ (r * r)) / total
    return errors


def kfold_cv(
    blocks: DesignBlocks,
    y: np.ndarray,
    w: np.ndarray,
    alpha: float,
    main_factors: np.ndarray,
    interaction_factors: np.ndarray,
    k: int = 4,
    seed: int = 0,
    mode: PenaltyMode = PenaltyMode.HEREDITY,
    n_lambda: int = 100,
    min_ratio: float | None = None,
    lambdas: np.ndarray | None = None,
    folds: np.ndarray | None = None,
    factor_rule: FactorRule | None = None,
    rule: SelectionRule = SelectionRule.MIN,
    control: SolverControl | None = None,
    scale: bool = True,
    divisor: CenteringDivisor = "weights",
    weighted_screening: bool = True,
    n_jobs: int = 1,
) -> CvResult:
    """Select the penalty level by K-fold cross-validation.

    The lambda grid comes from the full data. Each training fold is centered
    and standardized on its own rows from the raw design, fitted along the
    grid, and scored on its held-out rows by ``sum w (y - yhat)^2 / sum w``.

    Args:
        blocks: Raw (untransformed) design.
        y: Raw response.
        w: Observation weights.
        alpha: Interaction share of the penalty.
        main_factors: ``p + 1`` main factors, psi0 first.
        interaction_factors: ``q`` interaction factors.
        k: Number of folds, ``2 <= k <= n``.
        seed: Seed of the fold shuffle.
        mode: Heredity or plain penalty.
        n_lambda: Grid size when ``lambdas`` is not given.
        min_ratio: Smallest-to-largest grid ratio.
        lambdas: Explicit decreasing grid.
        folds: Explicit fold ids in ``0..k-1``; overrides the shuffle.
        factor_rule: Recomputes penalty factors on each training fold.
        rule: Selection rule recorded on the result.
        control: Solver options for every fit.
        scale: Standardize columns within each fold.
        divisor: Centering divisor.
        weighted_screening: Weighted inner products in lambda_max.
        n_jobs: Folds fitted concurrently.

    Raises:
        ConfigurationError: On an invalid ``k`` or fold vector.
        DataValidationError: If a training fold has constant treatment after
            one re-draw, or a held-out fold has zero weight.
    """
    if blocks.centered or blocks.standardized:
        raise ConfigurationError("kfold_cv expects raw blocks; folds are prepared here")
    response = np.asarray(y, dtype=float)
    weights = check_weights(w, blocks.n)
    n = blocks.n
    if k < 2 or k > n:
        raise ConfigurationError(f"k must lie in [2, n={n}], got {k}")

    rng = np.random.default_rng(seed)
    if folds is None:
        assignment = assign_folds(n, k, rng)
        bad = _constant_training_fold(blocks.avec, weights, assignment, k)
        if bad is not None:
            logger.warning(
                "Training complement of fold %d has constant treatment; "
                "re-drawing folds",
                bad,
            )
            assignment = assign_folds(n, k, rng)
    else:
        assignment = np.asarray(folds, dtype=int)
        if assignment.shape != (n,) or set(np.unique(assignment)) != set(range(k)):
            raise ConfigurationError(f"folds must label every row with 0..{k - 1}")
    bad = _constant_training_fold(blocks.avec, weights, assignment, k)
    if bad is not None:
        raise DataValidationError(
            f"training complement of fold {bad} has constant treatment"
        )

    full, yc = prepare_blocks(blocks, response, weights, scale, divisor)
    top = lambda_max(
        full,
        yc,
        weights,
        alpha,
        main_factors,
        interaction_factors,
        mode,
        weighted_screening,
    )
    if lambdas is None:
        ratio = (
            min_ratio
            if min_ratio is not None
            else default_min_ratio(int(np.count_nonzero(weights > 0)), full.p)
        )
        grid = lambda_grid(max(top, LAMBDA_FLOOR), n_lambda, ratio)
    else:
        grid = np.asarray(lambdas, dtype=float)
        if grid.ndim != 1 or grid.size < 1 or np.any(np.diff(grid) >= 0):
            raise ConfigurationError("lambdas must be strictly decreasing")

    factors = (np.asarray(main_factors), np.asarray(interaction_factors))
    errors = np.empty((k, grid.size))

    def run(fold: int) -> np.ndarray:
        return _fold_errors(
            blocks,
            response,
            weights,
            assignment != fold,
            grid,
            alpha,
            factors,
            factor_rule,
            PenaltyMode(mode),
            control,
            scale,
            divisor,
        )

    if n_jobs <= 1:
        for fold in range(k):
            errors[fold] = run(fold)
    else:
        with ThreadPoolExecutor(max_workers=max(MIN_WORKERS, n_jobs)) as executor:
            futures = {executor.submit(run, fold): fold for fold in range(k)}
            for future in as_completed(futures):
                errors[futures[future]] = future.result()

    cv_mean = errors.mean(axis=0)
    cv_se = errors.std(axis=0, ddof=1) / np.sqrt(k)
    # argmin returns the first (largest) lambda among ties
    best = int(np.argmin(cv_mean))
    within = np.flatnonzero(cv_mean <= cv_mean[best] + cv_se[best])
    logger.info(
        "Cross-validation selected lambda=%.4g (1-SE lambda=%.4g) over %d folds",
        grid[best],
        grid[within[0]],
        k,
    )
    return CvResult(
        lambdas=grid,
        cv_mean=cv_mean,
        cv_se=cv_se,
        fold_errors=errors,
        fold_assignments=assignment,
        lambda_min=float(grid[best]),
        lambda_1se=float(grid[within[0]]),
        lambda_max=float(top),
        alpha=alpha,
        mode=PenaltyMode(mode),
        rule=SelectionRule(rule),
    )
