"""Penalized single-stage estimators: pdWOLS and plain-lasso Q-learning."""

import logging

import numpy as np
from heredity_solver import (
    HeredityFit,
    PenaltyMode,
    PenaltySpec,
    SolverControl,
    cd_fit,
    fit_path,
)
from model_selection import (
    CvResult,
    Support,
    adaptive_factor_rule,
    adaptive_factors,
    kfold_cv,
    refit,
)
from propensity_model import (
    PropensityModel,
    WeightVector,
    estimate_weights,
    null_weights,
    predict_propensity,
    user_weights,
)
from stage_data import (
    ConfigurationError,
    DataValidationError,
    DesignBlocks,
    ModelSpec,
    StageDataset,
    build_design,
    design_terms,
    prepare_blocks,
)

from .models import (
    BlipModel,
    EstimatorMethod,
    EstimatorSettings,
    StageFit,
    WeightScheme,
)

logger = logging.getLogger(__name__)


def penalty_mode(method: EstimatorMethod) -> PenaltyMode:
    """Heredity penalty for pdWOLS, plain lasso for Q-learning."""
    if method is EstimatorMethod.PDWOLS:
        return PenaltyMode.HEREDITY
    return PenaltyMode.PLAIN


class PenalizedStageEstimator:
    """Fit one decision stage: weights, penalty selection, optional refit."""

    def __init__(self, settings: EstimatorSettings | None = None) -> None:
        """Initialize the estimator.

        Args:
            settings: Estimator tuning; defaults to pdWOLS with 4-fold CV.
        """
        self.settings = settings or EstimatorSettings()
        self.mode = penalty_mode(self.settings.method)
        self.control = SolverControl(
            tol=self.settings.tol, max_iter=self.settings.max_iter
        )

    def stage_weights(
        self,
        data: StageDataset,
        spec: ModelSpec,
        weights: np.ndarray | None = None,
    ) -> tuple[WeightVector, PropensityModel | None]:
        """Regression weights for ``data`` under the configured scheme."""
        scheme = self.settings.weight_scheme
        if scheme is WeightScheme.USER:
            if weights is None:
                raise ConfigurationError("weights='user' requires a weight vector")
            return user_weights(weights), None
        if scheme is WeightScheme.ONES:
            return null_weights(data.n), None
        model, vector = estimate_weights(data.covariates, data.a, spec.propensity_terms)
        return vector, model

    def _factors(
        self, blocks: DesignBlocks, yc: np.ndarray, w: np.ndarray, penalize_psi0: bool
    ) -> tuple[np.ndarray, np.ndarray]:
        if self.settings.adaptive:
            factors = adaptive_factors(blocks, yc, w, self.settings.pilot)
            interaction = factors.interaction_factors(self.mode)
            return factors.main_factors(penalize_psi0), interaction
        uniform = PenaltySpec.uniform(
            blocks.p, blocks.q, mode=self.mode, penalize_psi0=penalize_psi0
        )
        return uniform.main_factors, uniform.interaction_factors

    def _select(
        self,
        raw: DesignBlocks,
        data: StageDataset,
        w: np.ndarray,
        main: np.ndarray,
        interaction: np.ndarray,
        penalize_psi0: bool,
    ) -> CvResult:
        settings = self.settings
        factor_rule = None
        if settings.adaptive and settings.per_fold_factors:
            factor_rule = adaptive_factor_rule(self.mode, settings.pilot, penalize_psi0)
        return kfold_cv(
            raw,
            data.y,
            w,
            settings.alpha,
            main,
            interaction,
            k=settings.n_folds,
            seed=settings.seed,
            mode=self.mode,
            n_lambda=settings.n_lambda,
            min_ratio=settings.min_ratio,
            factor_rule=factor_rule,
            rule=settings.rule,
            control=self.control,
            scale=settings.standardize,
            n_jobs=settings.n_jobs,
        )

    def fit(
        self,
        data: StageDataset,
        spec: ModelSpec,
        stage: int = 1,
        weights: np.ndarray | None = None,
    ) -> StageFit:
        """Estimate the blip of one stage.

        Args:
            data: Stage response, treatment and history.
            spec: Treatment-free, blip and propensity terms.
            stage: 1-based stage index used in logs and results.
            weights: Explicit weights when the scheme is ``user``.

        Returns:
            The stage fit; its ``model`` is refitted when refitting is on.

        Raises:
            DataValidationError: If the treatment is constant at this stage.
        """
        if np.unique(data.a).size < 2:
            raise DataValidationError(f"stage {stage} has constant treatment")
        settings = self.settings
        penalize_psi0 = spec.penalize_psi0 or settings.penalize_psi0
        main_terms, _ = design_terms(spec)

        vector, propensity = self.stage_weights(data, spec, weights)
        if vector.n != data.n:
            raise DataValidationError(
                f"stage {stage} has {data.n} rows but {vector.n} weights"
            )
        w = vector.w
        raw = build_design(data, spec)
        blocks, yc = prepare_blocks(raw, data.y, w, scale=settings.standardize)
        main, interaction = self._factors(blocks, yc, w, penalize_psi0)

        cv: CvResult | None = None
        fit: HeredityFit
        if settings.lambda_ is not None:
            penalty = PenaltySpec(
                lambda_=settings.lambda_,
                alpha=settings.alpha,
                main_factors=main,
                interaction_factors=interaction,
                mode=self.mode,
            )
            fit = cd_fit(blocks, yc, w, penalty, control=self.control)
        else:
            cv = self._select(raw, data, w, main, interaction, penalize_psi0)
            path = fit_path(
                blocks,
                yc,
                w,
                settings.alpha,
                main,
                interaction,
                mode=self.mode,
                lambdas=cv.lambdas,
                control=self.control,
            )
            fit = path.fits[cv.selected_index]

        penalized = fit.original_scale()
        refitted = refit(blocks, yc, w, Support.of(fit)) if settings.refit else None
        final = refitted if refitted is not None else penalized
        model = BlipModel(
            psi0=float(final.psi0),
            psi=tuple(float(value) for value in final.psi),
            terms=tuple(spec.blip_terms),
        )
        logger.info(
            "Stage %d (%s): lambda=%.4g, blip support %s",
            stage,
            settings.method.value,
            fit.lambda_,
            list(model.support()) or "(intercept only)",
        )
        return StageFit(
            stage=stage,
            model=model,
            penalized=penalized,
            refitted=refitted,
            fit=fit,
            main_terms=tuple(main_terms),
            weights=vector,
            propensity=propensity,
            cv=cv,
            propensities=(
                predict_propensity(propensity, data.covariates)
                if propensity is not None
                else None
            ),
        )
