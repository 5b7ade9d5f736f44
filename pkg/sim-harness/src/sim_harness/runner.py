"""Replicated simulation experiments."""

import logging
from collections.abc import Callable
from concurrent.futures import ThreadPoolExecutor, as_completed

import numpy as np
from dtr_engine import (
    BlipModel,
    EstimatorMethod,
    EstimatorSettings,
    Regime,
    RegimeFit,
    fit_regime,
)
from stage_data import MultiStageTrial, PdwolsError

from .generators import SeedLike, TrialGenerator, make_generator
from .metrics import evaluate_regime, selection_errors, summarize
from .models import MethodSpec, MetricsReport, ReplicateResult, ScenarioConfig

logger = logging.getLogger(__name__)


def penalized_regime(result: RegimeFit) -> Regime:
    """Regime built from the penalized coefficients of every stage."""
    stages = tuple(
        BlipModel(
            psi0=float(stage_fit.penalized.psi0),
            psi=tuple(float(value) for value in stage_fit.penalized.psi),
            terms=stage_fit.model.terms,
        )
        for stage_fit in result.stage_fits
    )
    tag = result.regime.tag.model_copy(update={"refit": False})
    return Regime(stages=stages, tag=tag)


class ExperimentRunner:
    """Run every configured method over independent replicates of a design."""

    def __init__(
        self, config: ScenarioConfig, generator: TrialGenerator | None = None
    ) -> None:
        self.config = config
        self.generator = generator if generator is not None else make_generator(config)
        self.specs = self.generator.model_specs()

    def settings(self, method: EstimatorMethod, replicate: int) -> EstimatorSettings:
        """Estimator tuning for ``method`` on ``replicate``."""
        settings = self.config.estimator_settings(method)
        update: dict[str, object] = {"seed": self.config.base_seed + replicate}
        override = self.generator.weight_override
        if method is EstimatorMethod.PDWOLS and override is not None:
            update["weights"] = override
        return settings.model_copy(update=update)

    def _score(
        self,
        replicate: int,
        variant: MethodSpec,
        regime: Regime,
        lambdas: tuple[float, ...],
        test_seed: SeedLike,
    ) -> ReplicateResult:
        supports = tuple(model.support() for model in regime.stages)
        false_negatives, false_positives = selection_errors(
            supports, self.generator.signal_terms()
        )
        return ReplicateResult(
            replicate=replicate,
            method=variant.label,
            supports=supports,
            coefficients=tuple(model.coefficient_map() for model in regime.stages),
            lambdas=lambdas,
            evaluation=evaluate_regime(
                regime, self.generator, self.config.n_test, test_seed
            ),
            false_negatives=false_negatives,
            false_positives=false_positives,
        )

    def _regimes(
        self, trial: MultiStageTrial, method: EstimatorMethod, replicate: int
    ) -> dict[str, tuple[Regime, tuple[float, ...]]]:
        """Regime and penalty levels of every variant of ``method``.

        One stage has no pseudo-outcome, so its variants share one fit. With
        more stages refitting changes the pseudo-outcomes, so each variant runs
        its own recursion.
        """
        variants = [m for m in self.config.methods if m.method is method]
        settings = self.settings(method, replicate)
        regimes: dict[str, tuple[Regime, tuple[float, ...]]] = {}
        if self.generator.n_stages == 1:
            fit = fit_regime(trial, self.specs, settings)
            for variant in variants:
                regime = fit.regime if variant.refit else penalized_regime(fit)
                regimes[variant.label] = (regime, fit.regime.tag.lambdas)
            return regimes
        for variant in variants:
            own = settings.model_copy(update={"refit": variant.refit})
            regime = fit_regime(trial, self.specs, own).regime
            regimes[variant.label] = (regime, regime.tag.lambdas)
        return regimes

    def run_replicate(self, replicate: int) -> list[ReplicateResult]:
        """Fit and score every method on one training set.

        Every method is scored on the same test patients.
        """
        train_seed, test_seed = self.config.seeds(replicate)
        simulated = self.generator.sample(self.config.n, train_seed)
        results: list[ReplicateResult] = []
        for method in dict.fromkeys(m.method for m in self.config.methods):
            variants = [m for m in self.config.methods if m.method is method]
            try:
                regimes = self._regimes(simulated.trial, method, replicate)
            except (PdwolsError, np.linalg.LinAlgError) as e:
                logger.warning(
                    "Replicate %d (%s) failed: %s", replicate, method.value, e
                )
                results.extend(
                    ReplicateResult(replicate=replicate, method=v.label, error=str(e))
                    for v in variants
                )
                continue
            for variant in variants:
                regime, lambdas = regimes[variant.label]
                results.append(
                    self._score(replicate, variant, regime, lambdas, test_seed)
                )
        return results

    def run(self, progress: Callable[[int], None] | None = None) -> MetricsReport:
        """Run all replicates and aggregate them in replicate order.

        Args:
            progress: Called with the replicate index as each one finishes.
        """
        config = self.config
        logger.info(
            "Running %s: %d replicates of n=%d on %d worker(s)",
            config.generator.value,
            config.reps,
            config.n,
            config.n_jobs,
        )
        by_replicate: dict[int, list[ReplicateResult]] = {}
        if config.n_jobs == 1:
            for replicate in range(config.reps):
                by_replicate[replicate] = self.run_replicate(replicate)
                if progress is not None:
                    progress(replicate)
        else:
            with ThreadPoolExecutor(max_workers=config.n_jobs) as executor:
                futures = {
                    executor.submit(self.run_replicate, replicate): replicate
                    for replicate in range(config.reps)
                }
                for future in as_completed(futures):
                    replicate = futures[future]
                    by_replicate[replicate] = future.result()
                    if progress is not None:
                        progress(replicate)

        results = [
            result
            for replicate in range(config.reps)
            for result in by_replicate[replicate]
        ]
        return summarize(config, self.generator, results)


def run_experiment(
    config: ScenarioConfig, progress: Callable[[int], None] | None = None
) -> MetricsReport:
    """Run the experiment described by ``config``."""
    return ExperimentRunner(config).run(progress)
