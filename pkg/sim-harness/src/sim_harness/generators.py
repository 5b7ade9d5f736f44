"""Data-generating designs with known optimal decision rules.

Every generator draws all of its randomness before assigning treatments, so the
same seed yields the same patients whether treatments follow the observational
propensity or a regime under test.
"""

from abc import ABC, abstractmethod
from collections.abc import Callable, Sequence
from dataclasses import dataclass

import numpy as np
import pandas as pd
from dtr_engine import (
    BlipModel,
    EstimatorMethod,
    EstimatorTag,
    Regime,
    WeightScheme,
    optimal_action,
)
from scipy.special import expit
from stage_data import (
    ConfigurationError,
    DataValidationError,
    ModelSpec,
    MultiStageTrial,
    StageRecord,
)

from .models import GeneratorKind, ScenarioConfig

SeedLike = int | np.random.SeedSequence
Draws = dict[str, np.ndarray]
# (stage, history, observational actions) -> actions taken
Chooser = Callable[[int, pd.DataFrame, np.ndarray], np.ndarray]


@dataclass(frozen=True)
class SimulatedTrial:
    """Generated trial with the true optimal action at each observed history."""

    trial: MultiStageTrial
    optimal: np.ndarray

    @property
    def n(self) -> int:
        """Number of patients."""
        return self.trial.n


@dataclass(frozen=True)
class PolicyOutcome:
    """Outcomes of patients treated by a regime.

    ``optimal`` holds the true optimal action at each history reached while
    following the regime.
    """

    y: np.ndarray
    actions: np.ndarray
    optimal: np.ndarray


def noise_draws(
    n: int, d: int, n_stages: int, rng: np.random.Generator
) -> np.ndarray:
    """``(n_stages, n, d)`` noise covariates.

    Stage 1 columns are standard normal; later stages are ``N(log|z|, 1)`` around
    the same column one stage earlier.
    """
    draws = np.empty((n_stages, n, d))
    draws[0] = rng.normal(size=(n, d))
    for stage in range(1, n_stages):
        draws[stage] = np.log(np.abs(draws[stage - 1])) + rng.normal(size=(n, d))
    return draws


def noise_names(d: int) -> list[str]:
    """Column labels of ``d`` noise covariates."""
    return [f"z{j}" for j in range(1, d + 1)]


def augment_noise(trial: MultiStageTrial, d: int, seed: SeedLike) -> MultiStageTrial:
    """Append ``d`` noise covariates ``z1..zd`` to every stage of ``trial``.

    Raises:
        DataValidationError: If a stage already has a column named like the noise.
    """
    if d == 0:
        return trial
    draws = noise_draws(trial.n, d, trial.n_stages, np.random.default_rng(seed))
    names = noise_names(d)
    stages = []
    for record, noise in zip(trial.stages, draws, strict=True):
        clash = sorted(set(names) & set(record.covariates.columns))
        if clash:
            raise DataValidationError(f"noise columns already present: {clash}")
        covariates = pd.concat(
            [record.covariates, pd.DataFrame(noise, columns=names)], axis=1
        )
        stages.append(StageRecord(a=record.a, covariates=covariates))
    return MultiStageTrial(stages=tuple(stages), y=trial.y, ids=trial.ids)


def _observed(stage: int, history: pd.DataFrame, observed: np.ndarray) -> np.ndarray:
    return observed


def _history(records: Sequence[StageRecord], covariates: pd.DataFrame) -> pd.DataFrame:
    """History at the next stage, before its treatment is known."""
    n = len(covariates)
    pending = StageRecord(a=np.zeros(n), covariates=covariates)
    partial = MultiStageTrial(stages=(*records, pending), y=np.zeros(n))
    return partial.history(len(records) + 1)


class TrialGenerator(ABC):
    """A data-generating design with known blips.

    Args:
        p: Number of signal-design covariates ``x1..xp``.
        noise: Number of extra noise covariates ``z1..zd`` per stage.
    """

    n_stages = 1

    def __init__(self, p: int = 10, noise: int = 0) -> None:
        if p < 2:
            raise ConfigurationError(f"generators need p >= 2, got {p}")
        if noise < 0:
            raise ConfigurationError(f"noise must be non-negative, got {noise}")
        self.p = p
        self.noise = noise

    @property
    def covariate_names(self) -> list[str]:
        """Covariate columns of every stage."""
        return [f"x{j}" for j in range(1, self.p + 1)] + noise_names(self.noise)

    @abstractmethod
    def true_stages(self) -> tuple[BlipModel, ...]:
        """True blip of every stage."""

    @abstractmethod
    def model_specs(self) -> list[ModelSpec]:
        """Analysis model of every stage."""

    @property
    def weight_override(self) -> WeightScheme | None:
        """Weight scheme forced on propensity-weighted estimators, if any."""
        return None

    def oracle_regime(self) -> Regime:
        """Regime that follows the true blips."""
        return Regime(
            stages=self.true_stages(),
            tag=EstimatorTag(method=EstimatorMethod.PDWOLS),
        )

    def signal_terms(self) -> tuple[tuple[str, ...], ...]:
        """Tailoring terms with nonzero true coefficients, per stage."""
        return tuple(model.support() for model in self.true_stages())

    @abstractmethod
    def _draw(self, n: int, rng: np.random.Generator) -> Draws:
        """All random numbers needed for ``n`` patients."""

    @abstractmethod
    def _play(self, draws: Draws, chooser: Chooser) -> SimulatedTrial:
        """Build the trial, assigning treatments with ``chooser``."""

    def _frame(self, x: np.ndarray, draws: Draws, stage: int) -> pd.DataFrame:
        columns = [x]
        if self.noise:
            columns.append(draws["noise"][stage])
        return pd.DataFrame(np.hstack(columns), columns=self.covariate_names)

    def _noise(self, n: int, rng: np.random.Generator) -> Draws:
        if not self.noise:
            return {}
        return {"noise": noise_draws(n, self.noise, self.n_stages, rng)}

    def sample(self, n: int, seed: SeedLike) -> SimulatedTrial:
        """Observational trial of ``n`` patients."""
        if n < 1:
            raise DataValidationError(f"sample size must be positive, got {n}")
        draws = self._draw(n, np.random.default_rng(seed))
        return self._play(draws, _observed)

    def simulate(self, regime: Regime, n: int, seed: SeedLike) -> PolicyOutcome:
        """Patients drawn with ``seed`` and treated at every stage by ``regime``.

        Raises:
            DataValidationError: If the regime has the wrong number of stages.
        """
        if regime.n_stages != self.n_stages:
            raise DataValidationError(
                f"regime has {regime.n_stages} stages, design has {self.n_stages}"
            )
        if n < 1:
            raise DataValidationError(f"sample size must be positive, got {n}")

        def follow(
            stage: int, history: pd.DataFrame, observed: np.ndarray
        ) -> np.ndarray:
            return optimal_action(regime.stage(stage), history).astype(float)

        result = self._play(self._draw(n, np.random.default_rng(seed)), follow)
        actions = np.column_stack([record.a for record in result.trial.stages])
        return PolicyOutcome(
            y=result.trial.y, actions=actions.astype(int), optimal=result.optimal
        )


class OneStageGenerator(TrialGenerator):
    """One decision with blip ``a (1 - 1.5 x1)``.

    Covariates are Gaussian with ``Corr(x_j, x_k) = rho^|j-k|``, treatment follows
    ``expit(1 + x1 + x2)`` (or 0.5 when ``balanced``) and the treatment-free
    part is ``0.5 - 0.6 exp(x1) - 2 x1 - 2 x2``.

    The scenario picks the analysis model. Scenarios 1 and 3 weight everyone
    equally; 2 and 4 fit the true propensity terms. Scenarios 3 and 4 add
    ``exp(x1)`` to the treatment-free and blip terms.
    """

    def __init__(
        self,
        scenario: int = 4,
        p: int = 10,
        rho: float = 0.25,
        balanced: bool = False,
        noise: int = 0,
    ) -> None:
        super().__init__(p=p, noise=noise)
        if scenario not in (1, 2, 3, 4):
            raise ConfigurationError(f"scenario must be 1..4, got {scenario}")
        if not -1.0 < rho < 1.0:
            raise ConfigurationError(f"rho must be in (-1, 1), got {rho}")
        self.scenario = scenario
        self.rho = rho
        self.balanced = balanced

    def true_stages(self) -> tuple[BlipModel, ...]:
        """``psi0 = 1``, ``psi1 = -1.5`` on ``x1``."""
        return (BlipModel(psi0=1.0, psi=(-1.5,), terms=("x1",)),)

    def model_specs(self) -> list[ModelSpec]:
        """Linear terms, with ``exp(x1)`` in scenarios 3 and 4."""
        terms = self.covariate_names
        if self.scenario in (3, 4):
            terms = ["exp(x1)", *terms]
        propensity = (
            ["x1", "x2"] if self.scenario in (2, 4) and not self.balanced else []
        )
        return [
            ModelSpec(
                treatment_free_terms=terms,
                blip_terms=terms,
                propensity_terms=propensity,
            )
        ]

    @property
    def weight_override(self) -> WeightScheme | None:
        """All-ones weights in scenarios 1 and 3."""
        return WeightScheme.ONES if self.scenario in (1, 3) else None

    def _draw(self, n: int, rng: np.random.Generator) -> Draws:
        index = np.arange(self.p)
        covariance = self.rho ** np.abs(np.subtract.outer(index, index))
        return {
            "x": rng.multivariate_normal(
                np.zeros(self.p), covariance, size=n, method="cholesky"
            ),
            "u": rng.uniform(size=n),
            "eps": rng.normal(size=n),
            **self._noise(n, rng),
        }

    def _play(self, draws: Draws, chooser: Chooser) -> SimulatedTrial:
        x = draws["x"]
        n = x.shape[0]
        frame = self._frame(x, draws, 0)
        if self.balanced:
            probability = np.full(n, 0.5)
        else:
            probability = expit(1.0 + x[:, 0] + x[:, 1])
        observed = (draws["u"] < probability).astype(float)
        a = np.asarray(chooser(1, frame, observed), dtype=float)

        contrast = 1.0 - 1.5 * x[:, 0]
        treatment_free = 0.5 - 0.6 * np.exp(x[:, 0]) - 2.0 * x[:, 0] - 2.0 * x[:, 1]
        y = treatment_free + a * contrast + draws["eps"]
        trial = MultiStageTrial(stages=(StageRecord(a=a, covariates=frame),), y=y)
        optimal = (contrast > 0.0).astype(int)[:, np.newaxis]
        return SimulatedTrial(trial=trial, optimal=optimal)


class TwoStageGenerator(TrialGenerator):
    """Two decisions with blips ``a1 (0.8 - 2 x1)`` and ``a2 (1 - 1.5 x1)``.

    Stage-2 covariates are ``0.8 x`` of stage 1 plus standard normal noise, with
    ``0.5 a1`` added to ``x1``. Treatment at both stages follows
    ``expit(x1 - x2)`` of the current covariates. The outcome under optimal
    treatment is ``0.5 + 2 x1 + 2 x2`` of stage 1 and each stage subtracts its
    regret. The analysis model is linear in current-stage covariates.
    """

    n_stages = 2

    def true_stages(self) -> tuple[BlipModel, ...]:
        """``(0.8, -2)`` then ``(1, -1.5)`` on the current ``x1``."""
        return (
            BlipModel(psi0=0.8, psi=(-2.0,), terms=("x1",)),
            BlipModel(psi0=1.0, psi=(-1.5,), terms=("x1",)),
        )

    def model_specs(self) -> list[ModelSpec]:
        """Current-stage covariates everywhere, propensity included."""
        names = self.covariate_names
        spec = ModelSpec(
            treatment_free_terms=names, blip_terms=names, propensity_terms=names
        )
        return [spec, spec]

    def _draw(self, n: int, rng: np.random.Generator) -> Draws:
        return {
            "x1": rng.normal(size=(n, self.p)),
            "e2": rng.normal(size=(n, self.p)),
            "u1": rng.uniform(size=n),
            "u2": rng.uniform(size=n),
            "eps": rng.normal(size=n),
            **self._noise(n, rng),
        }

    def _play(self, draws: Draws, chooser: Chooser) -> SimulatedTrial:
        x1 = draws["x1"]
        frame1 = self._frame(x1, draws, 0)
        observed1 = (draws["u1"] < expit(x1[:, 0] - x1[:, 1])).astype(float)
        a1 = np.asarray(chooser(1, frame1, observed1), dtype=float)
        first = StageRecord(a=a1, covariates=frame1)

        x2 = 0.8 * x1 + draws["e2"]
        x2[:, 0] += 0.5 * a1
        frame2 = self._frame(x2, draws, 1)
        observed2 = (draws["u2"] < expit(x2[:, 0] - x2[:, 1])).astype(float)
        a2 = np.asarray(chooser(2, _history((first,), frame2), observed2), dtype=float)

        contrast1 = 0.8 - 2.0 * x1[:, 0]
        contrast2 = 1.0 - 1.5 * x2[:, 0]
        optimal1 = (contrast1 > 0.0).astype(int)
        optimal2 = (contrast2 > 0.0).astype(int)
        regret1 = (optimal1 - a1) * contrast1
        regret2 = (optimal2 - a2) * contrast2
        y_opt = 0.5 + 2.0 * x1[:, 0] + 2.0 * x1[:, 1]
        y = y_opt - regret1 - regret2 + draws["eps"]

        trial = MultiStageTrial(
            stages=(first, StageRecord(a=a2, covariates=frame2)), y=y
        )
        return SimulatedTrial(
            trial=trial, optimal=np.column_stack([optimal1, optimal2])
        )


def make_generator(config: ScenarioConfig) -> TrialGenerator:
    """Generator described by ``config``."""
    if config.generator is GeneratorKind.ONE_STAGE:
        return OneStageGenerator(
            scenario=config.scenario or 4, p=config.p, noise=config.noise_covariates
        )
    if config.generator is GeneratorKind.HIGH_DIM:
        return OneStageGenerator(
            scenario=2, p=config.p, balanced=True, noise=config.noise_covariates
        )
    return TwoStageGenerator(p=config.p, noise=config.noise_covariates)
