"""Blockwise coordinate descent and warm-started regularization paths."""

import logging
from dataclasses import replace

import numpy as np
from stage_data import ConfigurationError, DesignBlocks, NumericalError

from .models import (
    HeredityFit,
    LambdaPath,
    PenaltyMode,
    PenaltySpec,
    SolverControl,
)
from .problem import DENOMINATOR_FLOOR, Problem, objective
from .screening import always_active_fit, lambda_max_for, max_kkt_violation

logger = logging.getLogger(__name__)

# ties at the threshold resolve to zero
THRESHOLD_SLACK = 1e-12
LAMBDA_FLOOR = 1e-10


def soft_threshold(x: float | np.ndarray, u: float) -> float | np.ndarray:
    """``sign(x) * max(|x| - u, 0)``.

    Raises:
        ConfigurationError: If ``u`` is negative.
    """
    if u < 0:
        raise ConfigurationError(f"threshold must be nonnegative, got {u}")
    result = np.sign(x) * np.maximum(np.abs(x) - u, 0.0)
    return float(result) if np.ndim(result) == 0 else result


def _shrink(z: float, threshold: float) -> float:
    bound = threshold * (1.0 + THRESHOLD_SLACK)
    if z > bound:
        return z - threshold
    if z < -bound:
        return z + threshold
    return 0.0


class _CoordinateDescent:
    """Mutable iterate for one coordinate descent run."""

    def __init__(
        self,
        problem: Problem,
        spec: PenaltySpec,
        control: SolverControl,
        psi0: float,
        beta: np.ndarray,
        interactions: np.ndarray,
    ) -> None:
        self.problem = problem
        self.spec = spec
        self.control = control
        n = problem.n_effective
        self.main_threshold = n * spec.lambda_ * (1.0 - spec.alpha) * spec.main_factors
        self.interaction_threshold = (
            n * spec.lambda_ * spec.alpha * spec.interaction_factors
        )
        self.heredity = spec.mode is PenaltyMode.HEREDITY
        self.psi0 = float(psi0)
        self.beta = np.array(beta, dtype=float)
        # tau in heredity mode, psi in plain mode
        self.inter = np.array(interactions, dtype=float)
        self.r = problem.residual(self.psi0, self.beta, self.psi)
        self.trace: list[float] = []

    @property
    def psi(self) -> np.ndarray:
        """Current interaction coefficients."""
        if self.heredity:
            return self.problem.heredity_psi(self.psi0, self.beta, self.inter)
        return self.inter.copy()

    @property
    def tau(self) -> np.ndarray:
        """Current tau (zero in plain mode)."""
        return self.inter.copy() if self.heredity else np.zeros(self.problem.q)

    def current_objective(self) -> float:
        """Objective at the current iterate."""
        return objective(
            self.problem, self.spec, self.psi0, self.beta, self.tau, self.psi, self.r
        )

    def _record(self) -> None:
        if self.control.record_trace:
            self.trace.append(self.current_objective())

    def _update(
        self,
        old: float,
        covariate: np.ndarray,
        weighted: np.ndarray,
        denominator: float,
        threshold: float,
    ) -> float:
        if denominator < DENOMINATOR_FLOOR:
            new = 0.0
        else:
            z = float(weighted @ self.r) + old * denominator
            new = _shrink(z, threshold) / denominator
        if new != old:
            self.r -= (new - old) * covariate
        return new

    def _psi0_step(self) -> float:
        pb = self.problem
        old = self.psi0
        if self.heredity:
            gamma = self.inter * self.beta[pb.parent]
            active = np.flatnonzero(gamma)
        else:
            active = np.empty(0, dtype=int)
        if active.size:
            u = pb.a + pb.xa[:, active] @ gamma[active]
            wu = pb.w * u
            self.psi0 = self._update(old, u, wu, float(wu @ u), self.main_threshold[0])
        else:
            self.psi0 = self._update(old, pb.a, pb.wa, pb.a_sq, self.main_threshold[0])
        return abs(self.psi0 - old)

    def _beta_sweep(self, mains: np.ndarray) -> float:
        pb = self.problem
        change = 0.0
        for k in mains:
            old = self.beta[k]
            j = pb.child[k]
            coef = self.inter[j] * self.psi0 if (self.heredity and j >= 0) else 0.0
            if coef != 0.0:
                v = pb.x[:, k] + coef * pb.xa[:, j]
                wv = pb.w * v
                denominator = float(wv @ v)
            else:
                v, wv, denominator = pb.x[:, k], pb.wx[:, k], pb.x_sq[k]
            new = self._update(old, v, wv, denominator, self.main_threshold[k + 1])
            self.beta[k] = new
            change = max(change, abs(new - old))
        return change

    def _interaction_sweep(self, inters: np.ndarray) -> float:
        pb = self.problem
        change = 0.0
        for j in inters:
            old = self.inter[j]
            threshold = self.interaction_threshold[j]
            if not self.heredity:
                new = self._update(
                    old, pb.xa[:, j], pb.wxa[:, j], pb.xa_sq[j], threshold
                )
            else:
                gain = self.psi0 * self.beta[pb.parent[j]]
                if abs(gain) < DENOMINATOR_FLOOR or pb.xa_sq[j] < DENOMINATOR_FLOOR:
                    new = 0.0
                    if old != 0.0:
                        self.r += old * gain * pb.xa[:, j]
                else:
                    denominator = gain * gain * pb.xa_sq[j]
                    z = gain * float(pb.wxa[:, j] @ self.r) + old * denominator
                    new = _shrink(z, threshold) / denominator
                    if new != old:
                        self.r -= (new - old) * gain * pb.xa[:, j]
            self.inter[j] = new
            change = max(change, abs(new - old))
        return change

    def sweep(self, mains: np.ndarray, inters: np.ndarray) -> float:
        """psi0 step, then the beta sweep, then the interaction sweep."""
        change = self._psi0_step()
        self._record()
        change = max(change, self._beta_sweep(mains))
        self._record()
        change = max(change, self._interaction_sweep(inters))
        self._record()
        return change

    def run(self) -> tuple[int, bool]:
        """Iterate to convergence, cycling over the active set between full sweeps."""
        pb = self.problem
        all_mains = np.arange(pb.p)
        all_inters = np.arange(pb.q)
        self._record()
        iterations = 0
        full = True
        while iterations < self.control.max_iter:
            if full:
                self.r = pb.residual(self.psi0, self.beta, self.psi)
                if not np.all(np.isfinite(self.r)):
                    raise NumericalError(
                        "non-finite residuals in coordinate descent; "
                        "check for unscaled or degenerate columns"
                    )
                mains, inters = all_mains, all_inters
            else:
                mains = np.flatnonzero(self.beta)
                inters = np.flatnonzero(self.inter)
            change = self.sweep(mains, inters)
            iterations += 1
            if change < self.control.tol:
                if full:
                    return iterations, True
                full = True
            else:
                full = False
        return iterations, False


def _initial_values(
    problem: Problem, spec: PenaltySpec, init: HeredityFit | None
) -> tuple[float, np.ndarray, np.ndarray]:
    if init is None:
        psi0, beta, psi = always_active_fit(problem, spec)
        if spec.mode is PenaltyMode.HEREDITY:
            return psi0, beta, np.zeros(problem.q)
        return psi0, beta, psi
    if spec.mode is PenaltyMode.PLAIN:
        return init.psi0, init.beta, init.psi
    if init.mode is PenaltyMode.HEREDITY:
        return init.psi0, init.beta, init.tau
    gain = init.psi0 * init.beta[problem.parent]
    safe = np.where(np.abs(gain) > DENOMINATOR_FLOOR, gain, 1.0)
    tau = np.where(np.abs(gain) > DENOMINATOR_FLOOR, init.psi / safe, 0.0)
    return init.psi0, init.beta, tau


def _random_start(
    problem: Problem, rng: np.random.Generator
) -> tuple[float, np.ndarray, np.ndarray]:
    return float(rng.normal()), rng.normal(size=problem.p), rng.normal(size=problem.q)


def _solve(
    problem: Problem,
    blocks: DesignBlocks,
    spec: PenaltySpec,
    init: HeredityFit | None,
    control: SolverControl,
) -> HeredityFit:
    starts = [_initial_values(problem, spec, init)]
    rng = np.random.default_rng(control.seed)
    starts.extend(_random_start(problem, rng) for _ in range(control.n_starts - 1))

    best: tuple[float, _CoordinateDescent, int, bool] | None = None
    for psi0, beta, inter in starts:
        state = _CoordinateDescent(problem, spec, control, psi0, beta, inter)
        iterations, converged = state.run()
        value = state.current_objective()
        if not np.isfinite(value):
            raise NumericalError("coordinate descent produced a non-finite objective")
        if best is None or value < best[0]:
            best = (value, state, iterations, converged)

    assert best is not None
    value, state, iterations, converged = best
    if not converged:
        logger.warning(
            "Coordinate descent stopped after %d iterations at lambda=%.4g without "
            "converging",
            iterations,
            spec.lambda_,
        )
    fit = HeredityFit(
        psi0=state.psi0,
        beta=state.beta.copy(),
        tau=state.tau,
        psi=state.psi,
        penalty=spec,
        objective=value,
        iterations=iterations,
        converged=converged,
        kkt_violation=0.0,
        n_effective=problem.n_effective,
        scale=blocks.scale_record,
        trace=tuple(state.trace),
    )
    return replace(fit, kkt_violation=max_kkt_violation(problem, fit, spec))


def cd_fit(
    blocks: DesignBlocks,
    y: np.ndarray,
    w: np.ndarray,
    spec: PenaltySpec,
    init: HeredityFit | None = None,
    control: SolverControl | None = None,
) -> HeredityFit:
    """Minimize the penalized weighted least-squares objective at one penalty.

    Args:
        blocks: Centered (optionally standardized) design.
        y: Centered response.
        w: Observation weights; rows with zero weight do not count toward n.
        spec: Penalty level, factors and mode.
        init: Warm start. Without one the descent starts from the fit of the
            unpenalized columns alone.
        control: Tolerance, iteration cap and multi-start options.

    Returns:
        The best fit over all starts, with its KKT violation.

    Raises:
        NumericalError: If the objective becomes non-finite.
    """
    problem = Problem.from_blocks(blocks, y, w)
    problem.check_penalty(spec)
    return _solve(problem, blocks, spec, init, control or SolverControl())


def default_min_ratio(n: int, p: int) -> float:
    """Smallest-to-largest penalty ratio for a path."""
    return 1e-3 if n > p else 5e-2


def lambda_grid(lambda_max_value: float, n_lambda: int, min_ratio: float) -> np.ndarray:
    """Log-spaced penalties from ``lambda_max_value`` down to ``min_ratio`` times it.

    Args:
        lambda_max_value: First (largest) penalty.
        n_lambda: Number of penalties, at least 2.
        min_ratio: Ratio of the last penalty to the first, in (0, 1).

    Returns:
        The decreasing penalty sequence.

    Raises:
        ConfigurationError: On an invalid count or ratio.
    """
    if n_lambda < 2:
        raise ConfigurationError("n_lambda must be at least 2")
    if not 0.0 < min_ratio < 1.0:
        raise ConfigurationError("min_ratio must lie in (0, 1)")
    exponents = np.arange(n_lambda) / (n_lambda - 1)
    return lambda_max_value * min_ratio**exponents


def fit_path(
    blocks: DesignBlocks,
    y: np.ndarray,
    w: np.ndarray,
    alpha: float,
    main_factors: np.ndarray,
    interaction_factors: np.ndarray,
    mode: PenaltyMode = PenaltyMode.HEREDITY,
    n_lambda: int = 100,
    min_ratio: float | None = None,
    lambdas: np.ndarray | None = None,
    control: SolverControl | None = None,
    weighted_screening: bool = True,
) -> LambdaPath:
    """Warm-started fits over a decreasing penalty sequence.

    The sequence runs from lambda_max down to ``min_ratio * lambda_max`` on a
    log scale unless explicit ``lambdas`` are supplied.

    Args:
        blocks: Prepared design blocks.
        y: Centered response.
        w: Nonnegative weights with positive sum.
        alpha: Share of the penalty placed on the interactions.
        main_factors: Factors for psi0 followed by the main effects.
        interaction_factors: One factor per interaction.
        mode: Heredity or plain penalty.
        n_lambda: Grid size when ``lambdas`` is omitted.
        min_ratio: Grid end ratio. Defaults to :func:`default_min_ratio`.
        lambdas: Explicit nonnegative penalty sequence.
        control: Solver settings shared by every fit.
        weighted_screening: Use the fit weights when computing lambda_max.

    Returns:
        The path with one fit per penalty.

    Raises:
        ConfigurationError: On an invalid grid or penalty.
    """
    problem = Problem.from_blocks(blocks, y, w)
    template = PenaltySpec(
        lambda_=0.0,
        alpha=alpha,
        main_factors=main_factors,
        interaction_factors=interaction_factors,
        mode=mode,
    )
    problem.check_penalty(template)
    top = lambda_max_for(problem, template, weighted_screening)

    if lambdas is None:
        start = top
        if start < LAMBDA_FLOOR:
            logger.warning(
                "lambda_max is numerically zero; starting the path at %g", LAMBDA_FLOOR
            )
            start = LAMBDA_FLOOR
        ratio = (
            min_ratio
            if min_ratio is not None
            else default_min_ratio(problem.n_effective, problem.p)
        )
        grid = lambda_grid(start, n_lambda, ratio)
    else:
        grid = np.asarray(lambdas, dtype=float)
        if grid.ndim != 1 or grid.size < 1 or np.any(grid < 0):
            raise ConfigurationError("lambdas must be a nonempty nonnegative sequence")

    settings = control or SolverControl()
    fits: list[HeredityFit] = []
    previous: HeredityFit | None = None
    for value in grid:
        spec = template.with_lambda(value)
        previous = _solve(problem, blocks, spec, previous, settings)
        fits.append(previous)
    return LambdaPath(lambdas=grid, fits=tuple(fits), lambda_max=top)
