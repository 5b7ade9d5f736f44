"""Entry penalty level and subgradient (KKT) checks."""

import logging

import numpy as np
from stage_data import ConfigurationError, DesignBlocks

from .models import HeredityFit, PenaltyMode, PenaltySpec
from .problem import DENOMINATOR_FLOOR, Problem

logger = logging.getLogger(__name__)


def always_active_fit(
    problem: Problem, spec: PenaltySpec
) -> tuple[float, np.ndarray, np.ndarray]:
    """Weighted least squares on the unpenalized columns, everything else zero.

    Returns:
        ``(psi0, beta, psi)`` on the working scale. In heredity mode only psi0
        and beta can be unpenalized linear coefficients, so ``psi`` is zero.
    """
    main = spec.main_factors
    columns: list[np.ndarray] = []
    slots: list[tuple[str, int]] = []
    if main[0] == 0:
        columns.append(problem.a)
        slots.append(("psi0", 0))
    for k in np.flatnonzero(main[1:] == 0):
        columns.append(problem.x[:, k])
        slots.append(("beta", int(k)))
    if spec.mode is PenaltyMode.PLAIN:
        for j in np.flatnonzero(spec.interaction_factors == 0):
            columns.append(problem.xa[:, j])
            slots.append(("psi", int(j)))

    psi0 = 0.0
    beta = np.zeros(problem.p)
    psi = np.zeros(problem.q)
    if not columns:
        return psi0, beta, psi

    root = np.sqrt(problem.w)
    design = np.column_stack(columns)
    solution, *_ = np.linalg.lstsq(design * root[:, None], problem.y * root, rcond=None)
    for (block, index), value in zip(slots, solution, strict=True):
        if block == "psi0":
            psi0 = float(value)
        elif block == "beta":
            beta[index] = value
        else:
            psi[index] = value
    return psi0, beta, psi


def lambda_max_for(
    problem: Problem, spec: PenaltySpec, weighted_screening: bool = True
) -> float:
    """lambda_max on an already prepared problem.

    Args:
        problem: Prepared problem.
        spec: Penalty template; its lambda is ignored.
        weighted_screening: Use the fit weights in the screening gradients.

    Returns:
        The smallest penalty at which every penalized coefficient is zero.

    Raises:
        ConfigurationError: If no coefficient is penalized.
    """
    main = spec.main_factors
    interaction = spec.interaction_factors
    unpenalized_interactions = np.all(interaction == 0)
    if np.all(main == 0) and (
        spec.mode is PenaltyMode.HEREDITY or unpenalized_interactions
    ):
        raise ConfigurationError(
            "all penalty factors are zero; no penalized coefficient defines lambda_max"
        )

    psi0, beta, psi = always_active_fit(problem, spec)
    r = problem.residual(psi0, beta, psi)
    screen_w = problem.w if weighted_screening else np.ones_like(problem.w)
    n = problem.n_effective

    scores = [0.0]
    if main[0] > 0:
        score = abs(float((screen_w * problem.a) @ r)) / main[0]
        scores.append(score / (1.0 - spec.alpha))
    penalized = np.flatnonzero(main[1:] > 0)
    if penalized.size:
        inner = np.abs((screen_w * r) @ problem.x[:, penalized])
        scores.append(float(np.max(inner / main[1:][penalized])) / (1.0 - spec.alpha))

    if spec.mode is PenaltyMode.PLAIN:
        covariates = problem.xa
        eligible = np.flatnonzero(interaction > 0)
    else:
        # interactions can only enter where both parents stay active
        gain = psi0 * beta[problem.parent]
        covariates = problem.xa * gain
        live = np.abs(gain) > DENOMINATOR_FLOOR
        eligible = np.flatnonzero((interaction > 0) & live)
    if eligible.size:
        inner = np.abs((screen_w * r) @ covariates[:, eligible])
        scores.append(float(np.max(inner / interaction[eligible])) / spec.alpha)

    always_active = int(main[0] == 0) + int(np.count_nonzero(main[1:] == 0))
    logger.debug(
        "lambda_max screening with %d always-active main effects", always_active
    )
    return max(scores) / n


def lambda_max(
    blocks: DesignBlocks,
    y: np.ndarray,
    w: np.ndarray,
    alpha: float,
    main_factors: np.ndarray,
    interaction_factors: np.ndarray,
    mode: PenaltyMode = PenaltyMode.HEREDITY,
    weighted_screening: bool = True,
) -> float:
    """Smallest penalty at which every penalized coefficient is zero.

    Scores are evaluated at the model where only unpenalized (factor 0)
    coefficients are active, each divided by its penalty factor.

    Args:
        blocks: Centered design.
        y: Centered response.
        w: Observation weights.
        alpha: Interaction share of the penalty.
        main_factors: p + 1 factors, psi0 first.
        interaction_factors: q interaction factors.
        mode: Heredity or plain parametrization.
        weighted_screening: Use the weights in the screening inner products.

    Raises:
        ConfigurationError: If no coefficient is penalized.
    """
    problem = Problem.from_blocks(blocks, y, w)
    spec = PenaltySpec(
        lambda_=0.0,
        alpha=alpha,
        main_factors=main_factors,
        interaction_factors=interaction_factors,
        mode=mode,
    )
    problem.check_penalty(spec)
    return lambda_max_for(problem, spec, weighted_screening)


def _violation(gradient: float, coefficient: float, level: float) -> float:
    if coefficient != 0.0:
        return abs(gradient + level * np.sign(coefficient))
    return max(abs(gradient) - level, 0.0)


def max_kkt_violation(problem: Problem, fit: HeredityFit, spec: PenaltySpec) -> float:
    """Subgradient violation on an already prepared problem.

    Args:
        problem: Prepared problem the fit was computed on.
        fit: Fitted coefficients.
        spec: Penalty to check against.

    Returns:
        The largest distance of a gradient from its subdifferential bound.
    """
    n = problem.n_effective
    r = problem.residual(fit.psi0, fit.beta, fit.psi)
    wr = problem.w * r
    main_level = spec.lambda_ * (1.0 - spec.alpha) * spec.main_factors
    interaction_level = spec.lambda_ * spec.alpha * spec.interaction_factors
    violations = []

    if spec.mode is PenaltyMode.PLAIN:
        violations.append(_violation(-(wr @ problem.a) / n, fit.psi0, main_level[0]))
        grad_beta = -(wr @ problem.x) / n
        grad_psi = -(wr @ problem.xa) / n
        violations.extend(
            _violation(g, b, lev)
            for g, b, lev in zip(grad_beta, fit.beta, main_level[1:], strict=True)
        )
        violations.extend(
            _violation(g, c, lev)
            for g, c, lev in zip(grad_psi, fit.psi, interaction_level, strict=True)
        )
        return max(violations)

    gamma = fit.tau * fit.beta[problem.parent]
    u = problem.a + problem.xa @ gamma
    violations.append(_violation(-(wr @ u) / n, fit.psi0, main_level[0]))

    xa_r = wr @ problem.xa
    x_r = wr @ problem.x
    for k in range(problem.p):
        j = problem.child[k]
        inner = x_r[k] + (fit.tau[j] * fit.psi0 * xa_r[j] if j >= 0 else 0.0)
        violations.append(_violation(-inner / n, fit.beta[k], main_level[k + 1]))
    for j in range(problem.q):
        gain = fit.psi0 * fit.beta[problem.parent[j]]
        if abs(gain) < DENOMINATOR_FLOOR:
            continue
        violations.append(
            _violation(-gain * xa_r[j] / n, fit.tau[j], interaction_level[j])
        )
    return max(violations)


def kkt_check(
    fit: HeredityFit,
    blocks: DesignBlocks,
    y: np.ndarray,
    w: np.ndarray,
    spec: PenaltySpec | None = None,
) -> float:
    """Largest violation of the subgradient conditions at ``fit``.

    Heredity mode checks the (psi0, beta, tau) system; tau_j is exempt where
    psi0 * beta_j is zero.

    Args:
        fit: Fitted coefficients on the working scale of ``blocks``.
        blocks: Prepared design blocks.
        y: Centered response.
        w: Nonnegative weights with positive sum.
        spec: Penalty to check against. Defaults to the fit's own penalty.

    Returns:
        The largest violation; zero at an exact stationary point.

    Raises:
        ConfigurationError: If the penalty does not match the design.
    """
    problem = Problem.from_blocks(blocks, y, w)
    penalty = spec if spec is not None else fit.penalty
    problem.check_penalty(penalty)
    return max_kkt_violation(problem, fit, penalty)
