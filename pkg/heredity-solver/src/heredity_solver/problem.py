"""Precomputed working-scale design shared by the solver routines."""

from dataclasses import dataclass

import numpy as np
from stage_data import (
    ConfigurationError,
    DataValidationError,
    DesignBlocks,
    check_weights,
)

from .models import PenaltyMode, PenaltySpec

DENOMINATOR_FLOOR = 1e-12


@dataclass(frozen=True)
class Problem:
    """Centered design columns with weights and cached weighted products."""

    a: np.ndarray
    x: np.ndarray
    xa: np.ndarray
    y: np.ndarray
    w: np.ndarray
    parent: np.ndarray
    child: np.ndarray
    n_effective: int
    wa: np.ndarray
    wx: np.ndarray
    wxa: np.ndarray
    a_sq: float
    x_sq: np.ndarray
    xa_sq: np.ndarray

    @classmethod
    def from_blocks(
        cls, blocks: DesignBlocks, y: np.ndarray, w: np.ndarray
    ) -> "Problem":
        """Validate inputs and cache the weighted columns.

        Raises:
            ConfigurationError: If the blocks were never centered.
            DataValidationError: On shape or weight problems.
        """
        if not blocks.centered:
            raise ConfigurationError("the solver expects weighted-centered blocks")
        weights = check_weights(w, blocks.n)
        response = np.asarray(y, dtype=float)
        if response.shape != (blocks.n,):
            raise DataValidationError("response length does not match the design")

        child = np.full(blocks.p, -1, dtype=int)
        child[blocks.blip_main_index] = np.arange(blocks.q)
        x = np.asfortranarray(blocks.xmain)
        xa = np.asfortranarray(blocks.xa)
        wx = np.asfortranarray(weights[:, None] * x)
        wxa = np.asfortranarray(weights[:, None] * xa)
        wa = weights * blocks.avec
        return cls(
            a=blocks.avec,
            x=x,
            xa=xa,
            y=response,
            w=weights,
            parent=np.asarray(blocks.blip_main_index, dtype=int),
            child=child,
            n_effective=int(np.count_nonzero(weights > 0)),
            wa=wa,
            wx=wx,
            wxa=wxa,
            a_sq=float(wa @ blocks.avec),
            x_sq=np.einsum("ij,ij->j", wx, x),
            xa_sq=np.einsum("ij,ij->j", wxa, xa),
        )

    @property
    def p(self) -> int:
        """Main-effect count."""
        return int(self.x.shape[1])

    @property
    def q(self) -> int:
        """Interaction count."""
        return int(self.xa.shape[1])

    def check_penalty(self, spec: PenaltySpec) -> None:
        """Penalty factor lengths must match the design."""
        if spec.p != self.p or spec.q != self.q:
            raise ConfigurationError(
                f"penalty factors sized for p={spec.p}, q={spec.q}; "
                f"design has p={self.p}, q={self.q}"
            )

    def heredity_psi(
        self, psi0: float, beta: np.ndarray, tau: np.ndarray
    ) -> np.ndarray:
        """Interaction coefficients implied by the heredity parametrization."""
        return psi0 * tau * beta[self.parent]

    def residual(self, psi0: float, beta: np.ndarray, psi: np.ndarray) -> np.ndarray:
        """y minus the working-scale fit."""
        return self.y - psi0 * self.a - self.x @ beta - self.xa @ psi

    def loss(self, r: np.ndarray) -> float:
        """Half the weighted mean squared residual over positive-weight rows."""
        return 0.5 * float(self.w @ (r * r)) / self.n_effective


def objective(
    problem: Problem,
    spec: PenaltySpec,
    psi0: float,
    beta: np.ndarray,
    tau: np.ndarray,
    psi: np.ndarray,
    r: np.ndarray | None = None,
) -> float:
    """Penalized weighted least-squares objective at the given coefficients.

    Args:
        problem: Prepared problem.
        spec: Penalty specification; its mode picks whether tau or psi is
            penalized.
        psi0: Treatment coefficient.
        beta: Main effects.
        tau: Interaction multipliers (heredity mode).
        psi: Interaction coefficients.
        r: Residual at these coefficients, recomputed when omitted.

    Returns:
        Loss plus the elastic split of the weighted L1 penalties.
    """
    if r is None:
        r = problem.residual(psi0, beta, psi)
    main = spec.main_factors
    main_penalty = main[0] * abs(psi0) + float(main[1:] @ np.abs(beta))
    interactions = tau if spec.mode is PenaltyMode.HEREDITY else psi
    interaction_penalty = float(spec.interaction_factors @ np.abs(interactions))
    return (
        problem.loss(r)
        + spec.lambda_ * (1.0 - spec.alpha) * main_penalty
        + spec.lambda_ * spec.alpha * interaction_penalty
    )
