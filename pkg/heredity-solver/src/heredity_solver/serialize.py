"""JSON documents for fits and paths."""

import json
from pathlib import Path
from typing import Any

import numpy as np

from .models import HeredityFit, LambdaPath


def _floats(values: np.ndarray) -> list[float]:
    return [float(v) for v in values]


def fit_to_dict(fit: HeredityFit) -> dict[str, Any]:
    """Fit as a plain dictionary with a fixed key order.

    Args:
        fit: Fit to describe.

    Returns:
        Original-scale and working-scale coefficients, penalty factors and
        solver diagnostics.
    """
    coefficients = fit.original_scale()
    return {
        "lambda": fit.lambda_,
        "alpha": fit.penalty.alpha,
        "mode": fit.mode.value,
        "coefficients": {
            "intercept": coefficients.intercept,
            "a": coefficients.psi0,
            "main": dict(
                zip(coefficients.main_names, _floats(coefficients.beta), strict=True)
            ),
            "blip": dict(
                zip(coefficients.blip_names, _floats(coefficients.psi), strict=True)
            ),
        },
        "working_scale": {
            "psi0": fit.psi0,
            "beta": _floats(fit.beta),
            "tau": _floats(fit.tau),
            "psi": _floats(fit.psi),
        },
        "factors": {
            "main": _floats(fit.penalty.main_factors),
            "interaction": _floats(fit.penalty.interaction_factors),
        },
        "diagnostics": {
            "objective": fit.objective,
            "iterations": fit.iterations,
            "converged": fit.converged,
            "kkt_violation": fit.kkt_violation,
            "n_effective": fit.n_effective,
        },
    }


def path_to_dict(path: LambdaPath) -> dict[str, Any]:
    """Path summary: grid, support sizes and per-fit documents.

    Args:
        path: Fitted lambda path.

    Returns:
        The grid with one :func:`fit_to_dict` document per penalty.
    """
    return {
        "lambda_max": path.lambda_max,
        "lambdas": _floats(path.lambdas),
        "support_sizes": [int(s) for s in path.support_sizes()],
        "fits": [fit_to_dict(fit) for fit in path.fits],
    }


def write_json(document: dict[str, Any], file_path: Path) -> None:
    """Write ``document`` with two-space indentation.

    Args:
        document: JSON-serializable mapping.
        file_path: Target file, overwritten if present.

    Raises:
        OSError: If the file cannot be written.
    """
    with Path(file_path).open("w", encoding="utf-8") as f:
        json.dump(document, f, indent=2)
        f.write("\n")
