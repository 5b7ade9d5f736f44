"""JSON and CSV exports of cross-validation curves."""

import csv
import json
from pathlib import Path
from typing import Any

from .models import CvResult


def cv_to_dict(cv: CvResult) -> dict[str, Any]:
    """Curve, selection and fold layout as a plain dictionary."""
    return {
        "alpha": cv.alpha,
        "mode": cv.mode.value,
        "k": cv.k,
        "rule": cv.rule.value,
        "lambda_max": cv.lambda_max,
        "lambda_min": cv.lambda_min,
        "lambda_1se": cv.lambda_1se,
        "selected_lambda": cv.selected_lambda,
        "curve": [
            {"lambda": float(lam), "cv_mean": float(mean), "cv_se": float(se)}
            for lam, mean, se in zip(cv.lambdas, cv.cv_mean, cv.cv_se, strict=True)
        ],
        "fold_assignments": [int(f) for f in cv.fold_assignments],
    }


def export_cv_json(cv: CvResult, file_path: Path) -> bool:
    """Write the curve document to JSON.

    Args:
        cv: Cross-validation result.
        file_path: Target file.

    Returns:
        True on success, False if the file could not be written.
    """
    try:
        with Path(file_path).open("w", encoding="utf-8") as f:
            json.dump(cv_to_dict(cv), f, indent=2)
    except (OSError, ValueError):
        return False
    else:
        return True


def export_cv_csv(cv: CvResult, file_path: Path) -> bool:
    """Write one row per lambda with round-trippable floats.

    Args:
        cv: Cross-validation result.
        file_path: Target file.

    Returns:
        True on success, False if the file could not be written.
    """
    fieldnames = ["lambda", "cv_mean", "cv_se", "is_min", "is_1se"]
    try:
        with Path(file_path).open("w", newline="", encoding="utf-8") as csvfile:
            writer = csv.DictWriter(csvfile, fieldnames=fieldnames)
            writer.writeheader()
            for lam, mean, se in zip(cv.lambdas, cv.cv_mean, cv.cv_se, strict=True):
                writer.writerow(
                    {
                        "lambda": repr(float(lam)),
                        "cv_mean": repr(float(mean)),
                        "cv_se": repr(float(se)),
                        "is_min": float(lam) == cv.lambda_min,
                        "is_1se": float(lam) == cv.lambda_1se,
                    }
                )
    except (OSError, ValueError):
        return False
    else:
        return True
