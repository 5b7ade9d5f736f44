"""Reading model specifications and weight files, and shaping fit documents."""

import json
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from pathlib import Path
from typing import Any

import numpy as np
import yaml
from dtr_engine import RegimeFit, StageFit
from model_selection import cv_to_dict
from stage_data import DataValidationError, ModelSpec
from stage_data.loader import read_csv

DOCUMENT_SUFFIXES = (".toml", ".yaml", ".yml", ".json")
WEIGHT_COLUMN = "w"


def read_document(path: Path) -> Any:
    """Parse a TOML, YAML or JSON file, chosen by suffix.

    Raises:
        DataValidationError: If the format is unknown or the file cannot be read.
    """
    path = Path(path)
    suffix = path.suffix.lower()
    if suffix not in DOCUMENT_SUFFIXES:
        raise DataValidationError(f"unsupported file format '{suffix}' for {path}")
    try:
        text = path.read_text(encoding="utf-8")
        if suffix == ".toml":
            return tomllib.loads(text)
        if suffix == ".json":
            return json.loads(text)
        return yaml.safe_load(text) or {}
    except (OSError, tomllib.TOMLDecodeError, yaml.YAMLError, ValueError) as e:
        raise DataValidationError(f"cannot read {path}: {e}") from e


def load_model_specs(path: Path) -> list[ModelSpec]:
    """Model specifications of every stage, stage 1 first.

    A file holds either one specification or a ``stages`` list of them.

    Raises:
        DataValidationError: If the file cannot be parsed.
        pydantic.ValidationError: If a specification is invalid.
    """
    document = read_document(path)
    if not isinstance(document, dict):
        raise DataValidationError(f"{path}: expected a mapping at the top level")
    if "stages" in document:
        stages = document["stages"]
        if not isinstance(stages, list) or not stages:
            raise DataValidationError(f"{path}: 'stages' must be a non-empty list")
        return [ModelSpec.model_validate(stage) for stage in stages]
    return [ModelSpec.model_validate(document)]


def read_weights(path: Path) -> np.ndarray:
    """Weight vector from a CSV with a ``w`` column or a single column."""
    frame = read_csv(Path(path))
    if WEIGHT_COLUMN in frame.columns:
        column = frame[WEIGHT_COLUMN]
    elif frame.shape[1] == 1:
        column = frame.iloc[:, 0]
    else:
        raise DataValidationError(
            f"{path}: expected a '{WEIGHT_COLUMN}' column or a single column"
        )
    try:
        return column.to_numpy(dtype=float)
    except ValueError as e:
        raise DataValidationError(f"{path}: weights must be numeric") from e


def stage_document(stage_fit: StageFit) -> dict[str, Any]:
    """Penalized solution, selection record and coefficients of one stage."""
    fit = stage_fit.fit
    cv = stage_fit.cv
    return {
        "stage": stage_fit.stage,
        "lambda": float(fit.lambda_),
        "mode": fit.mode.value,
        "alpha": fit.penalty.alpha,
        "objective": float(fit.objective),
        "iterations": int(fit.iterations),
        "converged": bool(fit.converged),
        "kkt_violation": float(fit.kkt_violation),
        "n_effective": int(fit.n_effective),
        "selection": (
            {"tuned": False}
            if cv is None
            else {
                "tuned": True,
                "rule": cv.rule.value,
                "lambda_min": cv.lambda_min,
                "lambda_1se": cv.lambda_1se,
                "lambda_max": cv.lambda_max,
            }
        ),
        "weights": stage_fit.weights.source.value,
        "propensity": (
            stage_fit.propensity.as_dict() if stage_fit.propensity is not None else None
        ),
        "penalized": stage_fit.penalized.as_rows(),
        "refitted": (
            stage_fit.refitted.as_rows() if stage_fit.refitted is not None else None
        ),
        "blip": stage_fit.model.coefficient_map(),
    }


def fit_document(result: RegimeFit) -> dict[str, Any]:
    """Estimator tag and per-stage documents of a fit."""
    return {
        "tag": result.regime.tag.model_dump(mode="json"),
        "stages": [stage_document(stage_fit) for stage_fit in result.stage_fits],
    }


def cv_documents(result: RegimeFit) -> list[dict[str, Any]]:
    """Cross-validation curves of the tuned stages."""
    return [
        {"stage": stage_fit.stage, **cv_to_dict(stage_fit.cv)}
        for stage_fit in result.stage_fits
        if stage_fit.cv is not None
    ]
