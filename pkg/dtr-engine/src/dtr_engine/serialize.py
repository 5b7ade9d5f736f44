"""JSON and CSV documents for regimes, stage fits and decisions."""

import csv
import json
from pathlib import Path
from typing import Any

import pandas as pd
from pydantic import ValidationError
from stage_data import DataValidationError

from .models import Regime, RegimeFit


def export_regime_json(regime: Regime, file_path: Path) -> bool:
    """Write a regime document; returns False when the file cannot be written."""
    try:
        with Path(file_path).open("w", encoding="utf-8") as f:
            json.dump(regime.to_dict(), f, indent=2)
    except (OSError, ValueError):
        return False
    else:
        return True


def load_regime(file_path: Path) -> Regime:
    """Read a regime written by :func:`export_regime_json`.

    Raises:
        DataValidationError: If the file is missing, not JSON, or not a regime.
    """
    try:
        with Path(file_path).open(encoding="utf-8") as f:
            document = json.load(f)
        return Regime.from_dict(document)
    except (OSError, json.JSONDecodeError, ValidationError) as e:
        raise DataValidationError(f"cannot read regime from {file_path}: {e}") from e


def stage_fit_rows(result: RegimeFit) -> list[dict[str, Any]]:
    """Original-scale coefficient table of every stage, penalized and refitted."""
    rows: list[dict[str, Any]] = []
    for stage_fit in result.stage_fits:
        versions = [("penalized", stage_fit.penalized)]
        if stage_fit.refitted is not None:
            versions.append(("refitted", stage_fit.refitted))
        for version, coefficients in versions:
            for row in coefficients.as_rows():
                rows.append(
                    {
                        "stage": stage_fit.stage,
                        "version": version,
                        "lambda": stage_fit.lambda_,
                        **row,
                    }
                )
    return rows


def export_rows_csv(rows: list[dict[str, Any]], file_path: Path) -> bool:
    """Write dict rows with round-trippable floats."""
    if not rows:
        return False
    try:
        with Path(file_path).open("w", newline="", encoding="utf-8") as csvfile:
            writer = csv.DictWriter(csvfile, fieldnames=list(rows[0]))
            writer.writeheader()
            for row in rows:
                writer.writerow(
                    {
                        key: repr(value) if isinstance(value, float) else value
                        for key, value in row.items()
                    }
                )
    except (OSError, ValueError):
        return False
    else:
        return True


def export_decisions_csv(table: pd.DataFrame, file_path: Path) -> bool:
    """Write a decision table from :func:`~dtr_engine.decisions.decision_table`."""
    return export_rows_csv(
        [
            {
                key: value.item() if hasattr(value, "item") else value
                for key, value in record.items()
            }
            for record in table.to_dict(orient="records")
        ],
        file_path,
    )
