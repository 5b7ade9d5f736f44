"""CSV ingestion for single-stage, per-stage and long-format trial files."""

import logging
from collections.abc import Sequence
from pathlib import Path
from typing import Any

import numpy as np
import pandas as pd

from .errors import DataValidationError
from .models import MultiStageTrial, StageDataset, StageRecord

logger = logging.getLogger(__name__)

OUTCOME_COLUMN = "y"
TREATMENT_COLUMN = "a"


def read_csv(path: Path) -> pd.DataFrame:
    """Read a CSV file with a header row.

    Args:
        path: CSV file.

    Returns:
        The parsed frame.

    Raises:
        DataValidationError: If the file is missing, empty or unparseable.
    """
    if not path.exists():
        raise DataValidationError(f"Data file not found: {path}")
    try:
        frame = pd.read_csv(path)
    except (pd.errors.EmptyDataError, pd.errors.ParserError, UnicodeDecodeError) as e:
        raise DataValidationError(f"Cannot parse {path}: {e}") from e
    if frame.empty:
        raise DataValidationError(f"{path} contains no rows")
    return frame


def encode_treatment(
    values: Sequence[Any] | pd.Series, reference: Any = None
) -> tuple[np.ndarray, dict[str, int]]:
    """Map a two-level treatment coding onto 0/1.

    Args:
        values: Observed treatment values.
        reference: Level to code as 0. Defaults to the smallest level.

    Returns:
        The 0/1 vector and the mapping that produced it.

    Raises:
        DataValidationError: If there are missing values or more than two levels.
    """
    series = pd.Series(values)
    if series.isna().any():
        raise DataValidationError("treatment column contains missing values")
    levels = sorted(series.unique().tolist(), key=lambda v: (str(type(v)), v))
    if len(levels) > 2:
        raise DataValidationError(
            f"treatment must have at most two levels, found {len(levels)}: {levels}"
        )
    if set(levels) <= {0, 1}:
        mapping = {str(level): int(level) for level in levels}
        return series.to_numpy(dtype=float), mapping

    if reference is not None:
        if reference not in levels:
            raise DataValidationError(f"reference level {reference!r} not observed")
        levels = [reference] + [level for level in levels if level != reference]
    if len(levels) == 1:
        raise DataValidationError(
            f"cannot infer a 0/1 coding from the single level {levels[0]!r}"
        )
    mapping = {str(level): code for code, level in enumerate(levels)}
    logger.info("Recoded treatment levels: %s", mapping)
    return series.map({level: code for code, level in enumerate(levels)}).to_numpy(
        dtype=float
    ), mapping


def _split_columns(
    frame: pd.DataFrame, drop: Sequence[str], path: Path
) -> pd.DataFrame:
    covariates = frame.drop(columns=[c for c in drop if c in frame.columns])
    if covariates.isna().to_numpy().any():
        missing = covariates.columns[covariates.isna().any()].tolist()
        raise DataValidationError(f"{path}: missing values in columns {missing}")
    non_numeric = [
        c
        for c in covariates.columns
        if not pd.api.types.is_numeric_dtype(covariates[c])
    ]
    if non_numeric:
        raise DataValidationError(
            f"{path}: non-numeric covariates {non_numeric}; supply dummy columns"
        )
    return covariates.astype(float)


def load_stage_dataset(
    path: Path,
    outcome: str = OUTCOME_COLUMN,
    treatment: str = TREATMENT_COLUMN,
) -> StageDataset:
    """Load a one-stage CSV with outcome, treatment and covariate columns.

    Args:
        path: CSV file.
        outcome: Name of the outcome column.
        treatment: Name of the two-level treatment column.

    Returns:
        The stage dataset; every remaining column is a covariate.

    Raises:
        DataValidationError: If a required column is absent or the outcome has
            missing values.
    """
    frame = read_csv(path)
    for column in (outcome, treatment):
        if column not in frame.columns:
            raise DataValidationError(f"{path}: required column '{column}' not found")
    if frame[outcome].isna().any():
        raise DataValidationError(f"{path}: outcome column contains missing values")
    a, _ = encode_treatment(frame[treatment])
    covariates = _split_columns(frame, [outcome, treatment], path)
    return StageDataset(
        y=frame[outcome].to_numpy(dtype=float), a=a, covariates=covariates
    )


def load_trial(
    paths: Sequence[Path],
    id_column: str | None = None,
    outcome: str = OUTCOME_COLUMN,
    treatment: str = TREATMENT_COLUMN,
) -> MultiStageTrial:
    """Load a multi-stage trial from one CSV per stage.

    The outcome column is read from the final stage file. When ``id_column`` is
    given, rows of every stage are aligned to the order of the first stage.

    Args:
        paths: Stage files in stage order.
        id_column: Optional patient identifier column present in every file.
        outcome: Name of the outcome column of the final stage.
        treatment: Name of the treatment column of each stage.

    Returns:
        The trial with one record per stage.

    Raises:
        DataValidationError: If files disagree on patients or a required column
            is missing.
    """
    if not paths:
        raise DataValidationError("at least one stage file is required")
    frames = [read_csv(path) for path in paths]
    final = frames[-1]
    if outcome not in final.columns:
        raise DataValidationError(
            f"{paths[-1]}: final stage must contain outcome column '{outcome}'"
        )

    ids: tuple[str, ...] = ()
    if id_column is not None:
        for path, frame in zip(paths, frames, strict=True):
            if id_column not in frame.columns:
                raise DataValidationError(f"{path}: id column '{id_column}' not found")
            if frame[id_column].duplicated().any():
                raise DataValidationError(f"{path}: duplicated ids in '{id_column}'")
        order = frames[0][id_column]
        aligned = []
        for path, frame in zip(paths, frames, strict=True):
            indexed = frame.set_index(id_column)
            if set(indexed.index) != set(order):
                raise DataValidationError(f"{path}: ids do not match the first stage")
            aligned.append(indexed.loc[order].reset_index())
        frames = aligned
        ids = tuple(str(v) for v in order)

    stages = []
    for path, frame in zip(paths, frames, strict=True):
        if treatment not in frame.columns:
            raise DataValidationError(
                f"{path}: required column '{treatment}' not found"
            )
        a, _ = encode_treatment(frame[treatment])
        drop = [outcome, treatment] + ([id_column] if id_column else [])
        stages.append(StageRecord(a=a, covariates=_split_columns(frame, drop, path)))

    y = frames[-1][outcome]
    if y.isna().any():
        raise DataValidationError(
            f"{paths[-1]}: outcome column contains missing values"
        )
    return MultiStageTrial(stages=tuple(stages), y=y.to_numpy(dtype=float), ids=ids)


def load_long_trial(
    path: Path,
    stage_column: str = "stage",
    id_column: str = "id",
    outcome: str = OUTCOME_COLUMN,
    treatment: str = TREATMENT_COLUMN,
) -> MultiStageTrial:
    """Load a long-format trial with one row per patient and stage.

    Stages are ordered by the sorted values of ``stage_column``. Covariates
    that are entirely missing within a stage are not part of that stage.

    Args:
        path: CSV file.
        stage_column: Column holding the stage label.
        id_column: Patient identifier column.
        outcome: Name of the outcome column, read from the final stage.
        treatment: Name of the treatment column.

    Returns:
        The trial with one record per stage, rows ordered by patient id.

    Raises:
        DataValidationError: If a stage lacks a patient or the final outcome is
            missing.
    """
    frame = read_csv(path)
    for column in (stage_column, id_column, treatment):
        if column not in frame.columns:
            raise DataValidationError(f"{path}: required column '{column}' not found")

    stage_values = sorted(frame[stage_column].unique().tolist())
    order = (
        frame.loc[frame[stage_column] == stage_values[0], id_column]
        .sort_values()
        .tolist()
    )
    stages = []
    y: pd.Series | None = None
    for value in stage_values:
        rows = frame.loc[frame[stage_column] == value]
        if rows[id_column].duplicated().any() or set(rows[id_column]) != set(order):
            raise DataValidationError(
                f"{path}: stage {value} does not contain each patient exactly once"
            )
        rows = rows.set_index(id_column).loc[order].reset_index()
        rows = rows.dropna(axis=1, how="all")
        a, _ = encode_treatment(rows[treatment])
        drop = [stage_column, id_column, outcome, treatment]
        stages.append(StageRecord(a=a, covariates=_split_columns(rows, drop, path)))
        if outcome in rows.columns:
            y = rows[outcome]

    if y is None or y.isna().any():
        raise DataValidationError(f"{path}: final stage outcome '{outcome}' is missing")
    return MultiStageTrial(
        stages=tuple(stages),
        y=y.to_numpy(dtype=float),
        ids=tuple(str(v) for v in order),
    )


def load_patients(path: Path) -> pd.DataFrame:
    """Load covariates of new patients for applying a saved regime.

    Raises:
        DataValidationError: If the file contains missing values.
    """
    frame = read_csv(path)
    if frame.isna().to_numpy().any():
        raise DataValidationError(f"{path}: patient file contains missing values")
    return frame
