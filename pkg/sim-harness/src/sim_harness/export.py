"""JSON and flat CSV documents of experiment reports."""

import json
import logging
from dataclasses import asdict
from pathlib import Path
from typing import Any

from dtr_engine import export_rows_csv

from .models import MetricsReport

logger = logging.getLogger(__name__)


def report_to_dict(report: MetricsReport) -> dict[str, Any]:
    """JSON-compatible report, configuration echo included."""
    return {
        "config": report.config.model_dump(mode="json"),
        "oracle_value": report.oracle_value,
        "n_failed": report.n_failed,
        "methods": [asdict(summary) for summary in report.methods],
        "replicates": [asdict(result) for result in report.replicates],
    }


def export_report_json(report: MetricsReport, file_path: Path) -> bool:
    """Write the full report; returns False when the file cannot be written."""
    try:
        with Path(file_path).open("w", encoding="utf-8") as f:
            json.dump(report_to_dict(report), f, indent=2)
    except (OSError, ValueError):
        return False
    else:
        return True


def replicate_rows(report: MetricsReport) -> list[dict[str, Any]]:
    """One row per replicate and method."""
    n_stages = report.config.n_stages
    rows = []
    for result in report.replicates:
        evaluation = result.evaluation
        row: dict[str, Any] = {
            "replicate": result.replicate,
            "method": result.method,
            "ok": result.ok,
            "error": result.error or "",
            "value": evaluation.value if evaluation else None,
            "value_se": evaluation.value_se if evaluation else None,
            "total_error_rate": evaluation.total_error_rate if evaluation else None,
        }
        for stage in range(n_stages):
            row[f"error_rate_s{stage + 1}"] = (
                evaluation.error_rates[stage] if evaluation else None
            )
            row[f"lambda_s{stage + 1}"] = (
                result.lambdas[stage] if result.lambdas else None
            )
            row[f"support_s{stage + 1}"] = (
                " ".join(result.supports[stage]) if result.supports else ""
            )
        row["false_negatives"] = result.false_negatives
        row["false_positives"] = result.false_positives
        rows.append(row)
    return rows


def selection_rows(report: MetricsReport) -> list[dict[str, Any]]:
    """Selection rate per method, stage and blip term."""
    return [
        {"method": summary.method, "stage": stage, "term": term, "rate": rate}
        for summary in report.methods
        for stage, rates in enumerate(summary.selection_rates, start=1)
        for term, rate in rates.items()
    ]


def coefficient_rows(report: MetricsReport) -> list[dict[str, Any]]:
    """Bias, spread and RMSE per method, stage and blip coefficient."""
    return [
        {"method": summary.method, "stage": stage, "term": term, **asdict(stats)}
        for summary in report.methods
        for stage, table in enumerate(summary.coefficients, start=1)
        for term, stats in table.items()
    ]


def estimate_rows(report: MetricsReport) -> list[dict[str, Any]]:
    """Long-format blip estimates, one row per replicate, method and coefficient."""
    truth = {
        (summary.method, stage, term): stats.truth
        for summary in report.methods
        for stage, table in enumerate(summary.coefficients, start=1)
        for term, stats in table.items()
    }
    return [
        {
            "replicate": result.replicate,
            "method": result.method,
            "stage": stage,
            "term": term,
            "estimate": estimate,
            "truth": truth[(result.method, stage, term)],
        }
        for result in report.replicates
        for stage, table in enumerate(result.coefficients, start=1)
        for term, estimate in table.items()
    ]


def write_report(report: MetricsReport, out_dir: Path) -> dict[str, Path]:
    """Write the JSON report and its CSV tables into ``out_dir``.

    Returns:
        The files written, keyed by table name.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written: dict[str, Path] = {}
    target = out_dir / "report.json"
    if export_report_json(report, target):
        written["report"] = target
    tables = {
        "replicates": replicate_rows(report),
        "selection": selection_rows(report),
        "coefficients": coefficient_rows(report),
        "estimates": estimate_rows(report),
    }
    for name, rows in tables.items():
        target = out_dir / f"{name}.csv"
        if export_rows_csv(rows, target):
            written[name] = target
        else:
            logger.warning("No %s table written to %s", name, target)
    return written
