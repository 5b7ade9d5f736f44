"""Command-line interface for fitting, tuning, applying and simulating regimes."""

import json
import logging
from collections.abc import Callable, Iterator, Mapping, Sequence
from contextlib import contextmanager
from pathlib import Path
from typing import Any, NoReturn

import click
import numpy as np
from dtr_engine import (
    EstimatorMethod,
    EstimatorSettings,
    RegimeFit,
    contrast,
    decision_table,
    export_decisions_csv,
    export_regime_json,
    export_rows_csv,
    fit_regime,
    load_regime,
    stage_fit_rows,
)
from model_selection import SelectionRule, export_cv_csv, export_cv_json
from propensity_model import export_weights_csv
from pydantic import ValidationError
from rich.console import Console
from rich.logging import RichHandler
from rich.markup import escape
from rich.progress import (
    BarColumn,
    MofNCompleteColumn,
    Progress,
    TextColumn,
    TimeElapsedColumn,
)
from rich.table import Table
from sim_harness import ExperimentRunner, MetricsReport, load_scenario, write_report
from stage_data import (
    ConfigurationError,
    DataValidationError,
    ModelSpec,
    MultiStageTrial,
    NumericalError,
    load_long_trial,
    load_patients,
    load_stage_dataset,
    load_trial,
)

from . import __version__
from .inputs import fit_document, load_model_specs, read_weights
from .manifest import ManifestRecorder, load_manifest, write_manifest
from .settings import LOG_LEVELS, ToolkitSettings, load_settings

logger = logging.getLogger(__name__)

console = Console()
err_console = Console(stderr=True)

EXIT_PARSE = 2
EXIT_NUMERIC = 3
EXIT_CONFIG = 4

WEIGHT_CHOICES = ("estimate", "ones", "file")

existing_file = click.Path(exists=True, dir_okay=False, path_type=Path)
out_directory = click.Path(file_okay=False, path_type=Path)


def _fail(message: str, code: int) -> NoReturn:
    err_console.print("[red]Error:[/red]", escape(message))
    raise SystemExit(code)


@contextmanager
def exit_on_error() -> Iterator[None]:
    """Turn toolkit errors into a message and the matching exit code."""
    try:
        yield
    except DataValidationError as e:
        _fail(f"Invalid input: {e}", EXIT_PARSE)
    except (NumericalError, np.linalg.LinAlgError) as e:
        _fail(f"Numerical failure: {e}", EXIT_NUMERIC)
    except (ConfigurationError, ValidationError) as e:
        _fail(f"Invalid configuration: {e}", EXIT_CONFIG)
    except OSError as e:
        _fail(f"File error: {e}", EXIT_PARSE)


def configure_logging(level: str) -> None:
    """Render log records through rich on stderr."""
    logging.basicConfig(
        level=level,
        format="%(message)s",
        datefmt="[%X]",
        handlers=[RichHandler(console=err_console, show_path=False)],
        force=True,
    )


def estimator_options(command: Callable[..., Any]) -> Callable[..., Any]:
    """Options shared by every command that fits stages."""
    options = [
        click.option(
            "--mode",
            type=click.Choice([m.value for m in EstimatorMethod]),
            default=EstimatorMethod.PDWOLS.value,
            show_default=True,
            help="pdwols, or qlasso for Q-learning with the lasso.",
        ),
        click.option("--alpha", type=float, help="Interaction share of the penalty."),
        click.option(
            "--lambda",
            "lambda_",
            type=float,
            help="Fixed penalty level; skips cross-validation.",
        ),
        click.option(
            "--cv", is_flag=True, help="Tune the penalty by cross-validation (default)."
        ),
        click.option("--folds", "n_folds", type=int, help="Cross-validation folds."),
        click.option("--n-lambda", type=int, help="Length of the penalty grid."),
        click.option(
            "--rule",
            type=click.Choice([r.value for r in SelectionRule]),
            default=SelectionRule.MIN.value,
            show_default=True,
            help="Penalty picked from the cross-validation curve.",
        ),
        click.option("--adaptive", is_flag=True, help="Adaptive penalty factors."),
        click.option("--refit", is_flag=True, help="Refit on the selected support."),
        click.option(
            "--penalize-psi0", is_flag=True, help="Penalize the treatment effect."
        ),
        click.option(
            "--weights",
            "weight_scheme",
            type=click.Choice(WEIGHT_CHOICES),
            help="Weight origin; estimate for pdwols and ones for qlasso by default.",
        ),
        click.option(
            "--weights-file",
            type=existing_file,
            multiple=True,
            help="CSV of weights, one per stage, with --weights file.",
        ),
        click.option("--seed", type=int, help="Fold assignment seed."),
        click.option("--jobs", type=int, help="Worker threads (PDWOLS_JOBS)."),
    ]
    for option in reversed(options):
        command = option(command)
    return command


def build_estimator(
    settings: ToolkitSettings, options: Mapping[str, Any]
) -> EstimatorSettings:
    """Estimator tuning from command options over the configured defaults.

    Raises:
        ConfigurationError: If options contradict each other.
        pydantic.ValidationError: If a value is out of range.
    """
    if options["cv"] and options["lambda_"] is not None:
        raise ConfigurationError("--lambda and --cv cannot be combined")
    scheme = options["weight_scheme"]
    if scheme == "file" and not options["weights_file"]:
        raise ConfigurationError("--weights file needs --weights-file")
    if options["weights_file"] and scheme != "file":
        raise ConfigurationError("--weights-file needs --weights file")

    defaults = settings.estimator

    def pick(name: str, default: Any) -> Any:
        value = options[name]
        return default if value is None else value

    return EstimatorSettings(
        method=options["mode"],
        alpha=pick("alpha", defaults.alpha),
        lambda_=options["lambda_"],
        n_folds=pick("n_folds", defaults.n_folds),
        n_lambda=pick("n_lambda", defaults.n_lambda),
        rule=options["rule"],
        adaptive=options["adaptive"],
        refit=options["refit"],
        standardize=defaults.standardize,
        penalize_psi0=defaults.penalize_psi0 or options["penalize_psi0"],
        weights=None if scheme is None else ("user" if scheme == "file" else scheme),
        tol=defaults.tol,
        max_iter=defaults.max_iter,
        seed=pick("seed", settings.seed),
        n_jobs=pick("jobs", settings.default_jobs),
    )


def _recorder(
    command: str,
    settings: ToolkitSettings,
    params: Mapping[str, Any],
    estimator: EstimatorSettings | None = None,
) -> ManifestRecorder:
    """Manifest recorder holding options with their defaults filled in."""
    resolved = dict(params)
    if estimator is not None:
        resolved.update(
            alpha=estimator.alpha,
            n_folds=estimator.n_folds,
            n_lambda=estimator.n_lambda,
            penalize_psi0=estimator.penalize_psi0,
            seed=estimator.seed,
            jobs=estimator.n_jobs,
        )
    return ManifestRecorder(command, resolved, settings.model_dump(mode="json"))


def _write_json(document: Any, path: Path) -> Path:
    with path.open("w", encoding="utf-8") as f:
        json.dump(document, f, indent=2)
    return path


def _written(ok: bool, path: Path) -> Path:
    if not ok:
        raise OSError(f"could not write {path}")
    return path


def write_fit(result: RegimeFit, out_dir: Path) -> list[Path]:
    """Fit document, coefficient table, weights and tuning curves."""
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = [
        _write_json(fit_document(result), out_dir / "fit.json"),
        _written(
            export_rows_csv(stage_fit_rows(result), out_dir / "coefficients.csv"),
            out_dir / "coefficients.csv",
        ),
    ]
    for stage_fit in result.stage_fits:
        weights_path = out_dir / f"weights_s{stage_fit.stage}.csv"
        paths.append(
            _written(
                export_weights_csv(
                    stage_fit.weights, weights_path, pi=stage_fit.propensities
                ),
                weights_path,
            )
        )
        if stage_fit.cv is not None:
            paths.append(
                _written(
                    export_cv_csv(stage_fit.cv, out_dir / f"cv_s{stage_fit.stage}.csv"),
                    out_dir / f"cv_s{stage_fit.stage}.csv",
                )
            )
    return paths


def _fit_table(result: RegimeFit) -> Table:
    table = Table(title="Estimated blips")
    table.add_column("Stage", style="cyan")
    table.add_column("Lambda", style="yellow")
    table.add_column("Selected blip terms", style="green")
    table.add_column("Converged")
    for stage_fit in result.stage_fits:
        support = stage_fit.model.support()
        table.add_row(
            str(stage_fit.stage),
            f"{stage_fit.lambda_:.4g}",
            ", ".join(support) if support else "(intercept only)",
            "yes" if stage_fit.fit.converged else "[red]no[/red]",
        )
    return table


def _finish(
    recorder: ManifestRecorder,
    out_dir: Path,
    outputs: Sequence[Path],
    seeds: Mapping[str, int],
) -> None:
    recorder.add_outputs(*outputs)
    manifest_path = write_manifest(recorder.finish(seeds), out_dir)
    console.print(
        f"[green]Wrote {len(outputs)} files and {manifest_path.name} "
        f"to {escape(str(out_dir))}[/green]"
    )


def _fit_trial(
    trial: MultiStageTrial,
    specs: Sequence[ModelSpec],
    estimator: EstimatorSettings,
    weight_files: Sequence[Path],
) -> RegimeFit:
    weights = [read_weights(path) for path in weight_files] or None
    return fit_regime(trial, specs, estimator, weights)


@click.group()
@click.version_option(version=__version__, prog_name="pdwols")
@click.option("--env", "environment", help="Settings overlay name (PDWOLS_ENV).")
@click.option(
    "--config-dir",
    type=click.Path(file_okay=False, path_type=Path),
    help="Directory with defaults.yaml and overlays (PDWOLS_CONFIG_DIR).",
)
@click.option(
    "--log-level",
    type=click.Choice(LOG_LEVELS, case_sensitive=False),
    help="Override the configured log level.",
)
@click.pass_context
def cli(
    ctx: click.Context,
    environment: str | None,
    config_dir: Path | None,
    log_level: str | None,
) -> None:
    """pdWOLS - penalized dynamic weighted least squares for treatment regimes."""
    with exit_on_error():
        settings = load_settings(environment, config_dir)
    if log_level is not None:
        settings = settings.model_copy(update={"log_level": log_level.upper()})
    configure_logging(settings.log_level)
    ctx.obj = settings


@cli.command()
@click.argument("data", type=existing_file)
@click.option("--spec", "spec_path", required=True, type=existing_file)
@click.option("--out", "out_dir", required=True, type=out_directory)
@click.option("--outcome", default="y", show_default=True, help="Outcome column.")
@click.option("--treatment", default="a", show_default=True, help="Treatment column.")
@estimator_options
@click.pass_context
def fit(
    ctx: click.Context,
    data: Path,
    spec_path: Path,
    out_dir: Path,
    outcome: str,
    treatment: str,
    **options: Any,
) -> None:
    """Select and estimate the blip of one decision stage from DATA."""
    settings: ToolkitSettings = ctx.obj
    with exit_on_error():
        estimator = build_estimator(settings, options)
        specs = load_model_specs(spec_path)
        if len(specs) != 1:
            raise ConfigurationError(
                f"{spec_path}: fit takes one stage specification, got {len(specs)}"
            )
        recorder = _recorder(
            "fit",
            settings,
            {
                "data": data,
                "spec_path": spec_path,
                "out_dir": out_dir,
                "outcome": outcome,
                "treatment": treatment,
                **options,
            },
            estimator,
        )
        recorder.add_inputs(data, spec_path, *options["weights_file"])
        trial = MultiStageTrial.single_stage(
            load_stage_dataset(data, outcome=outcome, treatment=treatment)
        )
        result = _fit_trial(trial, specs, estimator, options["weights_file"])
        outputs = write_fit(result, out_dir)
    console.print(_fit_table(result))
    _finish(recorder, out_dir, outputs, {"seed": estimator.seed})


@cli.command()
@click.argument("stage_files", nargs=-1, required=True, type=existing_file)
@click.option(
    "--spec",
    "spec_path",
    required=True,
    type=existing_file,
    help="Specification file with a 'stages' list, stage 1 first.",
)
@click.option("--out", "out_dir", required=True, type=out_directory)
@click.option(
    "--long", "long_format", is_flag=True, help="One file, one row per patient-stage."
)
@click.option("--id-column", help="Patient identifier column.")
@click.option("--stage-column", default="stage", show_default=True)
@click.option("--outcome", default="y", show_default=True, help="Outcome column.")
@click.option("--treatment", default="a", show_default=True, help="Treatment column.")
@estimator_options
@click.pass_context
def dtr(
    ctx: click.Context,
    stage_files: tuple[Path, ...],
    spec_path: Path,
    out_dir: Path,
    long_format: bool,
    id_column: str | None,
    stage_column: str,
    outcome: str,
    treatment: str,
    **options: Any,
) -> None:
    """Estimate a regime backwards over the stages in STAGE_FILES."""
    settings: ToolkitSettings = ctx.obj
    with exit_on_error():
        estimator = build_estimator(settings, options)
        specs = load_model_specs(spec_path)
        recorder = _recorder(
            "dtr",
            settings,
            {
                "stage_files": stage_files,
                "spec_path": spec_path,
                "out_dir": out_dir,
                "long_format": long_format,
                "id_column": id_column,
                "stage_column": stage_column,
                "outcome": outcome,
                "treatment": treatment,
                **options,
            },
            estimator,
        )
        recorder.add_inputs(*stage_files, spec_path, *options["weights_file"])
        if long_format:
            if len(stage_files) != 1:
                raise ConfigurationError("--long takes exactly one file")
            trial = load_long_trial(
                stage_files[0],
                stage_column=stage_column,
                id_column=id_column or "id",
                outcome=outcome,
                treatment=treatment,
            )
        else:
            trial = load_trial(
                stage_files, id_column=id_column, outcome=outcome, treatment=treatment
            )
        result = _fit_trial(trial, specs, estimator, options["weights_file"])
        outputs = write_fit(result, out_dir)
        regime_path = out_dir / "regime.json"
        decisions_path = out_dir / "decisions.csv"
        table = decision_table(result.regime, trial)
        outputs += [
            _written(export_regime_json(result.regime, regime_path), regime_path),
            _written(export_decisions_csv(table, decisions_path), decisions_path),
        ]
    console.print(_fit_table(result))
    _finish(recorder, out_dir, outputs, {"seed": estimator.seed})


@cli.command("cv-curve")
@click.argument("data", type=existing_file)
@click.option("--spec", "spec_path", required=True, type=existing_file)
@click.option("--out", "out_dir", required=True, type=out_directory)
@click.option("--outcome", default="y", show_default=True, help="Outcome column.")
@click.option("--treatment", default="a", show_default=True, help="Treatment column.")
@estimator_options
@click.pass_context
def cv_curve(
    ctx: click.Context,
    data: Path,
    spec_path: Path,
    out_dir: Path,
    outcome: str,
    treatment: str,
    **options: Any,
) -> None:
    """Write the cross-validation curve of one stage fitted to DATA."""
    settings: ToolkitSettings = ctx.obj
    with exit_on_error():
        if options["lambda_"] is not None:
            raise ConfigurationError("cv-curve tunes the penalty; drop --lambda")
        estimator = build_estimator(settings, options)
        specs = load_model_specs(spec_path)
        if len(specs) != 1:
            raise ConfigurationError(
                f"{spec_path}: cv-curve takes one stage specification, "
                f"got {len(specs)}"
            )
        recorder = _recorder(
            "cv-curve",
            settings,
            {
                "data": data,
                "spec_path": spec_path,
                "out_dir": out_dir,
                "outcome": outcome,
                "treatment": treatment,
                **options,
            },
            estimator,
        )
        recorder.add_inputs(data, spec_path, *options["weights_file"])
        trial = MultiStageTrial.single_stage(
            load_stage_dataset(data, outcome=outcome, treatment=treatment)
        )
        result = _fit_trial(trial, specs, estimator, options["weights_file"])
        cv = result.stage_fit(1).cv
        if cv is None:
            raise NumericalError("no cross-validation curve was produced")
        out_dir.mkdir(parents=True, exist_ok=True)
        outputs = [
            _written(export_cv_json(cv, out_dir / "cv.json"), out_dir / "cv.json"),
            _written(export_cv_csv(cv, out_dir / "cv.csv"), out_dir / "cv.csv"),
        ]

    table = Table(title="Cross-validation")
    table.add_column("Penalty", style="cyan")
    table.add_column("Value", style="yellow")
    table.add_row("lambda_max", f"{cv.lambda_max:.6g}")
    table.add_row("lambda_min", f"{cv.lambda_min:.6g}")
    table.add_row("lambda_1se", f"{cv.lambda_1se:.6g}")
    table.add_row(f"selected ({cv.rule.value})", f"{cv.selected_lambda:.6g}")
    console.print(table)
    _finish(recorder, out_dir, outputs, {"seed": estimator.seed})


@cli.command()
@click.argument("regime_path", type=existing_file)
@click.argument("patients", type=existing_file)
@click.option("--out", "out_dir", required=True, type=out_directory)
@click.option("--stage", type=int, default=1, show_default=True)
@click.option("--id-column", help="Patient identifier column to carry over.")
@click.pass_context
def decide(
    ctx: click.Context,
    regime_path: Path,
    patients: Path,
    out_dir: Path,
    stage: int,
    id_column: str | None,
) -> None:
    """Recommend treatments to PATIENTS with a saved regime.

    Later stages read the history columns written by ``dtr`` (``a_s1``,
    ``x1_s1``, ...).
    """
    settings: ToolkitSettings = ctx.obj
    with exit_on_error():
        recorder = _recorder(
            "decide",
            settings,
            {
                "regime_path": regime_path,
                "patients": patients,
                "out_dir": out_dir,
                "stage": stage,
                "id_column": id_column,
            },
        )
        recorder.add_inputs(regime_path, patients)
        regime = load_regime(regime_path)
        if not 1 <= stage <= regime.n_stages:
            raise ConfigurationError(
                f"stage must be in 1..{regime.n_stages}, got {stage}"
            )
        frame = load_patients(patients)
        if id_column is not None and id_column not in frame.columns:
            raise DataValidationError(f"{patients}: id column '{id_column}' not found")
        ids = (
            frame[id_column].astype(str).tolist()
            if id_column is not None
            else [str(i) for i in range(len(frame))]
        )
        values = contrast(regime.stage(stage), frame)
        rows = [
            {
                "id": patient,
                f"contrast_s{stage}": float(value),
                f"recommended_s{stage}": int(value > 0.0),
            }
            for patient, value in zip(ids, values, strict=True)
        ]
        out_dir.mkdir(parents=True, exist_ok=True)
        path = out_dir / "decisions.csv"
        outputs = [_written(export_rows_csv(rows, path), path)]

    treated = sum(row[f"recommended_s{stage}"] for row in rows)
    console.print(
        f"[blue]Stage {stage}: {treated} of {len(rows)} patients "
        "recommended treatment[/blue]"
    )
    _finish(recorder, out_dir, outputs, {})


def _summary_table(report: MetricsReport) -> Table:
    def show(value: float | None, scale: float = 1.0) -> str:
        return "-" if value is None else f"{scale * value:.3g}"

    table = Table(title=f"Simulation ({report.config.generator.value})")
    table.add_column("Method", style="cyan")
    table.add_column("OK", justify="right")
    table.add_column("Failed", justify="right")
    table.add_column("Error rate (%)", justify="right", style="yellow")
    table.add_column("Value", justify="right", style="green")
    table.add_column("FN", justify="right")
    table.add_column("FP", justify="right")
    for summary in report.methods:
        table.add_row(
            summary.method,
            str(summary.n_ok),
            str(summary.n_failed),
            show(summary.total_error_rate, 100.0),
            show(summary.value),
            show(summary.fn_rate),
            show(summary.fp_rate),
        )
    return table


@cli.command()
@click.option(
    "-c",
    "--config",
    "config_path",
    required=True,
    type=existing_file,
    help="Scenario file (TOML, YAML or JSON).",
)
@click.option("--out", "out_dir", required=True, type=out_directory)
@click.option("--jobs", type=int, help="Replicates run in parallel (PDWOLS_JOBS).")
@click.option("--reps", type=int, help="Override the number of replicates.")
@click.option("--seed", "base_seed", type=int, help="Override the base seed.")
@click.pass_context
def simulate(
    ctx: click.Context,
    config_path: Path,
    out_dir: Path,
    jobs: int | None,
    reps: int | None,
    base_seed: int | None,
) -> None:
    """Run a replicated simulation experiment."""
    settings: ToolkitSettings = ctx.obj
    with exit_on_error():
        config = load_scenario(config_path)
        updates: dict[str, Any] = {"reps": reps, "base_seed": base_seed}
        if jobs is not None or "n_jobs" not in config.model_fields_set:
            updates["n_jobs"] = jobs if jobs is not None else settings.default_jobs
        config = config.model_validate(
            {
                **config.model_dump(),
                **{key: value for key, value in updates.items() if value is not None},
            }
        )
        params = {
            "config_path": config_path,
            "out_dir": out_dir,
            "jobs": config.n_jobs,
            "reps": config.reps,
            "base_seed": config.base_seed,
            "scenario": config.model_dump(mode="json"),
        }
        recorder = _recorder("simulate", settings, params)
        recorder.add_inputs(config_path)

        with Progress(
            TextColumn("[progress.description]{task.description}"),
            BarColumn(),
            MofNCompleteColumn(),
            TimeElapsedColumn(),
            console=console,
            transient=True,
        ) as progress:
            task = progress.add_task("Replicates", total=config.reps)
            report = ExperimentRunner(config).run(lambda _: progress.advance(task))
        out_dir.mkdir(parents=True, exist_ok=True)
        outputs = list(write_report(report, out_dir).values())

    console.print(_summary_table(report))
    if report.n_failed:
        console.print(
            f"[yellow]{report.n_failed} method fits failed; "
            "see replicates.csv[/yellow]"
        )
    _finish(recorder, out_dir, outputs, {"base_seed": config.base_seed})


@cli.command()
@click.argument("manifest_path", type=click.Path(exists=True, path_type=Path))
@click.option(
    "--out", "out_dir", type=out_directory, help="Write to another directory."
)
@click.pass_context
def rerun(ctx: click.Context, manifest_path: Path, out_dir: Path | None) -> None:
    """Repeat the run recorded in MANIFEST_PATH with its settings and options."""
    with exit_on_error():
        manifest = load_manifest(manifest_path)
        command = cli.get_command(ctx, manifest.command)
        if command is None or command is rerun:
            raise DataValidationError(
                f"manifest names unknown command '{manifest.command}'"
            )
        params = dict(manifest.params)
        if out_dir is not None:
            params["out_dir"] = str(out_dir)
        values = {
            param.name: param.type_cast_value(ctx, params[param.name])
            for param in command.params
            if param.name is not None and param.name in params
        }
        ctx.obj = ToolkitSettings.model_validate(manifest.settings)
    logger.info("Re-running %s from %s", manifest.command, manifest_path)
    ctx.invoke(command, **values)
