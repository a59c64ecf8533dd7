"""
Command-line interface for pipeobs using Typer.

Commands run one scenario file each and write their artifacts below
``<out>/<scenario name>/``. Exit codes: 0 success, 1 configuration or
validation error, 2 solver or diagnostics failure, 3 failed assumption audit
in strict mode, 4 contraction failure of the fixed-point iteration.
"""

from __future__ import annotations

import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Annotated, Any, NoReturn

import typer
from rich.console import Console
from rich.panel import Panel
from rich.table import Table
from typer import Typer

from . import __version__
from .constants import EXIT, OUTPUT
from .diagnostics.audit import audit_assumptions
from .diagnostics.series import DiagnosticsSeries
from .exceptions import (
    ConfigurationError,
    DiagnosticsError,
    PicardError,
    PipeObserverError,
    SolverError,
    ValidationError,
)
from .io.plots import save_decay_plot
from .io.series import write_series, write_sweep
from .io.summary import RunSummary
from .models.config import SettingsManager, SolverSettings
from .models.scenario import PicardSettings, Scenario, load_scenario_file
from .models.types import MeasurementMode
from .picard.fixed_point import PicardProblem, semi_global_continuation
from .solver.twin import run_twin
from .utils.unified_logger import configure_logging, get_logger, log_error, log_info

console: Console = Console()

SWEEP_PARAMS = ("mu", "gamma", "cells", "cfl", "T")

app: Typer = typer.Typer(
    name="pipeobs",
    help="Barotropic pipe-network flow with a Luenberger observer",
    epilog="Examples:\n  pipeobs observe config/scenarios/pulse.json --plot\n"
    "  pipeobs sweep config/scenarios/pulse.json --param mu --values 0.1,1,10,100",
    rich_markup_mode="rich",
    no_args_is_help=True,
)


@dataclass(frozen=True)
class CliOptions:
    out: Path
    cells: int | None
    cfl: float | None
    threads: int
    settings: SolverSettings


def _exit_code(error: Exception) -> int:
    if isinstance(error, PicardError):
        return EXIT.CONTRACTION
    if isinstance(error, ConfigurationError | ValidationError):
        return EXIT.CONFIG
    if isinstance(error, SolverError | DiagnosticsError):
        return EXIT.SOLVER
    return EXIT.SOLVER if isinstance(error, PipeObserverError) else EXIT.CONFIG


def _handle_cli_error(error: Exception, operation: str, **context: Any) -> NoReturn:
    """Log ``error`` and leave with the matching exit code."""
    logger = get_logger(__name__)
    if isinstance(error, PipeObserverError):
        log_error(logger, f"Error in {operation}: {error}", **{**error.details, **context})
    else:
        log_error(
            logger,
            f"Unexpected error in {operation}: {error}",
            error_type=type(error).__name__,
            **context,
        )
    console.print(f"[red]{operation} failed:[/red] {error}")
    raise typer.Exit(_exit_code(error))


def _options(ctx: typer.Context) -> CliOptions:
    if not isinstance(ctx.obj, CliOptions):
        raise ConfigurationError("CLI options not initialised")
    return ctx.obj


def _load(options: CliOptions, config: Path) -> Scenario:
    scenario = load_scenario_file(config, options.settings.compat_tol)
    overrides: dict[str, Any] = {}
    if options.cells is not None:
        overrides["cells"] = options.cells
    if options.cfl is not None:
        overrides["cfl"] = options.cfl
    return scenario.with_overrides(**overrides) if overrides else scenario


def _run_dir(options: CliOptions, scenario: Scenario) -> Path:
    return options.out / scenario.name


def _print_series(title: str, series: DiagnosticsSeries) -> None:
    table = Table(title=title, show_header=True)
    table.add_column("Quantity", style="cyan")
    table.add_column("Value", style="white")
    table.add_row("steps", str(series.steps))
    table.add_row("samples", str(len(series)))
    if series.final is not None:
        table.add_row("final L2 error^2", f"{series.final.l2_err_sq:.3e}")
        table.add_row("final H_rel", f"{series.final.H_rel:.3e}")
    if series.fit is not None:
        table.add_row("C2", f"{series.fit.C2:.4g}")
        table.add_row("C1", f"{series.fit.C1:.4g}")
    elif series.fit_error:
        table.add_row("fit", series.fit_error)
    table.add_row("nominal rate", f"{series.nominal_rate:.4g}")
    console.print(table)


@app.callback()
def main(
    ctx: typer.Context,
    out: Annotated[
        Path,
        typer.Option("--out", envvar=OUTPUT.OUT_ENV_VAR, help="Root directory of run artifacts"),
    ] = Path(OUTPUT.DEFAULT_OUT),
    cells: Annotated[
        int | None, typer.Option("--cells", min=2, help="Override cells per edge")
    ] = None,
    cfl: Annotated[
        float | None, typer.Option("--cfl", min=0.0, max=1.0, help="Override the CFL number")
    ] = None,
    strict: Annotated[
        bool, typer.Option("--strict", help="Fail on small-data and audit violations")
    ] = False,
    threads: Annotated[int, typer.Option("--threads", min=1, help="Sweep workers")] = 1,
    config_dir: Annotated[
        Path, typer.Option("--config-dir", help="Directory of pipeobs.json")
    ] = Path("config"),
    log_level: Annotated[str | None, typer.Option("--log-level", help="Logging level")] = None,
    json_logs: Annotated[bool, typer.Option("--json-logs", help="JSON console logs")] = False,
    log_file: Annotated[
        Path | None, typer.Option("--log-file", help="Also write JSON records to this file")
    ] = None,
) -> None:
    """Global options shared by every command."""
    try:
        settings = SettingsManager(config_dir).load()
    except ConfigurationError as e:
        _handle_cli_error(e, "settings loading")
    if strict:
        settings = replace(settings, strict=True)
    configure_logging(
        level=log_level or settings.log_level, json_output=json_logs, log_file=log_file
    )
    ctx.obj = CliOptions(out, cells, cfl, threads, settings)


@app.command("simulate", help="Run the true system alone and record its diagnostics")
def simulate(
    ctx: typer.Context,
    config: Annotated[Path, typer.Argument(help="Scenario JSON file")],
) -> None:
    options = _options(ctx)
    try:
        scenario = _load(options, config).as_truth_run()
        series = run_twin(scenario, options.settings)
        run_dir = _run_dir(options, scenario)
        write_series(series, run_dir / OUTPUT.SERIES_FILE)
        summary = RunSummary(
            "simulate", scenario.name, scenario.config, {"series": series.summary()}
        )
        summary.write(run_dir)
    except Exception as e:
        _handle_cli_error(e, "simulation", config=str(config))
    _print_series(f"simulate: {scenario.name}", series)


@app.command("observe", help="Run truth and observer and fit the synchronization rate")
def observe(
    ctx: typer.Context,
    config: Annotated[Path, typer.Argument(help="Scenario JSON file")],
    mode: Annotated[
        MeasurementMode | None, typer.Option("--mode", help="Measured quantity")
    ] = None,
    mu: Annotated[float | None, typer.Option("--mu", min=0.0, help="Nudging gain")] = None,
    perturb: Annotated[
        float, typer.Option("--perturb", help="Extra sine perturbation of the observer v")
    ] = 0.0,
    perturb_rho: Annotated[
        float, typer.Option("--perturb-rho", help="Extra sine perturbation of the observer rho")
    ] = 0.0,
    plot: Annotated[bool, typer.Option("--plot", help="Write decay.svg")] = False,
) -> None:
    options = _options(ctx)
    exit_code = EXIT.OK
    try:
        scenario = _load(options, config)
        overrides: dict[str, Any] = {}
        if mode is not None:
            overrides["mode"] = mode
        if mu is not None:
            overrides["mu"] = mu
        if overrides:
            scenario = scenario.with_overrides(**overrides)
        if perturb or perturb_rho:
            scenario = scenario.with_perturbation(d_rho=perturb_rho, d_v=perturb)
        series = run_twin(scenario, options.settings)
        audit = audit_assumptions(series, series.bounds)
        if options.settings.strict and not audit.passed:
            exit_code = EXIT.AUDIT
        run_dir = _run_dir(options, scenario)
        write_series(series, run_dir / OUTPUT.SERIES_FILE)
        RunSummary(
            "observe",
            scenario.name,
            scenario.config,
            {"series": series.summary(), "audit": audit.to_dict()},
            exit_code,
        ).write(run_dir)
        if plot:
            save_decay_plot(series, run_dir, title=f"{scenario.name} ({scenario.mode})")
    except Exception as e:
        _handle_cli_error(e, "observer run", config=str(config))
    _print_series(f"observe: {scenario.name}", series)
    for check in audit.failures():
        console.print(f"[yellow]assumption failed:[/yellow] {check.name} (margin {check.margin})")
    if exit_code != EXIT.OK:
        raise typer.Exit(exit_code)


def _picard_problems(
    scenario: Scenario, picard_cfg: PicardSettings, windows: int, settings: SolverSettings
) -> tuple[PicardProblem, PicardProblem | None]:
    """(problem, truth problem); the truth is None for an unobserved scenario."""
    T = picard_cfg.T / windows  # noqa: N806
    nt = max(1, math.ceil(picard_cfg.nt / windows))
    truth = PicardProblem.from_scenario(scenario, T, picard_cfg.nx, nt, settings=settings)
    observed = scenario.mode is not MeasurementMode.NONE and scenario.mu > 0.0
    if not observed:
        return truth, None
    observer = PicardProblem.from_scenario(
        scenario, T, picard_cfg.nx, nt, observer=True, settings=settings
    )
    return observer, truth


@app.command("picard", help="Solve by fixed-point iteration and report contraction factors")
def picard(
    ctx: typer.Context,
    config: Annotated[Path, typer.Argument(help="Scenario JSON file with a 'picard' section")],
    windows: Annotated[
        int | None, typer.Option("--windows", min=1, help="Number of continuation windows")
    ] = None,
) -> None:
    options = _options(ctx)
    try:
        scenario = _load(options, config)
        picard_cfg = scenario.picard
        if picard_cfg is None:
            raise ConfigurationError(
                "scenario has no 'picard' section", {"scenario": scenario.name}
            )
        n_windows = windows or picard_cfg.windows
        tol = options.settings.picard_tol if picard_cfg.tol is None else picard_cfg.tol
        problem, truth = _picard_problems(scenario, picard_cfg, n_windows, options.settings)
        run_dir = _run_dir(options, scenario)
        try:
            result = semi_global_continuation(
                problem, n_windows, truth, picard_cfg.S_max, picard_cfg.max_iters, tol
            )
        except PicardError as e:
            RunSummary(
                "picard",
                scenario.name,
                scenario.config,
                {"picard": {"error": str(e), **e.details}},
                EXIT.CONTRACTION,
            ).write(run_dir, OUTPUT.PICARD_FILE)
            raise
        exit_code = EXIT.OK if result.certified else EXIT.CONTRACTION
        RunSummary(
            "picard", scenario.name, scenario.config, {"picard": result.to_dict()}, exit_code
        ).write(run_dir, OUTPUT.PICARD_FILE)
    except Exception as e:
        _handle_cli_error(e, "fixed-point iteration", config=str(config))

    table = Table(title=f"picard: {scenario.name}", show_header=True)
    table.add_column("Window", style="cyan")
    table.add_column("Iterations")
    table.add_column("Max ratio")
    table.add_column("Residual")
    table.add_column("Status")
    for k, run in enumerate(result.windows):
        q = run.max_ratio
        table.add_row(
            str(k),
            str(run.iterations),
            "-" if q is None else f"{q:.3g}",
            f"{run.residual:.2e}",
            "ok" if run.certified else (run.reason or "not converged"),
        )
    console.print(table)
    if exit_code != EXIT.OK:
        raise typer.Exit(exit_code)


def _sweep_worker(
    config: str, param: str, value: float, options: CliOptions
) -> dict[str, Any]:
    """One sweep run; failures are reported in the row, never raised."""
    row: dict[str, Any] = {
        "param": param,
        "value": value,
        "C2": None,
        "nominal_rate": None,
        "C1": None,
    }
    try:
        scenario = _load(options, Path(config))
        cast = int(value) if param == "cells" else value
        series = run_twin(scenario.with_overrides(**{param: cast}), options.settings)
    except Exception as e:
        details = e.details if isinstance(e, PipeObserverError) else {}
        context = {**details, "param": param, "value": value, "error_type": type(e).__name__}
        log_error(get_logger(__name__), f"sweep run failed: {e}", **context)
        row["status"] = f"error: {type(e).__name__}: {e}"
        return row
    row["nominal_rate"] = series.nominal_rate
    if series.fit is None:
        row["status"] = f"no fit: {series.fit_error}"
    else:
        row.update(C2=series.fit.C2, C1=series.fit.C1, status="ok")
    return row


def _parse_values(values: str) -> list[float]:
    try:
        parsed = [float(v) for v in values.split(",") if v.strip()]
    except ValueError as e:
        raise typer.BadParameter(f"not a number list: {values!r}") from e
    if not parsed:
        raise typer.BadParameter("at least one value is required")
    return parsed


@app.command("sweep", help="Repeat the observer run over values of one parameter")
def sweep(
    ctx: typer.Context,
    config: Annotated[Path, typer.Argument(help="Scenario JSON file")],
    values: Annotated[str, typer.Option("--values", help="Comma-separated values")],
    param: Annotated[
        str, typer.Option("--param", help=f"One of {', '.join(SWEEP_PARAMS)}")
    ] = "mu",
) -> None:
    options = _options(ctx)
    if param not in SWEEP_PARAMS:
        raise typer.BadParameter(f"unknown parameter '{param}'", param_hint="--param")
    points = _parse_values(values)
    try:
        scenario = _load(options, config)
        if options.threads > 1:
            with ProcessPoolExecutor(max_workers=options.threads) as pool:
                rows = list(
                    pool.map(
                        _sweep_worker,
                        [str(config)] * len(points),
                        [param] * len(points),
                        points,
                        [options] * len(points),
                    )
                )
        else:
            rows = [_sweep_worker(str(config), param, v, options) for v in points]
        write_sweep(rows, _run_dir(options, scenario) / OUTPUT.SWEEP_FILE)
    except Exception as e:
        _handle_cli_error(e, "sweep", config=str(config))

    table = Table(title=f"sweep over {param}", show_header=True)
    for column in OUTPUT.SWEEP_COLUMNS[1:]:
        table.add_column(column)
    for row in rows:
        table.add_row(
            f"{row['value']:g}",
            *("-" if row[c] is None else f"{row[c]:.4g}" for c in ("C2", "nominal_rate", "C1")),
            row["status"],
        )
    console.print(table)
    succeeded = sum(row["status"] == "ok" for row in rows)
    log_info(get_logger(__name__), "sweep finished", runs=len(rows), succeeded=succeeded)
    if succeeded == 0:
        raise typer.Exit(EXIT.SOLVER)


@app.command("version", help="Show version information")
def show_version() -> None:
    console.print(
        Panel.fit(
            "[bold cyan]pipeobs[/bold cyan]\n"
            f"[green]Version:[/green] {__version__}\n"
            "[green]Python:[/green] " + sys.version.split()[0] + "\n"
            "[green]Platform:[/green] " + sys.platform,
            title="Version Info",
            border_style="blue",
        )
    )


def run_cli() -> None:
    """Main CLI entry point."""
    app()


if __name__ == "__main__":
    run_cli()
