import logging
import os
import sys
from pathlib import Path

import click
from rich.console import Console
from rich.logging import RichHandler
from rich.table import Table

from experiments.plotting import emit_plot
from experiments.runner import EXIT_FAILED_ROWS, EXIT_INVALID, EXIT_OK, run, verify
from experiments.selftest import run_selftest
from operators.exceptions import RieszToolkitError, SchemaError
from operators.pnorm import DEFAULT_SEED
from utils.config import ExperimentConfig
from utils.formatters import format_bracket, format_exponent, format_float, format_runtime, get_color_for_status
from utils.validators import DEFAULT_MEM_CAP

console = Console()
logger = logging.getLogger(__name__)


def setup_logging(level: str) -> None:
    logging.basicConfig(
        level=level.upper(),
        format="%(message)s",
        datefmt="[%X]",
        handlers=[RichHandler(console=Console(stderr=True), rich_tracebacks=True)],
    )


@click.group()
@click.option("--log-level", default=lambda: os.getenv("RIESZ_LOG_LEVEL", "INFO"), show_default="INFO",
              type=click.Choice(["DEBUG", "INFO", "WARNING", "ERROR"], case_sensitive=False))
def cli(log_level):
    """Dimension-free Riesz transform experiments"""
    setup_logging(log_level)


@cli.command("run")
@click.argument("config_path", type=click.Path(dir_okay=False))
@click.option("--seed", type=int, help="Base seed for every random draw")
@click.option("--jobs", type=int, help="Worker threads for scan rows")
@click.option("--out", type=click.Path(dir_okay=False), help="Result CSV path")
@click.option("--mem-cap", type=int, help="Largest grid (points) any row may allocate")
@click.option("--experiment", multiple=True, help="Override the experiment list")
@click.option("--setting", type=click.Choice(["cyclic", "hermite"]))
@click.option("--p", "p_values", multiple=True, help="Override the exponent list (accepts inf)")
@click.option("--restarts", type=int)
@click.option("--samples", type=int)
def run_command(config_path, seed, jobs, out, mem_cap, experiment, setting, p_values, restarts, samples):
    """Run the scan described by CONFIG_PATH"""
    overrides = {
        "seed": seed,
        "jobs": jobs,
        "out": out,
        "mem_cap": mem_cap,
        "experiment": list(experiment) or None,
        "setting": setting,
        "p": list(p_values) or None,
        "restarts": restarts,
        "samples": samples,
    }
    try:
        config = ExperimentConfig.from_sources(config_path, overrides)
    except RieszToolkitError as e:
        logger.error(f"Invalid configuration: {e}")
        sys.exit(EXIT_INVALID)

    result = run(config)
    table = Table(title=f"{len(result.rows)} rows -> {result.csv_path}")
    for column in ("experiment", "K/N", "d", "p", "r", "bracket", "deviation", "runtime", "status"):
        table.add_column(column)
    for row in result.rows:
        table.add_row(
            row.experiment,
            str(row.K if row.K is not None else row.N or ""),
            str(row.d or ""),
            format_exponent(row.p),
            str(row.r or ""),
            format_bracket(row.estimate_lower, row.estimate_upper, row.method or None) if row.estimate_lower is not None else "",
            format_float(row.deviation, 3),
            format_runtime(row.runtime_ms),
            f"[{get_color_for_status(row.status)}]{row.status}[/]",
        )
    console.print(table)
    sys.exit(result.exit_code)


@cli.command("plot")
@click.argument("csv_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--out", type=click.Path(dir_okay=False), help="Script path (default: <csv>.plot.py)")
def plot_command(csv_path, out):
    """Emit a plotly script drawing the dimscan rows of CSV_PATH"""
    try:
        script = emit_plot(csv_path, out)
    except SchemaError as e:
        logger.error(str(e))
        sys.exit(EXIT_INVALID)
    console.print(f"Plot script written to {script}")


@cli.command("selftest")
@click.option("--seed", type=int, default=lambda: int(os.getenv("RIESZ_SEED", DEFAULT_SEED)))
def selftest_command(seed):
    """Run the fast invariant suite"""
    results = run_selftest(seed)
    table = Table(title="selftest")
    for column in ("check", "value", "tolerance", "result"):
        table.add_column(column)
    for check in results:
        status = "ok" if check.passed else "fail"
        table.add_row(check.name, format_float(check.value, 3), format_float(check.tolerance, 3),
                      f"[{get_color_for_status(status)}]{status}[/]")
    console.print(table)
    sys.exit(EXIT_OK if all(check.passed for check in results) else EXIT_INVALID)


@cli.command("verify")
@click.argument("csv_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--witnesses", type=click.Path(exists=True, dir_okay=False), help="Witness archive")
@click.option("--mem-cap", type=int, default=DEFAULT_MEM_CAP, show_default=True)
def verify_command(csv_path, witnesses, mem_cap):
    """Re-derive every witnessed lower bound in CSV_PATH"""
    try:
        checked = verify(Path(csv_path), witnesses, mem_cap)
    except (RieszToolkitError, FileNotFoundError) as e:
        logger.error(str(e))
        sys.exit(EXIT_INVALID)
    failed = [row for row in checked if not row.ok]
    console.print(f"{len(checked) - len(failed)}/{len(checked)} witnessed rows reproduced")
    sys.exit(EXIT_FAILED_ROWS if failed else EXIT_OK)


if __name__ == "__main__":
    cli()
