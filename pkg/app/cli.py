import asyncio
import logging
import sys

import click

from app import settings
from app.actions import get_actions
from app.services.config_manager import ScenarioConfigurationManager
from app.services.core import ExitCode, RowStatus
from app.services.errors import ConfigurationNotFound, ConfigurationValidationError, ModelNotFound
from app.services.file_storage import ReportStorage
from app.services.scenario_runner import execute_scenario, execute_sweep
from app.services.utils import parse_grid


logger = logging.getLogger(__name__)

CONFIGURATION_ERRORS = (ConfigurationNotFound, ConfigurationValidationError, ModelNotFound, OSError)


def _storage(scenario, out):
    return ReportStorage(out or scenario.output_dir or settings.OUTPUT_DIR)


def _fail(message: str):
    click.echo(f"Error: {message}", err=True)
    sys.exit(ExitCode.CONFIGURATION_ERROR.value)


@click.group(help="Rational-bubble laboratory: solve scenario economies and classify their asset prices.")
def cli():
    pass


@cli.command(help="Solve one scenario and write <name>.csv and <name>.verdict.json.")
@click.argument("config", type=click.Path(dir_okay=False))
@click.option("--out", type=click.Path(file_okay=False), default=None, help="Output directory.")
def run(config, out):
    try:
        scenario = ScenarioConfigurationManager().get_scenario(config)
        report = asyncio.run(execute_scenario(scenario))
        written = _storage(scenario, out).save_report(report)
    except CONFIGURATION_ERRORS as e:
        _fail(str(e))
    label = report.verdict.label if report.verdict else "none"
    click.echo(f"{scenario.name}: verdict {label}, {len(report.diagnostics)} diagnostics")
    for path in written.values():
        click.echo(f"  wrote {path}")
    for diagnostic in report.diagnostics:
        click.echo(f"  [{diagnostic.severity}] {diagnostic.code}: {diagnostic.message}")
    sys.exit(report.exit_code.value)


@cli.command(help="Re-solve a scenario over a grid of values of one scalar parameter.")
@click.argument("config", type=click.Path(dir_okay=False))
@click.option("--param", "parameter", required=True, help="Parameter name, dotted for nested fields (D.ratio).")
@click.option("--grid", required=True, help="Comma-separated values, e.g. 0,0.25,0.5.")
@click.option("--out", type=click.Path(file_okay=False), default=None, help="Output directory.")
def sweep(config, parameter, grid, out):
    try:
        values = parse_grid(grid)
    except ValueError as e:
        _fail(f"Invalid value for --grid: {e}")
    try:
        scenario = ScenarioConfigurationManager().get_scenario(config)
        table = asyncio.run(execute_sweep(scenario, parameter, values))
        path = _storage(scenario, out).save_sweep(scenario.name, table)
    except CONFIGURATION_ERRORS as e:
        _fail(str(e))
    failed = int((table["status"] == RowStatus.FAILED.value).sum())
    click.echo(f"{scenario.name}: {len(table)} rows, {failed} failed; wrote {path}")


@cli.command(help="List the model tags scenarios can use.")
def models():
    for name in get_actions():
        click.echo(name)


if __name__ == "__main__":
    cli()
