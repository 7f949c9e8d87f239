import asyncio
import logging
import time
import traceback
from typing import Dict, List, Optional, Sequence

import pandas as pd
import pydantic

from app import settings
from app.actions import Scenario, get_action_handler
from app.economies.core import Diagnostic, DiagnosticSeverity
from .core import RowStatus, ScenarioReport
from .errors import ConfigurationValidationError, LaboratoryError, ScenarioExecutionError
from .utils import apply_override, resolve_parameter


logger = logging.getLogger(__name__)


def _handle_error(exc: Exception, scenario: Scenario, config_data: dict = None) -> dict:
    """
    Logs the failure with its traceback and returns the error details that go into the report.
    """
    message = f"Error in scenario '{scenario.name}' ({scenario.model}): {type(exc).__name__}: {exc}"
    logger.exception(message)

    error_details = {
        "scenario": scenario.name,
        "model": scenario.model,
        "config_data": config_data or {},
        "error": message,
        "error_traceback": traceback.format_exc(),
    }
    if isinstance(exc, LaboratoryError):
        error_details["details"] = exc.details
    return error_details


def _failed_report(scenario: Scenario, diagnostic: Diagnostic) -> ScenarioReport:
    return ScenarioReport(name=scenario.name, model=scenario.model, diagnostics=[diagnostic])


def parse_parameters(scenario: Scenario, parameter_overrides: Optional[Dict[str, float]] = None):
    """(handler, parsed configuration) for a scenario. Overrides use dotted parameter names."""
    handler, config_model = get_action_handler(scenario.model)
    parameters = scenario.parameters
    for name, value in (parameter_overrides or {}).items():
        try:
            parameters = apply_override(parameters, resolve_parameter(config_model, name), value)
        except ValueError as e:
            raise ConfigurationValidationError(str(e)) from e
    try:
        return handler, config_model.parse_obj(parameters)
    except pydantic.ValidationError as e:
        raise ConfigurationValidationError(
            f"Invalid parameters for model '{scenario.model}' in scenario '{scenario.name}': {e}"
        ) from e


async def execute_scenario(
        scenario: Scenario, parameter_overrides: Optional[Dict[str, float]] = None
) -> ScenarioReport:
    """
    Runs one scenario. Configuration problems raise (ModelNotFound, ConfigurationValidationError); solver
    failures come back as a report carrying an error diagnostic.
    """
    handler, parsed_config = parse_parameters(scenario, parameter_overrides)
    config_data = parsed_config.dict()
    logger.info(f"Executing scenario '{scenario.name}' ({scenario.model}, T={scenario.horizon})...")

    try:  # Execute the handler in a worker thread with a timeout
        start_time = time.monotonic()
        report = await asyncio.wait_for(
            asyncio.to_thread(handler, scenario=scenario, action_config=parsed_config),
            timeout=settings.MAX_SCENARIO_EXECUTION_TIME
        )
    except asyncio.TimeoutError:
        error = ScenarioExecutionError(
            f"Scenario '{scenario.name}' timed out after {settings.MAX_SCENARIO_EXECUTION_TIME} seconds"
        )
        _handle_error(error, scenario, config_data)
        return _failed_report(scenario, Diagnostic(
            code=type(error).__name__, message=str(error), severity=DiagnosticSeverity.ERROR,
            details={"timeout": settings.MAX_SCENARIO_EXECUTION_TIME},
        ))
    except LaboratoryError as e:
        _handle_error(e, scenario, config_data)
        return _failed_report(scenario, Diagnostic.from_error(e))
    except Exception as e:
        error_details = _handle_error(e, scenario, config_data)
        return _failed_report(scenario, Diagnostic(
            code=ScenarioExecutionError.__name__, message=error_details["error"], severity=DiagnosticSeverity.ERROR,
        ))

    execution_time = time.monotonic() - start_time
    logger.debug(f"Scenario '{scenario.name}' executed in {execution_time:.2f} seconds.")
    return report


def sweep_row(parameter: str, value: float, report: Optional[ScenarioReport], error: Optional[str] = None) -> dict:
    necessity = report.necessity if report else None
    verdict = report.verdict if report else None
    if error is None and report is not None and verdict is None:
        error = report.errors[0].code if report.errors else ScenarioExecutionError.__name__
    return {
        parameter: value,
        "status": (RowStatus.FAILED if error else RowStatus.OK).value,
        "label": verdict.label if verdict else error,
        "R": necessity.R if necessity else None,
        "G_d": necessity.G_d if necessity else None,
        "G": necessity.G if necessity else None,
        "holds": necessity.holds if necessity else None,
        "borderline": necessity.borderline if necessity else None,
        "tail_decay": verdict.tail_decay if verdict else None,
        "relevance": verdict.relevance_liminf if verdict else None,
        "error": error,
    }


async def execute_sweep(scenario: Scenario, parameter: str, grid: Sequence[float]) -> pd.DataFrame:
    """
    One scenario run per grid value, at most SWEEP_CONCURRENCY at a time. Rows keep the grid order; a row
    whose run fails is marked failed with the error name.
    """
    _, config_model = get_action_handler(scenario.model)
    try:
        resolve_parameter(config_model, parameter)
    except ValueError as e:
        raise ConfigurationValidationError(str(e)) from e
    semaphore = asyncio.Semaphore(settings.SWEEP_CONCURRENCY)

    async def run_row(value: float) -> dict:
        async with semaphore:
            try:
                report = await execute_scenario(scenario, parameter_overrides={parameter: value})
            except ConfigurationValidationError as e:
                logger.warning(f"Sweep row {parameter}={value} rejected: {e}")
                return sweep_row(parameter, value, None, error=type(e).__name__)
            return sweep_row(parameter, value, report)

    logger.info(f"Sweeping '{parameter}' over {len(grid)} values for scenario '{scenario.name}'...")
    rows: List[dict] = await asyncio.gather(*[run_row(value) for value in grid])
    return pd.DataFrame(rows)
