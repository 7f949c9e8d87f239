import asyncio
import logging
from functools import wraps


logger = logging.getLogger(__name__)


def _activity_context(func, kwargs) -> dict:
    scenario = kwargs.get("scenario")
    action_config = kwargs.get("action_config")
    return {
        "scenario": getattr(scenario, "name", None),
        "model": func.__name__.replace("action_", ""),
        "horizon": getattr(scenario, "horizon", None),
        "config_data": action_config.dict() if action_config else {},
    }


def log_action_activity(scenario_name: str, model: str, title: str, level="INFO", data: dict = None):
    """
        Structured activity record for a running scenario.
        :param scenario_name: name of the scenario being executed
        :param model: model tag of the handler
        :param title: A human-readable string describing the event
        :param level: The level of the log, e.g. DEBUG, INFO, WARNING, ERROR
        :param data: Any extra data to be logged as a dict
        """
    logger.log(
        logging.getLevelName(level),
        title,
        extra={"scenario": scenario_name, "model": model, "activity": "custom", "data": data or {}},
    )


def activity_logger(on_start=True, on_completion=True, on_error=True):
    """Logs start, completion and failure of a scenario handler; works for sync and async handlers."""
    def started(context):
        if on_start:
            logger.info(f"Scenario '{context['scenario']}' ({context['model']}) started.",
                        extra={**context, "activity": "started"})

    def completed(context, result):
        if on_completion:
            label = getattr(getattr(result, "verdict", None), "label", None)
            logger.info(f"Scenario '{context['scenario']}' ({context['model']}) completed with verdict {label}.",
                        extra={**context, "activity": "completed", "verdict": label})

    def failed(context, error):
        if on_error:
            logger.error(f"Scenario '{context['scenario']}' ({context['model']}) failed: {type(error).__name__}: {error}",
                         extra={**context, "activity": "failed", "error": str(error)})

    def decorator(func):
        if asyncio.iscoroutinefunction(func):
            @wraps(func)
            async def async_wrapper(*args, **kwargs):
                context = _activity_context(func, kwargs)
                started(context)
                try:
                    result = await func(*args, **kwargs)
                except Exception as e:
                    failed(context, e)
                    raise e
                completed(context, result)
                return result
            return async_wrapper

        @wraps(func)
        def wrapper(*args, **kwargs):
            context = _activity_context(func, kwargs)
            started(context)
            try:
                result = func(*args, **kwargs)
            except Exception as e:
                failed(context, e)
                raise e
            completed(context, result)
            return result
        return wrapper

    return decorator
