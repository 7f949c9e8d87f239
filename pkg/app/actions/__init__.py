from app.services.errors import ModelNotFound
from .core import *


def setup_action_handlers():
    return discover_actions(module_name="app.actions.handlers", prefix="action_")


def get_action_handler(model: str):
    try:
        return action_handlers[model]
    except KeyError:
        raise ModelNotFound(f"Model '{model}' is not supported. Available: {', '.join(sorted(action_handlers))}")


action_handlers = setup_action_handlers()
