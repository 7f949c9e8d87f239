import importlib
import inspect
import re
from typing import Any, Dict, List, Optional

import pydantic
from pydantic import BaseModel


class ScenarioConfiguration(BaseModel):
    """Base for the per-model `parameters` block of a scenario file."""

    class Config:
        extra = pydantic.Extra.forbid


class GenericScenarioConfiguration(ScenarioConfiguration):
    pass


class SolverOptions(BaseModel):
    n_terminals: Optional[int] = pydantic.Field(
        None, ge=2, title="Terminal count", description="Size of the terminal-condition sweep"
    )
    terminal_fractions: Optional[List[float]] = pydantic.Field(
        None, title="Terminal fractions", description="Explicit terminals as fractions of the feasible range"
    )
    agree_tol: Optional[float] = pydantic.Field(
        None, gt=0.0, title="Agreement tolerance", description="Max spread of early-window prices across terminals"
    )
    tol: Optional[float] = pydantic.Field(None, gt=0.0, title="Root tolerance")

    class Config:
        extra = pydantic.Extra.forbid

    @pydantic.validator("terminal_fractions")
    def validate_terminal_fractions(cls, v):
        if v is not None:
            if not v:
                raise ValueError("terminal_fractions must not be empty")
            if any(not 0.0 <= f <= 1.0 for f in v):
                raise ValueError("Terminal fractions must lie in [0, 1]")
        return v


class Scenario(BaseModel):
    name: str = pydantic.Field(..., title="Scenario name", description="Used as the artifact file stem")
    model: str = pydantic.Field(..., title="Model tag")
    horizon: int = pydantic.Field(200, ge=1, title="Horizon T")
    solver: SolverOptions = pydantic.Field(default_factory=SolverOptions)
    output_dir: Optional[str] = pydantic.Field(None, title="Output directory")
    parameters: Dict[str, Any] = pydantic.Field(default_factory=dict)

    @pydantic.validator("name")
    def validate_name(cls, v):
        v = v.strip()
        if not re.fullmatch(r"[A-Za-z0-9._-]+", v):
            raise ValueError("Scenario names may only contain letters, digits, '.', '_' and '-'")
        return v

    @pydantic.validator("model")
    def validate_model(cls, v):
        return v.strip().lower()


def discover_actions(module_name, prefix):
    action_handlers = {}
    module = importlib.import_module(module_name)
    all_members = inspect.getmembers(module)

    # Iterate through the members and filter functions by prefix
    for name, func in all_members:
        if name.startswith(prefix) and inspect.isfunction(func):
            signature = inspect.signature(func)
            key = name[len(prefix):]  # Remove prefix
            config_param = signature.parameters.get("action_config")
            if config_param is None:
                raise ValueError(f"Handler '{name}' must accept an 'action_config' parameter.")
            if (config_annotation := config_param.annotation) != inspect.Parameter.empty:
                config_model = config_annotation
            else:
                config_model = GenericScenarioConfiguration
            if not issubclass(config_model, ScenarioConfiguration):
                raise ValueError(f"The configuration of '{key}' must derive from ScenarioConfiguration.")
            action_handlers[key] = (func, config_model)

    return action_handlers


def get_actions():
    return sorted(discover_actions(module_name="app.actions.handlers", prefix="action_").keys())
