import copy
import math
from typing import Any, Dict, Iterable, List, Type

import numpy as np
import pydantic
from pydantic.fields import SHAPE_SINGLETON

from app.actions.core import ScenarioConfiguration


def _is_scalar(field) -> bool:
    return (
        field.shape == SHAPE_SINGLETON and isinstance(field.type_, type) and issubclass(field.type_, (int, float))
    )


def resolve_parameter(config_model: Type[ScenarioConfiguration], parameter: str) -> List[str]:
    """
    Split a dotted parameter name ("D.ratio") and check that every part is a declared field. The leaf must
    be a scalar. Discriminated unions are resolved against each of their members.
    """
    parts = parameter.split(".")
    models: Iterable[Type[pydantic.BaseModel]] = [config_model]
    for i, part in enumerate(parts):
        fields = [m.__fields__[part] for m in models if part in m.__fields__]
        if not fields:
            raise ValueError(f"'{'.'.join(parts[:i + 1])}' is not a declared parameter of {config_model.__name__}")
        if i == len(parts) - 1:
            if not all(_is_scalar(f) for f in fields):
                raise ValueError(f"'{parameter}' is not a scalar parameter")
            break
        models = []
        for f in fields:
            members = [s.type_ for s in f.sub_fields] if f.sub_fields else [f.type_]
            models.extend(m for m in members if isinstance(m, type) and issubclass(m, pydantic.BaseModel))
    return parts


def apply_override(parameters: Dict[str, Any], parts: List[str], value: Any) -> Dict[str, Any]:
    """Copy of `parameters` with the dotted path set to `value`; intermediate dicts must exist."""
    updated = copy.deepcopy(parameters)
    target = updated
    for part in parts[:-1]:
        if not isinstance(target.get(part), dict):
            raise ValueError(f"Cannot override '{'.'.join(parts)}': '{part}' is not set in the scenario")
        target = target[part]
    target[parts[-1]] = value
    return updated


def parse_grid(grid: str) -> List[float]:
    values = [v.strip() for v in grid.split(",") if v.strip()]
    if not values:
        raise ValueError("The grid is empty")
    return [float(v) for v in values]


def to_jsonable(value: Any) -> Any:
    """Plain JSON types only: numpy scalars and arrays unwrapped, non-finite floats mapped to None."""
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return to_jsonable(value.tolist())
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else None
    if isinstance(value, pydantic.BaseModel):
        return to_jsonable(value.dict())
    return value
