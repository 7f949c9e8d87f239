import json
import logging
from pathlib import Path
from typing import Union

import pydantic

from app.actions.core import Scenario
from app.services.errors import ConfigurationNotFound, ConfigurationValidationError


logger = logging.getLogger(__name__)


class ScenarioConfigurationManager:
    """Loads scenario files from disk, caching parsed scenarios by resolved path."""

    def __init__(self, **kwargs):
        self.cache = kwargs.get("cache", {})

    def _get_scenario_key(self, path: Union[str, Path]) -> str:
        return str(Path(path).resolve())

    def get_scenario(self, path: Union[str, Path], reload=False) -> Scenario:
        key = self._get_scenario_key(path)
        if not reload and key in self.cache:
            return self.cache[key]
        try:
            raw = Path(path).read_text(encoding="utf-8")
        except FileNotFoundError as e:
            raise ConfigurationNotFound(f"Scenario file '{path}' not found") from e
        except OSError as e:
            raise ConfigurationNotFound(f"Scenario file '{path}' cannot be read: {e}") from e
        try:
            data = json.loads(raw)
        except json.JSONDecodeError as e:
            raise ConfigurationValidationError(f"Scenario file '{path}' is not valid JSON: {e}") from e
        try:
            scenario = Scenario.parse_obj(data)
        except pydantic.ValidationError as e:
            raise ConfigurationValidationError(f"Scenario file '{path}' is invalid: {e}") from e
        logger.debug(f"Loaded scenario '{scenario.name}' ({scenario.model}) from {path}.")
        self.cache[key] = scenario
        return scenario

    def set_scenario(self, path: Union[str, Path], scenario: Scenario):
        self.cache[self._get_scenario_key(path)] = scenario

    def delete_scenario(self, path: Union[str, Path]):
        return self.cache.pop(self._get_scenario_key(path), None)
