from enum import Enum
from typing import Any, Dict, List, Optional

import pandas as pd
import pydantic

from app.economies.core import Diagnostic, DiagnosticSeverity, NecessityReport
from app.services.bubble import BubbleVerdict


REPORT_SCHEMA_VERSION = 1


class ModelTag(str, Enum):
    TEXTBOOK = "textbook"
    TWO_SECTOR = "two_sector"
    CES = "ces"
    WILSON = "wilson"
    CRRA = "crra"
    OLG_GENERIC = "olg_generic"
    DIAMOND = "diamond"
    BEWLEY_INVEST = "bewley_invest"
    BEWLEY_PREF = "bewley_pref"


class RowStatus(str, Enum):
    OK = "ok"
    FAILED = "failed"


class ExitCode(int, Enum):
    SUCCESS = 0
    CONFIGURATION_ERROR = 1
    SOLVER_DIAGNOSTICS = 2


class ScenarioReport(pydantic.BaseModel):
    name: str
    model: str
    necessity: Optional[NecessityReport] = None
    verdict: Optional[BubbleVerdict] = None
    diagnostics: List[Diagnostic] = pydantic.Field(default_factory=list)
    solver: Dict[str, Any] = pydantic.Field(default_factory=dict, description="Agreement stats and residuals")
    results: Dict[str, Any] = pydantic.Field(default_factory=dict, description="Model-specific closed forms")
    table: Optional[pd.DataFrame] = pydantic.Field(None, description="Path table written to <name>.csv")

    class Config:
        arbitrary_types_allowed = True

    def add_diagnostic(self, diagnostic: Optional[Diagnostic]):
        if diagnostic is not None:
            self.diagnostics.append(diagnostic)

    @property
    def errors(self) -> List[Diagnostic]:
        return [d for d in self.diagnostics if d.severity == DiagnosticSeverity.ERROR.value]

    @property
    def exit_code(self) -> ExitCode:
        return ExitCode.SOLVER_DIAGNOSTICS if self.errors else ExitCode.SUCCESS

    def summary(self) -> dict:
        verdict = None
        if self.verdict is not None:
            verdict = {
                "label": self.verdict.label,
                "tail_decay": self.verdict.tail_decay,
                "relevance": self.verdict.relevance_liminf,
                "yield_partial_sum": self.verdict.yield_partial_sum,
                "analytic": self.verdict.analytic,
                "notes": self.verdict.notes,
            }
        return {
            "schema": REPORT_SCHEMA_VERSION,
            "name": self.name,
            "model": self.model,
            "necessity": self.necessity.dict() if self.necessity else None,
            "verdict": verdict,
            "diagnostics": [d.dict() for d in self.diagnostics],
            "solver": self.solver,
            "results": self.results,
        }
