from enum import Enum
from typing import Any, Dict, Optional

import numpy as np
import pydantic

from app import settings
from app.services.errors import LaboratoryError


class DiagnosticSeverity(str, Enum):
    ERROR = "error"
    WARNING = "warning"


class DiagnosticCode(str, Enum):
    NECESSITY_FAILS = "NecessityFails"
    BORDERLINE = "Borderline"
    MULTIPLE_ROOTS = "MultipleRoots"
    MULTIPLICITY = "Multiplicity"
    CUTOFF_BELOW_GAP = "CutoffBelowGap"
    EARLY_REGIME = "EarlyRegimeFlag"
    SINGULAR_JACOBIAN = "SingularJacobian"


class Diagnostic(pydantic.BaseModel):
    code: str
    message: str
    severity: DiagnosticSeverity = DiagnosticSeverity.WARNING
    details: Dict[str, Any] = pydantic.Field(default_factory=dict)

    class Config:
        use_enum_values = True

    @classmethod
    def from_error(cls, error: LaboratoryError) -> "Diagnostic":
        return cls(code=error.code, message=str(error), severity=DiagnosticSeverity.ERROR, details=error.details)


class NecessityReport(pydantic.BaseModel):
    R: Optional[float] = pydantic.Field(None, title="Autarky rate")
    G_d: float = pydantic.Field(..., title="Dividend growth")
    G: float = pydantic.Field(..., title="Economic growth")
    holds: bool
    borderline: bool = False

    def diagnostic(self) -> Optional[Diagnostic]:
        if self.borderline:
            return Diagnostic(
                code=DiagnosticCode.BORDERLINE.value,
                message=f"Necessity inequalities are within {settings.NECESSITY_MARGIN} of binding",
                severity=DiagnosticSeverity.ERROR,
                details=self.dict(),
            )
        if not self.holds:
            return Diagnostic(
                code=DiagnosticCode.NECESSITY_FAILS.value,
                message=f"R={self.R} < G_d={self.G_d} < G={self.G} does not hold",
                severity=DiagnosticSeverity.ERROR,
                details=self.dict(),
            )
        return None


def compare_necessity(R: float, G_d: float, G: float, margin: Optional[float] = None) -> NecessityReport:
    """R < G_d < G, with near-ties reported as borderline instead of being classified."""
    margin = settings.NECESSITY_MARGIN if margin is None else margin
    borderline = abs(G_d - R) <= margin or abs(G - G_d) <= margin
    return NecessityReport(R=R, G_d=G_d, G=G, holds=(R < G_d < G) and not borderline, borderline=borderline)


class ArrayModel(pydantic.BaseModel):
    class Config:
        arbitrary_types_allowed = True


def safe_exp(x: np.ndarray) -> np.ndarray:
    with np.errstate(over="ignore"):
        return np.exp(x)


def safe_ratio(num: np.ndarray, den: np.ndarray) -> np.ndarray:
    """Elementwise num/den with nan where the denominator vanishes."""
    num, den = np.asarray(num, dtype=float), np.asarray(den, dtype=float)
    out = np.full(np.broadcast(num, den).shape, np.nan)
    np.divide(num, den, out=out, where=den != 0)
    return out
