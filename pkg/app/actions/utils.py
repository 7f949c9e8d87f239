"""
Helpers shared by the scenario handlers: solver error capture, path identities and table builders.
"""
import logging
from typing import Callable, Dict, Optional, Sequence

import numpy as np
import pandas as pd

from app.actions.core import Scenario
from app.economies.core import Diagnostic, NecessityReport
from app.economies.olg import PricePath
from app.services.bubble import decomposition_check, telescoping_check
from app.services.core import ScenarioReport
from app.services.errors import LaboratoryError, NonPositiveRate
from app.services.paths import log_arrow_debreu


logger = logging.getLogger(__name__)


def attempt(report: ScenarioReport, func: Callable, *args, **kwargs):
    """Run a solver step; a LaboratoryError becomes an error diagnostic on the report and None is returned."""
    try:
        return func(*args, **kwargs)
    except LaboratoryError as e:
        logger.warning(f"{func.__name__} failed for scenario '{report.name}': {e.code}: {e}")
        report.add_diagnostic(Diagnostic.from_error(e))
        return None


def record_necessity(report: ScenarioReport, necessity: Optional[NecessityReport]):
    report.necessity = necessity
    if necessity is not None:
        report.add_diagnostic(necessity.diagnostic())


def solver_kwargs(scenario: Scenario) -> dict:
    options = scenario.solver
    kwargs = {
        "n_terminals": options.n_terminals,
        "agree_tol": options.agree_tol,
        "terminal_fractions": options.terminal_fractions,
    }
    return {key: value for key, value in kwargs.items() if value is not None}


def identity_residuals(
        log_q: Optional[Sequence[float]], P: Sequence[float], D: Sequence[float]
) -> Dict[str, Optional[float]]:
    """
    Decomposition residual |P_0 - (V_0(T) + q_T P_T)| / P_0 and the telescoping residual, or None where
    a path has no finite positive prices or no Arrow-Debreu prices.
    """
    P, D = np.asarray(P, dtype=float), np.asarray(D, dtype=float)
    residuals = {"decomposition_residual": None, "telescoping_residual": None}
    if log_q is None or not np.all(np.isfinite(P)) or not (P > 0).all():
        return residuals
    log_q = np.asarray(log_q, dtype=float)
    n = min(log_q.size, P.size)
    try:
        residuals["decomposition_residual"] = decomposition_check(np.exp(log_q[:n]), P[:n], D[:n])
        residuals["telescoping_residual"] = telescoping_check(None, P[:n], D[:n], log_q=log_q[:n])
    except LaboratoryError as e:
        logger.debug(f"Identity checks skipped: {e.code}: {e}")
    return residuals


def price_path_table(path: PricePath) -> pd.DataFrame:
    q = path.q if path.q is not None else np.full(path.t.size, np.nan)
    return pd.DataFrame({
        "t": path.t,
        "a_t": path.a,
        "b_t": path.b,
        "D_t": path.D,
        "P_t": path.P,
        "p_t": path.p,
        "R_t": path.R,
        "q_t": q,
        "yield_t": path.yields,
    })


def as_float_list(values) -> list:
    return [float(v) for v in np.asarray(values, dtype=float).ravel()]


def log_q_from_rates(R: Sequence[float]) -> Optional[np.ndarray]:
    """log Arrow-Debreu prices from gross rates R_0..R_{T-1} (the last entry of R is undefined)."""
    try:
        return log_arrow_debreu(np.asarray(R, dtype=float)[:-1])
    except NonPositiveRate as e:
        logger.debug(f"No Arrow-Debreu prices: {e}")
        return None
