import logging
from enum import Enum
from typing import Optional, Sequence

import numpy as np
import pydantic

from app import settings
from .errors import DomainError, LengthMismatch, NegativeYield, NonFinite, ZeroPrice
from .paths import fundamental_partial_sums


logger = logging.getLogger(__name__)


class VerdictLabel(str, Enum):
    BUBBLY = "Bubbly"
    FUNDAMENTAL = "Fundamental"
    INDETERMINATE = "Indeterminate"
    KNIFE_EDGE = "Knife-edge"
    COUNTERFACTUAL_DIVERGENCE = "Counterfactual-divergence"


class BubbleVerdict(pydantic.BaseModel):
    label: VerdictLabel
    tail_decay: Optional[float] = pydantic.Field(
        None, title="Tail decay", description="Geometric decay rate of the dividend yields over the tail"
    )
    yield_partial_sum: float = pydantic.Field(0.0, title="Yield partial sum")
    relevance_liminf: Optional[float] = pydantic.Field(
        None, title="Relevance", description="Trailing-window minimum of the detrended price"
    )
    analytic: bool = False
    notes: str = ""

    class Config:
        use_enum_values = True


def _tail_window(n: int, window: Optional[int]) -> int:
    if window is None:
        window = int(n * settings.TAIL_WINDOW_FRACTION)
    return min(n, max(2, window))


def montrucchio_test(
        yields: Sequence[float],
        analytic_ratio: Optional[float] = None,
        margin: Optional[float] = None,
        window: Optional[int] = None,
        relevance: Optional[float] = None,
) -> BubbleVerdict:
    """
    Classify a price path from its dividend yields D_t/P_t: a bubble exists iff the yields are summable.
    `analytic_ratio` is the exact limit of yield_{t+1}/yield_t when the model can supply it.
    """
    y = np.asarray(yields, dtype=float)
    if not np.all(np.isfinite(y)):
        raise NonFinite("Dividend yields must be finite")
    if (y < 0).any():
        raise NegativeYield("Dividend yields must be nonnegative", min_yield=float(y.min()))
    margin = margin if margin is not None else settings.VERDICT_MARGIN
    partial_sum = float(y.sum())

    def verdict(label, tail_decay=None, notes="", analytic=False):
        logger.debug(f"Verdict {label.value}: decay={tail_decay}, partial sum={partial_sum:.6g}. {notes}")
        return BubbleVerdict(
            label=label, tail_decay=tail_decay, yield_partial_sum=partial_sum,
            relevance_liminf=relevance, analytic=analytic, notes=notes,
        )

    if y.size == 0 or not y.any():
        return verdict(VerdictLabel.BUBBLY, 0.0, "dividends vanish, yields sum to zero", analytic=analytic_ratio is not None)

    if analytic_ratio is not None:
        if analytic_ratio < 1.0:
            return verdict(VerdictLabel.BUBBLY, analytic_ratio, "yields decay geometrically", analytic=True)
        return verdict(VerdictLabel.FUNDAMENTAL, analytic_ratio, "yields do not decay", analytic=True)

    n = y.size
    window = _tail_window(n, window)
    t = np.arange(n - window, n)
    tail = y[-window:]
    if not tail.any():
        return verdict(VerdictLabel.BUBBLY, 0.0, "yields vanish over the tail")
    positive = tail > 0
    if positive.sum() < 2:
        return verdict(VerdictLabel.INDETERMINATE, None, "too few positive yields in the tail to fit a decay rate")

    slope = np.polyfit(t[positive], np.log(tail[positive]), 1)[0]
    decay = float(np.exp(slope))
    if decay < 1.0 - margin:
        return verdict(VerdictLabel.BUBBLY, decay, "yields decay geometrically over the tail")
    if decay > 1.0 + margin:
        return verdict(VerdictLabel.FUNDAMENTAL, decay, "yields grow over the tail")

    first = y[np.argmax(y > 0)]
    if partial_sum > 10.0 * first * np.sqrt(n):
        return verdict(VerdictLabel.FUNDAMENTAL, decay, "partial sums diverge")
    tail_share = float(tail.sum()) / partial_sum
    if tail_share >= 10.0 * margin:
        return verdict(
            VerdictLabel.FUNDAMENTAL, decay, f"partial sums still growing, tail holds {tail_share:.3%} of the sum"
        )
    return verdict(VerdictLabel.INDETERMINATE, decay, "slow decay, partial sums appear to settle")


def checked_verdict(
        yields: Sequence[float],
        analytic_ratio: Optional[float] = None,
        necessity_holds: bool = False,
        relevance: Optional[float] = None,
) -> BubbleVerdict:
    """
    Fit the yields first. The analytic tail ratio replaces the fit only when the necessary condition
    holds and the fit is either indeterminate or already agrees with it.
    """
    numeric = montrucchio_test(yields, relevance=relevance)
    if analytic_ratio is None or not necessity_holds:
        return numeric
    analytic = montrucchio_test(yields, analytic_ratio=analytic_ratio, relevance=relevance)
    if numeric.label in (analytic.label, VerdictLabel.INDETERMINATE):
        return analytic
    logger.debug(f"Analytic ratio {analytic_ratio:.6g} says {analytic.label}, fitted path says {numeric.label}.")
    return numeric


def _log_price_checks(P: np.ndarray):
    if (P <= 0).any():
        t = int(np.argmax(P <= 0))
        raise ZeroPrice(f"Price P_{t}={P[t]} is not positive", t=t)


def telescoping_check(
        q: Optional[Sequence[float]], P: Sequence[float], D: Sequence[float],
        log_q: Optional[Sequence[float]] = None,
) -> float:
    """
    max over T of |q_0 P_0 / (q_T P_T) - prod_{t<=T}(1 + D_t/P_t)| relative to the product, in log space.
    """
    P, D = np.asarray(P, dtype=float), np.asarray(D, dtype=float)
    log_q = np.asarray(log_q, dtype=float) if log_q is not None else np.log(np.asarray(q, dtype=float))
    if not (P.size == D.size == log_q.size):
        raise LengthMismatch(
            f"q, P and D lengths differ: {log_q.size}, {P.size}, {D.size}", q=log_q.size, P=P.size, D=D.size
        )
    _log_price_checks(P)
    if P.size < 2:
        return 0.0
    log_qp = log_q + np.log(P)
    lhs = log_qp[0] - log_qp[1:]
    rhs = np.cumsum(np.log1p(D[1:] / P[1:]))
    return float(np.max(np.abs(np.expm1(lhs - rhs))))


def decomposition_check(q: Sequence[float], P: Sequence[float], D: Sequence[float]) -> float:
    """max over T of |P_0 - (sum_{t<=T} q_t D_t + q_T P_T)| / P_0."""
    P = np.asarray(P, dtype=float)
    _log_price_checks(P[:1])
    report = fundamental_partial_sums(q, D, T=P.size - 1, P=P)
    return report.decomposition_residual(float(P[0]))


def relevance_statistic(P: Sequence[float], scale: Sequence[float], window: Optional[int] = None) -> float:
    """Trailing-window minimum of P_t / scale_t, the finite-horizon stand-in for liminf."""
    P, scale = np.asarray(P, dtype=float), np.asarray(scale, dtype=float)
    if P.size != scale.size:
        raise LengthMismatch(f"P and scale lengths differ: {P.size} vs {scale.size}", P=P.size, scale=scale.size)
    if (scale <= 0).any():
        raise DomainError("scale must be strictly positive")
    window = _tail_window(P.size, window)
    return float(np.min(P[-window:] / scale[-window:]))
