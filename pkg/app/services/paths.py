import logging
import math
from typing import List, Literal, Optional, Sequence, Union

import numpy as np
import pydantic

from app import settings
from .errors import EmptyWindow, LengthMismatch, NonPositive, NonPositiveRate, Overflow


logger = logging.getLogger(__name__)


class GeometricPath(pydantic.BaseModel):
    kind: Literal["geometric"] = "geometric"
    level: float = pydantic.Field(..., ge=0.0, title="Level", description="Value at t=0")
    ratio: float = pydantic.Field(..., gt=0.0, title="Ratio", description="Gross growth factor per period")

    @property
    def stored_length(self) -> int:
        return 0


class ExplicitPath(pydantic.BaseModel):
    kind: Literal["explicit"] = "explicit"
    values: List[float] = pydantic.Field(..., min_items=1, title="Values", description="Stored values for t=0,1,..")
    tail_ratio: float = pydantic.Field(
        ..., gt=0.0, title="Tail ratio", description="Growth factor used past the stored values"
    )

    @pydantic.validator("values")
    def validate_values(cls, v):
        if not all(math.isfinite(x) and x >= 0.0 for x in v):
            raise ValueError("Explicit path values must be finite and nonnegative")
        return v

    @property
    def stored_length(self) -> int:
        return len(self.values)


# Fields of this type set discriminator="kind" on their own Field
PathSpec = Union[GeometricPath, ExplicitPath]


class GrowthEstimate(pydantic.BaseModel):
    rate: float
    analytic: bool = False
    indeterminate: bool = False
    excluded_zeros: int = 0


class ValuationReport(pydantic.BaseModel):
    q: np.ndarray
    V0_partial: np.ndarray
    qP_tail: Optional[np.ndarray] = None

    class Config:
        arbitrary_types_allowed = True

    @property
    def bubble_component(self) -> Optional[float]:
        return None if self.qP_tail is None else float(self.qP_tail[-1])

    def decomposition_residual(self, P0: float) -> float:
        """max over T of |P_0 - (V_0(T) + q_T P_T)| relative to P_0."""
        if self.qP_tail is None:
            raise LengthMismatch("No price path attached to the valuation report")
        return float(np.max(np.abs(P0 - (self.V0_partial + self.qP_tail))) / P0)


def eval_path(spec: PathSpec, t: int) -> float:
    if t < 0:
        raise ValueError(f"t must be nonnegative, got {t}")
    try:
        if isinstance(spec, GeometricPath):
            value = 0.0 if spec.level == 0.0 else spec.level * spec.ratio ** t
        elif t < len(spec.values):
            value = spec.values[t]
        else:
            value = spec.values[-1] * spec.tail_ratio ** (t - len(spec.values) + 1)
    except OverflowError:
        value = math.inf
    if not math.isfinite(value):
        raise Overflow(f"Path value at t={t} is not representable; detrend instead", t=t)
    return value


def log_eval_path(spec: PathSpec, t: int) -> float:
    if isinstance(spec, GeometricPath):
        if spec.level == 0.0:
            return -math.inf
        return math.log(spec.level) + t * math.log(spec.ratio)
    if t < len(spec.values):
        return math.log(spec.values[t]) if spec.values[t] > 0 else -math.inf
    last = spec.values[-1]
    if last == 0.0:
        return -math.inf
    return math.log(last) + (t - len(spec.values) + 1) * math.log(spec.tail_ratio)


def path_values(spec: PathSpec, horizon: int) -> np.ndarray:
    """Values for t = 0..horizon."""
    return np.array([eval_path(spec, t) for t in range(horizon + 1)])


def path_log_values(spec: PathSpec, horizon: int) -> np.ndarray:
    return np.array([log_eval_path(spec, t) for t in range(horizon + 1)])


def is_zero_path(spec: PathSpec) -> bool:
    if isinstance(spec, GeometricPath):
        return spec.level == 0.0
    return all(v == 0.0 for v in spec.values)


def tail_ratio(spec: PathSpec) -> float:
    """Exact asymptotic growth factor lim x_t^(1/t); zero paths grow at 0."""
    if isinstance(spec, GeometricPath):
        return 0.0 if spec.level == 0.0 else spec.ratio
    return 0.0 if spec.values[-1] == 0.0 else spec.tail_ratio


def long_run_ratio(num: PathSpec, den: PathSpec) -> float:
    """lim num_t / den_t for specs with geometric tails (den eventually positive)."""
    if tail_ratio(num) == 0.0:
        return 0.0
    if tail_ratio(num) < tail_ratio(den):
        return 0.0
    if tail_ratio(num) > tail_ratio(den):
        return math.inf
    t0 = max(num.stored_length, den.stored_length)
    return math.exp(log_eval_path(num, t0) - log_eval_path(den, t0))


def multiply_paths(first: PathSpec, second: PathSpec) -> PathSpec:
    if isinstance(first, GeometricPath) and isinstance(second, GeometricPath):
        return GeometricPath(level=first.level * second.level, ratio=first.ratio * second.ratio)
    n = max(first.stored_length, second.stored_length, 1)
    return ExplicitPath(
        values=[eval_path(first, t) * eval_path(second, t) for t in range(n)],
        tail_ratio=(first.ratio if isinstance(first, GeometricPath) else first.tail_ratio)
        * (second.ratio if isinstance(second, GeometricPath) else second.tail_ratio),
    )


def growth_rate_estimate(
        values: Union[GeometricPath, ExplicitPath, Sequence[float], np.ndarray],
        window: Optional[int] = None,
        logs: bool = False,
) -> GrowthEstimate:
    """
    Estimate limsup x_t^(1/t). Parametric specs are answered analytically; sequences (indexed from t=0)
    use the max over the trailing window, pass `logs=True` when handing over log x_t.
    """
    if isinstance(values, (GeometricPath, ExplicitPath)):
        return GrowthEstimate(rate=tail_ratio(values), analytic=True)

    series = np.asarray(values, dtype=float)
    n = series.size
    if window is None:
        window = max(2, int(n * settings.TAIL_WINDOW_FRACTION))
    if window < 2:
        raise EmptyWindow(f"window must be at least 2, got {window}", window=window)
    t = np.arange(max(1, n - window), n)
    if t.size == 0:
        raise EmptyWindow(f"No observations with t >= 1 in a series of length {n}", length=n)
    tail = series[t]
    if logs:
        keep = np.isfinite(tail)
        log_tail = tail[keep]
    else:
        if (tail < 0).any():
            raise NonPositive("Negative entries in growth window", min_value=float(tail.min()))
        keep = tail > 0
        log_tail = np.log(tail[keep])
    excluded = int((~keep).sum())
    if not keep.any():
        raise NonPositive("Growth window holds no positive entries", window=int(t.size))
    rates = np.exp(log_tail / t[keep])
    spread = rates.max() - rates.min()
    if excluded:
        logger.debug(f"growth_rate_estimate excluded {excluded} zero entries from the trailing window.")
    return GrowthEstimate(
        rate=float(rates.max()),
        indeterminate=bool(spread > settings.INDETERMINATE_SPREAD),
        excluded_zeros=excluded,
    )


def log_arrow_debreu(R: Sequence[float]) -> np.ndarray:
    rates = np.asarray(R, dtype=float)
    if not np.all(np.isfinite(rates)) or (rates <= 0).any():
        bad = int(np.argmax(~(np.isfinite(rates) & (rates > 0))))
        raise NonPositiveRate(f"Gross rate R_{bad}={rates[bad]} is not positive", t=bad, R=float(rates[bad]))
    return np.concatenate(([0.0], -np.cumsum(np.log(rates))))


def arrow_debreu(R: Sequence[float]) -> np.ndarray:
    """q_0 = 1, q_{t+1} = q_t / R_t."""
    return np.exp(log_arrow_debreu(R))


def fundamental_partial_sums(
        q: Sequence[float], D: Sequence[float], T: int, P: Optional[Sequence[float]] = None
) -> ValuationReport:
    q, D = np.asarray(q, dtype=float), np.asarray(D, dtype=float)
    if q.size < T + 1 or D.size < T + 1:
        raise LengthMismatch(
            f"Need q and D over t=0..{T}, got lengths {q.size} and {D.size}", q=q.size, D=D.size, T=T
        )
    terms = q[1:T + 1] * D[1:T + 1]
    V0_partial = np.concatenate(([0.0], np.cumsum(terms)))
    qP_tail = None
    if P is not None:
        P = np.asarray(P, dtype=float)
        if P.size < T + 1:
            raise LengthMismatch(f"Need P over t=0..{T}, got length {P.size}", P=P.size, T=T)
        qP_tail = q[:T + 1] * P[:T + 1]
    return ValuationReport(q=q[:T + 1], V0_partial=V0_partial, qP_tail=qP_tail)
