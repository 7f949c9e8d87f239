import logging
import math
from enum import Enum
from typing import Callable, List, Literal, Optional, Union

import numpy as np
import pydantic

from app import settings
from app.services.bubble import BubbleVerdict, checked_verdict, relevance_statistic
from app.services.errors import DomainError, LaboratoryError, NoBubblySteadyState, NoEquilibriumFound, NoFixedPoint
from app.services.numerics import Bracket, bisect_root
from app.services.paths import PathSpec, eval_path, is_zero_path, tail_ratio
from .core import ArrayModel, Diagnostic, DiagnosticCode, NecessityReport, compare_necessity, safe_ratio


logger = logging.getLogger(__name__)

# floats either side of the final bracket tried when no midpoint is accepted
ROOT_NEIGHBOURHOOD_ULPS = 8


class CobbDouglasProduction(pydantic.BaseModel):
    """F(K, L) = A K^alpha L^(1 - alpha) + (1 - delta) K."""
    form: Literal["cobb_douglas"] = "cobb_douglas"
    A: float = pydantic.Field(1.0, gt=0.0, title="Total factor productivity")
    alpha: float = pydantic.Field(..., gt=0.0, lt=1.0, title="Capital share")
    delta: float = pydantic.Field(1.0, ge=0.0, le=1.0, title="Depreciation rate")

    def F_K(self, K: float) -> float:
        return self.alpha * self.A * K ** (self.alpha - 1.0) + 1.0 - self.delta

    def F_L(self, K: float) -> float:
        return (1.0 - self.alpha) * self.A * K ** self.alpha


class CustomProduction(pydantic.BaseModel):
    form: Literal["custom"] = "custom"
    marginal_capital: Callable[[float], float]
    marginal_labor: Callable[[float], float]

    def F_K(self, K: float) -> float:
        return self.marginal_capital(K)

    def F_L(self, K: float) -> float:
        return self.marginal_labor(K)


Production = Union[CobbDouglasProduction, CustomProduction]


class DiamondEconomy(pydantic.BaseModel):
    production: Production
    beta: float = pydantic.Field(..., gt=0.0, lt=1.0, title="Old-age weight")
    D: PathSpec = pydantic.Field(..., discriminator="kind", title="Dividends")
    K0: Optional[float] = pydantic.Field(None, gt=0.0, title="Initial capital", description="Defaults to K*")

    @pydantic.validator("production")
    def validate_wage_increasing(cls, v):
        grid = np.logspace(-6, 3, 50)
        wages = np.array([v.F_L(K) for K in grid])
        if not np.all(np.diff(wages) > 0):
            raise ValueError("F_L(K, 1) must be increasing in K")
        return v


class FailureMode(str, Enum):
    COLLAPSE = "Collapse"
    CROWDING_OUT = "Crowding-out"


class DiamondPath(ArrayModel):
    t: np.ndarray
    K: np.ndarray
    P: np.ndarray
    R: np.ndarray
    D: np.ndarray
    failure: Optional[FailureMode] = None

    @property
    def survived(self) -> int:
        return int(self.t[-1])

    @property
    def yields(self) -> np.ndarray:
        return safe_ratio(self.D, self.P)


class ShootingResult(ArrayModel):
    P0: float
    path: DiamondPath
    verdict: BubbleVerdict
    multiplicity: bool = False

    def diagnostics(self) -> List[Diagnostic]:
        if not self.multiplicity:
            return []
        return [Diagnostic(
            code=DiagnosticCode.MULTIPLICITY.value,
            message="P0 = 0 also stays bounded through the horizon; reporting the positive root",
            details={"P0": self.P0},
        )]


def _savings_gap(e: DiamondEconomy, K: float) -> float:
    return e.beta * e.production.F_L(K) - K


def steady_capital_numeric(e: DiamondEconomy) -> float:
    """Root of beta F_L(K, 1) - K, expanding the bracket up to CAPITAL_BRACKET_CAP."""
    lo, hi = 1e-12, 1.0
    if _savings_gap(e, lo) <= 0:
        raise NoFixedPoint("Savings fall short of capital near K = 0", K=lo)
    while _savings_gap(e, hi) > 0:
        hi *= 2.0
        if hi > settings.CAPITAL_BRACKET_CAP:
            raise NoFixedPoint(
                f"No sign change of beta*F_L(K) - K up to K = {settings.CAPITAL_BRACKET_CAP:g}",
                cap=settings.CAPITAL_BRACKET_CAP,
            )
    return bisect_root(lambda K: _savings_gap(e, K), Bracket(lo=lo, hi=hi))


def steady_capital(e: DiamondEconomy) -> float:
    p = e.production
    if isinstance(p, CobbDouglasProduction):
        return (e.beta * p.A * (1.0 - p.alpha)) ** (1.0 / (1.0 - p.alpha))
    return steady_capital_numeric(e)


def initial_capital(e: DiamondEconomy) -> float:
    return e.K0 if e.K0 is not None else steady_capital(e)


def autarky_rate(e: DiamondEconomy) -> float:
    return e.production.F_K(steady_capital(e))


def check_necessity_diamond(e: DiamondEconomy) -> NecessityReport:
    """F_K(K*, 1) < G_d < 1."""
    return compare_necessity(autarky_rate(e), tail_ratio(e.D), 1.0)


def bubbly_steady_state(e: DiamondEconomy) -> tuple:
    """(K_bar, P_bar) with F_K(K_bar, 1) = 1 and P_bar = beta F_L(K_bar, 1) - K_bar."""
    p = e.production
    if isinstance(p, CobbDouglasProduction):
        if p.delta == 0.0:
            raise NoBubblySteadyState("F_K exceeds 1 everywhere when delta = 0")
        K_bar = (p.alpha * p.A / p.delta) ** (1.0 / (1.0 - p.alpha))
    else:
        lo, hi = 1e-12, 1.0
        while p.F_K(hi) > 1.0 and hi < settings.CAPITAL_BRACKET_CAP:
            hi *= 2.0
        try:
            K_bar = bisect_root(lambda K: p.F_K(K) - 1.0, Bracket(lo=lo, hi=hi))
        except LaboratoryError as e_:
            raise NoBubblySteadyState(f"No capital stock with F_K = 1: {e_}") from e_
    P_bar = _savings_gap(e, K_bar)
    if P_bar <= 0:
        raise NoBubblySteadyState(f"Bubble size {P_bar} at F_K = 1 is not positive", K_bar=K_bar, P_bar=P_bar)
    return K_bar, P_bar


def simulate(e: DiamondEconomy, P0: float, T: int) -> DiamondPath:
    """
    Forward iteration of K_{t+1} = beta F_L(K_t) - P_t and P_{t+1} = P_t F_K(K_{t+1}) - D_{t+1}.
    Halts at the first negative price (collapse) or nonpositive capital (crowding out).
    """
    K_start = initial_capital(e)
    ceiling = e.beta * e.production.F_L(K_start)
    if not 0.0 <= P0 < ceiling:
        raise DomainError(f"P0 must lie in [0, {ceiling}), got {P0}", P0=P0, ceiling=ceiling)
    K, P, R, D = [K_start], [P0], [], [eval_path(e.D, 0)]
    failure = None
    for t in range(T):
        K_next = e.beta * e.production.F_L(K[-1]) - P[-1]
        if K_next <= 0.0:
            failure = FailureMode.CROWDING_OUT
            break
        rate = e.production.F_K(K_next)
        D_next = eval_path(e.D, t + 1)
        P_next = P[-1] * rate - D_next
        if P_next < 0.0:
            failure = FailureMode.COLLAPSE
            break
        K.append(K_next)
        P.append(P_next)
        R.append(rate)
        D.append(D_next)
    R.append(math.nan)
    return DiamondPath(
        t=np.arange(len(K)), K=np.array(K), P=np.array(P), R=np.array(R), D=np.array(D), failure=failure
    )


def capital_comparison_path(e: DiamondEconomy, T: int) -> np.ndarray:
    """K_t with P identically zero: the upper envelope for capital on any equilibrium path."""
    K = [initial_capital(e)]
    for _ in range(T):
        K.append(e.beta * e.production.F_L(K[-1]))
    return np.array(K)


def no_arbitrage_residual(e: DiamondEconomy, path: DiamondPath) -> float:
    worst = 0.0
    for t in range(path.survived):
        gap = abs(path.P[t + 1] + path.D[t + 1] - path.P[t] * e.production.F_K(path.K[t + 1]))
        worst = max(worst, gap / max(path.P[t], np.finfo(float).tiny))
    return worst


class ShotOutcome(str, Enum):
    RAISE = "raise"
    LOWER = "lower"
    ACCEPT = "accept"


def near_steady_state(K: float, P: float, steady: Optional[tuple]) -> bool:
    if steady is None:
        return True
    K_bar, P_bar = steady
    band = settings.STEADY_STATE_NEIGHBOURHOOD
    return abs(K - K_bar) <= band * K_bar and abs(P - P_bar) <= band * P_bar


def classify_shot(e: DiamondEconomy, P0: float, T: int, steady: Optional[tuple]) -> tuple:
    """
    Simulate past T and sort P0 into: crowding out (lower P0), collapse or drift onto the bubbleless
    branch (raise P0), or a path that lasts T periods and sits near the bubbly steady state at T.
    """
    path = simulate(e, P0, settings.SHOOTING_HORIZON_FACTOR * T)
    if path.survived >= T and near_steady_state(path.K[T], path.P[T], steady):
        return ShotOutcome.ACCEPT, path
    if path.failure is FailureMode.CROWDING_OUT:
        return ShotOutcome.LOWER, path
    return ShotOutcome.RAISE, path


def diamond_verdict(e: DiamondEconomy, path: DiamondPath, window_end: int) -> BubbleVerdict:
    P = path.P[:window_end + 1]
    relevance = relevance_statistic(P, np.ones_like(P))
    ratio = None
    if relevance >= settings.RELEVANCE_FLOOR and not is_zero_path(e.D):
        ratio = tail_ratio(e.D)
    return checked_verdict(
        path.yields[1:window_end + 1],
        analytic_ratio=ratio,
        necessity_holds=check_necessity_diamond(e).holds,
        relevance=relevance,
    )


def _neighbours(x: float, ceiling: float) -> List[float]:
    below = above = x
    found = [x]
    for _ in range(ROOT_NEIGHBOURHOOD_ULPS):
        below, above = float(np.nextafter(below, -np.inf)), float(np.nextafter(above, np.inf))
        found.extend([below, above])
    return [c for c in found if 0.0 <= c < ceiling]


def shoot(e: DiamondEconomy, T: int, tol: Optional[float] = None) -> ShootingResult:
    """
    Bisection on P0 over [0, beta F_L(K0)). Crowding out lowers P0; collapse and convergence to
    the bubbleless branch raise it. Without a tolerance the bracket shrinks to adjacent floats.
    If no midpoint is accepted the floats around the final bracket are tried and the longest
    accepted path is kept.
    """
    tol = tol if tol is not None else 0.0
    K_start = initial_capital(e)
    ceiling = e.beta * e.production.F_L(K_start)
    try:
        steady = bubbly_steady_state(e)
    except NoBubblySteadyState:
        steady = None

    lo, hi = 0.0, float(np.nextafter(ceiling, 0.0))
    visited = {}
    accepted = None
    while hi - lo > tol:
        mid = lo + 0.5 * (hi - lo)
        if not lo < mid < hi:
            break
        outcome, path = visited[mid] = classify_shot(e, mid, T, steady)
        if outcome is ShotOutcome.ACCEPT:
            accepted = mid
            break
        if outcome is ShotOutcome.RAISE:
            lo = mid
        else:
            hi = mid

    if accepted is None:
        for c in _neighbours(lo, ceiling) + _neighbours(hi, ceiling):
            if c not in visited:
                visited[c] = classify_shot(e, c, T, steady)
        ranked = sorted(
            ((path.survived, c) for c, (outcome, path) in visited.items() if outcome is ShotOutcome.ACCEPT),
            reverse=True,
        )
        if not ranked:
            failures = sorted({path.failure.value for _, path in visited.values() if path.failure is not None})
            survived = max((path.survived for _, path in visited.values() if path.failure is not None), default=0)
            raise NoEquilibriumFound(
                f"No initial price near {lo:.17g} stays near the bubbly branch through T={T}; longest failing "
                f"path lasts {survived} periods",
                P0=lo,
                survived=survived,
                failure_modes=failures,
            )
        accepted = ranked[0][1]

    P0 = accepted
    best = simulate(e, P0, T)
    multiplicity = simulate(e, 0.0, T).failure is None and P0 > 0.0
    verdict = diamond_verdict(e, best, window_end=(3 * T) // 4)
    logger.debug(
        f"Shooting converged: P0={P0:.17g} after {len(visited)} trial paths, survived "
        f"{visited[P0][1].survived} periods, verdict {verdict.label}."
    )
    return ShootingResult(P0=P0, path=best, verdict=verdict, multiplicity=multiplicity)
