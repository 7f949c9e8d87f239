import logging
import math
from typing import Callable, ClassVar, List, Literal, Optional, Sequence, Union

import numpy as np
import pydantic

from app import settings
from app.services.bubble import BubbleVerdict, VerdictLabel, checked_verdict, relevance_statistic
from app.services.errors import DomainError, IndeterminateGrowth, LaboratoryError, NoAgreement, Overflow
from app.services.numerics import Bracket, bisect_root
from app.services.paths import (
    GeometricPath, PathSpec, eval_path, growth_rate_estimate, is_zero_path, log_arrow_debreu, log_eval_path,
    long_run_ratio, path_log_values, tail_ratio,
)
from .core import ArrayModel, NecessityReport, compare_necessity, safe_exp, safe_ratio


logger = logging.getLogger(__name__)


def _require_positive(**values):
    for name, value in values.items():
        if not value > 0:
            raise DomainError(f"{name} must be positive, got {value}", **{name: value})


class CRRAUtility(pydantic.BaseModel):
    family: Literal["crra"] = "crra"
    beta: float = pydantic.Field(..., gt=0.0, title="Discount factor")
    gamma: float = pydantic.Field(..., gt=0.0, title="Relative risk aversion")

    homothetic: ClassVar[bool] = True

    def mrs(self, y: float, z: float) -> float:
        _require_positive(y=y, z=z)
        return self.beta * (y / z) ** self.gamma

    def mrs_extended(self, y: float, z: float) -> float:
        return 0.0 if y <= 0.0 else self.mrs(y, z)

    def forward_rate(self, y: float, z: float) -> float:
        _require_positive(y=y)
        if z < 0:
            raise DomainError(f"z must be nonnegative, got {z}", z=z)
        return (z / y) ** self.gamma / self.beta


class LinearUtility(pydantic.BaseModel):
    family: Literal["linear"] = "linear"
    beta: float = pydantic.Field(..., gt=0.0, title="Weight on old-age consumption")

    homothetic: ClassVar[bool] = True

    def mrs(self, y: float, z: float) -> float:
        _require_positive(y=y, z=z)
        return self.beta

    def mrs_extended(self, y: float, z: float) -> float:
        return self.beta

    def forward_rate(self, y: float, z: float) -> float:
        _require_positive(y=y)
        return 1.0 / self.beta


class CobbDouglasLogUtility(pydantic.BaseModel):
    """U = (1 - beta) log y + beta log z."""
    family: Literal["cobb_douglas_log"] = "cobb_douglas_log"
    beta: float = pydantic.Field(..., gt=0.0, lt=1.0, title="Old-age weight")

    homothetic: ClassVar[bool] = True

    def mrs(self, y: float, z: float) -> float:
        _require_positive(y=y, z=z)
        return self.beta / (1.0 - self.beta) * (y / z)

    def mrs_extended(self, y: float, z: float) -> float:
        return 0.0 if y <= 0.0 else self.mrs(y, z)

    def forward_rate(self, y: float, z: float) -> float:
        _require_positive(y=y)
        return (1.0 / self.beta - 1.0) * (z / y)


class CustomUtility(pydantic.BaseModel):
    """Extension point for tests: any (mrs, forward_rate) pair. Not serializable."""
    family: Literal["custom"] = "custom"
    mrs_func: Callable[[float, float], float]
    forward_rate_func: Callable[[float, float], float]
    homothetic: bool = False

    def mrs(self, y: float, z: float) -> float:
        _require_positive(y=y, z=z)
        return self.mrs_func(y, z)

    def mrs_extended(self, y: float, z: float) -> float:
        return self.mrs_func(max(y, np.finfo(float).tiny), z)

    def forward_rate(self, y: float, z: float) -> float:
        _require_positive(y=y)
        return self.forward_rate_func(y, z)


UtilitySpec = Union[CRRAUtility, LinearUtility, CobbDouglasLogUtility]
Utility = Union[CRRAUtility, LinearUtility, CobbDouglasLogUtility, CustomUtility]


def mrs(u: Utility, y: float, z: float) -> float:
    return u.mrs(y, z)


def forward_rate(u: Utility, y_frac: float, z_frac: float) -> float:
    return u.forward_rate(y_frac, z_frac)


class EconomyOLG(pydantic.BaseModel):
    utility: Utility
    a: PathSpec = pydantic.Field(..., discriminator="kind", title="Young endowment")
    b: PathSpec = pydantic.Field(
        default_factory=lambda: GeometricPath(level=0.0, ratio=1.0), discriminator="kind", title="Old endowment"
    )
    D: PathSpec = pydantic.Field(..., discriminator="kind", title="Dividends")

    @pydantic.validator("a")
    def validate_young_endowment(cls, v):
        if tail_ratio(v) == 0.0 or (v.kind == "explicit" and min(v.values) <= 0.0):
            raise ValueError("Young endowment a_t must be strictly positive")
        return v

    @pydantic.root_validator(skip_on_failure=True)
    def validate_long_run_ratio(cls, values):
        if math.isinf(long_run_ratio(values["b"], values["a"])):
            raise ValueError("Old endowment grows faster than young endowment; w = lim b_t/a_t is infinite")
        return values

    @property
    def G(self) -> float:
        return tail_ratio(self.a)

    @property
    def w(self) -> float:
        return long_run_ratio(self.b, self.a)

    @property
    def G_d(self) -> float:
        return tail_ratio(self.D)


class AllocationPath(ArrayModel):
    y: np.ndarray
    z: np.ndarray
    x: np.ndarray


class PricePath(ArrayModel):
    """
    Equilibrium prices over t = 0..T. Levels may overflow for long horizons; the detrended
    p_t = P_t/a_t and log a_t are always exact.
    """
    t: np.ndarray
    log_a: np.ndarray
    a: np.ndarray
    b: np.ndarray
    D: np.ndarray
    P: np.ndarray
    p: np.ndarray
    d: np.ndarray
    R: np.ndarray
    log_q: Optional[np.ndarray] = None
    yields: np.ndarray
    terminal_fraction: float = 0.0

    @property
    def horizon(self) -> int:
        return int(self.t[-1])

    @property
    def q(self) -> Optional[np.ndarray]:
        return None if self.log_q is None else np.exp(self.log_q)

    def allocation(self) -> AllocationPath:
        return allocation(self)


class EquilibriumResult(ArrayModel):
    path: PricePath
    paths: List[PricePath]
    terminal_fractions: List[float]
    early_window_agreement: float
    verdict: BubbleVerdict


def allocation(path: PricePath) -> AllocationPath:
    """(y_t, z_t) = (a_t - P_t, b_t + P_t + D_t), with the asset fully held by the young."""
    return AllocationPath(y=path.a - path.P, z=path.b + path.P + path.D, x=np.ones_like(path.P))


def _detrended_inputs(economy: EconomyOLG, t: int):
    """(G_{t+1}, w_{t+1}, d_{t+1}) with every ratio taken in logs."""
    log_a0, log_a1 = log_eval_path(economy.a, t), log_eval_path(economy.a, t + 1)
    growth = math.exp(log_a1 - log_a0)
    w_next = math.exp(log_eval_path(economy.b, t + 1) - log_a1) if not is_zero_path(economy.b) else 0.0
    d_next = math.exp(log_eval_path(economy.D, t + 1) - log_a1) if not is_zero_path(economy.D) else 0.0
    return growth, w_next, d_next


def _solve_min_equation(u: Utility, endowment: float, carry: float, old_wealth: float) -> float:
    """
    Unique P in [0, endowment] with P = min{M(endowment - P, old_wealth) * carry, endowment}.
    The residual g(P) = M(endowment - P, old_wealth) * carry - P is strictly decreasing.
    """
    if carry == 0.0:
        return 0.0

    def g(P):
        return u.mrs_extended(endowment - P, old_wealth) * carry - P

    if g(endowment) >= 0.0:
        return endowment
    return bisect_root(g, Bracket(lo=0.0, hi=endowment, tol=settings.ROOT_TOL * endowment))


def step_back(economy: EconomyOLG, t: int, P_next: float) -> float:
    a_t = eval_path(economy.a, t)
    carry = P_next + eval_path(economy.D, t + 1)
    return _solve_min_equation(economy.utility, a_t, carry, eval_path(economy.b, t + 1) + carry)


def step_back_detrended(economy: EconomyOLG, t: int, p_next: float) -> float:
    """The same equation divided through by a_t; valid for homothetic utilities."""
    growth, w_next, d_next = _detrended_inputs(economy, t)
    carry = growth * (p_next + d_next)
    return _solve_min_equation(economy.utility, 1.0, carry, growth * w_next + carry)


def _needs_detrending(economy: EconomyOLG, T: int) -> bool:
    log_a = path_log_values(economy.a, T)
    return bool(np.max(np.abs(log_a)) > settings.DETREND_LOG_THRESHOLD)


def build_price_path(economy: EconomyOLG, p: np.ndarray, terminal_fraction: float = 0.0) -> PricePath:
    T = p.size - 1
    t = np.arange(T + 1)
    log_a = path_log_values(economy.a, T)
    log_b = path_log_values(economy.b, T)
    log_D = path_log_values(economy.D, T)
    d = safe_exp(log_D - log_a)
    growth = np.exp(np.diff(log_a))
    R = np.append(safe_ratio(growth * (p[1:] + d[1:]), p[:-1]), np.nan)
    finite_rates = R[:-1]
    log_q = None
    if T >= 1 and np.all(np.isfinite(finite_rates)) and (finite_rates > 0).all():
        log_q = log_arrow_debreu(finite_rates)
    a = safe_exp(log_a)
    return PricePath(
        t=t, log_a=log_a, a=a, b=safe_exp(log_b), D=safe_exp(log_D), P=p * a, p=p, d=d, R=R,
        log_q=log_q, yields=safe_ratio(d, p), terminal_fraction=terminal_fraction,
    )


def solve_truncated(
        economy: EconomyOLG, T: int, terminal: Optional[float] = None, terminal_fraction: Optional[float] = None
) -> PricePath:
    """
    Backward induction from P_T. The terminal is given either as a level in [0, a_T] or as a
    fraction of a_T (needed when a_T is not representable).
    """
    if T < 1:
        raise DomainError(f"Horizon must be at least 1, got {T}", T=T)
    if terminal_fraction is None:
        if terminal is None:
            raise DomainError("Either terminal or terminal_fraction is required")
        terminal_fraction = math.exp(math.log(terminal) - log_eval_path(economy.a, T)) if terminal > 0 else 0.0
    if not 0.0 <= terminal_fraction <= 1.0 + 1e-12:
        raise DomainError(f"Terminal price must lie in [0, a_T], got fraction {terminal_fraction}")
    terminal_fraction = min(terminal_fraction, 1.0)

    detrend = _needs_detrending(economy, T)
    if detrend and not getattr(economy.utility, "homothetic", False):
        raise Overflow("Endowments overflow and the utility is not homothetic; cannot detrend", T=T)

    p = np.empty(T + 1)
    p[T] = terminal_fraction
    if detrend:
        for t in range(T - 1, -1, -1):
            p[t] = step_back_detrended(economy, t, p[t + 1])
    else:
        P_next = terminal_fraction * eval_path(economy.a, T)
        for t in range(T - 1, -1, -1):
            P_next = step_back(economy, t, P_next)
            p[t] = P_next / eval_path(economy.a, t)
    logger.debug(
        f"Solved truncated equilibrium: T={T}, terminal fraction={terminal_fraction}, detrended={detrend}, "
        f"p_0={p[0]:.6g}."
    )
    return build_price_path(economy, p, terminal_fraction)


def pricing_residual(economy: EconomyOLG, path: PricePath) -> float:
    """max_t |p_t - min{M(1 - p_t, G(w + p' + d')) G(p' + d'), 1}|, i.e. the pricing equation over a_t."""
    u = economy.utility
    worst = 0.0
    for t in range(path.horizon):
        growth, w_next, d_next = _detrended_inputs(economy, t)
        carry = growth * (path.p[t + 1] + d_next)
        implied = min(u.mrs_extended(1.0 - path.p[t], growth * w_next + carry) * carry, 1.0)
        worst = max(worst, abs(path.p[t] - implied))
    return worst


def detrended_residual(economy: EconomyOLG, path: PricePath) -> float:
    """Interior steps: G(p' + d')/p_t against the forward rate f(1 - p_t, G(w' + p' + d'))."""
    u = economy.utility
    worst = 0.0
    for t in range(path.horizon):
        p_t = path.p[t]
        if not 0.0 < p_t < 1.0:
            continue
        growth, w_next, d_next = _detrended_inputs(economy, t)
        carry = growth * (path.p[t + 1] + d_next)
        lhs = carry / p_t
        rhs = u.forward_rate(1.0 - p_t, growth * w_next + carry)
        worst = max(worst, abs(lhs - rhs) / max(1.0, abs(lhs)))
    return worst


def default_terminal_fractions(n_terminals: int) -> List[float]:
    if n_terminals < 2:
        raise DomainError(f"At least two terminals are needed, got {n_terminals}", n_terminals=n_terminals)
    return [k / (n_terminals - 1) for k in range(n_terminals)]


def early_window_verdict(
        economy: EconomyOLG, path: PricePath, window_end: int, analytic: bool = True
) -> BubbleVerdict:
    """
    Verdict over the agreed window t <= window_end. The analytic yield ratio G_d/G applies when the
    price is asymptotically relevant, dividends have a geometric tail and the necessary condition holds.
    """
    p = path.p[:window_end + 1]
    if (p <= 0).any():
        if is_zero_path(economy.D):
            return BubbleVerdict(
                label=VerdictLabel.FUNDAMENTAL, yield_partial_sum=0.0, relevance_liminf=0.0,
                notes="zero price path equals the zero fundamental value",
            )
        raise DomainError("Non-positive price with positive dividends")
    relevance = relevance_statistic(p, np.ones_like(p))
    ratio = None
    if analytic and relevance >= settings.RELEVANCE_FLOOR and not is_zero_path(economy.D):
        ratio = economy.G_d / economy.G
    return checked_verdict(
        path.yields[1:window_end + 1],
        analytic_ratio=ratio,
        necessity_holds=ratio is not None and _necessity_holds(economy),
        relevance=relevance,
    )


def _necessity_holds(economy: EconomyOLG) -> bool:
    try:
        return check_necessity(economy).holds
    except LaboratoryError as e:
        logger.debug(f"Necessity check unavailable: {e}")
        return False


def solve_equilibrium(
        economy: EconomyOLG,
        T: int,
        n_terminals: Optional[int] = None,
        agree_tol: Optional[float] = None,
        terminal_fractions: Optional[Sequence[float]] = None,
) -> EquilibriumResult:
    """
    Terminal-condition sweep over T-equilibria. Accepted when all truncations agree on p_t for t <= T/2.
    """
    agree_tol = settings.AGREE_TOL if agree_tol is None else agree_tol
    fractions = sorted(terminal_fractions) if terminal_fractions else default_terminal_fractions(
        n_terminals or settings.DEFAULT_TERMINALS
    )
    paths = [solve_truncated(economy, T, terminal_fraction=f) for f in fractions]
    middle = paths[len(paths) // 2]
    window_end = T // 2
    agreement = max(
        float(np.max(np.abs(path.p[:window_end + 1] - middle.p[:window_end + 1]))) for path in paths
    )
    if agreement > agree_tol:
        error = NoAgreement(
            f"Terminal sweep disagrees by {agreement:.3e} over t <= {window_end} (tolerance {agree_tol})",
            agreement=agreement,
            terminal_fractions=list(fractions),
            p0_by_terminal=[float(path.p[0]) for path in paths],
        )
        error.paths = paths
        raise error
    verdict = early_window_verdict(economy, middle, window_end)
    logger.debug(f"Equilibrium accepted with agreement {agreement:.3e}; verdict {verdict.label}.")
    return EquilibriumResult(
        path=middle, paths=paths, terminal_fractions=list(fractions),
        early_window_agreement=agreement, verdict=verdict,
    )


def check_necessity(economy: EconomyOLG) -> NecessityReport:
    """R = f(1, G w) < G_d < G."""
    growth = growth_rate_estimate(economy.a)
    dividend_growth = growth_rate_estimate(economy.D)
    if growth.indeterminate or dividend_growth.indeterminate:
        raise IndeterminateGrowth("Growth rate of a or D is indeterminate")
    R = forward_rate(economy.utility, 1.0, growth.rate * economy.w)
    return compare_necessity(R, dividend_growth.rate, growth.rate)
