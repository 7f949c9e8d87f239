import logging
import math
from typing import List, Optional, Sequence, Tuple

import numpy as np
import pydantic

from app import settings
from app.services.bubble import BubbleVerdict, checked_verdict, montrucchio_test, relevance_statistic
from app.services.errors import DomainError, IndeterminateGrowth, LaboratoryError, NoAgreement, NoRoot, ZeroPrice
from app.services.numerics import Bracket, bisect_root
from app.services.paths import PathSpec, growth_rate_estimate, is_zero_path, log_eval_path, path_log_values, tail_ratio
from .core import ArrayModel, Diagnostic, DiagnosticCode, NecessityReport, compare_necessity, safe_exp


logger = logging.getLogger(__name__)

PROBABILITY_TOL = 1e-12


class ShockDistribution(pydantic.BaseModel):
    """Discrete preference-shock distribution; atoms are kept sorted."""
    theta: List[float] = pydantic.Field(..., min_items=2, title="Shock values")
    prob: List[float] = pydantic.Field(..., min_items=2, title="Probabilities")

    @pydantic.root_validator(skip_on_failure=True)
    def validate_atoms(cls, values):
        theta, prob = values["theta"], values["prob"]
        if len(theta) != len(prob):
            raise ValueError("theta and prob must have the same length")
        if any(x <= 0.0 for x in theta):
            raise ValueError("Shock values must be positive")
        if any(p <= 0.0 for p in prob):
            raise ValueError("Every atom needs positive probability")
        if abs(sum(prob) - 1.0) > PROBABILITY_TOL:
            raise ValueError(f"Probabilities sum to {sum(prob)}, not 1")
        if len(set(theta)) != len(theta):
            raise ValueError("Shock values must be distinct")
        order = sorted(range(len(theta)), key=theta.__getitem__)
        values["theta"] = [theta[i] for i in order]
        values["prob"] = [prob[i] for i in order]
        return values

    @property
    def atoms(self) -> np.ndarray:
        return np.array(self.theta)

    @property
    def weights(self) -> np.ndarray:
        return np.array(self.prob)

    @property
    def theta_L(self) -> float:
        return self.theta[0]

    @property
    def theta_H(self) -> float:
        return self.theta[-1]

    @property
    def gap(self) -> float:
        """Distance from theta_L to the next atom: the isolation margin of the lowest shock."""
        return self.theta[1] - self.theta[0]


class PrefShockEconomy(pydantic.BaseModel):
    beta: float = pydantic.Field(..., gt=0.0, lt=1.0)
    gamma: float = pydantic.Field(..., gt=0.0)
    F: ShockDistribution
    A: PathSpec = pydantic.Field(..., discriminator="kind", title="Labor productivity")
    D: PathSpec = pydantic.Field(..., discriminator="kind", title="Dividends")

    @pydantic.validator("A")
    def validate_productivity(cls, v):
        if tail_ratio(v) == 0.0 or (v.kind == "explicit" and min(v.values) <= 0.0):
            raise ValueError("Labor productivity must be strictly positive")
        return v


class CutoffPath(ArrayModel):
    t: np.ndarray
    theta_bar: np.ndarray
    R: np.ndarray
    P: np.ndarray
    p_hat: np.ndarray
    w: np.ndarray
    log_A: np.ndarray
    A: np.ndarray
    D: np.ndarray
    d_hat: np.ndarray
    yields: np.ndarray
    terminal_theta_bar: float
    multiple_roots: List[int] = []
    root_brackets: List[List[Tuple[float, float]]] = pydantic.Field(
        [], description="Grid intervals holding each root, one entry per period in multiple_roots"
    )

    @property
    def horizon(self) -> int:
        return int(self.t[-1])


class PrefEquilibrium(ArrayModel):
    path: CutoffPath
    paths: List[CutoffPath]
    terminal_theta_bars: List[float]
    early_window_agreement: float
    verdict: BubbleVerdict
    diagnostics: List[Diagnostic] = []


def _check_cutoff(F: ShockDistribution, theta_bar: float):
    if not F.theta_L - PROBABILITY_TOL <= theta_bar <= F.theta_H + PROBABILITY_TOL:
        raise DomainError(
            f"Cutoff {theta_bar} outside [{F.theta_L}, {F.theta_H}]", theta_bar=theta_bar
        )


def liquidity_premium(F: ShockDistribution, theta_bar: float) -> float:
    """sum_i prob_i max{1, theta_i / theta_bar}."""
    _check_cutoff(F, theta_bar)
    return float(np.dot(F.weights, np.maximum(1.0, F.atoms / theta_bar)))


def savings_wedge(F: ShockDistribution, theta_bar: float, gamma: float) -> float:
    """sum_i prob_i max{0, theta_bar^(1/gamma) - theta_i^(1/gamma)}."""
    _check_cutoff(F, theta_bar)
    exponent = 1.0 / gamma
    return float(np.dot(F.weights, np.maximum(0.0, theta_bar ** exponent - F.atoms ** exponent)))


def detrended_price(F: ShockDistribution, theta_bar: float, gamma: float) -> float:
    """P_t / A_t^(1/gamma) as a function of the cutoff."""
    return liquidity_premium(F, theta_bar) ** (1.0 / gamma) * savings_wedge(F, theta_bar, gamma)


def price_given_cutoff(A_t: float, gamma: float, F: ShockDistribution, theta_bar: float) -> float:
    if theta_bar <= F.theta_L:
        raise ZeroPrice(f"Cutoff at theta_L={F.theta_L} implies a zero price", theta_bar=theta_bar)
    return A_t ** (1.0 / gamma) * detrended_price(F, theta_bar, gamma)


def consumption_rule(
        theta: float, A_next: float, R: float, theta_bar: float, gamma: float, beta: float
) -> float:
    """(A_{t+1} / (beta R) min{theta, theta_bar})^(1/gamma)."""
    if min(theta, A_next, R, theta_bar, gamma, beta) <= 0.0:
        raise DomainError("consumption_rule inputs must be positive")
    return (A_next / (beta * R) * min(theta, theta_bar)) ** (1.0 / gamma)


def price_lower_bound_constant(e: PrefShockEconomy) -> float:
    """p = ((theta_L + gap)^(1/gamma) - theta_L^(1/gamma)) F(theta_L)."""
    exponent = 1.0 / e.gamma
    F = e.F
    return ((F.theta_L + F.gap) ** exponent - F.theta_L ** exponent) * F.prob[0]


def price_lower_bound(e: PrefShockEconomy, t: int) -> float:
    return price_lower_bound_constant(e) * math.exp(log_eval_path(e.A, t) / e.gamma)


def cutoff_grid(F: ShockDistribution, points: Optional[int] = None) -> np.ndarray:
    points = points or settings.CUTOFF_GRID_POINTS
    return F.theta_L + (F.theta_H - F.theta_L) * np.arange(points + 1) / points


def _step_residual(e: PrefShockEconomy, t: int, target: float):
    """
    g(theta_bar) in units of A_{t+1}^(1/gamma): the detrended price times R_t, less p_{t+1} + d_{t+1}.
    """
    log_growth = log_eval_path(e.A, t) - log_eval_path(e.A, t + 1)
    tilt = math.exp((1.0 / e.gamma - 1.0) * log_growth)

    def g(theta_bar):
        return detrended_price(e.F, theta_bar, e.gamma) * tilt / (e.beta * liquidity_premium(e.F, theta_bar)) - target
    return g


def cutoff_roots(e: PrefShockEconomy, t: int, target: float) -> Tuple[List[float], List[Tuple[float, float]]]:
    """
    Every cutoff in (theta_L, theta_H] solving the pricing equation at t, found by a sign scan over
    the cutoff grid, together with the grid interval each root was bisected in.
    """
    g = _step_residual(e, t, target)
    grid = cutoff_grid(e.F)
    values = np.array([g(theta) for theta in grid])
    roots, brackets = [], []
    for k in range(1, grid.size):
        lo, hi = values[k - 1], values[k]
        if hi == 0.0:
            root = float(grid[k])
        elif lo != 0.0 and np.sign(lo) != np.sign(hi):
            root = bisect_root(g, Bracket(lo=grid[k - 1], hi=grid[k], tol=settings.ROOT_TOL))
        else:
            continue
        if root > e.F.theta_L:
            roots.append(root)
            brackets.append((float(grid[k - 1]), float(grid[k])))
    if not roots:
        raise NoRoot(
            f"No cutoff in ({e.F.theta_L}, {e.F.theta_H}] prices the asset at t={t}",
            t=t, grid=grid.tolist(), g=values.tolist(),
        )
    return roots, brackets


def step_back_cutoff(e: PrefShockEconomy, t: int, target: float):
    """
    Solve for theta_bar_t given p_{t+1} + d_{t+1} (detrended by A_{t+1}^(1/gamma)). Returns
    (theta_bar, number of roots found). The largest root is selected.
    """
    roots, _ = cutoff_roots(e, t, target)
    return max(roots), len(roots)


def solve_pref_truncated(e: PrefShockEconomy, T: int, terminal_theta_bar: float) -> CutoffPath:
    if T < 1:
        raise DomainError(f"Horizon must be at least 1, got {T}", T=T)
    if not e.F.theta_L < terminal_theta_bar <= e.F.theta_H:
        raise DomainError(
            f"Terminal cutoff must lie in ({e.F.theta_L}, {e.F.theta_H}], got {terminal_theta_bar}",
            terminal_theta_bar=terminal_theta_bar,
        )
    exponent = 1.0 / e.gamma
    log_A = path_log_values(e.A, T)
    log_D = path_log_values(e.D, T)
    d_hat = safe_exp(log_D - exponent * log_A)

    theta_bar = np.empty(T + 1)
    p_hat = np.empty(T + 1)
    theta_bar[T] = terminal_theta_bar
    p_hat[T] = detrended_price(e.F, terminal_theta_bar, e.gamma)
    multiple = {}
    for t in range(T - 1, -1, -1):
        roots, brackets = cutoff_roots(e, t, p_hat[t + 1] + d_hat[t + 1])
        theta_bar[t] = max(roots)
        if len(roots) > 1:
            multiple[t] = brackets
        p_hat[t] = detrended_price(e.F, theta_bar[t], e.gamma)

    scale = safe_exp(exponent * log_A)
    growth = np.exp(exponent * np.diff(log_A))
    R = np.append(growth * (p_hat[1:] + d_hat[1:]) / p_hat[:-1], math.nan)
    premium = np.array([liquidity_premium(e.F, x) for x in theta_bar])
    w_hat = (premium * theta_bar) ** exponent
    logger.debug(
        f"Solved cutoff path: T={T}, terminal={terminal_theta_bar}, theta_bar_0={theta_bar[0]:.6g}, "
        f"{len(multiple)} steps with multiple roots."
    )
    return CutoffPath(
        t=np.arange(T + 1), theta_bar=theta_bar, R=R, P=p_hat * scale, p_hat=p_hat, w=w_hat * scale,
        log_A=log_A, A=safe_exp(log_A), D=safe_exp(log_D), d_hat=d_hat, yields=d_hat / p_hat,
        terminal_theta_bar=terminal_theta_bar, multiple_roots=sorted(multiple),
        root_brackets=[multiple[t] for t in sorted(multiple)],
    )


def euler_residual(e: PrefShockEconomy, path: CutoffPath) -> float:
    """max_t |beta R_t (A_t / A_{t+1}) LP(theta_bar_t) - 1|."""
    worst = 0.0
    for t in range(path.horizon):
        ratio = math.exp(path.log_A[t] - path.log_A[t + 1])
        gap = e.beta * path.R[t] * ratio * liquidity_premium(e.F, path.theta_bar[t]) - 1.0
        worst = max(worst, abs(gap))
    return worst


def market_clearing_residual(e: PrefShockEconomy, path: CutoffPath) -> float:
    """
    Rebuild w_t and consumption from R_t and the cutoff, and compare w_t - E[c_t(theta)] with
    P_t, relative to P_t. Everything is divided by A_t^(1/gamma).
    """
    exponent = 1.0 / e.gamma
    worst = 0.0
    for t in range(path.horizon):
        k = math.exp(path.log_A[t + 1] - path.log_A[t]) / (e.beta * path.R[t])
        cutoff = path.theta_bar[t]
        wealth = (k * cutoff) ** exponent
        consumption = float(np.dot(e.F.weights, (k * np.minimum(e.F.atoms, cutoff)) ** exponent))
        worst = max(worst, abs(wealth - consumption - path.p_hat[t]) / path.p_hat[t])
    return worst


def cutoff_below_gap_diagnostic(e: PrefShockEconomy, path: CutoffPath) -> Optional[Diagnostic]:
    floor = e.F.theta_L + e.F.gap
    below = [int(t) for t in path.t if path.theta_bar[t] < floor]
    if not below:
        return None
    return Diagnostic(
        code=DiagnosticCode.CUTOFF_BELOW_GAP.value,
        message=f"Cutoff falls below theta_L + gap = {floor} in {len(below)} periods; price lower bound not implied",
        details={"periods": below[:10], "count": len(below)},
    )


def default_cutoff_fractions(n_terminals: int) -> List[float]:
    if n_terminals < 1:
        raise DomainError(f"At least one terminal is needed, got {n_terminals}", n_terminals=n_terminals)
    return [k / n_terminals for k in range(1, n_terminals + 1)]


def pref_verdict(e: PrefShockEconomy, path: CutoffPath, window_end: int) -> BubbleVerdict:
    p_hat = path.p_hat[:window_end + 1]
    relevance = relevance_statistic(p_hat, np.ones_like(p_hat))
    if is_zero_path(e.D):
        return montrucchio_test([0.0], relevance=relevance)
    ratio = None
    if relevance >= settings.RELEVANCE_FLOOR:
        ratio = tail_ratio(e.D) / tail_ratio(e.A) ** (1.0 / e.gamma)
    try:
        holds = check_necessity_pref(e).holds
    except LaboratoryError as error:
        logger.debug(f"Necessity check unavailable: {error}")
        holds = False
    return checked_verdict(
        path.yields[1:window_end + 1], analytic_ratio=ratio, necessity_holds=holds, relevance=relevance
    )


def solve_pref_equilibrium(
        e: PrefShockEconomy,
        T: int,
        terminal_theta_bar: Optional[float] = None,
        n_terminals: Optional[int] = None,
        agree_tol: Optional[float] = None,
        terminal_fractions: Optional[Sequence[float]] = None,
) -> PrefEquilibrium:
    """
    Backward cutoff recursion. With an explicit terminal cutoff a single path is solved; otherwise
    terminals theta_L + f (theta_H - theta_L) are swept and must agree on p_t for t <= T/2.
    """
    agree_tol = settings.AGREE_TOL if agree_tol is None else agree_tol
    if terminal_theta_bar is not None:
        terminals = [terminal_theta_bar]
    else:
        fractions = sorted(terminal_fractions) if terminal_fractions else default_cutoff_fractions(
            n_terminals or settings.DEFAULT_TERMINALS
        )
        terminals = [e.F.theta_L + f * (e.F.theta_H - e.F.theta_L) for f in fractions]
    paths = [solve_pref_truncated(e, T, theta) for theta in terminals]
    middle = paths[len(paths) // 2]
    window_end = T // 2
    agreement = max(
        float(np.max(np.abs(path.p_hat[:window_end + 1] - middle.p_hat[:window_end + 1]))) for path in paths
    )
    if agreement > agree_tol:
        error = NoAgreement(
            f"Cutoff sweep disagrees by {agreement:.3e} over t <= {window_end} (tolerance {agree_tol})",
            agreement=agreement,
            terminal_theta_bars=terminals,
            p0_by_terminal=[float(path.p_hat[0]) for path in paths],
        )
        error.paths = paths
        raise error

    diagnostics = []
    if middle.multiple_roots:
        diagnostics.append(Diagnostic(
            code=DiagnosticCode.MULTIPLE_ROOTS.value,
            message=f"Several cutoffs solve the pricing equation in {len(middle.multiple_roots)} periods; "
                    f"the largest was kept",
            details={
                "periods": middle.multiple_roots[:10],
                "brackets": [[list(b) for b in brackets] for brackets in middle.root_brackets[:10]],
            },
        ))
    below_gap = cutoff_below_gap_diagnostic(e, middle)
    if below_gap:
        diagnostics.append(below_gap)
    verdict = pref_verdict(e, middle, window_end)
    logger.debug(f"Cutoff equilibrium accepted: agreement {agreement:.3e}, verdict {verdict.label}.")
    return PrefEquilibrium(
        path=middle, paths=paths, terminal_theta_bars=terminals, early_window_agreement=agreement,
        verdict=verdict, diagnostics=diagnostics,
    )


def check_necessity_pref(e: PrefShockEconomy) -> NecessityReport:
    """0 < G_d < G = lim A_t^(1/(gamma t))."""
    productivity = growth_rate_estimate(e.A)
    dividends = growth_rate_estimate(e.D)
    if productivity.indeterminate or dividends.indeterminate:
        raise IndeterminateGrowth("Growth rate of A or D is indeterminate")
    return compare_necessity(0.0, dividends.rate, productivity.rate ** (1.0 / e.gamma))
