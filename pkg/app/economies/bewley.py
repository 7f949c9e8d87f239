import logging
import math
from typing import List, Optional

import numpy as np
import pydantic

from app.services.bubble import BubbleVerdict, montrucchio_test, relevance_statistic
from app.services.errors import DomainError, RegimeViolation, ZeroPrice
from app.services.numerics import MatrixLike, SpectralResult, as_small_matrix, is_irreducible, spectral_radius
from app.services.paths import PathSpec, is_zero_path, log_eval_path
from .core import ArrayModel, NecessityReport, compare_necessity


logger = logging.getLogger(__name__)

ROW_SUM_TOL = 1e-12


class MarkovSpec(pydantic.BaseModel):
    z: List[float] = pydantic.Field(
        ..., min_items=2, title="Productivity", description="z_0 = 0 < z_1 < ... < z_N"
    )
    Pi: List[List[float]] = pydantic.Field(..., title="Transition matrix", description="Row-stochastic")

    @pydantic.validator("z")
    def validate_productivity(cls, v):
        if v[0] != 0.0:
            raise ValueError("z_0 must be 0 (the type that cannot invest)")
        if not all(lo < hi for lo, hi in zip(v, v[1:])):
            raise ValueError("Productivities must be strictly increasing")
        return v

    @pydantic.validator("Pi")
    def validate_transitions(cls, v, values):
        m = as_small_matrix(v)
        if "z" in values and m.shape[0] != len(values["z"]):
            raise ValueError(f"Pi is {m.shape[0]}x{m.shape[0]} but there are {len(values['z'])} types")
        if (m < 0).any():
            raise ValueError("Transition probabilities must be nonnegative")
        if np.max(np.abs(m.sum(axis=1) - 1.0)) > ROW_SUM_TOL:
            raise ValueError("Rows of Pi must sum to 1")
        if not is_irreducible(m):
            raise ValueError("Pi must be irreducible")
        if not is_irreducible(m[1:, 1:]):
            raise ValueError("The submatrix of investing types must be irreducible")
        return v

    @property
    def transitions(self) -> np.ndarray:
        return np.array(self.Pi, dtype=float)

    @property
    def productivity(self) -> np.ndarray:
        return np.array(self.z, dtype=float)


class BewleyInvestEconomy(pydantic.BaseModel):
    markov: MarkovSpec
    beta: float = pydantic.Field(..., gt=0.0, lt=1.0)
    v0: List[float] = pydantic.Field(..., title="Initial wealth by type")
    D: PathSpec = pydantic.Field(..., discriminator="kind", title="Dividends")

    @pydantic.validator("v0")
    def validate_initial_wealth(cls, v, values):
        if any(x <= 0.0 for x in v):
            raise ValueError("Initial wealth must be strictly positive for every type")
        if "markov" in values and len(v) != len(values["markov"].z):
            raise ValueError("v0 needs one entry per type")
        return v


class WealthBound(ArrayModel):
    """v0' A^t stored as v0' A^t / rho^t, with the Perron-based constant w0 = epsilon u_0."""
    scaled: np.ndarray
    rho: float
    u: np.ndarray
    epsilon: float
    w0: float

    def levels(self, t: int) -> np.ndarray:
        return self.scaled[t] * self.rho ** t


class InvestPath(ArrayModel):
    t: np.ndarray
    W_detrended: np.ndarray
    P_detrended: np.ndarray
    R: np.ndarray
    D: np.ndarray
    yields: np.ndarray
    yield_bound: np.ndarray
    log_scale: np.ndarray
    rho: float


class InvestResult(ArrayModel):
    path: InvestPath
    bound: WealthBound
    verdict: BubbleVerdict


def growth_matrix(spec: MarkovSpec, beta: float) -> np.ndarray:
    """A[n, n'] = beta z_n pi_{nn'}."""
    return beta * spec.productivity[:, None] * spec.transitions


def scale_productivity(spec: MarkovSpec, factor: float) -> MarkovSpec:
    if not factor > 0:
        raise DomainError(f"Scale factor must be positive, got {factor}", factor=factor)
    return MarkovSpec(z=[factor * z for z in spec.z], Pi=spec.Pi)


def persistence_transform(Pi: MatrixLike, tau: float) -> np.ndarray:
    if not 0.0 <= tau < 1.0:
        raise DomainError(f"tau must lie in [0, 1), got {tau}", tau=tau)
    m = as_small_matrix(Pi)
    return tau * np.eye(m.shape[0]) + (1.0 - tau) * m


def check_necessity_invest(spec: MarkovSpec, beta: float, G_d: float) -> NecessityReport:
    """0 < G_d < rho(A); the autarky rate of this economy is 0."""
    if not G_d > 0:
        raise DomainError(f"G_d must be positive, got {G_d}", G_d=G_d)
    rho = spectral_radius(growth_matrix(spec, beta)).rho
    return compare_necessity(0.0, G_d, rho)


def wealth_lower_bound(v0, A: MatrixLike, T: int, spectral: Optional[SpectralResult] = None) -> WealthBound:
    v0 = np.asarray(v0, dtype=float)
    if (v0 <= 0).any():
        raise DomainError("v0 must be strictly positive")
    A = as_small_matrix(A)
    spectral = spectral or spectral_radius(A)
    rho, u = spectral.rho, spectral.left_vector
    if not rho > 0:
        raise DomainError("Growth matrix has zero spectral radius", rho=rho)
    scaled = np.empty((T + 1, v0.size))
    scaled[0] = v0
    for t in range(T):
        scaled[t + 1] = scaled[t] @ A / rho
    epsilon = float(np.min(v0 / u))
    return WealthBound(scaled=scaled, rho=rho, u=u, epsilon=epsilon, w0=epsilon * float(u[0]))


def _normalized_dividend(D: PathSpec, t: int, log_scale: float) -> float:
    if is_zero_path(D):
        return 0.0
    return math.exp(log_eval_path(D, t) - log_scale)


def simulate_invest_equilibrium(
        spec: MarkovSpec, beta: float, v0, D: PathSpec, T: int
) -> InvestResult:
    """
    Equilibrium where only the zero-productivity type holds the asset (R_t < z_1). Wealth is
    carried as a unit-sum vector times exp(log_scale) so long horizons never overflow.
    """
    Pi, z = spec.transitions, spec.productivity
    if beta * Pi[0, 0] >= 1.0:
        raise RegimeViolation("beta * pi_00 >= 1 leaves the asset price undetermined", beta_pi00=beta * Pi[0, 0])
    A = growth_matrix(spec, beta)
    spectral = spectral_radius(A)
    bound = wealth_lower_bound(v0, A, T, spectral)
    rho = bound.rho

    w = np.asarray(v0, dtype=float)
    log_scale = math.log(w.sum())
    w = w / w.sum()
    weights, logs, rates, dividends = [w], [log_scale], [], [_normalized_dividend(D, 0, 0.0)]
    for t in range(T):
        if w[0] <= 0.0:
            raise ZeroPrice(f"Type-0 wealth vanishes at t={t}", t=t)
        d_next = _normalized_dividend(D, t + 1, log_scale)
        technology = beta * np.dot(Pi[1:, 0], beta * z[1:] * w[1:])
        rate = (technology + d_next) / (beta * w[0] * (1.0 - beta * Pi[0, 0]))
        if rate >= z[1]:
            raise RegimeViolation(
                f"R_{t}={rate:.6g} reaches z_1={z[1]}: investing types would hold the asset", t=t, R=rate
            )
        w_next = (beta * np.maximum(z, rate) * w) @ Pi
        total = w_next.sum()
        log_scale += math.log(total)
        w = w_next / total
        weights.append(w)
        logs.append(log_scale)
        rates.append(rate)
        dividends.append(_normalized_dividend(D, t + 1, 0.0))
    rates.append(math.nan)

    t_axis = np.arange(T + 1)
    log_scale = np.array(logs)
    weights = np.array(weights)
    trend = np.exp(log_scale - t_axis * math.log(rho))
    W_detrended = weights * trend[:, None]
    P_detrended = beta * W_detrended[:, 0]
    log_P = math.log(beta) + log_scale + np.log(weights[:, 0])
    if is_zero_path(D):
        yields = np.zeros(T + 1)
        yield_bound = np.zeros(T + 1)
    else:
        log_D = np.array([log_eval_path(D, t) for t in t_axis])
        yields = np.exp(log_D - log_P)
        yield_bound = np.exp(log_D - math.log(beta * bound.w0) - t_axis * math.log(rho))
    path = InvestPath(
        t=t_axis, W_detrended=W_detrended, P_detrended=P_detrended, R=np.array(rates),
        D=np.array(dividends), yields=yields, yield_bound=yield_bound, log_scale=log_scale, rho=rho,
    )
    relevance = relevance_statistic(P_detrended, np.ones(T + 1))
    verdict = montrucchio_test(yields[1:], relevance=relevance)
    logger.debug(f"Investment-shock equilibrium: rho={rho:.6g}, R_T-1={rates[-2]:.6g}, verdict {verdict.label}.")
    return InvestResult(path=path, bound=bound, verdict=verdict)
