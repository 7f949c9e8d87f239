"""
Exact equilibria of the textbook, two-sector, CES, linear-utility and CRRA economies. These are the
oracles the generic OLG solver is checked against.
"""
import logging
import math
from typing import Optional, Sequence, Tuple

import numpy as np
import pydantic

from app import settings
from app.services.bubble import BubbleVerdict, VerdictLabel, montrucchio_test
from app.services.errors import DomainError, NoBubblySteadyState, NoRoot, WrongRegime
from app.services.numerics import Bracket, bisect_root, jacobian_fd
from app.services.paths import GeometricPath, PathSpec, is_zero_path, log_eval_path, tail_ratio
from .core import ArrayModel, Diagnostic, DiagnosticCode
from .olg import CRRAUtility, CobbDouglasLogUtility, EconomyOLG, LinearUtility


logger = logging.getLogger(__name__)


# Textbook economy: log utility, no old-age endowment.

def textbook_price(beta: float, a_t: float) -> float:
    if not 0.0 < beta < 1.0:
        raise DomainError(f"beta must lie in (0, 1), got {beta}", beta=beta)
    if not a_t > 0.0:
        raise DomainError(f"a_t must be positive, got {a_t}", a_t=a_t)
    return beta * a_t


def textbook_economy(beta: float, a: PathSpec, D: PathSpec) -> EconomyOLG:
    return EconomyOLG(utility=CobbDouglasLogUtility(beta=beta), a=a, b=GeometricPath(level=0.0, ratio=1.0), D=D)


def textbook_verdict(a: PathSpec, D: PathSpec) -> BubbleVerdict:
    """Bubbly iff sum_t D_t/a_t converges, i.e. iff G_d < G for geometric tails."""
    if is_zero_path(D):
        return montrucchio_test([0.0])
    first_yield = math.exp(log_eval_path(D, 1) - log_eval_path(a, 1))
    return montrucchio_test([first_yield], analytic_ratio=tail_ratio(D) / tail_ratio(a))


# Two-sector land economy.

class TwoSectorParams(pydantic.BaseModel):
    alpha: float = pydantic.Field(..., gt=0.0, lt=1.0, title="Labor share in the land sector")
    beta: float = pydantic.Field(..., gt=0.0, lt=1.0, title="Old-age weight")
    G1: float = pydantic.Field(..., gt=0.0, title="Productivity growth, labor-only sector")
    G2: float = pydantic.Field(..., gt=0.0, title="Productivity growth, land sector")

    @property
    def land_rent_level(self) -> float:
        return (1.0 - self.alpha) * self.alpha ** (self.alpha / (1.0 - self.alpha))

    @property
    def yield_ratio(self) -> float:
        return (self.G2 / self.G1) ** (1.0 / (1.0 - self.alpha))


class TwoSectorPoint(pydantic.BaseModel):
    t: int
    P: float
    r: float
    w: float
    H2: float
    yield_: float = pydantic.Field(..., alias="yield")
    early_regime: bool = False

    class Config:
        allow_population_by_field_name = True


def _require_land_regime(p: TwoSectorParams):
    if not p.G1 > p.G2:
        raise WrongRegime(
            f"Interior labor allocation needs G1 > G2, got G1={p.G1}, G2={p.G2}", G1=p.G1, G2=p.G2
        )


def _land_labor(p: TwoSectorParams, t: int) -> float:
    return math.exp(
        (math.log(p.alpha) + t * (math.log(p.G2) - math.log(p.G1))) / (1.0 - p.alpha)
    )


def two_sector_equilibrium(p: TwoSectorParams, t: int) -> TwoSectorPoint:
    _require_land_regime(p)
    H2 = _land_labor(p, t)
    wage = p.G1 ** t
    rent = (1.0 - p.alpha) * p.G2 ** t * H2 ** p.alpha
    return TwoSectorPoint(
        t=t,
        P=p.beta * wage,
        r=rent,
        w=wage,
        H2=H2,
        yield_=p.land_rent_level / p.beta * p.yield_ratio ** t,
        early_regime=H2 >= 1.0,
    )


def two_sector_economy(p: TwoSectorParams) -> EconomyOLG:
    """Endowment translation: a_t = G1^t (wage income), b = 0, D_t = r_t (land rent)."""
    _require_land_regime(p)
    rent_growth = p.G2 * (p.G2 / p.G1) ** (p.alpha / (1.0 - p.alpha))
    return EconomyOLG(
        utility=CobbDouglasLogUtility(beta=p.beta),
        a=GeometricPath(level=1.0, ratio=p.G1),
        b=GeometricPath(level=0.0, ratio=1.0),
        D=GeometricPath(level=p.land_rent_level, ratio=rent_growth),
    )


def two_sector_verdict(p: TwoSectorParams) -> BubbleVerdict:
    _require_land_regime(p)
    return montrucchio_test([p.land_rent_level / p.beta], analytic_ratio=p.yield_ratio)


def two_sector_clearing_residual(p: TwoSectorParams, t: int) -> float:
    """|y_t + z_t - (G1^t H1_t + G2^t H2_t^alpha)| / G1^t with H1 = 1 - H2."""
    point = two_sector_equilibrium(p, t)
    young = point.w - point.P
    old = point.P + point.r
    output = p.G1 ** t * (1.0 - point.H2) + p.G2 ** t * point.H2 ** p.alpha
    return abs(young + old - output) / point.w


def early_regime_diagnostic(p: TwoSectorParams, horizon: int) -> Optional[Diagnostic]:
    flagged = [t for t in range(horizon + 1) if _land_labor(p, t) >= 1.0]
    if not flagged:
        return None
    return Diagnostic(
        code=DiagnosticCode.EARLY_REGIME.value,
        message=f"Land-sector labor H2_t >= 1 for {len(flagged)} early periods; excluded from oracle comparisons",
        details={"periods": flagged},
    )


# CES stock market economy.

class CESParams(pydantic.BaseModel):
    sigma: float = pydantic.Field(..., gt=0.0, title="Elasticity of substitution")
    alpha: float = pydantic.Field(..., gt=0.0, lt=1.0, title="Capital weight")
    beta: float = pydantic.Field(..., gt=0.0, lt=1.0, title="Old-age weight")
    G_K: float = pydantic.Field(..., gt=0.0, title="Capital growth")
    G_L: float = pydantic.Field(..., gt=0.0, title="Labor growth")
    K0: float = pydantic.Field(1.0, gt=0.0)
    L0: float = pydantic.Field(1.0, gt=0.0)


class CESReport(pydantic.BaseModel):
    verdict: BubbleVerdict
    yield_ratio: float
    initial_yield: float


def ces_yield(p: CESParams, t: int) -> float:
    """alpha/(beta(1-alpha)) ((G_K/G_L)^t K0/L0)^(1 - 1/sigma)."""
    exponent = 1.0 - 1.0 / p.sigma
    log_ratio = t * (math.log(p.G_K) - math.log(p.G_L)) + math.log(p.K0 / p.L0)
    return p.alpha / (p.beta * (1.0 - p.alpha)) * math.exp(exponent * log_ratio)


def ces_verdict(p: CESParams) -> CESReport:
    """Bubble iff (sigma - 1)(G_K - G_L) < 0; equality is the knife edge."""
    yield_ratio = (p.G_K / p.G_L) ** (1.0 - 1.0 / p.sigma)
    initial = ces_yield(p, 0)
    sign = (p.sigma - 1.0) * (p.G_K - p.G_L)
    knife_edge = math.isclose(p.sigma, 1.0, abs_tol=settings.NECESSITY_MARGIN) or math.isclose(
        p.G_K, p.G_L, abs_tol=settings.NECESSITY_MARGIN
    )
    if knife_edge:
        label, notes = VerdictLabel.KNIFE_EDGE, "price-dividend ratio is constant"
    elif sign < 0:
        label, notes = VerdictLabel.BUBBLY, "dividend yields decay geometrically"
    else:
        label, notes = VerdictLabel.COUNTERFACTUAL_DIVERGENCE, "price-dividend ratio converges to 0"
    verdict = BubbleVerdict(
        label=label, tail_decay=yield_ratio, yield_partial_sum=initial, analytic=True, notes=notes
    )
    return CESReport(verdict=verdict, yield_ratio=yield_ratio, initial_yield=initial)


# Linear utility economy with a young-consuming-nothing corner.

class WilsonPath(ArrayModel):
    t: np.ndarray
    P: np.ndarray
    R: np.ndarray
    y: np.ndarray


def wilson_price(a: float, G: float, t: int) -> float:
    return a * G ** t


def wilson_path(a: float, G: float, D: float, G_d: float, T: int) -> WilsonPath:
    """P_t = a G^t with y_t = 0 and R_t = (a G^(t+1) + D G_d^(t+1)) / (a G^t)."""
    t = np.arange(T + 1)
    P = a * np.power(G, t, dtype=float)
    R = (a * np.power(G, t + 1, dtype=float) + D * np.power(G_d, t + 1, dtype=float)) / P
    return WilsonPath(t=t, P=P, R=R, y=np.zeros(T + 1))


def wilson_economy(beta: float, a: float, G: float, D: float, G_d: float, b: float = 0.0) -> EconomyOLG:
    return EconomyOLG(
        utility=LinearUtility(beta=beta),
        a=GeometricPath(level=a, ratio=G),
        b=GeometricPath(level=b, ratio=G),
        D=GeometricPath(level=D, ratio=G_d),
    )


# CRRA economy: steady state, local dynamics and the explicit map.

class SteadyStateReport(pydantic.BaseModel):
    xi1_star: float
    kappa: float
    lambda1: float
    lambda2: float
    determinate: bool
    singular: bool


def crra_economy(beta: float, gamma: float, G: float, w: float, D: float, G_d: float = 1.0) -> EconomyOLG:
    """(a_t, b_t, D_t) = (G^t, w G^t, D G_d^t)."""
    return EconomyOLG(
        utility=CRRAUtility(beta=beta, gamma=gamma),
        a=GeometricPath(level=1.0, ratio=G),
        b=GeometricPath(level=w, ratio=G),
        D=GeometricPath(level=D, ratio=G_d),
    )


def _kappa(beta: float, gamma: float, G: float) -> float:
    return (beta * G ** (1.0 - gamma)) ** (1.0 / gamma)


def crra_steady_state(beta: float, gamma: float, G: float, w: float) -> SteadyStateReport:
    if not G > 1.0:
        raise DomainError(f"Steady-state analysis requires G > 1, got {G}", G=G)
    kappa = _kappa(beta, gamma, G)
    if kappa <= w:
        raise NoBubblySteadyState(f"kappa={kappa} <= w={w}: no bubbly steady state", kappa=kappa, w=w)
    xi = (kappa - w) / (1.0 + kappa)
    denominator = 1.0 - gamma * xi / (w + xi)
    singular = abs(denominator) < 1e-12
    lambda1 = math.inf if singular else (1.0 + gamma * xi / (1.0 - xi)) / denominator
    lambda2 = 1.0 / G
    # saddle path: one unstable root for the one free initial condition
    determinate = not singular and abs(lambda1) > 1.0
    logger.debug(f"CRRA steady state xi*={xi:.6g}, lambda=({lambda1:.6g}, {lambda2:.6g}), singular={singular}.")
    return SteadyStateReport(
        xi1_star=xi, kappa=kappa, lambda1=lambda1, lambda2=lambda2, determinate=determinate, singular=singular
    )


def determinacy_condition(beta: float, gamma: float, G: float, w: float) -> bool:
    """1/gamma > (kappa - w)(1 - kappa) / (2 kappa (1 + w)), the sufficient condition for uniqueness."""
    kappa = _kappa(beta, gamma, G)
    return 1.0 / gamma > 0.5 * (kappa - w) / kappa * (1.0 - kappa) / (1.0 + w)


def crra_implicit_residual(
        beta: float, gamma: float, G: float, w: float, xi: Sequence[float], eta: Sequence[float]
) -> Tuple[float, float]:
    xi1, xi2 = xi
    eta1, eta2 = eta
    carry = eta1 + G * xi2
    if not xi1 < 1.0 or not (w + carry) > 0.0:
        raise DomainError("Power arguments must be positive", xi=list(xi), eta=list(eta))
    H1 = beta * G ** (1.0 - gamma) * ((w + carry) / (1.0 - xi1)) ** (-gamma) * carry - xi1
    H2 = eta2 - xi2 / G
    return H1, H2


def crra_explicit_map(beta: float, gamma: float, G: float, w: float, xi: Sequence[float]) -> np.ndarray:
    """
    eta = h(xi) solving H(xi, eta) = 0 on the branch through the bubbly steady state. The first
    component is found by bisection in s = eta1 + G xi2; the second is xi2/G.
    """
    xi1, xi2 = float(xi[0]), float(xi[1])
    if not xi1 < 1.0:
        raise DomainError(f"xi1 must be below 1, got {xi1}", xi1=xi1)
    scale = beta * G ** (1.0 - gamma) * (1.0 - xi1) ** gamma

    def phi(s):
        return scale * s * (w + s) ** (-gamma) - xi1

    steady = crra_steady_state(beta, gamma, G, w)
    peak = w / (gamma - 1.0) if gamma > 1.0 else math.inf
    increasing_branch = 1.0 - gamma * steady.xi1_star / (w + steady.xi1_star) > 0.0
    if increasing_branch:
        lo, hi = 0.0, peak
    else:
        lo, hi = max(peak, 1e-12), math.inf
    if math.isinf(hi):
        hi = max(2.0 * lo, 1.0)
        while np.sign(phi(hi)) == np.sign(phi(lo)):
            hi *= 2.0
            if hi > settings.CAPITAL_BRACKET_CAP:
                raise NoRoot(f"No root of H1 in eta1 for xi={xi1, xi2}", xi=[xi1, xi2])
    s = bisect_root(phi, Bracket(lo=lo, hi=hi, tol=settings.SHOOTING_TOL))
    return np.array([s - G * xi2, xi2 / G])


def crra_numeric_eigenvalues(beta: float, gamma: float, G: float, w: float) -> np.ndarray:
    """Eigenvalues of the finite-difference Jacobian of h at the steady state, largest modulus first."""
    steady = crra_steady_state(beta, gamma, G, w)
    jac = jacobian_fd(lambda x: crra_explicit_map(beta, gamma, G, w, x), [steady.xi1_star, 0.0])
    eigenvalues = np.linalg.eigvals(jac)
    return eigenvalues[np.argsort(-np.abs(eigenvalues))].real
