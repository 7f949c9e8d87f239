import logging
from typing import Callable, Optional, Sequence, Union

import numpy as np
import pydantic
from scipy import optimize
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from app import settings
from .errors import DomainError, NoConvergence, NoSignChange, NonFinite, NotNonnegative


logger = logging.getLogger(__name__)

MAX_MATRIX_DIMENSION = 32

MatrixLike = Union[np.ndarray, Sequence[Sequence[float]]]


class Bracket(pydantic.BaseModel):
    lo: float = pydantic.Field(..., title="Lower end", description="Left end of the search interval")
    hi: float = pydantic.Field(..., title="Upper end", description="Right end of the search interval")
    tol: float = pydantic.Field(
        default_factory=lambda: settings.ROOT_TOL,
        title="Tolerance",
        description="Absolute bracket width at which bisection stops, in the units of the argument",
    )

    @pydantic.validator("tol")
    def validate_tol(cls, v):
        if not v > 0:
            raise ValueError("tol must be positive")
        return v

    @pydantic.validator("hi")
    def validate_order(cls, v, values):
        if "lo" in values and not values["lo"] < v:
            raise ValueError(f"Bracket requires lo < hi, got lo={values['lo']} hi={v}")
        return v


class SpectralResult(pydantic.BaseModel):
    rho: float
    left_vector: np.ndarray
    iterations: int
    residual: float
    shifted: bool = False

    class Config:
        arbitrary_types_allowed = True


def _finite(f: Callable[[float], float]) -> Callable[[float], float]:
    def checked(x):
        value = float(f(x))
        if not np.isfinite(value):
            raise NonFinite(f"Function evaluated to {value} at x={x}", x=x, value=value)
        return value
    return checked


def bisect_root(f: Callable[[float], float], bracket: Bracket, maxiter: Optional[int] = None) -> float:
    """
    Midpoint bisection for a continuous scalar function with a sign change on the bracket.
    Endpoints where f vanishes exactly are returned as they are.
    """
    checked = _finite(f)
    f_lo, f_hi = checked(bracket.lo), checked(bracket.hi)
    if f_lo == 0.0:
        return bracket.lo
    if f_hi == 0.0:
        return bracket.hi
    if np.sign(f_lo) == np.sign(f_hi):
        raise NoSignChange(
            f"No sign change on [{bracket.lo}, {bracket.hi}]: f(lo)={f_lo}, f(hi)={f_hi}",
            lo=bracket.lo, hi=bracket.hi, f_lo=f_lo, f_hi=f_hi,
        )
    return optimize.bisect(
        checked, bracket.lo, bracket.hi,
        xtol=bracket.tol,
        maxiter=maxiter or settings.BISECTION_MAX_ITER,
    )


def as_small_matrix(entries: MatrixLike) -> np.ndarray:
    m = np.array(entries, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DomainError(f"Expected a square matrix, got shape {m.shape}", shape=m.shape)
    if m.shape[0] > MAX_MATRIX_DIMENSION:
        raise DomainError(f"Matrix dimension {m.shape[0]} exceeds {MAX_MATRIX_DIMENSION}", shape=m.shape)
    if not np.all(np.isfinite(m)):
        raise NonFinite("Matrix has non-finite entries")
    return m


def is_irreducible(m: MatrixLike) -> bool:
    m = as_small_matrix(m)
    if m.shape[0] == 1:
        return True
    n_components, _ = connected_components(csr_matrix(m != 0), directed=True, connection="strong")
    return n_components == 1


def _power_iteration(m: np.ndarray, tol: float, max_iter: int):
    """
    Left power iteration x <- x m with x normalized to sum 1. Returns (converged, rho, x, iterations, residual).
    """
    n = m.shape[0]
    x = np.full(n, 1.0 / n)
    xm = x @ m
    rho, residual = 0.0, np.inf
    for iteration in range(1, max_iter + 1):
        if xm.sum() <= 0.0:  # nilpotent direction, no positive growth
            return True, 0.0, x, iteration, 0.0
        y = xm / xm.sum()
        ym = y @ m
        rho_next = ym.sum()
        if rho_next <= 0.0:
            return True, 0.0, y, iteration, 0.0
        residual = np.abs(ym - rho_next * y).sum() / rho_next
        support = y > 0.0
        ratios = ym[support] / y[support]
        # Collatz-Wielandt bounds bracket rho when the iterate is strictly positive
        gap = (ratios.max() - ratios.min()) / rho_next if support.all() else np.inf
        change = abs(rho_next - rho) / rho_next
        x, xm, rho = y, ym, rho_next
        if gap <= tol or (residual <= tol and change <= tol):
            return True, rho, x, iteration, residual
    return False, rho, x, max_iter, residual


def spectral_radius(m: MatrixLike, tol: Optional[float] = None, max_iter: Optional[int] = None) -> SpectralResult:
    """
    Perron root and left Perron vector of a nonnegative matrix by power iteration on m^T.
    Falls back to the shifted matrix m + s*I when the plain iteration cycles.
    """
    m = as_small_matrix(m)
    if (m < 0).any():
        raise NotNonnegative("Matrix has negative entries", min_entry=float(m.min()))
    tol = tol or settings.EIGEN_TOL
    max_iter = max_iter or settings.POWER_ITERATION_CAP

    converged, rho, x, iterations, residual = _power_iteration(m, tol, max_iter)
    shifted = False
    if not converged:
        shift = settings.POWER_ITERATION_SHIFT * max(rho, np.abs(m).sum(axis=1).max())
        logger.debug(f"Power iteration did not settle after {iterations} steps, retrying with shift {shift}.")
        converged, rho_shifted, x, more_iterations, residual = _power_iteration(
            m + shift * np.eye(m.shape[0]), tol, max_iter
        )
        rho = rho_shifted - shift
        iterations += more_iterations
        shifted = True
    if not converged:
        raise NoConvergence(
            f"Power iteration did not converge after {iterations} iterations (residual {residual:.3e})",
            residual=residual, iterations=iterations,
        )
    x = np.clip(x, 0.0, None)
    return SpectralResult(
        rho=float(rho), left_vector=x / x.sum(), iterations=iterations, residual=float(residual), shifted=shifted
    )


def jacobian_fd(
        func: Callable[[np.ndarray], np.ndarray], point: Sequence[float], step: Optional[float] = None
) -> np.ndarray:
    """Central-difference Jacobian; entry (i, j) is d func_i / d x_j."""
    step = step or settings.JACOBIAN_STEP
    if not step > 0:
        raise DomainError("step must be positive", step=step)
    x0 = np.asarray(point, dtype=float)

    def evaluate(x):
        try:
            value = np.atleast_1d(np.asarray(func(x), dtype=float))
        except (ArithmeticError, ValueError) as e:
            raise NonFinite(f"Map evaluation failed at {x.tolist()}: {e}", point=x.tolist()) from e
        if not np.all(np.isfinite(value)):
            raise NonFinite(f"Map evaluated to non-finite values at {x.tolist()}", point=x.tolist())
        return value

    columns = []
    for j in range(x0.size):
        e = np.zeros_like(x0)
        e[j] = step
        columns.append((evaluate(x0 + e) - evaluate(x0 - e)) / (2.0 * step))
    return np.column_stack(columns)
