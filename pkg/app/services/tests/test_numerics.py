import math

import numpy as np
import pydantic
import pytest

from app.services.errors import DomainError, NoSignChange, NonFinite, NotNonnegative
from app.services.numerics import Bracket, bisect_root, is_irreducible, jacobian_fd, spectral_radius


def perron_root(m):
    return float(np.max(np.abs(np.roots(np.poly(np.asarray(m))))))


def test_bisect_root_finds_square_root():
    root = bisect_root(lambda x: x * x - 2.0, Bracket(lo=0.0, hi=2.0))
    assert root == pytest.approx(math.sqrt(2.0), abs=1e-12)


def test_bisect_root_returns_endpoint_roots():
    assert bisect_root(lambda x: x, Bracket(lo=0.0, hi=1.0)) == 0.0
    assert bisect_root(lambda x: x - 1.0, Bracket(lo=0.0, hi=1.0)) == 1.0


def test_bisect_root_without_sign_change():
    with pytest.raises(NoSignChange) as exc_info:
        bisect_root(lambda x: x * x + 1.0, Bracket(lo=-1.0, hi=1.0))
    assert exc_info.value.details["f_lo"] == 2.0


def test_bisect_root_rejects_non_finite_values():
    with pytest.raises(NonFinite):
        bisect_root(lambda x: math.nan, Bracket(lo=0.0, hi=1.0))


@pytest.mark.parametrize("lo, hi, tol", [(1.0, 1.0, 1e-12), (2.0, 1.0, 1e-12), (0.0, 1.0, 0.0)])
def test_bracket_validation(lo, hi, tol):
    with pytest.raises(pydantic.ValidationError):
        Bracket(lo=lo, hi=hi, tol=tol)


@pytest.mark.parametrize("dimension", [2, 3])
def test_spectral_radius_matches_characteristic_polynomial(dimension):
    rng = np.random.default_rng(7 + dimension)
    for _ in range(25):
        m = rng.uniform(0.05, 1.0, size=(dimension, dimension))
        result = spectral_radius(m)
        assert result.rho == pytest.approx(perron_root(m), rel=1e-10)
        assert result.left_vector.sum() == pytest.approx(1.0)
        assert (result.left_vector > 0).all()


def test_spectral_radius_of_triangular_growth_matrix():
    result = spectral_radius([[0.0, 0.0], [0.144, 1.296]])
    assert result.rho == pytest.approx(1.296, rel=1e-12)
    assert result.left_vector[1] > result.left_vector[0] > 0


def test_spectral_radius_of_periodic_matrix():
    result = spectral_radius([[0.0, 2.0], [2.0, 0.0]])
    assert result.rho == pytest.approx(2.0, rel=1e-10)


def test_spectral_radius_of_nilpotent_matrix_is_zero():
    assert spectral_radius([[0.0, 1.0], [0.0, 0.0]]).rho == 0.0


def test_spectral_radius_rejects_negative_entries():
    with pytest.raises(NotNonnegative):
        spectral_radius([[1.0, -0.1], [0.2, 1.0]])


def test_spectral_radius_rejects_non_square_input():
    with pytest.raises(DomainError):
        spectral_radius([[1.0, 0.5, 0.1]])


@pytest.mark.parametrize(
    "matrix, expected",
    [
        ([[0.0, 1.0], [1.0, 0.0]], True),
        ([[1.0, 0.0], [0.0, 1.0]], False),
        ([[0.5, 0.5], [0.0, 1.0]], False),
        ([[5.0]], True),
        ([[0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [1.0, 0.0, 0.0]], True),
    ],
)
def test_is_irreducible(matrix, expected):
    assert is_irreducible(matrix) is expected


def test_jacobian_fd_of_polynomial_map():
    jac = jacobian_fd(lambda x: np.array([x[0] ** 2, x[0] * x[1]]), [1.0, 2.0])
    np.testing.assert_allclose(jac, [[2.0, 0.0], [2.0, 1.0]], atol=1e-8)


def test_jacobian_fd_reports_failed_evaluations():
    with pytest.raises(NonFinite):
        jacobian_fd(lambda x: np.log(x), [0.0])
