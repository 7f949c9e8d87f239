import numpy as np
import pydantic
import pytest

from app.economies.bewley import (
    MarkovSpec, check_necessity_invest, growth_matrix, persistence_transform, scale_productivity,
    simulate_invest_equilibrium, wealth_lower_bound,
)
from app.services.bubble import VerdictLabel
from app.services.errors import DomainError, RegimeViolation
from app.services.numerics import spectral_radius
from app.services.paths import GeometricPath


def random_spec(rng, n_types):
    z = np.concatenate([[0.0], np.sort(rng.uniform(0.5, 2.0, n_types - 1))])
    Pi = rng.uniform(0.05, 1.0, (n_types, n_types))
    Pi /= Pi.sum(axis=1, keepdims=True)
    return MarkovSpec(z=z.tolist(), Pi=Pi.tolist())


def test_growth_matrix(two_state_markov):
    np.testing.assert_allclose(growth_matrix(two_state_markov, 0.96), [[0.0, 0.0], [0.144, 1.296]])


@pytest.mark.parametrize(
    "z, Pi",
    [
        ([0.1, 1.5], [[0.9, 0.1], [0.1, 0.9]]),
        ([0.0, 1.5, 1.2], [[0.8, 0.1, 0.1], [0.1, 0.8, 0.1], [0.1, 0.1, 0.8]]),
        ([0.0, 1.5], [[0.9, 0.2], [0.1, 0.9]]),
        ([0.0, 1.5], [[1.0, 0.0], [0.0, 1.0]]),
        ([0.0, 1.5, 2.0], [[0.5, 0.25, 0.25], [0.5, 0.5, 0.0], [0.5, 0.0, 0.5]]),
        ([0.0, 1.5], [[0.9, 0.1]]),
    ],
)
def test_markov_spec_validation(z, Pi):
    with pytest.raises(pydantic.ValidationError):
        MarkovSpec(z=z, Pi=Pi)


@pytest.mark.parametrize("n_types", [2, 3])
def test_spectral_radius_of_random_growth_matrices(n_types):
    rng = np.random.default_rng(11 * n_types)
    for _ in range(25):
        A = growth_matrix(random_spec(rng, n_types), 0.96)
        expected = float(np.max(np.abs(np.roots(np.poly(A)))))
        assert spectral_radius(A).rho == pytest.approx(expected, rel=1e-10)


def test_spectral_radius_scales_with_productivity():
    rng = np.random.default_rng(5)
    for _ in range(10):
        spec = random_spec(rng, 3)
        rho = spectral_radius(growth_matrix(spec, 0.96)).rho
        scaled = spectral_radius(growth_matrix(scale_productivity(spec, 1.1), 0.96)).rho
        assert scaled == pytest.approx(1.1 * rho, rel=1e-9)
        assert scaled > rho


def test_spectral_radius_increases_with_persistence():
    rng = np.random.default_rng(3)
    for _ in range(10):
        spec = random_spec(rng, 2)
        radii = [
            spectral_radius(growth_matrix(MarkovSpec(z=spec.z, Pi=persistence_transform(spec.Pi, tau).tolist()), 0.96)).rho
            for tau in (0.0, 0.25, 0.5, 0.75)
        ]
        assert all(lo < hi for lo, hi in zip(radii, radii[1:]))


def test_persistence_transform(two_state_markov):
    np.testing.assert_allclose(persistence_transform(two_state_markov.Pi, 0.5), [[0.95, 0.05], [0.05, 0.95]])
    with pytest.raises(DomainError):
        persistence_transform(two_state_markov.Pi, 1.0)
    transformed = MarkovSpec(z=two_state_markov.z, Pi=persistence_transform(two_state_markov.Pi, 0.5).tolist())
    assert spectral_radius(growth_matrix(transformed, 0.96)).rho == pytest.approx(1.368)


def test_necessity_for_investment_shocks(two_state_markov):
    report = check_necessity_invest(two_state_markov, 0.96, 1.0)
    assert report.R == 0.0
    assert report.G == pytest.approx(1.296)
    assert report.holds
    assert not check_necessity_invest(two_state_markov, 0.96, 1.3).holds
    with pytest.raises(DomainError):
        check_necessity_invest(two_state_markov, 0.96, 0.0)


def test_wealth_lower_bound(two_state_markov):
    A = growth_matrix(two_state_markov, 0.96)
    bound = wealth_lower_bound([1.0, 1.0], A, 10)
    assert bound.rho == pytest.approx(1.296)
    np.testing.assert_allclose(bound.scaled[1] * bound.rho, [0.144, 1.296])
    np.testing.assert_allclose(bound.levels(3), np.array([1.0, 1.0]) @ np.linalg.matrix_power(A, 3))
    assert bound.w0 == pytest.approx(bound.epsilon * bound.u[0])
    with pytest.raises(DomainError):
        wealth_lower_bound([1.0, 0.0], A, 10)


def test_investment_equilibrium_is_bubbly(two_state_markov):
    result = simulate_invest_equilibrium(two_state_markov, 0.96, [1.0, 1.0], GeometricPath(level=0.01, ratio=1.0), 200)
    path, bound = result.path, result.bound
    assert result.verdict.label == VerdictLabel.BUBBLY
    assert result.verdict.tail_decay <= 1.0 / 1.296 + 1e-3
    assert (path.W_detrended >= bound.scaled * (1.0 - 1e-12)).all()
    assert (path.yields[1:] <= path.yield_bound[1:] * (1.0 + 1e-9)).all()
    assert (path.R[:-1] < 1.5).all()
    assert np.isnan(path.R[-1])


def test_investment_equilibrium_without_dividends(two_state_markov):
    result = simulate_invest_equilibrium(two_state_markov, 0.96, [1.0, 1.0], GeometricPath(level=0.0, ratio=1.0), 100)
    assert result.verdict.label == VerdictLabel.BUBBLY
    assert (result.path.yields == 0.0).all()
    assert (result.path.P_detrended > 0).all()


def test_large_dividends_break_the_regime(two_state_markov):
    with pytest.raises(RegimeViolation):
        simulate_invest_equilibrium(
            two_state_markov, 0.96, [1.0, 1.0], GeometricPath(level=100.0, ratio=1.0), 50
        )
