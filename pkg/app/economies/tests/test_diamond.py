import numpy as np
import pydantic
import pytest

from app.economies.diamond import (
    CobbDouglasProduction, CustomProduction, DiamondEconomy, FailureMode, ShotOutcome, bubbly_steady_state,
    capital_comparison_path, check_necessity_diamond, classify_shot, no_arbitrage_residual, shoot, simulate,
    steady_capital, steady_capital_numeric,
)
from app.services.bubble import VerdictLabel, decomposition_check, telescoping_check
from app.services.errors import DomainError, NoBubblySteadyState, NoEquilibriumFound
from app.services.paths import GeometricPath, arrow_debreu


K_STAR = (0.5 * 0.7) ** (1.0 / 0.7)
K_BAR = 0.3 ** (1.0 / 0.7)


def test_steady_capital_closed_form_matches_bisection(diamond_bubbly):
    assert steady_capital(diamond_bubbly) == pytest.approx(K_STAR, rel=1e-14)
    assert steady_capital_numeric(diamond_bubbly) == pytest.approx(K_STAR, abs=1e-10)


def test_custom_production_uses_the_numeric_steady_state():
    production = CustomProduction(
        marginal_capital=lambda K: 0.3 * K ** -0.7, marginal_labor=lambda K: 0.7 * K ** 0.3
    )
    economy = DiamondEconomy(production=production, beta=0.5, D=GeometricPath(level=0.0, ratio=1.0))
    assert steady_capital(economy) == pytest.approx(K_STAR, abs=1e-10)
    K_bar, P_bar = bubbly_steady_state(economy)
    assert K_bar == pytest.approx(K_BAR, abs=1e-10)


def test_production_must_have_increasing_wages():
    with pytest.raises(pydantic.ValidationError):
        DiamondEconomy(
            production=CustomProduction(marginal_capital=lambda K: 1.0, marginal_labor=lambda K: 1.0 / K),
            beta=0.5,
            D=GeometricPath(level=0.0, ratio=1.0),
        )


@pytest.mark.parametrize("scale", [0.5, 2.0])
def test_capital_converges_monotonically_without_the_asset(diamond_no_dividends, scale):
    economy = diamond_no_dividends.copy(update={"K0": scale * K_STAR})
    path = simulate(economy, 0.0, 200)
    assert path.failure is None
    steps = np.diff(path.K) if scale < 1 else -np.diff(path.K)
    assert (steps >= -1e-15).all()
    assert path.K[-1] == pytest.approx(K_STAR, abs=1e-10)
    np.testing.assert_allclose(capital_comparison_path(economy, 200), path.K)


def test_simulate_reports_failure_modes(diamond_bubbly):
    assert simulate(diamond_bubbly, 0.0, 50).failure is FailureMode.COLLAPSE
    ceiling = 0.5 * 0.7 * K_STAR ** 0.3
    assert simulate(diamond_bubbly, 0.99 * ceiling, 50).failure is FailureMode.CROWDING_OUT
    with pytest.raises(DomainError):
        simulate(diamond_bubbly, 1.01 * ceiling, 50)


def test_bubbly_steady_state(diamond_bubbly):
    K_bar, P_bar = bubbly_steady_state(diamond_bubbly)
    assert K_bar == pytest.approx(K_BAR)
    assert P_bar == pytest.approx(0.5 * 0.7 * K_BAR ** 0.3 - K_BAR)


def test_necessity_holds_with_full_depreciation(diamond_bubbly):
    report = check_necessity_diamond(diamond_bubbly)
    assert report.R == pytest.approx(0.3 / 0.35)
    assert report.holds


def test_saddle_path_converges_to_the_bubbly_steady_state(diamond_bubbly):
    result = shoot(diamond_bubbly, 200)
    path = result.path
    assert path.survived == 200
    assert result.verdict.label == VerdictLabel.BUBBLY
    assert not result.multiplicity
    assert result.diagnostics() == []
    K_bar, P_bar = bubbly_steady_state(diamond_bubbly)
    assert abs(path.K[150] - K_bar) <= 1e-3
    assert abs(path.P[150] - P_bar) <= 1e-3
    assert no_arbitrage_residual(diamond_bubbly, path) <= 1e-12


def test_saddle_path_satisfies_the_valuation_identities(diamond_bubbly):
    path = shoot(diamond_bubbly, 200).path
    q = arrow_debreu(path.R[:-1])
    assert decomposition_check(q, path.P, path.D) <= 1e-8
    assert telescoping_check(q, path.P, path.D) <= 1e-8


def test_no_depreciation_rules_out_bubbles(diamond_no_depreciation):
    report = check_necessity_diamond(diamond_no_depreciation)
    assert report.R > 1.0
    assert not report.holds
    with pytest.raises(NoBubblySteadyState):
        bubbly_steady_state(diamond_no_depreciation)
    with pytest.raises(NoEquilibriumFound) as exc_info:
        shoot(diamond_no_depreciation, 200)
    assert exc_info.value.details["survived"] < 200


def test_cobb_douglas_marginal_products():
    production = CobbDouglasProduction(A=2.0, alpha=0.5, delta=0.1)
    assert production.F_K(4.0) == pytest.approx(0.5 + 0.9)
    assert production.F_L(4.0) == pytest.approx(2.0)


def test_classify_shot_separates_the_branches(diamond_bubbly, diamond_no_dividends):
    steady = bubbly_steady_state(diamond_bubbly)
    ceiling = 0.5 * 0.7 * K_STAR ** 0.3
    assert classify_shot(diamond_bubbly, 0.0, 100, steady)[0] is ShotOutcome.RAISE
    assert classify_shot(diamond_bubbly, 0.99 * ceiling, 100, steady)[0] is ShotOutcome.LOWER
    outcome, path = classify_shot(diamond_no_dividends, 0.0, 100, steady)
    assert path.failure is None
    assert outcome is ShotOutcome.RAISE


def test_saddle_path_without_dividends_is_not_the_bubbleless_branch(diamond_no_dividends):
    result = shoot(diamond_no_dividends, 200)
    K_bar, P_bar = bubbly_steady_state(diamond_no_dividends)
    assert result.P0 > 0.0
    assert result.multiplicity
    assert [d.code for d in result.diagnostics()] == ["Multiplicity"]
    assert abs(result.path.K[150] - K_bar) <= 1e-3
    assert abs(result.path.P[150] - P_bar) <= 1e-3
    assert result.verdict.label == VerdictLabel.BUBBLY
