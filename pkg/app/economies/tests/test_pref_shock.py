import math

import numpy as np
import pydantic
import pytest

from app.economies.core import DiagnosticCode
from app.economies.pref_shock import (
    PrefShockEconomy, ShockDistribution, check_necessity_pref, consumption_rule, cutoff_grid, cutoff_roots,
    detrended_price, euler_residual, liquidity_premium, market_clearing_residual, price_given_cutoff,
    price_lower_bound, price_lower_bound_constant, savings_wedge, solve_pref_equilibrium, solve_pref_truncated,
    step_back_cutoff,
)
from app.services.bubble import VerdictLabel
from app.services.errors import DomainError, NoRoot, ZeroPrice
from app.services.paths import GeometricPath

STATIONARY_CUTOFF = 1.0 / (1.0 / 0.96 - 0.5)


@pytest.fixture
def five_point_shocks():
    return ShockDistribution(theta=[1.0, 1.5, 2.0, 2.5, 3.0], prob=[0.2] * 5)


def test_shock_distribution_sorts_atoms():
    F = ShockDistribution(theta=[2.0, 1.0, 1.5], prob=[0.25, 0.5, 0.25])
    assert F.theta == [1.0, 1.5, 2.0]
    assert F.prob == [0.5, 0.25, 0.25]
    assert (F.theta_L, F.theta_H, F.gap) == (1.0, 2.0, 0.5)


@pytest.mark.parametrize(
    "theta, prob",
    [([1.0, 2.0], [0.5, 0.6]), ([1.0, 2.0], [1.0, 0.0]), ([0.0, 2.0], [0.5, 0.5]), ([1.0, 1.0], [0.5, 0.5]),
     ([1.0, 2.0], [1.0])],
)
def test_shock_distribution_validation(theta, prob):
    with pytest.raises(pydantic.ValidationError):
        ShockDistribution(theta=theta, prob=prob)


def test_liquidity_premium_and_savings_wedge(two_point_shocks, five_point_shocks):
    assert liquidity_premium(two_point_shocks, 1.0) == pytest.approx(1.5)
    assert liquidity_premium(two_point_shocks, 2.0) == pytest.approx(1.0)
    assert savings_wedge(two_point_shocks, 2.0, 1.0) == pytest.approx(0.5)
    assert liquidity_premium(five_point_shocks, 2.0) == pytest.approx(1.15, abs=1e-14)
    expected_wedge = 0.2 * ((math.sqrt(2.0) - 1.0) + (math.sqrt(2.0) - math.sqrt(1.5)))
    assert savings_wedge(five_point_shocks, 2.0, 2.0) == pytest.approx(expected_wedge, abs=1e-14)


def test_premium_falls_and_wedge_rises_with_the_cutoff(five_point_shocks):
    grid = cutoff_grid(five_point_shocks)
    premium = [liquidity_premium(five_point_shocks, x) for x in grid]
    wedge = [savings_wedge(five_point_shocks, x, 2.0) for x in grid]
    assert all(hi <= lo for lo, hi in zip(premium, premium[1:]))
    assert all(hi > lo for lo, hi in zip(wedge, wedge[1:]))


def test_cutoff_outside_the_support_is_rejected(two_point_shocks):
    with pytest.raises(DomainError):
        liquidity_premium(two_point_shocks, 0.5)
    with pytest.raises(DomainError):
        savings_wedge(two_point_shocks, 2.5, 1.0)


def test_price_given_cutoff(two_point_shocks):
    assert price_given_cutoff(1.0, 1.0, two_point_shocks, 2.0) == pytest.approx(0.5)
    assert price_given_cutoff(4.0, 2.0, two_point_shocks, 2.0) == pytest.approx(
        2.0 * detrended_price(two_point_shocks, 2.0, 2.0)
    )
    with pytest.raises(ZeroPrice):
        price_given_cutoff(1.0, 1.0, two_point_shocks, 1.0)


def test_consumption_rule():
    assert consumption_rule(1.0, 1.0, 1.0, 2.0, 1.0, 0.96) == pytest.approx(1.0 / 0.96)
    assert consumption_rule(3.0, 1.0, 1.0, 2.0, 1.0, 0.96) == pytest.approx(2.0 / 0.96)
    with pytest.raises(DomainError):
        consumption_rule(1.0, 1.0, 0.0, 2.0, 1.0, 0.96)


def test_step_back_cutoff_solves_the_pricing_equation(stationary_pref_economy):
    theta_bar, n_roots = step_back_cutoff(stationary_pref_economy, 0, 0.3)
    assert n_roots == 1
    assert savings_wedge(stationary_pref_economy.F, theta_bar, 1.0) / 0.96 == pytest.approx(0.3, abs=1e-11)


def two_root_residual(e, t, target):
    return lambda theta_bar: (theta_bar - 1.3) * (theta_bar - 1.7)


def test_cutoff_roots_report_their_grid_brackets(stationary_pref_economy, mocker):
    mocker.patch("app.economies.pref_shock._step_residual", two_root_residual)
    roots, brackets = cutoff_roots(stationary_pref_economy, 0, 0.3)
    assert roots == pytest.approx([1.3, 1.7], abs=1e-11)
    assert brackets == [(1.0 + 19 / 64, 1.0 + 20 / 64), (1.0 + 44 / 64, 1.0 + 45 / 64)]
    assert step_back_cutoff(stationary_pref_economy, 0, 0.3) == (pytest.approx(1.7, abs=1e-11), 2)


def test_multiple_roots_diagnostic_carries_the_brackets(stationary_pref_economy, mocker):
    mocker.patch("app.economies.pref_shock._step_residual", two_root_residual)
    result = solve_pref_equilibrium(stationary_pref_economy, 20)
    diagnostic = next(d for d in result.diagnostics if d.code == DiagnosticCode.MULTIPLE_ROOTS.value)
    assert diagnostic.details["periods"] == list(range(10))
    assert len(diagnostic.details["brackets"]) == 10
    for brackets in diagnostic.details["brackets"]:
        assert [lo < 1.3 < hi for lo, hi in brackets] == [True, False]
        assert [lo < 1.7 < hi for lo, hi in brackets] == [False, True]
    assert len(result.path.root_brackets) == 20


def test_stationary_cutoff_is_reached_from_every_terminal(stationary_pref_economy):
    for terminal in (1.2, 1.5, 2.0):
        path = solve_pref_truncated(stationary_pref_economy, 200, terminal)
        assert np.max(np.abs(path.theta_bar[:101] - STATIONARY_CUTOFF)) <= 1e-8


def test_stationary_equilibrium_flags_the_gap(stationary_pref_economy):
    result = solve_pref_equilibrium(stationary_pref_economy, 200)
    assert result.early_window_agreement <= 1e-6
    assert result.verdict.label == VerdictLabel.BUBBLY
    codes = [d.code for d in result.diagnostics]
    assert DiagnosticCode.CUTOFF_BELOW_GAP.value in codes
    assert result.terminal_theta_bars == pytest.approx([1.0 + 1.0 / 3.0, 1.0 + 2.0 / 3.0, 2.0])


def test_growing_economy_is_bubbly_and_clears(growing_pref_economy):
    result = solve_pref_equilibrium(growing_pref_economy, 400)
    path = result.path
    assert result.early_window_agreement <= 1e-6
    assert result.verdict.label == VerdictLabel.BUBBLY
    assert result.verdict.tail_decay == pytest.approx(1.01 / 1.05)
    assert euler_residual(growing_pref_economy, path) <= 1e-9
    assert market_clearing_residual(growing_pref_economy, path) <= 1e-9
    floor = np.array([price_lower_bound(growing_pref_economy, t) for t in path.t])
    assert (path.P >= floor).all()
    assert result.diagnostics == []


def test_price_lower_bound_constant(growing_pref_economy):
    assert price_lower_bound_constant(growing_pref_economy) == pytest.approx(0.05)
    assert price_lower_bound(growing_pref_economy, 10) == pytest.approx(0.05 * 1.05 ** 10)


def test_fast_dividend_growth_has_no_cutoff(growing_pref_economy):
    economy = growing_pref_economy.copy(update={"D": GeometricPath(level=0.001, ratio=1.1)})
    assert not check_necessity_pref(economy).holds
    with pytest.raises(NoRoot):
        solve_pref_equilibrium(economy, 200, terminal_theta_bar=2.0)


@pytest.mark.parametrize("gamma, holds", [(1.0, True), (2.0, True), (8.0, False)])
def test_necessity_depends_on_risk_aversion(growing_pref_economy, gamma, holds):
    economy = growing_pref_economy.copy(update={"gamma": gamma})
    report = check_necessity_pref(economy)
    assert report.G == pytest.approx(1.05 ** (1.0 / gamma))
    assert report.holds is holds


def test_terminal_cutoff_must_lie_above_the_lowest_shock(stationary_pref_economy):
    with pytest.raises(DomainError):
        solve_pref_truncated(stationary_pref_economy, 10, 1.0)


def test_economy_requires_positive_productivity(two_point_shocks):
    with pytest.raises(pydantic.ValidationError):
        PrefShockEconomy(
            beta=0.96, gamma=1.0, F=two_point_shocks, A=GeometricPath(level=0.0, ratio=1.0),
            D=GeometricPath(level=0.0, ratio=1.0),
        )
