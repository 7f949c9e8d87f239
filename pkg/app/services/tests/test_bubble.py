import math

import numpy as np
import pytest

from app.services.bubble import (
    VerdictLabel, checked_verdict, decomposition_check, montrucchio_test, relevance_statistic, telescoping_check,
)
from app.services.errors import DomainError, LengthMismatch, NegativeYield, NonFinite, ZeroPrice
from app.services.paths import arrow_debreu


def test_analytic_ratio_decides_the_verdict():
    assert montrucchio_test([0.1], analytic_ratio=0.5).label == VerdictLabel.BUBBLY
    fundamental = montrucchio_test([0.1], analytic_ratio=1.0)
    assert fundamental.label == VerdictLabel.FUNDAMENTAL
    assert fundamental.analytic


def test_geometrically_decaying_yields_are_bubbly():
    yields = 0.9 ** np.arange(1, 201)
    verdict = montrucchio_test(yields)
    assert verdict.label == VerdictLabel.BUBBLY
    assert verdict.tail_decay == pytest.approx(0.9, rel=1e-9)
    assert verdict.yield_partial_sum == pytest.approx(yields.sum())


def test_growing_yields_are_fundamental():
    verdict = montrucchio_test(1.01 ** np.arange(1, 201))
    assert verdict.label == VerdictLabel.FUNDAMENTAL
    assert verdict.tail_decay == pytest.approx(1.01, rel=1e-9)


def test_flat_yields_with_diverging_sum_are_fundamental():
    verdict = montrucchio_test(np.full(200, 0.01))
    assert verdict.label == VerdictLabel.FUNDAMENTAL
    assert verdict.notes == "partial sums diverge"


def test_vanishing_yields_are_bubbly():
    assert montrucchio_test(np.zeros(50)).label == VerdictLabel.BUBBLY
    assert montrucchio_test([]).label == VerdictLabel.BUBBLY
    tail_zeros = np.concatenate([np.full(20, 0.5), np.zeros(80)])
    assert montrucchio_test(tail_zeros).tail_decay == 0.0


def test_too_few_positive_yields_is_indeterminate():
    yields = np.zeros(100)
    yields[-1] = 0.3
    assert montrucchio_test(yields).label == VerdictLabel.INDETERMINATE


def test_relevance_is_carried_into_the_verdict():
    assert montrucchio_test([0.2, 0.1], analytic_ratio=0.5, relevance=0.25).relevance_liminf == 0.25


def test_checked_verdict_needs_necessity_for_the_analytic_ratio():
    flat = np.full(200, 0.01)
    assert montrucchio_test(flat, analytic_ratio=0.9).label == VerdictLabel.BUBBLY
    verdict = checked_verdict(flat, analytic_ratio=0.9, necessity_holds=False)
    assert verdict.label == VerdictLabel.FUNDAMENTAL
    assert not verdict.analytic


def test_checked_verdict_keeps_the_fit_when_the_ratio_disagrees():
    verdict = checked_verdict(np.full(200, 0.01), analytic_ratio=0.9, necessity_holds=True, relevance=0.5)
    assert verdict.label == VerdictLabel.FUNDAMENTAL
    assert not verdict.analytic
    assert verdict.relevance_liminf == 0.5


def test_checked_verdict_uses_the_ratio_when_the_fit_agrees_or_is_inconclusive():
    agreeing = checked_verdict(0.9 ** np.arange(1, 201), analytic_ratio=0.9, necessity_holds=True)
    assert agreeing.label == VerdictLabel.BUBBLY
    assert agreeing.analytic
    assert agreeing.tail_decay == 0.9
    sparse = np.zeros(100)
    sparse[-1] = 0.3
    inconclusive = checked_verdict(sparse, analytic_ratio=0.9, necessity_holds=True)
    assert inconclusive.label == VerdictLabel.BUBBLY
    assert inconclusive.analytic


def test_yield_validation():
    with pytest.raises(NegativeYield):
        montrucchio_test([0.1, -0.1])
    with pytest.raises(NonFinite):
        montrucchio_test([0.1, math.inf])


def constant_rate_path(T):
    """P = 1 and D = 1 every period: R = 2 and q_t = 2^-t."""
    return arrow_debreu(np.full(T, 2.0)), np.ones(T + 1), np.ones(T + 1)


def test_decomposition_identity_holds_on_a_consistent_path():
    q, P, D = constant_rate_path(60)
    assert decomposition_check(q, P, D) <= 1e-15


def test_telescoping_identity_holds_on_a_consistent_path():
    q, P, D = constant_rate_path(60)
    assert telescoping_check(q, P, D) <= 1e-12
    assert telescoping_check(None, P, D, log_q=np.log(q)) <= 1e-12


def test_telescoping_identity_detects_inconsistent_prices():
    q, P, D = constant_rate_path(10)
    P[5] = 2.0
    assert telescoping_check(q, P, D) > 0.1


def test_identity_checks_reject_bad_inputs():
    q, P, D = constant_rate_path(5)
    with pytest.raises(LengthMismatch):
        telescoping_check(q[:-1], P, D)
    P[0] = 0.0
    with pytest.raises(ZeroPrice):
        decomposition_check(q, P, D)


def test_relevance_statistic_takes_the_trailing_minimum():
    P = np.linspace(2.0, 1.0, 100)
    assert relevance_statistic(P, np.ones(100)) == pytest.approx(1.0)
    assert relevance_statistic(P, np.full(100, 2.0), window=100) == pytest.approx(0.5)
    with pytest.raises(LengthMismatch):
        relevance_statistic(P, np.ones(99))
    with pytest.raises(DomainError):
        relevance_statistic(P, np.zeros(100))
