import logging

import numpy as np
import pandas as pd

from app.actions.configurations import (
    BewleyInvestConfiguration, BewleyPrefConfiguration, CESConfiguration, CRRAConfiguration, DiamondConfiguration,
    OLGGenericConfiguration, TextbookConfiguration, TwoSectorConfiguration, WilsonConfiguration,
)
from app.actions.core import Scenario
from app.actions.utils import (
    as_float_list, attempt, identity_residuals, log_q_from_rates, price_path_table, record_necessity, solver_kwargs,
)
from app.economies import bewley, closed_forms, diamond, olg, pref_shock
from app.economies.core import Diagnostic, DiagnosticCode
from app.services.activity_logger import activity_logger, log_action_activity
from app.services.core import ModelTag, ScenarioReport
from app.services.numerics import spectral_radius
from app.services.paths import is_zero_path, tail_ratio


logger = logging.getLogger(__name__)


def _solve_olg(report: ScenarioReport, scenario: Scenario, economy: olg.EconomyOLG):
    """Terminal sweep plus the path-level checks every OLG scenario reports."""
    result = attempt(report, olg.solve_equilibrium, economy, scenario.horizon, **solver_kwargs(scenario))
    if result is None:
        return None
    path = result.path
    report.verdict = result.verdict
    report.solver.update({
        "terminal_fractions": result.terminal_fractions,
        "early_window_agreement": result.early_window_agreement,
        "p0_by_terminal": [float(p.p[0]) for p in result.paths],
        "pricing_residual": olg.pricing_residual(economy, path),
        "detrended_residual": olg.detrended_residual(economy, path),
        **identity_residuals(path.log_q, path.P, path.D),
    })
    report.table = price_path_table(path)
    log_action_activity(
        report.name, report.model, f"Terminal sweep agreed to {result.early_window_agreement:.3e}",
        level="DEBUG", data={"terminal_fractions": result.terminal_fractions},
    )
    return result


@activity_logger()
def action_textbook(scenario: Scenario, action_config: TextbookConfiguration) -> ScenarioReport:
    economy = action_config.economy()
    report = ScenarioReport(name=scenario.name, model=ModelTag.TEXTBOOK.value)
    record_necessity(report, attempt(report, olg.check_necessity, economy))
    result = _solve_olg(report, scenario, economy)
    report.verdict = closed_forms.textbook_verdict(action_config.a, action_config.D)
    if result is not None:
        # p_t = P_t / a_t equals beta exactly before the terminal period
        report.results["closed_form_max_relative_error"] = float(
            np.max(np.abs(result.path.p[:-1] - action_config.beta)) / action_config.beta
        )
        report.results["numeric_verdict"] = result.verdict.label
    return report


@activity_logger()
def action_two_sector(scenario: Scenario, action_config: TwoSectorConfiguration) -> ScenarioReport:
    params = action_config
    economy = closed_forms.two_sector_economy(params)  # WrongRegime propagates: the scenario has no equilibrium
    report = ScenarioReport(name=scenario.name, model=ModelTag.TWO_SECTOR.value)
    record_necessity(report, attempt(report, olg.check_necessity, economy))
    report.add_diagnostic(closed_forms.early_regime_diagnostic(params, scenario.horizon))
    result = _solve_olg(report, scenario, economy)
    report.verdict = closed_forms.two_sector_verdict(params)

    points = [closed_forms.two_sector_equilibrium(params, t) for t in range(scenario.horizon + 1)]
    report.table = pd.DataFrame({
        "t": [p.t for p in points],
        "P_t": [p.P for p in points],
        "r_t": [p.r for p in points],
        "w_t": [p.w for p in points],
        "H2_t": [p.H2 for p in points],
        "yield_t": [p.yield_ for p in points],
        "early_regime": [p.early_regime for p in points],
        "clearing_residual": [closed_forms.two_sector_clearing_residual(params, p.t) for p in points],
    })
    yields = np.array([p.yield_ for p in points])
    report.results.update({
        "yield_ratio": params.yield_ratio,
        "measured_yield_ratio": float(yields[-1] / yields[-2]) if yields.size > 1 else None,
        "land_rent_level": params.land_rent_level,
    })
    if result is not None:
        report.results["detrended_max_relative_error"] = float(
            np.max(np.abs(result.path.p[:-1] - params.beta)) / params.beta
        )
    return report


@activity_logger()
def action_ces(scenario: Scenario, action_config: CESConfiguration) -> ScenarioReport:
    params = action_config
    outcome = closed_forms.ces_verdict(params)
    report = ScenarioReport(
        name=scenario.name, model=ModelTag.CES.value, verdict=outcome.verdict,
        results={"yield_ratio": outcome.yield_ratio, "initial_yield": outcome.initial_yield},
    )
    t = range(scenario.horizon + 1)
    report.table = pd.DataFrame({"t": list(t), "yield_t": [closed_forms.ces_yield(params, s) for s in t]})
    return report


@activity_logger()
def action_wilson(scenario: Scenario, action_config: WilsonConfiguration) -> ScenarioReport:
    economy = action_config.economy()
    report = ScenarioReport(name=scenario.name, model=ModelTag.WILSON.value)
    record_necessity(report, attempt(report, olg.check_necessity, economy))
    result = _solve_olg(report, scenario, economy)
    exact = closed_forms.wilson_path(
        action_config.a, action_config.G, action_config.D, action_config.G_d, scenario.horizon
    )
    if result is not None:
        window = scenario.horizon // 2 + 1
        report.results["closed_form_max_abs_error"] = float(
            np.max(np.abs(result.path.P[:window] - exact.P[:window]))
        )
        report.table["P_closed_form"] = exact.P
        report.table["R_closed_form"] = exact.R
    return report


@activity_logger()
def action_crra(scenario: Scenario, action_config: CRRAConfiguration) -> ScenarioReport:
    economy = action_config.economy()
    beta, gamma, G, w = action_config.beta, action_config.gamma, action_config.G, action_config.w
    report = ScenarioReport(name=scenario.name, model=ModelTag.CRRA.value)
    record_necessity(report, attempt(report, olg.check_necessity, economy))
    steady = attempt(report, closed_forms.crra_steady_state, beta, gamma, G, w)
    if steady is not None:
        report.results["steady_state"] = steady.dict()
        report.results["determinacy_condition"] = closed_forms.determinacy_condition(beta, gamma, G, w)
        if steady.singular:
            report.add_diagnostic(Diagnostic(
                code=DiagnosticCode.SINGULAR_JACOBIAN.value,
                message="The steady-state Jacobian is singular; the map h is not locally invertible",
                details={"xi1_star": steady.xi1_star},
            ))
        else:
            eigenvalues = attempt(report, closed_forms.crra_numeric_eigenvalues, beta, gamma, G, w)
            if eigenvalues is not None:
                report.results["numeric_eigenvalues"] = as_float_list(eigenvalues)
    result = _solve_olg(report, scenario, economy)
    if result is not None and steady is not None:
        report.results["steady_state_gap"] = float(abs(result.path.p[scenario.horizon // 2] - steady.xi1_star))
    return report


@activity_logger()
def action_olg_generic(scenario: Scenario, action_config: OLGGenericConfiguration) -> ScenarioReport:
    economy = action_config.economy()
    report = ScenarioReport(name=scenario.name, model=ModelTag.OLG_GENERIC.value)
    record_necessity(report, attempt(report, olg.check_necessity, economy))
    _solve_olg(report, scenario, economy)
    report.results.update({"G": economy.G, "w": economy.w, "G_d": economy.G_d})
    return report


@activity_logger()
def action_diamond(scenario: Scenario, action_config: DiamondConfiguration) -> ScenarioReport:
    economy = action_config.economy()
    report = ScenarioReport(name=scenario.name, model=ModelTag.DIAMOND.value)
    record_necessity(report, attempt(report, diamond.check_necessity_diamond, economy))
    report.results["K_star"] = diamond.steady_capital(economy)
    steady = attempt(report, diamond.bubbly_steady_state, economy)
    if steady is not None:
        report.results["K_bar"], report.results["P_bar"] = steady

    shot = attempt(report, diamond.shoot, economy, scenario.horizon, tol=scenario.solver.tol)
    if shot is None:
        return report
    path = shot.path
    report.verdict = shot.verdict
    for diagnostic in shot.diagnostics():
        report.add_diagnostic(diagnostic)
    report.solver.update({
        "P0": shot.P0,
        "survived": path.survived,
        "no_arbitrage_residual": diamond.no_arbitrage_residual(economy, path),
        **identity_residuals(log_q_from_rates(path.R), path.P, path.D),
    })
    if steady is not None:
        # the saddle path settles before its numerical divergence near the horizon
        t = (3 * scenario.horizon) // 4
        report.results["steady_state_gap"] = max(abs(path.K[t] - steady[0]), abs(path.P[t] - steady[1]))
    report.table = pd.DataFrame({
        "t": path.t, "K_t": path.K, "P_t": path.P, "R_t": path.R, "D_t": path.D, "yield_t": path.yields,
    })
    return report


@activity_logger()
def action_bewley_invest(scenario: Scenario, action_config: BewleyInvestConfiguration) -> ScenarioReport:
    economy = action_config.economy()
    spec = economy.markov
    report = ScenarioReport(name=scenario.name, model=ModelTag.BEWLEY_INVEST.value)
    spectral = attempt(report, spectral_radius, bewley.growth_matrix(spec, economy.beta))
    if spectral is None:
        return report
    report.results.update({
        "rho": spectral.rho,
        "left_perron_vector": as_float_list(spectral.left_vector),
        "power_iterations": spectral.iterations,
        "transitions": spec.Pi,
    })
    if not is_zero_path(economy.D):
        necessity = attempt(report, bewley.check_necessity_invest, spec, economy.beta, tail_ratio(economy.D))
        record_necessity(report, necessity)

    result = attempt(
        report, bewley.simulate_invest_equilibrium, spec, economy.beta, economy.v0, economy.D, scenario.horizon
    )
    if result is None:
        return report
    path, bound = result.path, result.bound
    report.verdict = result.verdict
    report.results.update({
        "epsilon": bound.epsilon,
        "w0": bound.w0,
        "lower_bound_dominance": float(np.min(path.W_detrended / bound.scaled)),
    })
    table = {"t": path.t}
    for n in range(path.W_detrended.shape[1]):
        table[f"W{n}_detrended"] = path.W_detrended[:, n]
    table.update({
        "P_detrended": path.P_detrended, "R_t": path.R, "D_t": path.D, "yield_t": path.yields,
        "yield_bound_t": path.yield_bound,
    })
    report.table = pd.DataFrame(table)
    return report


@activity_logger()
def action_bewley_pref(scenario: Scenario, action_config: BewleyPrefConfiguration) -> ScenarioReport:
    economy = action_config.economy()
    report = ScenarioReport(name=scenario.name, model=ModelTag.BEWLEY_PREF.value)
    record_necessity(report, attempt(report, pref_shock.check_necessity_pref, economy))
    kwargs = solver_kwargs(scenario)
    result = attempt(
        report, pref_shock.solve_pref_equilibrium, economy, scenario.horizon,
        terminal_theta_bar=action_config.terminal_theta_bar, **kwargs,
    )
    constant = pref_shock.price_lower_bound_constant(economy)
    report.results["price_lower_bound_constant"] = constant
    if result is None:
        return report
    path = result.path
    report.verdict = result.verdict
    for diagnostic in result.diagnostics:
        report.add_diagnostic(diagnostic)
    floor = constant * np.exp(path.log_A / economy.gamma)
    report.results["lower_bound_slack"] = float(np.min(path.P - floor)) if np.all(np.isfinite(floor)) else None
    report.solver.update({
        "terminal_theta_bars": result.terminal_theta_bars,
        "early_window_agreement": result.early_window_agreement,
        "euler_residual": pref_shock.euler_residual(economy, path),
        "market_clearing_residual": pref_shock.market_clearing_residual(economy, path),
        "multiple_root_periods": path.multiple_roots,
        **identity_residuals(log_q_from_rates(path.R), path.P, path.D),
    })
    report.table = pd.DataFrame({
        "t": path.t, "A_t": path.A, "D_t": path.D, "theta_bar_t": path.theta_bar, "R_t": path.R,
        "P_t": path.P, "w_t": path.w, "yield_t": path.yields,
    })
    return report
