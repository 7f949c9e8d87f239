import json
from pathlib import Path
from unittest.mock import MagicMock

import pytest

from app.actions.core import Scenario, ScenarioConfiguration
from app.economies.bewley import MarkovSpec
from app.economies.closed_forms import textbook_economy, wilson_economy
from app.economies.core import Diagnostic, DiagnosticSeverity, NecessityReport
from app.economies.diamond import CobbDouglasProduction, DiamondEconomy
from app.economies.pref_shock import PrefShockEconomy, ShockDistribution
from app.services.bubble import BubbleVerdict, VerdictLabel
from app.services.core import ScenarioReport
from app.services.paths import GeometricPath


SCENARIOS_DIR = Path(__file__).resolve().parent.parent / "scenarios"


def geometric(level, ratio):
    return GeometricPath(level=level, ratio=ratio)


@pytest.fixture
def scenarios_dir():
    return SCENARIOS_DIR


@pytest.fixture
def zero_path():
    return geometric(0.0, 1.0)


@pytest.fixture
def textbook():
    return textbook_economy(beta=0.5, a=geometric(1.0, 1.05), D=geometric(0.01, 1.0))


@pytest.fixture
def wilson():
    return wilson_economy(beta=3.0, a=1.0, G=1.0, D=1.0, G_d=0.5)


@pytest.fixture
def crra_params():
    return {"beta": 0.5, "gamma": 1.0, "G": 1.05, "w": 0.2}


@pytest.fixture
def diamond_bubbly():
    return DiamondEconomy(
        production=CobbDouglasProduction(A=1.0, alpha=0.3, delta=1.0), beta=0.5, D=geometric(0.001, 0.9)
    )


@pytest.fixture
def diamond_no_depreciation():
    return DiamondEconomy(
        production=CobbDouglasProduction(A=1.0, alpha=0.3, delta=0.0), beta=0.5, D=geometric(0.001, 0.9)
    )


@pytest.fixture
def diamond_no_dividends(zero_path):
    return DiamondEconomy(production=CobbDouglasProduction(A=1.0, alpha=0.3, delta=1.0), beta=0.5, D=zero_path)


@pytest.fixture
def two_state_markov():
    return MarkovSpec(z=[0.0, 1.5], Pi=[[0.9, 0.1], [0.1, 0.9]])


@pytest.fixture
def two_point_shocks():
    return ShockDistribution(theta=[1.0, 2.0], prob=[0.5, 0.5])


@pytest.fixture
def stationary_pref_economy(two_point_shocks, zero_path):
    return PrefShockEconomy(beta=0.96, gamma=1.0, F=two_point_shocks, A=geometric(1.0, 1.0), D=zero_path)


@pytest.fixture
def growing_pref_economy():
    return PrefShockEconomy(
        beta=0.96,
        gamma=1.0,
        F=ShockDistribution(theta=[1.0, 1.1, 2.0], prob=[0.5, 0.25, 0.25]),
        A=geometric(1.0, 1.05),
        D=geometric(0.001, 1.01),
    )


def load_scenario(name: str) -> Scenario:
    return Scenario.parse_obj(json.loads((SCENARIOS_DIR / name).read_text()))


@pytest.fixture
def scenario_loader():
    return load_scenario


@pytest.fixture
def wilson_scenario():
    return load_scenario("wilson.json")


@pytest.fixture
def ces_scenario():
    return load_scenario("ces.json")


@pytest.fixture
def two_sector_scenario():
    return load_scenario("two_sector.json")


@pytest.fixture
def bewley_invest_scenario():
    return load_scenario("bewley_invest.json")


@pytest.fixture
def scenario_file(tmp_path):
    def write(content, name="scenario.json"):
        path = tmp_path / name
        path.write_text(content if isinstance(content, str) else json.dumps(content))
        return path
    return write


class MockScenarioConfiguration(ScenarioConfiguration):
    level: float = 1.0


@pytest.fixture
def mock_scenario():
    return Scenario(name="mock", model="mock", horizon=10, parameters={"level": 2.0})


@pytest.fixture
def bubbly_report():
    return ScenarioReport(
        name="mock",
        model="mock",
        necessity=NecessityReport(R=0.5, G_d=1.0, G=1.05, holds=True),
        verdict=BubbleVerdict(label=VerdictLabel.BUBBLY, tail_decay=0.9, yield_partial_sum=0.1, relevance_liminf=1.0),
        diagnostics=[Diagnostic(code="MultipleRoots", message="two roots", severity=DiagnosticSeverity.WARNING)],
        solver={"early_window_agreement": 0.0, "residual": float("nan")},
        results={"P0": 0.5},
    )


@pytest.fixture
def mock_action_handler(bubbly_report):
    return MagicMock(__name__="action_mock", return_value=bubbly_report)


@pytest.fixture
def mock_get_action_handler(mock_action_handler):
    return MagicMock(return_value=(mock_action_handler, MockScenarioConfiguration))
