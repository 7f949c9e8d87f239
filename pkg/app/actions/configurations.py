from typing import List, Optional

import pydantic

from app.economies.bewley import BewleyInvestEconomy, MarkovSpec, persistence_transform
from app.economies.closed_forms import CESParams, TwoSectorParams, crra_economy, textbook_economy, wilson_economy
from app.economies.diamond import CobbDouglasProduction, DiamondEconomy
from app.economies.olg import EconomyOLG, UtilitySpec
from app.economies.pref_shock import PrefShockEconomy, ShockDistribution
from app.services.paths import GeometricPath, PathSpec
from .core import ScenarioConfiguration


class EconomyConfiguration(ScenarioConfiguration):
    """Configurations that translate into an economy object; the translation doubles as validation."""

    @classmethod
    def build_economy(cls, values: dict):
        raise NotImplementedError

    @pydantic.root_validator(skip_on_failure=True)
    def validate_economy(cls, values):
        cls.build_economy(values)
        return values

    def economy(self):
        return self.build_economy({name: getattr(self, name) for name in self.__fields__})


class TextbookConfiguration(EconomyConfiguration):
    beta: float = pydantic.Field(..., gt=0.0, lt=1.0, title="Old-age weight")
    a: PathSpec = pydantic.Field(..., discriminator="kind", title="Young endowment")
    D: PathSpec = pydantic.Field(..., discriminator="kind", title="Dividends")

    @classmethod
    def build_economy(cls, values: dict) -> EconomyOLG:
        return textbook_economy(values["beta"], values["a"], values["D"])


class TwoSectorConfiguration(ScenarioConfiguration, TwoSectorParams):
    pass


class CESConfiguration(ScenarioConfiguration, CESParams):
    pass


class WilsonConfiguration(EconomyConfiguration):
    beta: float = pydantic.Field(..., gt=0.0, title="Weight on old-age consumption")
    a: float = pydantic.Field(..., gt=0.0, title="Initial young endowment")
    G: float = pydantic.Field(..., gt=0.0, title="Endowment growth")
    D: float = pydantic.Field(..., ge=0.0, title="Initial dividend")
    G_d: float = pydantic.Field(..., gt=0.0, title="Dividend growth")
    b: float = pydantic.Field(0.0, ge=0.0, title="Initial old endowment")

    @classmethod
    def build_economy(cls, values: dict) -> EconomyOLG:
        return wilson_economy(
            values["beta"], values["a"], values["G"], values["D"], values["G_d"], b=values["b"]
        )


class CRRAConfiguration(EconomyConfiguration):
    beta: float = pydantic.Field(..., gt=0.0, title="Discount factor")
    gamma: float = pydantic.Field(..., gt=0.0, title="Relative risk aversion")
    G: float = pydantic.Field(..., gt=0.0, title="Endowment growth")
    w: float = pydantic.Field(..., ge=0.0, title="Old-to-young endowment ratio")
    D: float = pydantic.Field(..., ge=0.0, title="Initial dividend")
    G_d: float = pydantic.Field(1.0, gt=0.0, title="Dividend growth")

    @classmethod
    def build_economy(cls, values: dict) -> EconomyOLG:
        return crra_economy(
            values["beta"], values["gamma"], values["G"], values["w"], values["D"], values["G_d"]
        )


class OLGGenericConfiguration(EconomyConfiguration):
    utility: UtilitySpec = pydantic.Field(..., discriminator="family", title="Utility")
    a: PathSpec = pydantic.Field(..., discriminator="kind", title="Young endowment")
    b: PathSpec = pydantic.Field(
        GeometricPath(level=0.0, ratio=1.0), discriminator="kind", title="Old endowment"
    )
    D: PathSpec = pydantic.Field(..., discriminator="kind", title="Dividends")

    @classmethod
    def build_economy(cls, values: dict) -> EconomyOLG:
        return EconomyOLG(utility=values["utility"], a=values["a"], b=values["b"], D=values["D"])


class DiamondConfiguration(EconomyConfiguration):
    A: float = pydantic.Field(1.0, gt=0.0, title="Total factor productivity")
    alpha: float = pydantic.Field(..., gt=0.0, lt=1.0, title="Capital share")
    delta: float = pydantic.Field(1.0, ge=0.0, le=1.0, title="Depreciation rate")
    beta: float = pydantic.Field(..., gt=0.0, lt=1.0, title="Old-age weight")
    D: PathSpec = pydantic.Field(..., discriminator="kind", title="Dividends")
    K0: Optional[float] = pydantic.Field(None, gt=0.0, title="Initial capital", description="Defaults to K*")

    @classmethod
    def build_economy(cls, values: dict) -> DiamondEconomy:
        production = CobbDouglasProduction(A=values["A"], alpha=values["alpha"], delta=values["delta"])
        return DiamondEconomy(production=production, beta=values["beta"], D=values["D"], K0=values["K0"])


class BewleyInvestConfiguration(EconomyConfiguration):
    z: List[float] = pydantic.Field(..., min_items=2, title="Productivity by type")
    Pi: List[List[float]] = pydantic.Field(..., title="Transition matrix")
    tau: float = pydantic.Field(
        0.0, ge=0.0, lt=1.0, title="Persistence", description="Pi is replaced by tau I + (1 - tau) Pi"
    )
    beta: float = pydantic.Field(..., gt=0.0, lt=1.0, title="Discount factor")
    v0: List[float] = pydantic.Field(..., title="Initial wealth by type")
    D: PathSpec = pydantic.Field(..., discriminator="kind", title="Dividends")

    @classmethod
    def build_economy(cls, values: dict) -> BewleyInvestEconomy:
        markov = MarkovSpec(z=values["z"], Pi=persistence_transform(values["Pi"], values["tau"]).tolist())
        return BewleyInvestEconomy(markov=markov, beta=values["beta"], v0=values["v0"], D=values["D"])


class BewleyPrefConfiguration(EconomyConfiguration):
    beta: float = pydantic.Field(..., gt=0.0, lt=1.0, title="Discount factor")
    gamma: float = pydantic.Field(..., gt=0.0, title="Relative risk aversion")
    theta: List[float] = pydantic.Field(..., min_items=2, title="Shock values")
    prob: List[float] = pydantic.Field(..., min_items=2, title="Shock probabilities")
    A: PathSpec = pydantic.Field(..., discriminator="kind", title="Labor productivity")
    D: PathSpec = pydantic.Field(..., discriminator="kind", title="Dividends")
    terminal_theta_bar: Optional[float] = pydantic.Field(
        None, gt=0.0, title="Terminal cutoff", description="When set, a single path is solved from this cutoff"
    )

    @classmethod
    def build_economy(cls, values: dict) -> PrefShockEconomy:
        return PrefShockEconomy(
            beta=values["beta"], gamma=values["gamma"], F=ShockDistribution(theta=values["theta"], prob=values["prob"]),
            A=values["A"], D=values["D"],
        )
