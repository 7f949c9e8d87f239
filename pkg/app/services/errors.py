class LaboratoryError(Exception):
    """Base class for numerical and model errors. Extra context goes into `details`."""

    def __init__(self, message: str = "", **details):
        super().__init__(message)
        self.details = details

    @property
    def code(self) -> str:
        return type(self).__name__


class ModelNotFound(Exception):
    pass


class ConfigurationNotFound(Exception):
    pass


class ConfigurationValidationError(Exception):
    pass


class ScenarioExecutionError(Exception):
    pass


# numerics
class NoSignChange(LaboratoryError):
    pass


class NonFinite(LaboratoryError):
    pass


class NotNonnegative(LaboratoryError):
    pass


class NoConvergence(LaboratoryError):
    pass


# paths and valuation
class Overflow(LaboratoryError):
    pass


class EmptyWindow(LaboratoryError):
    pass


class NonPositive(LaboratoryError):
    pass


class NonPositiveRate(LaboratoryError):
    pass


class LengthMismatch(LaboratoryError):
    pass


class NegativeYield(LaboratoryError):
    pass


class ZeroPrice(LaboratoryError):
    pass


class DomainError(LaboratoryError, ValueError):
    pass


class IndeterminateGrowth(LaboratoryError):
    pass


# equilibrium solvers
class NoAgreement(LaboratoryError):
    pass


class WrongRegime(LaboratoryError):
    pass


class NoBubblySteadyState(LaboratoryError):
    pass


class NoFixedPoint(LaboratoryError):
    pass


class NoEquilibriumFound(LaboratoryError):
    pass


class RegimeViolation(LaboratoryError):
    pass


class NoRoot(LaboratoryError):
    pass
