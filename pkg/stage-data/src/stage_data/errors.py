"""Exception hierarchy shared by every pdWOLS module."""


class PdwolsError(Exception):
    """Base class for all toolkit errors."""


class DataValidationError(PdwolsError, ValueError):
    """Input data could not be parsed or violates a structural invariant."""


class NumericalError(PdwolsError, ArithmeticError):
    """A numerical routine produced non-finite or unusable results."""


class ConfigurationError(PdwolsError, ValueError):
    """Settings are inconsistent or cannot define a valid estimation problem."""
