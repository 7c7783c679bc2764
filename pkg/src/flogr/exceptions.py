"""Exception hierarchy.

The CLI maps these onto exit codes: configuration problems exit with 2,
data problems with 3 and estimation failures with 4.
"""


class FlogrError(Exception):
    """Base class for all package errors."""


class ConfigurationError(FlogrError, ValueError):
    """Invalid parameter or configuration value."""


class DataError(FlogrError, ValueError):
    """Malformed or inconsistent input data."""


class DomainError(DataError):
    """Argument outside the domain of a function (grid point, probability, ...)."""


class CompatibilityError(DataError):
    """Model and data were built on different grids or bases."""


class EstimationError(FlogrError, RuntimeError):
    """A fit could not be completed."""


class SingularFitError(EstimationError):
    """Rank-deficient design or basis matrix."""


class SeparationError(EstimationError):
    """Logistic coefficients diverge because the classes are separable.

    The last finite iterate is kept on ``last_coefficients``.
    """

    def __init__(self, message, last_coefficients=None):
        super().__init__(message)
        self.last_coefficients = last_coefficients
