"""Exception hierarchy.

Every error carries an ``exit_code`` so the command-line layer can map
failures to process status without inspecting messages.
"""


class DensregError(Exception):
    """Base class for all package errors."""

    exit_code = 4


class ConfigError(DensregError, ValueError):
    exit_code = 2


class DataError(DensregError, ValueError):
    exit_code = 3


class NumericError(DensregError, ArithmeticError):
    exit_code = 4


class InvalidBoundsError(ConfigError):
    pass


class TooFewPointsError(ConfigError):
    pass


class GridMismatchError(DataError):
    pass


class DomainError(NumericError):
    pass


class InvariantError(NumericError):
    pass


class DegenerateSampleError(DataError):
    pass


class NegativeInputError(DataError):
    pass


class LengthMismatchError(DataError):
    pass


class ParseError(DataError):
    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class EmptyNeighborhoodError(NumericError):
    """No training density lies within the bandwidth of the query."""

    def __init__(self, message, step=None):
        if step is not None:
            message = f"forecast step {step}: {message}"
        super().__init__(message)
        self.step = step


class NoValidCandidateError(NumericError):
    pass


class ZeroSignalError(NumericError):
    pass
