"""Exception and warning types raised across the package."""


class PatternIndepError(Exception):
    """Base class for all package errors."""

    exit_code = 3


class InputError(PatternIndepError, ValueError):
    """Bad user input; maps to CLI exit code 2."""

    exit_code = 2


class TieError(InputError):
    pass


class DegenerateSample(InputError):
    pass


class DiagonalInput(InputError):
    pass


class SizeLimit(InputError):
    pass


class ParameterOutOfRange(InputError):
    pass


class InputFormatError(InputError):
    pass


class UnsupportedSampler(InputError):
    pass


class UnsupportedShift(PatternIndepError):
    pass


class RootBracketFailure(PatternIndepError, ArithmeticError):
    pass


class TruncationUnreachable(PatternIndepError):
    pass


class QuadratureNonconvergent(PatternIndepError, ArithmeticError):
    pass


class DistinctnessWarning(UserWarning):
    """Two pole locations of a secular equation coincide to rounding."""
