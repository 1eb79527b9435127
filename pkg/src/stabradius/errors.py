"""Exception hierarchy shared by every module."""


class StabRadiusError(Exception):
    """Base class for all errors raised by this package."""


class InputError(StabRadiusError, ValueError):
    """Malformed or dimensionally inconsistent input."""


class NumericalError(StabRadiusError, ArithmeticError):
    """A computation could not be carried out to the requested accuracy."""


class SpectrumError(NumericalError):
    """A point that must lie in the resolvent set lies (numerically) in the spectrum."""


class ConvergenceError(NumericalError):
    """An iterative routine hit its iteration or subdivision budget."""


class UnstableSystemError(NumericalError):
    """An operation that requires exponential stability received an unstable system."""
