"""Exception hierarchy.

Two families: ``SpecError`` for bad input (mapped to CLI exit code 2) and
``NumericalError`` for failures of an algorithm on valid input (exit code 3).
"""


class LogwellError(Exception):
    """Base class for every error raised by the library."""


class SpecError(LogwellError, ValueError):
    """Invalid potential parameters or call arguments."""


class NonPositiveOmega2(SpecError):
    pass


class NegativeG2(SpecError):
    pass


class DuplicateSpikePosition(SpecError):
    pass


class NonPositiveSpikeField(SpecError):
    pass


class NonPositiveSpikePosition(NonPositiveSpikeField):
    pass


class NonFiniteCoupling(SpecError):
    pass


class SingularArgument(SpecError):
    """Evaluation requested too close to a logarithmic spike."""


class UnsupportedOrder(SpecError):
    pass


class MTooSmall(SpecError):
    pass


class WrongTopology(SpecError):
    """A closed-form routine was called on a spec it does not cover."""


class BasisTooSmall(SpecError):
    pass


class SeriesTooShort(SpecError):
    pass


class DomainTooSmall(SpecError):
    pass


class ConfigError(SpecError):
    pass


class DegenerateWell(SpecError):
    pass


class NumericalError(LogwellError, ArithmeticError):
    """An algorithm failed on otherwise valid input."""


class NoMinimumFound(NumericalError):
    pass


class BracketingFailed(NumericalError):
    def __init__(self, message, interval=None):
        super().__init__(message)
        self.interval = interval


class ComplexRoots(NumericalError):
    pass


class ClearanceImpossible(NumericalError):
    pass


class ConvergenceFailure(NumericalError):
    pass


class DegenerateUnperturbedLevel(NumericalError):
    pass


class NoSignChange(NumericalError):
    pass


class LostWell(NumericalError):
    pass
