"""Exception hierarchy.

Every failure raised by the library derives from :class:`RGBetheError`.
Input problems derive from :class:`InputError` and numerical failures from
:class:`NumericalError`; the CLI maps them to exit codes 1 and 2.
"""


class RGBetheError(Exception):
    """Base class for all library errors."""


class InputError(RGBetheError, ValueError):
    """Malformed or inconsistent input."""


class NumericalError(RGBetheError, ArithmeticError):
    """A numerical procedure failed to deliver a trustworthy result."""


# kernels
class DuplicateParameter(InputError):
    pass


class NonpositiveParameter(InputError):
    pass


class CoincidentArguments(InputError):
    pass


# models
class DuplicateLevel(InputError):
    pass


class ZeroCoupling(InputError):
    pass


class NonpositiveEta0(InputError):
    pass


class NonpositiveLevel(InputError):
    pass


class DimensionMismatch(InputError):
    pass


class WrongVariant(InputError):
    pass


class SpinNotHalf(InputError):
    pass


# solver
class SeedDimensionMismatch(InputError):
    pass


class BadPartition(InputError):
    pass


class NoConvergence(NumericalError):
    pass


class PoleCollision(NumericalError):
    pass


class IncompleteEnumeration(NumericalError):
    """Fewer solutions than the sector dimension.

    ``found`` holds the converged solutions and ``failures`` the seeds that
    did not lead to a new state.
    """

    def __init__(self, message, found=(), failures=()):
        super().__init__(message)
        self.found = list(found)
        self.failures = list(failures)


class NonrealLambda(NumericalError):
    pass


class RootFindingFailure(NumericalError):
    pass


class PathStalled(NumericalError):
    """Continuation could not advance; ``last_xi`` is the last accepted sample."""

    def __init__(self, message, last_xi=None, path=None):
        super().__init__(message)
        self.last_xi = last_xi
        self.path = path


# detforms
class SectorMismatch(InputError):
    pass


class GaugeCollision(InputError):
    pass


class TooLarge(InputError):
    pass


class SingularDual(NumericalError):
    pass


class LinearSystemSingular(NumericalError):
    pass


# oracle
class UnknownOperator(InputError):
    pass


class EigensolverFailure(NumericalError):
    pass


class NoMatch(NumericalError):
    pass
