"""Exception hierarchy shared by all chanrev modules."""


class ChanrevError(Exception):
    """Base class for every error raised by chanrev."""


class NotHermitian(ChanrevError, ValueError):
    pass


class NotPositive(ChanrevError, ValueError):
    pass


class NotInvertible(ChanrevError, ValueError):
    pass


class DimensionMismatch(ChanrevError, ValueError):
    pass


class DomainError(ChanrevError, ValueError):
    pass


class SupportViolation(ChanrevError, ValueError):
    """``supp sigma <= supp rho`` does not hold."""


class SizeCapExceeded(ChanrevError, ValueError):
    pass


class NumericalFailure(ChanrevError, ArithmeticError):
    pass


class ClosureNotReached(NumericalFailure):
    pass


class NumericalDegeneracy(NumericalFailure):
    pass


class NotAnAlgebra(NumericalFailure):
    pass


class NotReversible(ChanrevError, ValueError):
    pass
