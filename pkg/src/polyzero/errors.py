"""Exception hierarchy.

Every numerical-precondition failure derives from :class:`NumericalError`;
the command line maps those to exit status 2.
"""


class NumericalError(Exception):
    """A numerical precondition or guarantee could not be met."""


class TruncationInsufficient(NumericalError):
    """The coefficient truncation does not capture a requested column."""

    def __init__(self, message, deficits=None):
        super().__init__(message)
        self.deficits = deficits


class HermiteOverflow(NumericalError, OverflowError):
    """An unscaled value would exceed the floating point range."""


class NonConvergence(NumericalError):
    pass


class JacobianSingular(NumericalError):
    pass


class NearSingularU(NumericalError):
    pass


class ContactSeparation(NumericalError):
    """Points too close for the off-diagonal assembly; use the contact formulas."""


class IndefiniteCovariance(NumericalError):
    pass


class DegenerateScale(NumericalError, ZeroDivisionError):
    pass


class DegenerateAtZero(NumericalError):
    pass


class UnderResolved(NumericalError):
    pass
