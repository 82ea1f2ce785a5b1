"""Exception hierarchy.

Two families are distinguished because the command line maps them to
different exit codes: :class:`DomainError` (the request is outside the
region where the construction is defined) and :class:`NumericalFailure`
(the request was valid but a numerical step broke down).
"""


class FBAnnuliError(Exception):
    """Base class for all package errors."""


class DomainError(FBAnnuliError, ValueError):
    pass


class NumericalFailure(FBAnnuliError, RuntimeError):
    pass


class NonRectangular(DomainError):
    """The invariants have non-positive modular discriminant."""


class RootFailure(NumericalFailure):
    pass


class PoleProximity(DomainError):
    pass


class NotOmega0(DomainError):
    pass


class OutOfRange(DomainError):
    pass


class ConservationBreach(NumericalFailure):
    pass


class NoBracket(NumericalFailure):
    pass


class StepFailure(NumericalFailure):
    pass


class MuNotFound(NumericalFailure):
    pass


class DegenerateV0(NumericalFailure):
    pass


class NoSignChange(NumericalFailure):
    """No zero of the height along the searched part of a level curve."""

    def __init__(self, message, profile=None):
        super().__init__(message)
        self.profile = profile or []


class GridTooCoarse(DomainError):
    pass


class Degenerate(DomainError):
    pass
