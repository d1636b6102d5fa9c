"""Exception hierarchy shared by all modules."""


class FiniteGapError(Exception):
    """Base class for all library errors."""


class InputError(FiniteGapError, ValueError):
    """Malformed or out-of-contract input."""


class NumericalError(FiniteGapError, ArithmeticError):
    """A numerical stage failed (divergence, ill-conditioning, overflow)."""

    def __init__(self, message, stage=None, data=None):
        super().__init__(message)
        self.stage = stage
        self.data = data or {}


class IntegrationOverflowError(NumericalError):
    pass


class RootLocalizationError(NumericalError):
    pass


class IllConditionedEigenlineError(NumericalError):
    pass


class OrderDetectionError(NumericalError):
    pass


class DegenerateCurveError(NumericalError):
    pass


class NotQuasiPeriodicError(NumericalError):
    pass


class PoleError(NumericalError):
    pass


class DirectionSelectionError(NumericalError):
    pass


class NewtonError(NumericalError):
    pass


class ClosureError(NumericalError):
    pass


class SymmetryViolationError(NumericalError):
    pass
