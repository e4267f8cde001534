"""exception types raised by vegspot"""


class VegspotError(Exception):
    pass


class InvalidParameters(VegspotError, ValueError):
    pass


class DomainError(VegspotError, ValueError):
    pass


class RestrictionViolated(VegspotError, ValueError):
    pass


class BadRadii(VegspotError, ValueError):
    pass


class DomainTooSmall(VegspotError, ValueError):
    pass


class GridTooCoarse(VegspotError, ValueError):
    pass


class NumericalFailure(VegspotError, RuntimeError):
    pass


class NoIntersection(NumericalFailure):
    pass


class NoCrossing(NumericalFailure):
    pass


class IntegrationFailure(NumericalFailure):
    pass


class NewtonDiverged(NumericalFailure):
    def __init__(self, message, residual_history=()):
        super().__init__(message)
        self.residual_history = list(residual_history)


class StepFloorReached(NumericalFailure):
    pass


class EigSolverStalled(NumericalFailure):
    def __init__(self, message, history=()):
        super().__init__(message)
        self.history = list(history)


class BlowUp(NumericalFailure):
    def __init__(self, message, t=None):
        super().__init__(message)
        self.t = t


class PoleNear(NumericalFailure):
    pass


class RegimeExceeded(NumericalFailure):
    pass
