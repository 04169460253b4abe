"""Exception hierarchy shared by all magflow modules."""


class MagflowError(Exception):
    """Base class for every error raised by magflow."""


class NumericalFailure(MagflowError):
    """A numerical procedure (root finding, Newton, kernel) did not succeed."""


class RootFindingFailure(NumericalFailure):
    pass


class WrongCount(MagflowError, ValueError):
    pass


class NotHyperbolic(NumericalFailure):
    """The point is outside the strictly hyperbolic region."""


class StepTooLarge(NumericalFailure):
    """A finite-difference stencil left the strictly hyperbolic region."""


class KernelDimensionUnexpected(NumericalFailure):
    pass


class EpsilonTooLarge(MagflowError, ValueError):
    pass


class NewtonFailure(NumericalFailure):
    pass


class NewtonDivergence(NewtonFailure):
    pass


class NearVerticalCritical(NumericalFailure):
    """A critical point sits at (or too close to) z = +-i."""


class BranchCrossing(NumericalFailure):
    """Critical points reordered inside a chart, so branch labels are ambiguous."""


class SpeedCollision(NumericalFailure):
    pass


class GridTooSmall(MagflowError, ValueError):
    pass


class GridMismatch(MagflowError, ValueError):
    pass


class BlowUp(NumericalFailure):
    """The conformal factor became non-positive along a trajectory."""


class ParseError(MagflowError, ValueError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ValidationError(MagflowError, ValueError):
    pass
