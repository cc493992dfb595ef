"""Exception hierarchy shared by all hessdisc modules."""


class HessdiscError(Exception):
    """Base class for every error raised by the toolkit."""


class SpecError(HessdiscError, ValueError):
    """Malformed field, profile or run specification."""


class NonFiniteValue(HessdiscError, FloatingPointError):
    """An evaluator produced NaN or infinity."""


class PointOutsideDomain(HessdiscError, ValueError):
    pass


class StepUnderflow(HessdiscError, ValueError):
    pass


class PointTooCloseToBoundary(HessdiscError, ValueError):
    pass


class ConstraintViolated(HessdiscError, ValueError):
    """A profile g violates -1/t <= g'(t) <= 0 somewhere on (0, 1)."""

    def __init__(self, message, t_range=None):
        super().__init__(message)
        self.t_range = t_range


class IntegralNonFinite(HessdiscError, FloatingPointError):
    pass


class TOutOfRange(HessdiscError, ValueError):
    pass


class NonNegativeHPrime(HessdiscError, ValueError):
    """Radial field is not strictly decreasing in r."""


class LevelOutOfRange(HessdiscError, ValueError):
    pass


class OpenCurveAtBoundary(HessdiscError):
    """A level curve runs into the edge of the sampling mask."""


class DegenerateSegment(HessdiscError, ValueError):
    pass


class NearCriticalVertex(HessdiscError):
    pass


class ChainOrderViolated(HessdiscError):
    def __init__(self, message, pair=None, report=None):
        super().__init__(message)
        self.pair = pair
        self.report = report


class StartCritical(HessdiscError, ValueError):
    pass


class StartOutsideDomain(HessdiscError, ValueError):
    pass


class TraceTooShort(HessdiscError, ValueError):
    pass


class ZeroH0(HessdiscError, ValueError):
    pass


class AlphaOutOfRange(HessdiscError, ValueError):
    pass
