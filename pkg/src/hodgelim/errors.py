"""Exception types shared across the package."""


class HodgeLimError(Exception):
    """Base class."""


class ScalarParseError(HodgeLimError, ValueError):
    pass


class DimensionMismatch(HodgeLimError, ValueError):
    pass


class ModeMismatch(HodgeLimError, TypeError):
    pass


class NotNilpotent(HodgeLimError):
    pass


class NotSemisimpleInteger(HodgeLimError):
    pass


class NotMHS(HodgeLimError):
    pass


class SolverFailure(HodgeLimError):
    pass


class XiUnavailable(HodgeLimError):
    pass


class DoesNotPreserveW(HodgeLimError):
    pass


class RelativeWeightMissing(HodgeLimError):
    def __init__(self, msg, vector=None):
        super().__init__(msg)
        self.vector = vector


class NotSplitLimit(HodgeLimError):
    pass


class FixedPointDivergence(HodgeLimError):
    pass


class NotAdmissible(HodgeLimError):
    pass


class NonPositiveY(HodgeLimError, ValueError):
    pass


class FitFailure(HodgeLimError):
    def __init__(self, msg, worst=None):
        super().__init__(msg)
        self.worst = worst


class ExactnessViolation(HodgeLimError):
    pass


class GammaKernelViolation(HodgeLimError):
    pass


class ScheduleNotInStrip(HodgeLimError):
    pass


class NotQuasiUnipotentWithin(HodgeLimError):
    def __init__(self, d_max):
        super().__init__(f"no power d <= {d_max} makes every monodromy unipotent")
        self.d_max = d_max


class NumericalBreakdown(HodgeLimError):
    pass


class ViolationFound(HodgeLimError):
    def __init__(self, msg, b=None):
        super().__init__(msg)
        self.b = b


class NotMHSAtPoint(HodgeLimError):
    pass


class NoIntegralCandidate(HodgeLimError):
    pass


class ScenarioFormatError(HodgeLimError, ValueError):
    """Input file problem, carrying a 1-based line and column when known."""

    def __init__(self, msg, line=None, col=None):
        loc = f" (line {line}, column {col})" if line is not None else ""
        super().__init__(msg + loc)
        self.line = line
        self.col = col


class NotNormalFunctionShape(HodgeLimError):
    """The scenario is not an extension of Z(0) by a pure structure of negative weight."""
