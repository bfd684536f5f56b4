"""Exception hierarchy shared by all modules."""


class LindstabError(Exception):
    """Base class for every error raised by this package."""


class DimensionMismatch(LindstabError, ValueError):
    pass


class InvalidDensity(LindstabError, ValueError):
    """A matrix failed one of the density-operator invariants."""

    def __init__(self, invariant, deviation, message=None):
        self.invariant = invariant
        self.deviation = float(deviation)
        super().__init__(message or f"{invariant} violated (deviation {self.deviation:.3e})")


class NotHermitian(InvalidDensity):
    def __init__(self, deviation):
        super().__init__("hermiticity", deviation)


class TraceNotOne(InvalidDensity):
    def __init__(self, deviation):
        super().__init__("unit trace", deviation)


class NotPositive(InvalidDensity):
    def __init__(self, deviation):
        super().__init__("positivity", deviation)


class NonPositiveProduct(LindstabError, ValueError):
    """Some off-diagonal product beta_n * gamma_n is not strictly positive."""


class ConvergenceFailure(LindstabError, RuntimeError):
    pass


class InvalidSpectrum(LindstabError, ValueError):
    pass


class SingularSystem(LindstabError, ValueError):
    pass


class ZeroLadderCoefficient(LindstabError, ValueError):
    pass


class IllConditionedKernel(LindstabError, RuntimeError):
    """No clear gap separates the kernel singular values from the rest."""


class StepRejected(LindstabError, RuntimeError):
    pass


class NotBlockDiagonal(LindstabError, ValueError):
    pass


class MeasurementDecoupled(LindstabError, ValueError):
    pass


class DegenerateMeasurement(LindstabError, ValueError):
    pass


class ConfigParse(LindstabError, ValueError):
    pass


class IoFailure(LindstabError, OSError):
    pass
