"""Exception hierarchy for mediv.

Every error raised on purpose by the library derives from :class:`MedivError`,
which is itself a :class:`ValueError` so that callers catching bad-input errors
generically keep working.
"""


class MedivError(ValueError):
    """Base class for all library errors."""


class DimensionMismatch(MedivError):
    pass


class EmptySample(MedivError):
    """Raised when a frequency-based measure is asked for with n = 0."""


class InvalidOutcome(MedivError):
    pass


class ZeroEvidence(MedivError):
    """The observed data has zero probability under every parameter value."""


class UnattainableTarget(MedivError):
    """The moment target lies outside the set reachable by exponential tilting.

    Attributes
    ----------
    target : float
    interval : tuple of float
        ``(lo, hi)`` bounds of the attainable targets. The open interval is
        attainable; endpoints only when the support is a single point.
    """

    def __init__(self, target, interval, message=None):
        self.target = float(target)
        self.interval = (float(interval[0]), float(interval[1]))
        if message is None:
            message = (
                f"target F={self.target:g} is not attainable; "
                f"attainable interval is ({self.interval[0]:g}, {self.interval[1]:g})"
            )
        super().__init__(message)


class DegenerateConstraint(MedivError):
    """The constraint function is constant on the support and F differs from it."""


class StalledAtDegenerate(DegenerateConstraint):
    """Root finding saw zero variance everywhere while the residual stayed large."""


class NumericalOverflow(MedivError):
    pass


class UnsupportedDimension(MedivError):
    pass


class ImportanceWeightWarning(RuntimeWarning):
    """Effective sample size of the tilted importance weights is very small."""


class ToleranceClampWarning(RuntimeWarning):
    """Requested tolerance is below the Monte Carlo noise floor and was raised."""


class MaxIterationsWarning(RuntimeWarning):
    pass


class ParseError(MedivError):
    """Malformed input file; carries the 1-based line and column."""

    def __init__(self, path, line, column, message):
        self.path = str(path)
        self.line = line
        self.column = column
        super().__init__(f"{self.path}:{line}:{column}: {message}")
