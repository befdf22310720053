"""Exception hierarchy for condmean_lab."""


class CondMeanError(Exception):
    """Base class for all library errors."""


class DegenerateSampleError(CondMeanError, ValueError):
    """Sample has fewer than two coordinates, so no fluctuation is defined."""


class OutOfSupportError(CondMeanError, ValueError):
    """A coordinate lies outside the support of the distribution."""


class PreconditionError(CondMeanError, ValueError):
    """A parameter lies outside the validity window of an operation."""


class EmptyFiberError(CondMeanError, ValueError):
    """The fiber does not meet the support cube."""


class SamplingError(CondMeanError, RuntimeError):
    """Rejection sampling could not produce draws (density / bound mismatch)."""


class InsufficientMassError(CondMeanError, RuntimeError):
    """A conditioning cell carries too little probability for the trial budget."""


class ConvergenceError(CondMeanError, RuntimeError):
    """An iterative method did not converge."""
