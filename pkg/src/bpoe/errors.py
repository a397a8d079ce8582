"""Exception hierarchy shared across the package."""


class BpoeError(Exception):
    """Base class for all errors raised by this package."""


class MalformedFile(BpoeError):
    """Scenario file has a bad header, wrong row arity, or non-numeric data."""


class BadProbabilities(BpoeError):
    """Probabilities are nonpositive or do not sum to one within tolerance."""


class BadParameter(BpoeError):
    """A numeric argument is outside its allowed range."""


class DimensionMismatch(BpoeError):
    """Vector dimensions of model, scenarios, and decision do not agree."""


class BadAlpha(BpoeError):
    """Probability level outside the valid interval for the requested quantity."""


class WrongRegime(BpoeError):
    """Operation requires the interior regime (positive failure mass, negative mean)."""

    def __init__(self, message, iterate=None):
        super().__init__(message)
        self.iterate = iterate


class ConvergenceError(BpoeError):
    """An iterative routine exhausted its iteration budget."""


class InfeasibleMultipliers(BpoeError):
    """The tied-mass equality cannot be met; the supplied point is not a minimizer."""


class NotApplicable(BpoeError):
    """The distinct-outcome gradient formula does not apply to this instance."""


class NonFinite(BpoeError):
    """A probed function value was NaN or infinite."""


class DegenerateError(BpoeError):
    """All Monte Carlo samples landed on the zero branch of the integrand."""
