"""Exception types shared across the package."""


class SkewInfoError(Exception):
    """Base class for all library errors."""


class NonFinite(SkewInfoError):
    """An integrand or derivative stencil produced NaN/inf inside its domain."""


class ToleranceNotMet(SkewInfoError):
    """Adaptive quadrature exhausted its subdivision budget above tolerance."""


class MaxIterations(SkewInfoError):
    """Optimizer hit its iteration cap without converging from any start."""


class DomainError(SkewInfoError):
    """Evaluation outside a function's real domain (log of non-positive, ...)."""


class ParseError(SkewInfoError):
    """Expression syntax error with byte position and expected-token set."""

    def __init__(self, position, message, expected=()):
        self.position = int(position)
        self.message = str(message)
        self.expected = frozenset(expected)
        super().__init__(f"{self.message} at offset {self.position}")


class DegenerateSkewing(SkewInfoError):
    """The first delta-derivative of the skewing function is numerically zero."""


class NotGaussianKernel(SkewInfoError):
    """Operation requires the standard normal kernel."""


class OrderMismatch(SkewInfoError):
    """Requested parametrization exceeds the family's singularity order."""


class InconsistentDiagnostics(SkewInfoError):
    """Analytic classification stage and numeric matrix rank disagree."""


class NotSkewNormal(SkewInfoError):
    """Centred-parametrization maps are defined for the skew-normal family only."""


class SkewnessOutOfRange(SkewInfoError):
    """Requested third standardized cumulant is outside the attainable range."""


class DegenerateDenominator(SkewInfoError):
    """LM statistic denominator is numerically zero."""
